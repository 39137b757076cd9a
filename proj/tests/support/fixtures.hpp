// SPDX-License-Identifier: Apache-2.0
//
// irsma: joint IRS site selection and movable-antenna placement planner
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef IRSMA_TEST_FIXTURES_HPP
#define IRSMA_TEST_FIXTURES_HPP

#include <irsma/scenario.hpp>

#include <random>

namespace irsma::testing
{
    inline CVec random_phases(int n, std::mt19937_64 &rng)
    {
        std::uniform_real_distribution<double> ph(-kPi, kPi);
        CVec v(n);
        for (int i = 0; i < n; ++i)
            v(i) = std::polar(1.0, ph(rng));
        return v;
    }

    inline RVec random_binary(int n, std::mt19937_64 &rng, double p = 0.5)
    {
        std::bernoulli_distribution b(p);
        RVec x(n);
        for (int i = 0; i < n; ++i)
            x(i) = b(rng);
        return x;
    }

    // Default geometry shrunk for fast solver tests: three sites with 3x5 panels, a 3x3
    // antenna grid and two 2 m x 2 m areas.
    inline Scenario compact_scenario(double threshold_db = 0.0, int sites = 3)
    {
        Scenario sc = default_scenario();
        sc.grid = build_ma_grid(0.1, 0.05);
        sc.sites.resize(sites);
        for (IrsSite &s : sc.sites)
            s = make_site(s.index, s.reference, s.orientation, 3, 5, 0.05, s.install_cost, s.facing_azimuth);
        for (TargetArea &a : sc.areas)
            a = make_area(a.index, a.corner, 2.0, 2.0, 1.0, db_to_linear(threshold_db));
        finalize(sc, 0.05);
        return sc;
    }

    // compact_scenario with randomly placed areas.
    inline Scenario compact_random(std::uint64_t seed, double threshold_db = 0.0, int areas = 2)
    {
        Scenario sc = compact_scenario(threshold_db);
        std::mt19937_64 rng(seed);
        const auto corners = random_area_corners(areas, 2.0, PlacementBox{}, rng);
        sc.areas.clear();
        for (int j = 0; j < areas; ++j)
            sc.areas.push_back(make_area(j, corners[j], 2.0, 2.0, 1.0, db_to_linear(threshold_db)));
        return sc;
    }
} // namespace irsma::testing

#endif // IRSMA_TEST_FIXTURES_HPP
