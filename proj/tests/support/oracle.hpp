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

#ifndef IRSMA_TEST_ORACLE_HPP
#define IRSMA_TEST_ORACLE_HPP

// Exhaustive cost-minimization oracle for tiny instances: every site subset, every
// conflict-free antenna subset per area and 16-level phases with the first selected
// element pinned (a common phase does not change any received power).

#include <irsma/channel.hpp>

#include <limits>
#include <random>

namespace irsma::testing
{
    struct OracleResult
    {
        double cost = std::numeric_limits<double>::infinity();
        RVec z;
        std::vector<int> ma_counts;
        bool feasible() const { return std::isfinite(cost); }
    };

    // best[j][mask] = max over quantized phases of the received SNR with antennas `mask`.
    inline std::vector<std::vector<double>> best_subset_snr(const Scenario &sc, const ChannelSet &cs, const RVec &z,
                                                            int levels = 16)
    {
        const int M = cs.M, J = cs.num_areas();
        std::vector<int> elems;
        for (int n = 0; n < cs.N; ++n)
            if (z(cs.site[n]) > 0.5)
                elems.push_back(n);
        std::vector<cdouble> alphabet(levels);
        for (int q = 0; q < levels; ++q)
            alphabet[q] = std::polar(1.0, 2.0 * kPi * q / levels);

        std::vector<std::vector<double>> best(J, std::vector<double>(1u << M, 0.0));
        for (int j = 0; j < J; ++j)
        {
            // contribution of element n with phase q to antenna m (single sample)
            const int E = static_cast<int>(elems.size());
            std::vector<std::vector<CVec>> term(E, std::vector<CVec>(levels, CVec(M)));
            for (int e = 0; e < E; ++e)
            {
                const int n = elems[e];
                for (int q = 0; q < levels; ++q)
                    for (int m = 0; m < M; ++m)
                        term[e][q](m) = std::conj(alphabet[q]) * cs.cascade[j](n, 0) * cs.bs_row(cs.site[n], m);
            }
            std::vector<int> digit(E, 0);
            std::vector<CVec> partial(E + 1, CVec::Zero(M));
            // odometer over digits 1..E-1, digit 0 pinned to zero
            while (true)
            {
                for (int e = 0; e < E; ++e)
                    partial[e + 1] = partial[e] + term[e][digit[e]];
                const RVec p = cs.pbar * partial[E].cwiseAbs2();
                for (unsigned mask = 1; mask < (1u << M); ++mask)
                {
                    double s = 0.0;
                    for (int m = 0; m < M; ++m)
                        if (mask & (1u << m))
                            s += p(m);
                    best[j][mask] = std::max(best[j][mask], s);
                }
                int e = E - 1;
                while (e >= 1 && ++digit[e] == levels)
                    digit[e--] = 0;
                if (e < 1)
                    break;
            }
        }
        return best;
    }

    inline bool conflict_free(const Scenario &sc, unsigned mask)
    {
        for (auto [m, q] : sc.conflicts.pairs)
            if ((mask & (1u << m)) && (mask & (1u << q)))
                return false;
        return std::popcount(mask) <= sc.m_max;
    }

    inline OracleResult brute_force_costmin(const Scenario &sc, const ChannelSet &cs)
    {
        const int L = cs.L, M = cs.M, J = cs.num_areas();
        OracleResult out;
        for (unsigned zm = 1; zm < (1u << L); ++zm)
        {
            RVec z(L);
            double site_cost = 0.0;
            for (int l = 0; l < L; ++l)
            {
                z(l) = (zm >> l) & 1u;
                if (z(l) > 0.5)
                    site_cost += sc.site_full_cost(l);
            }
            const auto best = best_subset_snr(sc, cs, z);
            std::vector<int> counts(J, M + 1);
            for (int j = 0; j < J; ++j)
                for (unsigned mask = 1; mask < (1u << M); ++mask)
                    if (conflict_free(sc, mask) && best[j][mask] >= cs.threshold[j](0))
                        counts[j] = std::min(counts[j], std::popcount(mask));
            const int worst = *std::max_element(counts.begin(), counts.end());
            if (worst > M)
                continue;
            const double cost = site_cost + sc.costs.ma_cost * worst;
            if (cost < out.cost)
            {
                out.cost = cost;
                out.z = z;
                out.ma_counts = counts;
            }
        }
        return out;
    }

    // Random tiny instance: up to two sites with at most three elements each, a 2x2 grid
    // at half a wavelength (optionally with spacing conflicts) and one or two single-sample
    // areas. The threshold sits below what the full configuration reaches.
    inline Scenario tiny_instance(std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
        const Scenario d = default_scenario();
        Scenario sc;
        sc.radio = d.radio;
        const double lam = sc.radio.wavelength;
        sc.grid = build_ma_grid(lam / 2.0, lam / 2.0);
        const int L = pick(1, 4) == 1 ? 1 : 2;
        std::vector<int> pool{0, 1, 2, 3, 4};
        std::shuffle(pool.begin(), pool.end(), rng);
        const double costs[] = {10.0, 20.0, 30.0};
        for (int l = 0; l < L; ++l)
        {
            const IrsSite &s = d.sites[pool[l]];
            sc.sites.push_back(make_site(l, s.reference, s.orientation, 1, pick(1, 3), lam / 2.0, costs[pick(0, 2)],
                                         s.facing_azimuth));
        }
        const int J = pick(1, 2);
        const auto corners = random_area_corners(J, 1.0, PlacementBox{}, rng);
        for (int j = 0; j < J; ++j)
            sc.areas.push_back(make_area(j, corners[j], 0.0, 0.0, 1.0, 1.0));
        const double ma_costs[] = {10.0, 30.0, 50.0};
        sc.costs = CostModel{ma_costs[pick(0, 2)], 1.0, 1.0 / 3.0};
        finalize(sc, pick(0, 1) == 0 ? lam / 2.0 : 0.6 * lam);

        // scale power so that the full configuration reaches about 20 dB, then place the
        // threshold between 5% and 95% of the weakest area's best
        ChannelSet cs = build_channels(sc);
        const auto best = best_subset_snr(sc, cs, RVec::Ones(L));
        double reach = std::numeric_limits<double>::infinity();
        for (int j = 0; j < J; ++j)
        {
            double b = 0.0;
            for (unsigned mask = 1; mask < (1u << cs.M); ++mask)
                if (conflict_free(sc, mask))
                    b = std::max(b, best[j][mask]);
            reach = std::min(reach, b);
        }
        sc.radio.transmit_power *= 100.0 / reach;
        const double frac = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
        for (TargetArea &a : sc.areas)
            a.threshold = 100.0 * frac;
        return sc;
    }
} // namespace irsma::testing

#endif // IRSMA_TEST_ORACLE_HPP
