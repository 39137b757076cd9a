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

#include "support/fixtures.hpp"

#include <irsma/surrogates.hpp>

#include <gtest/gtest.h>

using namespace irsma;
using irsma::testing::random_binary;
using irsma::testing::random_phases;

namespace
{
    double slack(double v) { return 1e-10 * std::max(1.0, std::abs(v)); }

    CMat random_psd(int n, int rank, std::mt19937_64 &rng)
    {
        std::normal_distribution<double> g;
        CMat B(n, rank);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < rank; ++k)
                B(i, k) = cdouble(g(rng), g(rng));
        return B * B.adjoint();
    }
} // namespace

TEST(Surrogates, SquareTangentBelowParabola)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int t = 0; t < 10000; ++t)
    {
        const double r = u(rng), x = u(rng);
        EXPECT_LE(square_lower(r, x), x * x + slack(x * x));
        EXPECT_NEAR(square_lower(r, r), r * r, slack(r * r));
    }
    EXPECT_DOUBLE_EQ(square_lower(1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(square_lower(0.0, 0.7), 0.0);
}

TEST(Surrogates, ModulusTangentBelowModulus)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int t = 0; t < 10000; ++t)
    {
        const cdouble r(u(rng), u(rng)), v(u(rng), u(rng));
        EXPECT_LE(modulus_lower(r, v), std::norm(v) + slack(std::norm(v)));
        EXPECT_NEAR(modulus_lower(r, r), std::norm(r), slack(std::norm(r)));
    }
    // unit-modulus expansion point: the bound equals one at the point itself
    EXPECT_NEAR(modulus_lower(std::polar(1.0, 0.3), std::polar(1.0, 0.3)), 1.0, 1e-15);
}

TEST(Surrogates, QuadraticTangentBelowForm)
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 2000; ++t)
    {
        const int n = 1 + static_cast<int>(rng() % 6);
        const CMat R = random_psd(n, 1 + static_cast<int>(rng() % n), rng);
        const CVec r = CVec::Random(n), v = CVec::Random(n);
        const double exact = v.dot(R * v).real();
        EXPECT_LE(quadratic_lower(R, r, v), exact + slack(exact));
        const double at = r.dot(R * r).real();
        EXPECT_NEAR(quadratic_lower(R, r, r), at, slack(at));
    }
}

TEST(Surrogates, PhaseLinearizationMatchesGram)
{
    const Scenario sc = irsma::testing::compact_scenario();
    const ChannelSet cs = build_channels(sc);
    const CMat G = stacked_bs_channel(sc);
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t)
    {
        const int j = t % 2;
        const RVec z = random_binary(cs.L, rng, 0.7), x = random_binary(cs.M, rng, 0.6);
        const CVec r = random_phases(cs.N, rng), v = random_phases(cs.N, rng);
        const PhaseLinearization lin = linearize_phases(cs, j, r, z, x);
        const RVec mask = site_mask(sc, z);
        for (int k = 0; k < cs.samples(j); ++k)
        {
            const CMat psi = cascaded_channel(stacked_user_channel(sc, sc.areas[j].samples[k]), G);
            const CMat R = phase_gram(mask.cast<cdouble>().asDiagonal() * psi, x);
            const double at_r = r.dot(R * r).real();
            const double at_v = v.dot(R * v).real();
            EXPECT_NEAR(lin.value(k), at_r, 1e-9 * std::max(at_r, 1e-30));
            EXPECT_NEAR(lin.evaluate(k, r), at_r, 1e-9 * std::max(at_r, 1e-30));
            EXPECT_LE(lin.evaluate(k, v), at_v * (1 + 1e-9) + 1e-30);
            EXPECT_NEAR(lin.evaluate(k, v), quadratic_lower(R, r, v), 1e-9 * std::max(at_v + at_r, 1e-30));
        }
    }
}

TEST(Surrogates, ElementLinearizationIsTangent)
{
    const Scenario sc = irsma::testing::compact_scenario();
    const ChannelSet cs = build_channels(sc);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t)
    {
        const int j = t % 2;
        const RVec z = random_binary(cs.L, rng, 0.7), x = random_binary(cs.M, rng, 0.6);
        const CVec v = random_phases(cs.N, rng);
        RVec r(cs.N), y(cs.N);
        for (int n = 0; n < cs.N; ++n)
        {
            r(n) = u(rng);
            y(n) = u(rng);
        }
        const ElementLinearization lin = linearize_elements(cs, j, v, z, x, r);
        for (int k = 0; k < cs.samples(j); ++k)
        {
            const double at_r = element_power(cs, j, k, v, z, x, r);
            const double at_y = element_power(cs, j, k, v, z, x, y);
            EXPECT_NEAR(lin.evaluate(k, r), at_r, 1e-9 * std::max(at_r, 1e-30));
            // real symmetric PSD form: the tangent plane stays below
            EXPECT_LE(lin.evaluate(k, y), at_y * (1 + 1e-9) + 1e-30);
        }
    }
}
