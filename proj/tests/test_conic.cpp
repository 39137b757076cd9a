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

#include <irsma/conic.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace irsma;
using namespace irsma::conic;

TEST(Conic, BoxedSingleVariable)
{
    LinearProgramSpec lp;
    lp.add_variable(1.0, 0.0, 1.0);
    auto r = solve_lp(lp);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.values[0], 1.0, 1e-7);
    EXPECT_NEAR(r.objective, 1.0, 1e-7);
}

TEST(Conic, SimplexEdge)
{
    LinearProgramSpec lp;
    int x = lp.add_variable(1.0, 0.0);
    int y = lp.add_variable(1.0, 0.0);
    lp.add_row({{x, 1.0}, {y, 1.0}}, 1.0);
    auto r = solve_lp(lp);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.objective, 1.0, 1e-7);
    EXPECT_LE(r.max_violation, 1e-8);
}

TEST(Conic, EmptyBoxIsInfeasible)
{
    LinearProgramSpec lp;
    lp.add_variable(1.0, 1.0, 0.0);
    EXPECT_EQ(solve_lp(lp).status, SolveStatus::infeasible);
}

TEST(Conic, InconsistentRowsAreInfeasible)
{
    LinearProgramSpec lp;
    int x = lp.add_variable(1.0, 0.0, 10.0);
    lp.add_row({{x, 1.0}}, 1.0);
    lp.add_row({{x, -1.0}}, -2.0);
    EXPECT_EQ(solve_lp(lp).status, SolveStatus::infeasible);
}

TEST(Conic, UnboundedRay)
{
    LinearProgramSpec lp;
    int x = lp.add_variable(1.0, 0.0);
    int y = lp.add_variable(0.0, 0.0);
    lp.add_row({{x, 1.0}, {y, -1.0}}, 1.0);
    EXPECT_EQ(solve_lp(lp).status, SolveStatus::unbounded);
}

TEST(Conic, MalformedSpecThrows)
{
    LinearProgramSpec lp;
    lp.add_variable(1.0, 0.0, 1.0);
    lp.add_row({{3, 1.0}}, 1.0);
    EXPECT_THROW(solve_lp(lp), DimensionMismatch);
}

TEST(Conic, ConeMaxFirstCoordinate)
{
    ConeProgramSpec sp;
    int a = sp.core.add_variable(1.0);
    int b = sp.core.add_variable(0.0);
    ConeBlock blk;
    blk.tail.constant = 1.0;
    blk.head = {AffineExpr{{{a, 1.0}}, 0.0}, AffineExpr{{{b, 1.0}}, 0.0}};
    sp.cones.push_back(blk);
    auto r = solve_socp(sp);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.values[0], 1.0, 1e-7);
    EXPECT_NEAR(r.values[1], 0.0, 1e-6);
    EXPECT_LE(r.max_violation, 1e-8);
}

TEST(Conic, DiscPullMatchesProjection)
{
    // maximize Re{conj(c) v} with |v| <= 1; optimum is c / |c|
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial)
    {
        cdouble c = trial == 0 ? cdouble(1.0, 1.0) / std::sqrt(2.0) : cdouble(nd(rng), nd(rng));
        ConeProgramSpec sp;
        auto lay = lift_complex(sp.core, 1);
        for (const Term &t : lay.real_inner(0, c))
            sp.core.objective[t.var] += t.coef;
        sp.cones.push_back(lay.disc(0));
        auto r = solve_socp(sp);
        ASSERT_EQ(r.status, SolveStatus::optimal);
        cdouble v = lay.load(r.values)(0);
        cdouble want = c / std::abs(c);
        EXPECT_NEAR(std::abs(v - want), 0.0, 1e-6);
        EXPECT_NEAR(r.objective, std::abs(c), 1e-7 * std::max(1.0, std::abs(c)));
    }
}

TEST(Conic, ZeroTailForcesZeroHead)
{
    ConeProgramSpec sp;
    int a = sp.core.add_variable(1.0, -5.0, 5.0);
    int b = sp.core.add_variable(-1.0, -5.0, 5.0);
    ConeBlock blk;
    blk.tail.constant = 0.0;
    blk.head = {AffineExpr{{{a, 1.0}}, 0.0}, AffineExpr{{{b, 1.0}}, 0.0}};
    sp.cones.push_back(blk);
    auto r = solve_socp(sp);
    ASSERT_NE(r.status, SolveStatus::infeasible);
    ASSERT_FALSE(r.values.empty());
    EXPECT_NEAR(r.values[0], 0.0, 1e-4);
    EXPECT_NEAR(r.values[1], 0.0, 1e-4);
}

TEST(Conic, LiftingHelpers)
{
    LinearProgramSpec lp;
    auto lay = lift_complex(lp, 3);
    EXPECT_EQ(lp.num_vars, 6);
    CVec v(3);
    v << cdouble(1, 0), cdouble(-0.3, 2.5), cdouble(0, -1);
    std::vector<double> x(6);
    lay.store(x, v);
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 0.0);
    EXPECT_EQ(lay.load(x), v);

    // Re{(1-j)^* ... } written as Re{conj(c) v} with c = 1+j gives a + b
    auto t = lay.real_inner(0, cdouble(1.0, 1.0));
    EXPECT_DOUBLE_EQ(t[0].coef, 1.0);
    EXPECT_DOUBLE_EQ(t[1].coef, 1.0);

    // unit-modulus points sit on the cone boundary
    for (double phi : {0.0, 0.7, 2.0, -3.0})
    {
        const double re = std::cos(phi), im = std::sin(phi);
        EXPECT_NEAR(1.0 - std::hypot(re, im), 0.0, 1e-15);
    }
}

TEST(Conic, DeterministicAndScaleInvariant)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int trial = 0; trial < 10; ++trial)
    {
        LinearProgramSpec lp;
        const int n = 6;
        for (int j = 0; j < n; ++j)
            lp.add_variable(u(rng), 0.0, 1.0);
        for (int r = 0; r < 4; ++r)
        {
            std::vector<Term> terms;
            for (int j = 0; j < n; ++j)
                terms.push_back({j, u(rng)});
            lp.add_row(terms, 1.5);
        }
        auto a = solve_lp(lp);
        auto b = solve_lp(lp);
        ASSERT_EQ(a.status, SolveStatus::optimal);
        EXPECT_EQ(a.values, b.values);
        EXPECT_EQ(a.objective, b.objective);

        LinearProgramSpec scaled = lp;
        for (double &c : scaled.objective)
            c *= 7.5;
        auto s = solve_lp(scaled);
        ASSERT_EQ(s.status, SolveStatus::optimal);
        EXPECT_NEAR(s.objective, 7.5 * a.objective, 1e-7 * s.objective);
        for (int j = 0; j < n; ++j)
            EXPECT_NEAR(s.values[j], a.values[j], 1e-5);
    }
}

TEST(Conic, ManyDiscsAgainstClosedForm)
{
    // separable: maximize sum Re{conj(c_k) v_k} - sum w_k t_k, |v_k| <= 1, t free in [0,1]
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    const int k = 40;
    ConeProgramSpec sp;
    auto lay = lift_complex(sp.core, k);
    double want = 0.0;
    for (int i = 0; i < k; ++i)
    {
        cdouble c(nd(rng), nd(rng));
        for (const Term &t : lay.real_inner(i, c))
            sp.core.objective[t.var] += t.coef;
        sp.cones.push_back(lay.disc(i));
        want += std::abs(c);
    }
    auto r = solve_socp(sp);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.objective, want, 1e-7 * want);
}

TEST(Conic, JsonDump)
{
    ConeProgramSpec sp;
    auto lay = lift_complex(sp.core, 1, -2.0, 2.0);
    sp.cones.push_back(lay.disc(0));
    auto j = to_json(sp);
    EXPECT_EQ(j["num_vars"], 2);
    EXPECT_EQ(j["cones"].size(), 1u);
    EXPECT_EQ(j["sense"], "maximize");
}
