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

#include <irsma/audit.hpp>
#include <irsma/baselines.hpp>

#include <gtest/gtest.h>

using namespace irsma;

namespace
{
    Scenario with_thresholds(Scenario sc, const std::vector<double> &gamma)
    {
        for (int j = 0; j < sc.num_areas(); ++j)
            sc.areas[j].threshold = gamma[j];
        return sc;
    }

    struct Fixture
    {
        Scenario sc = irsma::testing::compact_scenario(0.0);
        ChannelSet cs = build_channels(sc);
        Plan plan = plan_joint(sc, cs);
    };

    const Fixture &fixture()
    {
        static const Fixture f;
        return f;
    }

    // Same configuration re-evaluated under different thresholds.
    Plan replan(const Scenario &sc, const ChannelSet &cs, const Plan &p)
    {
        const DeploymentSolution &s = p.solution;
        return make_plan(sc, cs, s.z, s.x, s.phases, p.ma_unit_cost);
    }
} // namespace

TEST(Pruning, GramMatrixReproducesSnr)
{
    const Fixture &f = fixture();
    ASSERT_TRUE(f.plan.feasible);
    const RVec ones = RVec::Ones(f.cs.N);
    const AuditReport a = audit_solution(f.sc, f.plan.solution);
    for (int j = 0; j < f.cs.num_areas(); ++j)
        for (int k = 0; k < f.cs.samples(j); ++k)
        {
            const CMat Q = build_q(f.cs, f.plan.solution, j, k);
            EXPECT_LT((Q - Q.adjoint()).cwiseAbs().maxCoeff(), 1e-12 * Q.cwiseAbs().maxCoeff());
            EXPECT_GE(Q.diagonal().real().minCoeff(), 0.0);
            const double quad = f.cs.pbar * ones.cast<cdouble>().dot(Q * ones.cast<cdouble>()).real();
            EXPECT_NEAR(quad, a.snr[j](k), 1e-9 * a.snr[j](k));
            EXPECT_NEAR(quad, element_snr(f.cs, f.plan.solution, j, ones)(k), 1e-9 * quad);
            // unselected sites contribute zero rows and columns
            for (int n = 0; n < f.cs.N; ++n)
                if (f.plan.solution.z(f.cs.site[n]) < 0.5)
                    EXPECT_EQ(Q.row(n).cwiseAbs().maxCoeff(), 0.0);
        }
}

TEST(Pruning, GramMatchesMaterializedElementGram)
{
    const Fixture &f = fixture();
    const DeploymentSolution &s = f.plan.solution;
    const CMat G = stacked_bs_channel(f.sc);
    const RVec mask = site_mask(f.sc, s.z);
    for (int j = 0; j < f.cs.num_areas(); ++j)
    {
        const CMat psi = cascaded_channel(stacked_user_channel(f.sc, f.sc.areas[j].samples[0]), G);
        const CMat ref = element_gram(psi, s.phases[j], mask, s.x.col(j));
        const CMat Q = build_q(f.cs, s, j, 0);
        EXPECT_LT((Q - ref).cwiseAbs().maxCoeff(), 1e-9 * ref.cwiseAbs().maxCoeff());
    }
}

TEST(Pruning, RemovesElementsUnderLargeMargins)
{
    const Fixture &f = fixture();
    std::vector<double> gamma;
    for (const RVec &s : f.plan.snr)
        gamma.push_back(s.minCoeff() / 10.0);
    const Scenario sc = with_thresholds(f.sc, gamma);
    const ChannelSet cs = build_channels(sc);
    const Plan in = replan(sc, cs, f.plan);
    ASSERT_TRUE(in.feasible);
    const Plan out = run_pruning(sc, cs, in);
    EXPECT_TRUE(out.feasible);
    EXPECT_LT(out.cost.total, in.cost.total);
    EXPECT_LT(installed_elements(out.solution, sc), installed_elements(in.solution, sc));
    EXPECT_TRUE(audit_solution(sc, out.solution).passed());
    for (int n = 0; n < cs.N; ++n)
        EXPECT_LE(out.solution.y(n), out.solution.z(cs.site[n]));
}

TEST(Pruning, TightThresholdsKeepEveryElement)
{
    const Fixture &f = fixture();
    std::vector<double> gamma;
    for (const RVec &s : f.plan.snr)
        gamma.push_back(s.minCoeff());
    const Scenario sc = with_thresholds(f.sc, gamma);
    const ChannelSet cs = build_channels(sc);
    const Plan in = replan(sc, cs, f.plan);
    ASSERT_TRUE(in.feasible);

    // leave-one-out: is any single element removable?
    RVec y(cs.N);
    for (int n = 0; n < cs.N; ++n)
        y(n) = in.solution.z(cs.site[n]);
    bool removable = false;
    for (int n = 0; n < cs.N; ++n)
        if (y(n) > 0.5)
        {
            y(n) = 0.0;
            removable = removable || element_worst_ratio(cs, in.solution, y) >= 1.0;
            y(n) = 1.0;
        }
    const Plan out = run_pruning(sc, cs, in);
    EXPECT_TRUE(audit_solution(sc, out.solution).passed());
    EXPECT_LE(out.cost.total, in.cost.total);
    if (!removable)
        EXPECT_EQ(out.cost.total, in.cost.total);
}

TEST(Pruning, NegligibleThresholdsLeaveAlmostNothing)
{
    const Fixture &f = fixture();
    const Scenario sc = with_thresholds(f.sc, std::vector<double>(f.sc.num_areas(), 1e-12));
    const ChannelSet cs = build_channels(sc);
    const Plan in = replan(sc, cs, f.plan);
    const Plan out = run_pruning(sc, cs, in);
    EXPECT_TRUE(audit_solution(sc, out.solution).passed());
    EXPECT_LE(installed_elements(out.solution, sc), sc.num_areas());
}

TEST(Pruning, RejectsInfeasibleInput)
{
    const Fixture &f = fixture();
    const Scenario sc = with_thresholds(f.sc, std::vector<double>(f.sc.num_areas(), 1e9));
    const ChannelSet cs = build_channels(sc);
    const Plan in = replan(sc, cs, f.plan);
    EXPECT_FALSE(in.feasible);
    EXPECT_THROW(run_pruning(sc, cs, in), AuditError);
}
