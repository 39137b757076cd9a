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
#include <irsma/feasibility.hpp>

#include <gtest/gtest.h>

using namespace irsma;

TEST(Feasibility, AlignedPhasesAreUnitModulus)
{
    const Scenario sc = irsma::testing::compact_scenario();
    const ChannelSet cs = build_channels(sc);
    const CVec v = aligned_phases(sc, cs, 0, RVec::Ones(cs.L), RVec::Ones(cs.M));
    EXPECT_LT((v.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Feasibility, AlignmentBeatsRandomPhases)
{
    const Scenario sc = irsma::testing::compact_scenario();
    const ChannelSet cs = build_channels(sc);
    const RVec z = RVec::Ones(cs.L), x = RVec::Ones(cs.M);
    const double aligned = cs.snr(0, aligned_phases(sc, cs, 0, z, x), z, x).minCoeff();
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t)
        EXPECT_GT(aligned, cs.snr(0, irsma::testing::random_phases(cs.N, rng), z, x).minCoeff());
}

TEST(Feasibility, RoundingRespectsConflictsAndPacking)
{
    Scenario sc = irsma::testing::compact_scenario();
    sc.grid = build_ma_grid(0.1, 0.025);
    finalize(sc, 0.05);
    const int M = sc.num_antennas();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t)
    {
        RVec x(M);
        RMat gains(3, M);
        for (int m = 0; m < M; ++m)
        {
            x(m) = u(rng);
            for (int k = 0; k < 3; ++k)
                gains(k, m) = u(rng);
        }
        for (bool fill : {false, true})
        {
            const RVec r = round_antennas(sc, x, gains, fill);
            for (int m = 0; m < M; ++m)
                EXPECT_TRUE(r(m) == 0.0 || r(m) == 1.0);
            for (auto [a, b] : sc.conflicts.pairs)
                EXPECT_LE(r(a) + r(b), 1.0);
            EXPECT_LE(r.sum(), sc.m_max);
        }
    }
}

TEST(Feasibility, ReportIsBinaryAndAudited)
{
    const Scenario sc = irsma::testing::compact_scenario(0.0);
    const ChannelSet cs = build_channels(sc);
    const FeasibilityReport rep = run_feasibility(sc, cs);
    ASSERT_EQ(rep.x.rows(), sc.num_antennas());
    EXPECT_EQ(max_binary_violation(rep.x), 0.0);
    const AuditReport a = audit_solution(sc, rep.solution(sc), kAuditTolerance, false);
    EXPECT_TRUE(a.passed());
    EXPECT_NEAR(a.worst_ratio, rep.eta, 1e-9 * rep.eta);
    EXPECT_EQ(rep.feasible, rep.eta >= 1.0);
    EXPECT_TRUE(rep.feasible);
    for (int j = 0; j < sc.num_areas(); ++j)
        EXPECT_LE(rep.x.col(j).sum(), sc.m_max);
}

TEST(Feasibility, WorstSnrDoesNotDependOnCommonThreshold)
{
    const Scenario lo = irsma::testing::compact_scenario(0.0);
    const Scenario hi = irsma::testing::compact_scenario(30.0);
    const FeasibilityReport a = run_feasibility(lo, build_channels(lo));
    const FeasibilityReport b = run_feasibility(hi, build_channels(hi));
    EXPECT_FALSE(b.feasible);
    EXPECT_NEAR(linear_to_db(a.eta), linear_to_db(b.eta) + 30.0, 0.2);
}

TEST(Feasibility, MoreAntennasNeverHurt)
{
    // a feasibility optimum uses the packing limit once it helps, so a finer aperture with
    // more grid points does not lower the worst-case SNR
    Scenario small = irsma::testing::compact_scenario();
    Scenario large = small;
    large.grid = build_ma_grid(0.15, 0.05);
    finalize(large, 0.05);
    const FeasibilityReport a = run_feasibility(small, build_channels(small));
    const FeasibilityReport b = run_feasibility(large, build_channels(large));
    EXPECT_GE(b.eta, a.eta * 0.99);
}
