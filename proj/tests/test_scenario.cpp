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

#include <irsma/scenario.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace irsma;

namespace
{
    constexpr double lam = 0.1;

    // Plain include/exclude recursion, no colouring bounds.
    int brute_mis(int n, const std::vector<std::pair<int, int>> &edges)
    {
        std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
        for (auto [a, b] : edges)
            adj[a][b] = adj[b][a] = true;
        int best = 0;
        std::vector<int> chosen;
        std::function<void(int)> rec = [&](int i) {
            if (static_cast<int>(chosen.size()) + (n - i) <= best)
                return;
            if (i == n)
            {
                best = std::max(best, static_cast<int>(chosen.size()));
                return;
            }
            bool ok = true;
            for (int c : chosen)
                if (adj[c][i])
                    ok = false;
            if (ok)
            {
                chosen.push_back(i);
                rec(i + 1);
                chosen.pop_back();
            }
            rec(i + 1);
        };
        rec(0);
        return best;
    }

    DeploymentSolution blank(const Scenario &sc)
    {
        DeploymentSolution s;
        s.x = RMat::Zero(sc.num_antennas(), sc.num_areas());
        s.z = RVec::Zero(sc.num_sites());
        return s;
    }
} // namespace

TEST(Scenario, GridCounts)
{
    EXPECT_EQ(build_ma_grid(3 * lam, lam / 2).count(), 49);
    EXPECT_EQ(build_ma_grid(lam, lam).count(), 4);
    EXPECT_EQ(build_ma_grid(3 * lam, lam).count(), 16);
    EXPECT_EQ(build_ma_grid(3 * lam, lam / 3).count(), 100);
    EXPECT_EQ(build_ma_grid(3 * lam, lam / 4).count(), 169);
    for (double a : {0.13, 0.3, 0.77})
        for (double d : {0.01, 0.03, 0.05, 0.07})
        {
            if (d > a)
                continue;
            const int side = static_cast<int>(std::floor(a / d + 1e-9)) + 1;
            EXPECT_EQ(build_ma_grid(a, d).count(), side * side);
        }
}

TEST(Scenario, GridLayoutIsRowMajorInYZ)
{
    auto g = build_ma_grid(lam, lam / 2);
    ASSERT_EQ(g.per_side, 3);
    EXPECT_TRUE(g.points[0].isApprox(Vec3(0, 0, 0)));
    EXPECT_NEAR((g.points[1] - Vec3(0, lam / 2, 0)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((g.points[3] - Vec3(0, 0, lam / 2)).norm(), 0.0, 1e-15);
    for (const Vec3 &p : g.points)
        EXPECT_EQ(p.x(), 0.0);
}

TEST(Scenario, GridRejectsBadInput)
{
    EXPECT_THROW(build_ma_grid(-1.0, 0.1), InvalidGeometry);
    EXPECT_THROW(build_ma_grid(1.0, 0.0), InvalidGeometry);
    EXPECT_THROW(build_ma_grid(0.1, 0.2), InvalidGeometry);
}

TEST(Scenario, Conflicts)
{
    EXPECT_TRUE(conflict_set(build_ma_grid(3 * lam, lam / 2), lam / 2).pairs.empty());

    auto g = build_ma_grid(3 * lam, lam / 3);
    auto cs = conflict_set(g, lam / 2);
    std::set<std::pair<int, int>> got(cs.pairs.begin(), cs.pairs.end());
    std::set<std::pair<int, int>> want;
    const int s = g.per_side;
    for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c)
            for (auto [dr, dc] : {std::pair{0, 1}, {1, 0}, {1, 1}, {1, -1}})
            {
                int r2 = r + dr, c2 = c + dc;
                if (r2 < 0 || r2 >= s || c2 < 0 || c2 >= s)
                    continue;
                int a = r * s + c, b = r2 * s + c2;
                want.insert({std::min(a, b), std::max(a, b)});
            }
    EXPECT_EQ(got, want);
    for (auto [m, q] : cs.pairs)
        EXPECT_LT(m, q);

    MaGrid single;
    single.step = 1.0;
    single.per_side = 1;
    single.points = {Vec3::Zero()};
    EXPECT_TRUE(conflict_set(single, 1.0).pairs.empty());
}

TEST(Scenario, MaxDeployablePaperValues)
{
    auto count = [](double d) {
        auto g = build_ma_grid(3 * lam, d);
        return max_deployable(g, conflict_set(g, lam / 2));
    };
    EXPECT_EQ(count(lam / 2), 49);
    EXPECT_EQ(count(lam / 3), 25);
    EXPECT_EQ(count(lam / 4), 49);
    EXPECT_EQ(count(lam), 16);
}

TEST(Scenario, PackingMatchesExhaustiveSearch)
{
    for (int side = 2; side <= 6; ++side)
        for (double ratio : {0.25, 0.3, 1.0 / 3.0, 0.4, 0.45, 0.5, 0.6, 0.75, 1.0})
        {
            const double d = ratio * lam;
            auto g = build_ma_grid((side - 1) * d, d);
            ASSERT_EQ(g.per_side, side);
            auto cs = conflict_set(g, lam / 2);
            auto layout = packed_layout(g, cs);
            EXPECT_EQ(static_cast<int>(layout.size()), brute_mis(g.count(), cs.pairs)) << "side " << side << " ratio " << ratio;
            std::set<int> sel(layout.begin(), layout.end());
            for (auto [m, q] : cs.pairs)
                EXPECT_FALSE(sel.count(m) && sel.count(q));
        }
}

TEST(Scenario, SitePanels)
{
    auto h = make_site(0, Vec3(5, 0, 12), PanelOrientation::horizontal_down, 5, 10, 0.05, 30.0);
    ASSERT_EQ(h.elements.size(), 50u);
    EXPECT_TRUE(h.elements[0].isApprox(Vec3(5, 0, 12)));
    for (const Vec3 &p : h.elements)
        EXPECT_DOUBLE_EQ(p.z(), 12.0);
    auto v = make_site(1, Vec3(0, 12, 5), PanelOrientation::vertical, 5, 10, 0.05, 20.0);
    for (const Vec3 &p : v.elements)
        EXPECT_DOUBLE_EQ(p.x(), 0.0);
    // nearest-neighbour spacing is the lattice step
    EXPECT_NEAR((v.elements[1] - v.elements[0]).norm(), 0.05, 1e-15);
    EXPECT_NEAR((v.elements[10] - v.elements[0]).norm(), 0.05, 1e-15);
}

TEST(Scenario, AreaSampling)
{
    auto a = make_area(0, Vec3(50, 0, 0), 5, 5, 1, 10.0);
    EXPECT_EQ(a.samples.size(), 36u);
    for (const Vec3 &u : a.samples)
    {
        EXPECT_GE(u.x(), 50.0);
        EXPECT_LE(u.x(), 55.0);
        EXPECT_GE(u.y(), 0.0);
        EXPECT_LE(u.y(), 5.0);
    }
    EXPECT_EQ(make_area(0, Vec3(1, 1, 0), 0, 0, 1, 1.0).samples.size(), 1u);
    EXPECT_THROW(make_area(0, Vec3::Zero(), 5, 5, 1, 0.0), InvalidGeometry);
}

TEST(Scenario, DefaultScenario)
{
    auto sc = default_scenario();
    EXPECT_EQ(sc.num_sites(), 5);
    EXPECT_EQ(sc.num_areas(), 2);
    EXPECT_EQ(sc.m_max, 49);
    EXPECT_EQ(sc.total_elements(), 250);
    EXPECT_TRUE(sc.sites[0].reference.isApprox(Vec3(5, 0, 12)));
    EXPECT_NEAR(sc.radio.pbar(), 1e11, 1e-3);
    EXPECT_NEAR(sc.radio.c0(), std::pow(0.1 / (4 * kPi), 2), 1e-20);
    EXPECT_EQ(sc.site_of(0), 0);
    EXPECT_EQ(sc.site_of(49), 0);
    EXPECT_EQ(sc.site_of(50), 1);
    EXPECT_EQ(sc.site_of(249), 4);
}

TEST(Scenario, RandomPlacementIsDisjointAndInside)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t)
    {
        auto c = random_area_corners(4, 5.0, PlacementBox{}, rng);
        for (std::size_t i = 0; i < c.size(); ++i)
        {
            EXPECT_GE(c[i].x(), 50.0);
            EXPECT_LE(c[i].x() + 5.0, 70.0);
            EXPECT_GE(c[i].y(), -40.0);
            EXPECT_LE(c[i].y() + 5.0, 40.0);
            for (std::size_t k = 0; k < i; ++k)
                EXPECT_TRUE(std::abs(c[i].x() - c[k].x()) > 5.0 || std::abs(c[i].y() - c[k].y()) > 5.0);
        }
    }
    std::mt19937_64 a(9), b(9);
    EXPECT_EQ(random_area_corners(2, 5.0, {}, a), random_area_corners(2, 5.0, {}, b));
    PlacementBox tiny{0, 6, 0, 6, 0};
    EXPECT_THROW(random_area_corners(2, 5.0, tiny, rng), InvalidGeometry);
}

TEST(Scenario, TotalCostExamples)
{
    auto sc = default_scenario();
    auto s = blank(sc);
    EXPECT_DOUBLE_EQ(total_cost(s, sc), 0.0);

    s.z(0) = 1;
    for (int m = 0; m < 3; ++m)
        s.x(m, 0) = 1;
    EXPECT_DOUBLE_EQ(total_cost(s, sc), 170.0);

    s = blank(sc);
    s.z(1) = s.z(2) = 1;
    s.x(0, 1) = 1;
    EXPECT_DOUBLE_EQ(total_cost(s, sc), 170.0);

    s.x(0, 0) = 0.5;
    EXPECT_THROW(total_cost(s, sc), AuditError);
}

TEST(Scenario, TotalCostIsMonotone)
{
    auto sc = default_scenario();
    std::mt19937_64 rng(1);
    std::bernoulli_distribution coin(0.3);
    for (int t = 0; t < 50; ++t)
    {
        auto s = blank(sc);
        s.y = RVec::Zero(sc.total_elements());
        for (int l = 0; l < sc.num_sites(); ++l)
            s.z(l) = coin(rng);
        for (Eigen::Index k = 0; k < s.x.size(); ++k)
            s.x.data()[k] = coin(rng);
        for (int n = 0; n < sc.total_elements(); ++n)
            s.y(n) = s.z(sc.site_of(n)) * coin(rng);
        const double base = total_cost(s, sc);
        auto bump = s;
        bump.x(rng() % sc.num_antennas(), rng() % 2) = 1;
        EXPECT_GE(total_cost(bump, sc), base);
        bump = s;
        int n = rng() % sc.total_elements();
        if (s.z(sc.site_of(n)) > 0.5)
        {
            bump.y(n) = 1;
            EXPECT_GE(total_cost(bump, sc), base);
        }
        bump = s;
        bump.z(rng() % sc.num_sites()) = 1;
        EXPECT_GE(total_cost(bump, sc), base);
    }
}
