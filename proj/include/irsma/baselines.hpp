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

#ifndef IRSMA_BASELINES_HPP
#define IRSMA_BASELINES_HPP

// Comparison schemes built on the cost minimizer (independent per-area planning, every site
// deployed, fixed fully populated arrays) and budget-constrained worst-case SNR maximization.

#include "pruning.hpp"

namespace irsma
{
    struct SchemeResult
    {
        std::string scheme;
        bool feasible = false;
        std::string status;
        CostBreakdown cost;
        double ma_unit_cost = 0;
        std::vector<double> worst_snr_db; // per area
        std::vector<int> ma_counts;       // per area
        int sites = 0;
        int elements = 0;
        double floor = 0;                 // worst normalized SNR (budget scheme)
        DeploymentSolution solution;

        double worst_db() const
        {
            double w = std::numeric_limits<double>::infinity();
            for (double s : worst_snr_db)
                w = std::min(w, s);
            return w;
        }
    };

    // Per-area received SNR of a binary solution from the factorized channels.
    inline std::vector<RVec> solution_snr(const Scenario &sc, const ChannelSet &cs, const DeploymentSolution &sol)
    {
        RVec y(cs.N);
        for (int n = 0; n < cs.N; ++n)
            y(n) = element_indicator(sol, sc, n);
        std::vector<RVec> out;
        for (int j = 0; j < cs.num_areas(); ++j)
            out.push_back(element_snr(cs, sol, j, y));
        return out;
    }

    inline SchemeResult scheme_result(const std::string &tag, const Scenario &sc, const ChannelSet &cs,
                                      const DeploymentSolution &sol, double ma_unit_cost, bool feasible,
                                      const std::string &status)
    {
        SchemeResult r;
        r.scheme = tag;
        r.feasible = feasible;
        r.status = status;
        r.ma_unit_cost = ma_unit_cost;
        r.solution = sol;
        if (sol.z.size() == 0)
            return r;
        r.cost = cost_breakdown(sol, sc, ma_unit_cost);
        for (const RVec &s : solution_snr(sc, cs, sol))
        {
            r.worst_snr_db.push_back(linear_to_db(s.minCoeff()));
        }
        for (int j = 0; j < sc.num_areas(); ++j)
            r.ma_counts.push_back(sol.ma_count(j));
        r.sites = sol.site_count();
        r.elements = installed_elements(sol, sc);
        return r;
    }

    inline SchemeResult scheme_result(const std::string &tag, const Scenario &sc, const ChannelSet &cs, const Plan &p)
    {
        return scheme_result(tag, sc, cs, p.solution, p.ma_unit_cost, p.feasible, p.status);
    }

    inline SchemeResult infeasible_scheme(const std::string &tag, double ma_unit_cost, const std::string &status)
    {
        SchemeResult r;
        r.scheme = tag;
        r.status = status;
        r.ma_unit_cost = ma_unit_cost;
        return r;
    }

    inline Scenario single_area(const Scenario &sc, int j)
    {
        Scenario s = sc;
        s.areas = {sc.areas[j]};
        s.areas[0].index = 0;
        return s;
    }

    // Joint planning: feasibility check followed by cost minimization.
    inline Plan plan_joint(const Scenario &sc, const ChannelSet &cs, const SolverConfig &cfg = {},
                           const DeploymentOptions &opts = {})
    {
        const FeasibilityReport init = run_feasibility(sc, cs, cfg);
        const double ma_unit = opts.ma_unit_cost.value_or(sc.costs.ma_cost);
        if (!init.feasible)
            return infeasible_plan(sc, ma_unit, "infeasible");
        return run_costmin(sc, cs, init, cfg, opts);
    }

    // Each area planned on its own; the deployment is the union of the selected sites and
    // the largest antenna count. Phases of sites another area added are aligned per site.
    inline SchemeResult per_area_union(const Scenario &sc, const ChannelSet &cs, const SolverConfig &cfg = {})
    {
        const int J = sc.num_areas(), L = sc.num_sites();
        const double ma_unit = sc.costs.ma_cost;
        std::vector<Plan> plans;
        RVec z = RVec::Zero(L);
        for (int j = 0; j < J; ++j)
        {
            const Scenario sub = single_area(sc, j);
            const ChannelSet sub_cs = build_channels(sub);
            Plan p = plan_joint(sub, sub_cs, cfg);
            if (!p.feasible)
                return infeasible_scheme("union", ma_unit, "infeasible");
            z = z.cwiseMax(p.solution.z);
            plans.push_back(std::move(p));
        }
        RMat x(cs.M, J);
        std::vector<CVec> v(J);
        for (int j = 0; j < J; ++j)
        {
            x.col(j) = plans[j].solution.x.col(0);
            v[j] = plans[j].solution.phases[0];
            const int kc = centroid_sample(sc.areas[j]);
            for (int l = 0; l < L; ++l)
            {
                if (z(l) < 0.5 || plans[j].solution.z(l) > 0.5)
                    continue;
                for (int n = cs.offset[l]; n < cs.offset[l + 1]; ++n)
                {
                    const cdouble c = cs.cascade[j](n, kc);
                    v[j](n) = std::abs(c) > 0 ? c / std::abs(c) : cdouble(1.0, 0.0);
                }
                rotate_site(cs, j, v[j], z, x.col(j), l, RVec::Ones(cs.samples(j)));
            }
            if (area_ratio(cs, j, v[j], z, x.col(j)) < 1.0 + cfg.accept_tolerance)
                polish_area(cs, j, z, x.col(j), v[j], cfg.polish_iterations, cfg.conic);
        }
        if (!meets_thresholds(cs, v, z, x, cfg.accept_tolerance))
        {
            DeploymentOptions frozen;
            frozen.fixed_z = z;
            RepairContext ctx{&sc, &cs, &cfg, &frozen, ma_unit};
            if (!repair_configuration(ctx, z, x, v))
                return infeasible_scheme("union", ma_unit, "infeasible");
        }
        const Plan p = make_plan(sc, cs, z, x, v, ma_unit);
        return scheme_result("union", sc, cs, p.solution, ma_unit, p.feasible, p.feasible ? "ok" : "infeasible");
    }

    inline SchemeResult all_irs(const Scenario &sc, const ChannelSet &cs, const SolverConfig &cfg = {})
    {
        DeploymentOptions opts;
        opts.fixed_z = RVec::Ones(sc.num_sites());
        const Plan p = plan_joint(sc, cs, cfg, opts);
        return scheme_result("all_irs", sc, cs, p);
    }

    inline SchemeResult fpa_irs(const Scenario &sc, const ChannelSet &cs, double kappa, const SolverConfig &cfg = {})
    {
        if (!(kappa > 0.0))
            throw InvalidGeometry("fixed-antenna cost ratio must be positive");
        DeploymentOptions opts;
        opts.fixed_x = packed_occupancy(sc);
        opts.ma_unit_cost = kappa * sc.costs.ma_cost;
        const Plan p = plan_joint(sc, cs, cfg, opts);
        return scheme_result("fpa_irs", sc, cs, p);
    }

    // ---------------------------------------------------------------------------------
    // Budget-constrained worst-case SNR maximization.

    struct BudgetOptions
    {
        std::optional<RMat> fixed_x;     // frozen antenna layout (fixed-array variant)
        std::optional<double> ma_unit_cost;
        const SchemeResult *incumbent = nullptr; // result at a smaller budget, reused if better
    };

    // Cheapest configuration with at least one site and the antennas needed to serve every area.
    inline double hardware_floor(const Scenario &sc, const BudgetOptions &opts)
    {
        const double ma_unit = opts.ma_unit_cost.value_or(sc.costs.ma_cost);
        double cheapest = std::numeric_limits<double>::infinity();
        for (int l = 0; l < sc.num_sites(); ++l)
            cheapest = std::min(cheapest, sc.site_full_cost(l));
        if (opts.fixed_x)
            return cheapest + configuration_cost(sc, RVec::Zero(sc.num_sites()), *opts.fixed_x, ma_unit);
        return cheapest + ma_unit;
    }

    // Keeps `cap` antennas of the packed layout for area j, dropping the antenna whose
    // removal costs the least worst-sample SNR, with phases re-aligned after every drop.
    inline RVec select_antennas(const Scenario &sc, const ChannelSet &cs, int j, const RVec &z, int cap)
    {
        RVec x = packed_occupancy(sc).col(0);
        while (x.sum() > cap + 0.5)
        {
            const CVec v = aligned_phases(sc, cs, j, z, x);
            RMat g = cs.antenna_gains(j, v, z);
            for (int k = 0; k < g.rows(); ++k)
                g.row(k) /= cs.threshold[j](k);
            const RVec have = g * x;
            int drop = -1;
            double best = -std::numeric_limits<double>::infinity();
            for (int m = 0; m < cs.M; ++m)
            {
                if (x(m) < 0.5)
                    continue;
                const double r = (have - g.col(m)).minCoeff();
                if (r > best)
                {
                    best = r;
                    drop = m;
                }
            }
            x(drop) = 0.0;
        }
        return x;
    }

    inline SchemeResult budget_snr_max(const Scenario &sc, const ChannelSet &cs, double budget,
                                       const SolverConfig &cfg = {}, const BudgetOptions &opts = {})
    {
        const int L = sc.num_sites(), J = sc.num_areas();
        const std::string tag = opts.fixed_x ? "fpa_budget" : "ma_budget";
        const double ma_unit = opts.ma_unit_cost.value_or(sc.costs.ma_cost);
        if (!(budget >= 0.0))
            throw InvalidGeometry("budget must be non-negative");
        if (budget < hardware_floor(sc, opts) - 1e-9)
            return infeasible_scheme(tag, ma_unit, "infeasible");

        const double fixed_ma = opts.fixed_x ? configuration_cost(sc, RVec::Zero(L), *opts.fixed_x, ma_unit) : 0.0;
        auto site_cost = [&](const RVec &zs) {
            double c = 0.0;
            for (int l = 0; l < L; ++l)
                if (zs(l) > 0.5)
                    c += sc.site_full_cost(l);
            return c;
        };
        auto antenna_cap = [&](const RVec &zs) {
            if (opts.fixed_x)
                return sc.m_max;
            return std::min(sc.m_max, static_cast<int>(std::floor((budget - site_cost(zs)) / ma_unit + 1e-9)));
        };

        struct Entry
        {
            double floor = -1.0;
            RVec z;
            RMat x;
            std::vector<CVec> v;
        };
        Entry best;
        auto evaluate = [&](const RVec &zs, const RMat &xs, std::vector<CVec> v, bool polish) {
            for (int j = 0; j < J; ++j)
            {
                const CVec fresh = aligned_phases(sc, cs, j, zs, xs.col(j));
                if (area_ratio(cs, j, fresh, zs, xs.col(j)) > area_ratio(cs, j, v[j], zs, xs.col(j)))
                    v[j] = fresh;
                if (polish)
                    polish_area(cs, j, zs, xs.col(j), v[j], cfg.polish_iterations, cfg.conic);
            }
            v = unit_modulus(v);
            Entry e{worst_ratio(cs, v, zs, xs), zs, xs, v};
            return e;
        };
        auto keep = [&](const Entry &e) {
            if (e.floor > best.floor)
                best = e;
        };

        // penalty loop in budget form
        {
            RVec z = RVec::Ones(L);
            RMat x = opts.fixed_x ? *opts.fixed_x : packed_occupancy(sc);
            std::vector<CVec> v(J);
            for (int j = 0; j < J; ++j)
                v[j] = aligned_phases(sc, cs, j, z, x.col(j));
            DeploymentOptions dopts;
            dopts.fixed_x = opts.fixed_x;
            dopts.ma_unit_cost = ma_unit;
            double zeta = cfg.initial_penalty * std::max(budget, 1.0);
            double xi = cfg.initial_penalty;
            for (int outer = 0; outer < cfg.costmin_outer_cap; ++outer)
            {
                for (int inner = 0; inner < cfg.inner_cap; ++inner)
                {
                    DeploymentStepInput din;
                    din.sc = &sc;
                    din.cs = &cs;
                    din.phases = &v;
                    din.xr = x;
                    din.zr = z;
                    din.penalty = zeta;
                    din.ma_unit_cost = ma_unit;
                    din.options = &dopts;
                    din.objective = DeploymentObjective::budget;
                    din.budget = budget;
                    din.floor_cap = cfg.eta_cap;
                    const DeploymentStepResult d = deployment_step(din, cfg.conic);
                    if (d.status != conic::SolveStatus::optimal)
                        break;
                    const double change = std::max((d.x - x).cwiseAbs().maxCoeff(), (d.z - z).cwiseAbs().maxCoeff());
                    x = d.x;
                    z = d.z;
                    PhaseStepInput pin;
                    pin.cs = &cs;
                    pin.areas.resize(J);
                    std::iota(pin.areas.begin(), pin.areas.end(), 0);
                    pin.expansion = &v;
                    pin.z = z;
                    pin.x = x;
                    pin.penalty = xi;
                    pin.objective = PhaseObjective::shared_floor;
                    pin.floor_cap = cfg.eta_cap;
                    const PhaseStepResult p = phase_step(pin, cfg.conic);
                    if (p.status == conic::SolveStatus::optimal)
                        v = p.v;
                    if (change <= cfg.inner_tolerance)
                        break;
                }
                // rounding within the budget: strongest sites first, then the largest antenna
                // weights up to the affordable count
                std::vector<int> order(L);
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return z(a) > z(b); });
                RVec zb = RVec::Zero(L);
                for (int l : order)
                {
                    if (z(l) < 0.5 && zb.sum() > 0.5)
                        break;
                    RVec zt = zb;
                    zt(l) = 1.0;
                    if (site_cost(zt) + fixed_ma + (opts.fixed_x ? 0.0 : ma_unit) <= budget + 1e-9)
                        zb = zt;
                }
                if (zb.sum() > 0.5)
                {
                    RMat xb = opts.fixed_x ? *opts.fixed_x : RMat::Zero(cs.M, J);
                    if (!opts.fixed_x)
                    {
                        const int cap = antenna_cap(zb);
                        const auto nb = detail::conflict_neighbours(sc);
                        for (int j = 0; j < J; ++j)
                        {
                            std::vector<int> idx(cs.M);
                            std::iota(idx.begin(), idx.end(), 0);
                            std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return x(a, j) > x(b, j); });
                            int count = 0;
                            for (int m : idx)
                            {
                                if (count >= cap)
                                    break;
                                bool ok = true;
                                for (int q : nb[m])
                                    if (xb(q, j) > 0.5)
                                        ok = false;
                                if (ok)
                                {
                                    xb(m, j) = 1.0;
                                    ++count;
                                }
                            }
                        }
                    }
                    keep(evaluate(zb, xb, v, false));
                }
                zeta *= cfg.penalty_growth;
                xi *= cfg.penalty_growth;
            }
        }

        // site-set search with the affordable antenna count per area
        std::vector<Entry> shortlist;
        for (int mask = 1; mask < (1 << std::min(L, cfg.subset_enumeration_limit)); ++mask)
        {
            RVec zs = RVec::Zero(L);
            for (int l = 0; l < std::min(L, cfg.subset_enumeration_limit); ++l)
                zs(l) = (mask >> l) & 1;
            if (site_cost(zs) + fixed_ma + (opts.fixed_x ? 0.0 : ma_unit) > budget + 1e-9)
                continue;
            RMat xs = opts.fixed_x ? *opts.fixed_x : RMat::Zero(cs.M, J);
            if (!opts.fixed_x)
                for (int j = 0; j < J; ++j)
                    xs.col(j) = select_antennas(sc, cs, j, zs, antenna_cap(zs));
            std::vector<CVec> v(J, CVec::Ones(cs.N));
            shortlist.push_back(evaluate(zs, xs, v, false));
        }
        std::stable_sort(shortlist.begin(), shortlist.end(), [](const Entry &a, const Entry &b) { return a.floor > b.floor; });
        for (std::size_t i = 0; i < shortlist.size() && i < 3; ++i)
            keep(evaluate(shortlist[i].z, shortlist[i].x, shortlist[i].v, true));
        if (best.floor > 0)
            keep(evaluate(best.z, best.x, best.v, true));

        if (best.floor < 0)
            return infeasible_scheme(tag, ma_unit, "infeasible");
        DeploymentSolution sol;
        sol.z = best.z;
        sol.x = best.x;
        sol.phases = best.v;
        SchemeResult r = scheme_result(tag, sc, cs, sol, ma_unit, true, "ok");
        r.floor = best.floor;
        if (opts.incumbent && opts.incumbent->feasible && opts.incumbent->floor > r.floor &&
            opts.incumbent->cost.total <= budget + 1e-9)
        {
            r = *opts.incumbent;
            r.scheme = tag;
        }
        return r;
    }

} // namespace irsma

#endif // IRSMA_BASELINES_HPP
