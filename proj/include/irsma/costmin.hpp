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

#ifndef IRSMA_COSTMIN_HPP
#define IRSMA_COSTMIN_HPP

// Deployment cost minimization. The inner loop alternates a penalized deployment LP over
// antennas, sites and linearized site-site-antenna products with a margin-maximizing phase
// SOCP; the outer loop scales the penalties. Each outer pass is rounded, repaired and
// audited, and the cheapest feasible configuration is kept and finally shrunk by removal
// moves.

#include "feasibility.hpp"

#include <functional>
#include <map>
#include <optional>

namespace irsma
{
    struct Plan
    {
        DeploymentSolution solution;
        CostBreakdown cost;
        std::vector<RVec> snr; // per area, per sample (linear), from the factorized model
        bool feasible = false;
        std::string status;    // converged | not-converged | infeasible
        std::vector<TraceRecord> trace;
        double ma_unit_cost = 0;

        double worst_snr_db() const
        {
            double w = std::numeric_limits<double>::infinity();
            for (const RVec &s : snr)
                w = std::min(w, s.minCoeff());
            return linear_to_db(w);
        }
    };

    // Optional frozen blocks for the baseline schemes.
    struct DeploymentOptions
    {
        std::optional<RVec> fixed_z;   // frozen site selection
        std::optional<RMat> fixed_x;   // frozen antenna occupancy
        std::optional<double> ma_unit_cost;
        bool removal_moves = true;
    };

    // ---------------------------------------------------------------------------------
    // Deployment LP.

    enum class DeploymentObjective
    {
        cost,  // min cost + penalties s.t. SNR rows >= threshold
        budget // max floor - penalties s.t. SNR rows >= floor * threshold, cost <= budget
    };

    struct DeploymentStepInput
    {
        const Scenario *sc = nullptr;
        const ChannelSet *cs = nullptr;
        const std::vector<CVec> *phases = nullptr;
        RMat xr;
        RVec zr;
        double penalty = 0;
        double ma_unit_cost = 0;
        const DeploymentOptions *options = nullptr;
        DeploymentObjective objective = DeploymentObjective::cost;
        double budget = 0;
        double floor_cap = 1e6;
    };

    struct DeploymentStepResult
    {
        conic::SolveStatus status = conic::SolveStatus::numerical_failure;
        RMat x;
        RVec z;
        double objective = 0;
        double floor = 0;
        int product_variables = 0;
    };

    namespace detail
    {
        // A factor of a product term: either a fixed 0/1 value or a variable index.
        struct Factor
        {
            int var = -1;
            double value = 1.0;
        };
    } // namespace detail

    inline DeploymentStepResult deployment_step(const DeploymentStepInput &in, const conic::SolverOptions &opt)
    {
        const Scenario &sc = *in.sc;
        const ChannelSet &cs = *in.cs;
        const DeploymentOptions &o = *in.options;
        const int M = cs.M, J = cs.num_areas(), L = cs.L;
        const bool budget_mode = in.objective == DeploymentObjective::budget;
        const double sign = budget_mode ? 0.0 : 1.0; // cost enters the objective only in cost mode

        conic::LinearProgramSpec lp;
        int floor_var = -1;
        if (budget_mode)
            floor_var = lp.add_variable(1.0, 0.0, in.floor_cap);

        // z variables
        std::vector<detail::Factor> zf(L);
        for (int l = 0; l < L; ++l)
        {
            if (o.fixed_z)
                zf[l].value = (*o.fixed_z)(l) > 0.5 ? 1.0 : 0.0;
            else
                zf[l].var = lp.add_variable(-sign * sc.site_full_cost(l) - in.penalty * (1.0 - 2.0 * in.zr(l)), 0.0, 1.0);
        }
        // x variables
        std::vector<detail::Factor> xf(static_cast<std::size_t>(M) * J);
        auto xi = [&](int m, int j) { return static_cast<std::size_t>(j) * M + m; };
        for (int j = 0; j < J; ++j)
            for (int m = 0; m < M; ++m)
            {
                if (o.fixed_x)
                    xf[xi(m, j)].value = (*o.fixed_x)(m, j) > 0.5 ? 1.0 : 0.0;
                else
                    xf[xi(m, j)].var = lp.add_variable(-in.penalty * (1.0 - 2.0 * in.xr(m, j)), 0.0, 1.0);
            }
        // epigraph of the per-area antenna count
        int t_var = -1;
        double ma_const = 0.0;
        if (o.fixed_x)
        {
            for (int j = 0; j < J; ++j)
                ma_const = std::max(ma_const, o.fixed_x->col(j).sum());
            ma_const *= in.ma_unit_cost;
        }
        else
        {
            t_var = lp.add_variable(-sign * in.ma_unit_cost, 0.0, static_cast<double>(M));
            for (int j = 0; j < J; ++j)
            {
                std::vector<conic::Term> t{{t_var, -1.0}};
                for (int m = 0; m < M; ++m)
                    t.push_back({xf[xi(m, j)].var, 1.0});
                lp.add_row(std::move(t), 0.0);
            }
            for (int j = 0; j < J; ++j)
            {
                for (auto [m, q] : sc.conflicts.pairs)
                    lp.add_row({{xf[xi(m, j)].var, 1.0}, {xf[xi(q, j)].var, 1.0}}, 1.0);
                if (sc.m_max < M)
                {
                    std::vector<conic::Term> t;
                    for (int m = 0; m < M; ++m)
                        t.push_back({xf[xi(m, j)].var, 1.0});
                    lp.add_row(std::move(t), sc.m_max);
                }
            }
        }
        if (budget_mode)
        {
            std::vector<conic::Term> t;
            if (t_var >= 0)
                t.push_back({t_var, in.ma_unit_cost});
            double fixed_cost = ma_const;
            for (int l = 0; l < L; ++l)
            {
                if (zf[l].var >= 0)
                    t.push_back({zf[l].var, sc.site_full_cost(l)});
                else
                    fixed_cost += zf[l].value * sc.site_full_cost(l);
            }
            if (t.empty())
            {
                if (fixed_cost > in.budget)
                {
                    DeploymentStepResult r;
                    r.status = conic::SolveStatus::infeasible;
                    return r;
                }
            }
            else
                lp.add_row(std::move(t), in.budget - fixed_cost);
        }

        // Product terms z_l z_l' x_mj, linearized over their free factors.
        std::map<std::vector<int>, int> products;
        auto product_var = [&](std::vector<int> slots) {
            std::sort(slots.begin(), slots.end());
            auto it = products.find(slots);
            if (it != products.end())
                return it->second;
            const int s = lp.add_variable(0.0, 0.0, 1.0);
            std::vector<int> distinct = slots;
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            for (int f : distinct)
                lp.add_row({{s, 1.0}, {f, -1.0}}, 0.0);
            std::vector<conic::Term> lo{{s, -1.0}};
            for (int f : slots)
                lo.push_back({f, 1.0});
            lp.add_row(std::move(lo), static_cast<double>(slots.size()) - 1.0);
            products.emplace(slots, s);
            return s;
        };

        for (int j = 0; j < J; ++j)
        {
            const CMat S = cs.site_sums(j, (*in.phases)[j]); // K x L
            const int K = cs.samples(j);
            // coefficient of each LP variable, per sample
            std::map<int, RVec> coef;
            RVec constant = RVec::Zero(K);
            for (int m = 0; m < M; ++m)
            {
                const detail::Factor &fx = xf[xi(m, j)];
                if (fx.var < 0 && fx.value == 0.0)
                    continue;
                for (int l = 0; l < L; ++l)
                    for (int l2 = l; l2 < L; ++l2)
                    {
                        const detail::Factor f[3] = {zf[l], zf[l2], fx};
                        bool zero = false;
                        std::vector<int> slots;
                        for (const detail::Factor &q : f)
                        {
                            if (q.var >= 0)
                                slots.push_back(q.var);
                            else if (q.value == 0.0)
                                zero = true;
                        }
                        if (zero)
                            continue;
                        const double kappa = l == l2 ? 1.0 : 2.0;
                        RVec c(K);
                        for (int k = 0; k < K; ++k)
                            c(k) = kappa * cs.pbar *
                                   (S(k, l) * cs.bs_row(l, m) * std::conj(S(k, l2) * cs.bs_row(l2, m))).real();
                        if (slots.empty())
                            constant += c;
                        else
                        {
                            const int var = slots.size() == 1 ? slots[0] : product_var(slots);
                            auto it = coef.find(var);
                            if (it == coef.end())
                                coef.emplace(var, c);
                            else
                                it->second += c;
                        }
                    }
            }
            const double gamma = cs.threshold[j](0);
            for (int k = 0; k < K; ++k)
            {
                // sum coef * var + constant >= gamma   (cost)
                // sum coef * var + constant >= gamma * floor   (budget)
                std::vector<conic::Term> t;
                for (const auto &[var, c] : coef)
                    if (c(k) != 0.0)
                        t.push_back({var, -c(k)});
                if (budget_mode)
                {
                    t.push_back({floor_var, gamma});
                    lp.add_row(std::move(t), constant(k));
                }
                else
                    lp.add_row(std::move(t), constant(k) - gamma);
            }
        }

        const conic::SolveOutcome out = conic::solve_lp(lp, opt);
        DeploymentStepResult res;
        res.status = out.status;
        res.product_variables = static_cast<int>(products.size());
        if (out.status != conic::SolveStatus::optimal)
            return res;
        res.objective = out.objective;
        if (floor_var >= 0)
            res.floor = out.values[floor_var];
        res.z.resize(L);
        for (int l = 0; l < L; ++l)
            res.z(l) = zf[l].var >= 0 ? std::clamp(out.values[zf[l].var], 0.0, 1.0) : zf[l].value;
        res.x.resize(M, J);
        for (int j = 0; j < J; ++j)
            for (int m = 0; m < M; ++m)
            {
                const detail::Factor &f = xf[xi(m, j)];
                res.x(m, j) = f.var >= 0 ? std::clamp(out.values[f.var], 0.0, 1.0) : f.value;
            }
        return res;
    }

    // ---------------------------------------------------------------------------------
    // Binary configuration helpers.

    inline bool meets_thresholds(const ChannelSet &cs, const std::vector<CVec> &v, const RVec &z, const RMat &x,
                                 double tol)
    {
        for (int j = 0; j < cs.num_areas(); ++j)
        {
            const RVec s = cs.snr(j, v[j], z, x.col(j));
            if ((s.array() < cs.threshold[j].array() * (1.0 - tol)).any())
                return false;
        }
        return true;
    }

    // Sum over samples of the normalized shortfall below threshold.
    inline double shortfall(const ChannelSet &cs, const std::vector<CVec> &v, const RVec &z, const RMat &x)
    {
        double s = 0.0;
        for (int j = 0; j < cs.num_areas(); ++j)
        {
            const RVec p = cs.snr(j, v[j], z, x.col(j));
            for (int k = 0; k < p.size(); ++k)
                s += std::max(0.0, 1.0 - p(k) / cs.threshold[j](k));
        }
        return s;
    }

    inline double configuration_cost(const Scenario &sc, const RVec &z, const RMat &x, double ma_unit_cost)
    {
        double c = 0.0;
        for (int j = 0; j < x.cols(); ++j)
            c = std::max(c, std::round(x.col(j).sum()));
        c *= ma_unit_cost;
        for (int l = 0; l < sc.num_sites(); ++l)
            if (z(l) > 0.5)
                c += sc.site_full_cost(l);
        return c;
    }

    // Common phase rotation of site l in area j maximizing the received power summed over
    // the samples with the given weights.
    inline void rotate_site(const ChannelSet &cs, int j, CVec &v, const RVec &z, const RVec &x, int l,
                            const RVec &weight)
    {
        const CMat S = cs.site_sums(j, v);
        cdouble acc = 0.0;
        for (int k = 0; k < cs.samples(j); ++k)
            for (int m = 0; m < cs.M; ++m)
            {
                if (x(m) <= 0)
                    continue;
                cdouble others = 0.0;
                for (int l2 = 0; l2 < cs.L; ++l2)
                    if (l2 != l)
                        others += z(l2) * S(k, l2) * cs.bs_row(l2, m);
                acc += weight(k) * x(m) * std::conj(others) * S(k, l) * cs.bs_row(l, m);
            }
        if (std::abs(acc) == 0.0)
            return;
        const cdouble r = std::conj(acc) / std::abs(acc);
        for (int n = cs.offset[l]; n < cs.offset[l + 1]; ++n)
            v(n) *= std::conj(r);
    }

    inline double area_ratio(const ChannelSet &cs, int j, const CVec &v, const RVec &z, const RVec &x)
    {
        if (x.sum() < 0.5)
            return 0.0;
        return (cs.snr(j, v, z, x).array() / cs.threshold[j].array()).minCoeff();
    }

    // Phase SCA for one area on a binary configuration: margin steps with a large modulus
    // penalty, projected to unit modulus after each step. Keeps the best projected phases.
    inline double polish_area(const ChannelSet &cs, int j, const RVec &z, const RVec &x, CVec &v, int iterations,
                              const conic::SolverOptions &opt)
    {
        double best = area_ratio(cs, j, v, z, x);
        if (x.sum() < 0.5)
            return best;
        std::vector<CVec> cur(cs.num_areas(), v);
        RMat xm = RMat::Zero(cs.M, cs.num_areas());
        xm.col(j) = x;
        for (int it = 0; it < iterations; ++it)
        {
            PhaseStepInput pin;
            pin.cs = &cs;
            pin.areas = {j};
            pin.expansion = &cur;
            pin.z = z;
            pin.x = xm;
            pin.penalty = 10.0;
            pin.objective = PhaseObjective::margins;
            pin.margin_lower = 1.0;
            const PhaseStepResult r = phase_step(pin, opt);
            if (r.status != conic::SolveStatus::optimal)
                break;
            cur[j] = unit_modulus(r.v[j]);
            const double w = area_ratio(cs, j, cur[j], z, x);
            if (w <= best * (1.0 + 1e-6))
                break;
            best = w;
            v = cur[j];
        }
        return best;
    }

    inline double polish_phases(const ChannelSet &cs, const RVec &z, const RMat &x, std::vector<CVec> &v,
                                int iterations, const conic::SolverOptions &opt)
    {
        for (int j = 0; j < cs.num_areas(); ++j)
            polish_area(cs, j, z, x.col(j), v[j], iterations, opt);
        return worst_ratio(cs, v, z, x);
    }

    // Best of the incumbent phases and a fresh alignment for (z, x), polished when slightly
    // short of the threshold.
    inline double tune_area(const Scenario &sc, const ChannelSet &cs, int j, const RVec &z, const RVec &x, CVec &v,
                            const SolverConfig &cfg)
    {
        const CVec fresh = aligned_phases(sc, cs, j, z, x);
        double r = area_ratio(cs, j, v, z, x);
        const double rf = area_ratio(cs, j, fresh, z, x);
        if (rf > r)
        {
            v = fresh;
            r = rf;
        }
        if (r < 1.0 + cfg.accept_tolerance && r >= cfg.polish_reach)
            r = polish_area(cs, j, z, x, v, cfg.polish_iterations, cfg.conic);
        return r;
    }

    namespace detail
    {
        inline std::vector<std::vector<int>> conflict_neighbours(const Scenario &sc)
        {
            std::vector<std::vector<int>> nb(sc.num_antennas());
            for (auto [m, q] : sc.conflicts.pairs)
            {
                nb[m].push_back(q);
                nb[q].push_back(m);
            }
            return nb;
        }

        // Conflict-free antenna sets of size 1..m_max, or nothing when there are more than cap.
        inline std::optional<std::vector<std::vector<int>>> small_layouts(const Scenario &sc, std::size_t cap)
        {
            const int M = sc.num_antennas();
            const auto nb = conflict_neighbours(sc);
            std::vector<std::vector<int>> out;
            std::vector<int> cur;
            bool overflow = false;
            std::function<void(int)> rec = [&](int from) {
                for (int m = from; m < M && !overflow; ++m)
                {
                    bool ok = true;
                    for (int q : nb[m])
                        if (std::find(cur.begin(), cur.end(), q) != cur.end())
                            ok = false;
                    if (!ok)
                        continue;
                    cur.push_back(m);
                    out.push_back(cur);
                    if (out.size() > cap)
                        overflow = true;
                    if (static_cast<int>(cur.size()) < sc.m_max)
                        rec(m + 1);
                    cur.pop_back();
                }
            };
            rec(0);
            if (overflow)
                return std::nullopt;
            std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.size() < b.size(); });
            return out;
        }
    } // namespace detail

    struct AreaFit
    {
        RVec x;
        CVec v;
        bool ok = false;
    };

    // Fewest antennas serving area j with the sites frozen at z.
    inline AreaFit fit_area(const Scenario &sc, const ChannelSet &cs, int j, const RVec &z, const SolverConfig &cfg)
    {
        const int M = cs.M;
        AreaFit fit;
        if (z.sum() < 0.5)
            return fit;

        if (const auto layouts = detail::small_layouts(sc, 256))
        {
            for (const std::vector<int> &set : *layouts)
            {
                RVec x = RVec::Zero(M);
                for (int m : set)
                    x(m) = 1.0;
                CVec v = aligned_phases(sc, cs, j, z, x);
                if (tune_area(sc, cs, j, z, x, v, cfg) >= 1.0 + cfg.accept_tolerance)
                    return {x, v, true};
            }
            return fit;
        }

        RVec x = packed_occupancy(sc).col(0);
        CVec v = aligned_phases(sc, cs, j, z, x);
        if (tune_area(sc, cs, j, z, x, v, cfg) < 1.0 + cfg.accept_tolerance)
            return fit;
        const auto nb = detail::conflict_neighbours(sc);

        for (int round = 0; round < M; ++round)
        {
            RMat g = cs.antenna_gains(j, v, z) * cs.pbar; // K x M, normalized below
            for (int k = 0; k < g.rows(); ++k)
                g.row(k) /= cs.threshold[j](k);
            const int K = static_cast<int>(g.rows());

            // greedy cover of the normalized deficits under the current phases, then drop
            // redundant antennas
            RVec xc = RVec::Zero(M);
            auto covered = [&](const RVec &xt) { return (g * xt).minCoeff() >= 1.0 + cfg.accept_tolerance; };
            for (int guard = 0; guard < M && !covered(xc); ++guard)
            {
                const RVec have = g * xc;
                int pick = -1;
                double best = 0.0;
                for (int m = 0; m < M; ++m)
                {
                    if (xc(m) > 0.5)
                        continue;
                    bool ok = true;
                    for (int q : nb[m])
                        if (xc(q) > 0.5)
                            ok = false;
                    if (!ok)
                        continue;
                    double gain = 0.0;
                    for (int k = 0; k < K; ++k)
                        gain += std::min(std::max(0.0, 1.0 + 1e-6 - have(k)), g(k, m));
                    if (gain > best)
                    {
                        best = gain;
                        pick = m;
                    }
                }
                if (pick < 0 || xc.sum() >= sc.m_max - 0.5)
                    break;
                xc(pick) = 1.0;
            }
            if (!covered(xc))
                xc = x;
            {
                const RVec weight = g.colwise().sum().transpose();
                std::vector<int> order(M);
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return weight(a) < weight(b); });
                for (int m : order)
                {
                    if (xc(m) < 0.5 || xc.sum() < 1.5)
                        continue;
                    xc(m) = 0.0;
                    if (!covered(xc))
                        xc(m) = 1.0;
                }
            }

            if (xc.sum() < x.sum() - 0.5)
            {
                x = xc;
                tune_area(sc, cs, j, z, x, v, cfg);
                continue;
            }

            // no greedy progress: try dropping one antenna and re-tuning the phases
            const RVec p = g * x;
            std::vector<std::pair<double, int>> loss;
            for (int m = 0; m < M; ++m)
                if (x(m) > 0.5)
                {
                    double worst = 0.0;
                    for (int k = 0; k < K; ++k)
                        worst = std::max(worst, g(k, m) / p(k));
                    loss.push_back({worst, m});
                }
            std::sort(loss.begin(), loss.end());
            bool moved = false;
            for (std::size_t i = 0; i < loss.size() && i < 3 && x.sum() > 1.5; ++i)
            {
                RVec xt = x;
                xt(loss[i].second) = 0.0;
                CVec vt = v;
                if (tune_area(sc, cs, j, z, xt, vt, cfg) >= 1.0 + cfg.accept_tolerance)
                {
                    x = xt;
                    v = vt;
                    moved = true;
                    break;
                }
            }
            if (!moved)
                break;
        }
        return {x, v, true};
    }

    struct Candidate
    {
        RVec z;
        RMat x;
        std::vector<CVec> v;
        double cost = std::numeric_limits<double>::infinity();
        bool ok = false;
    };

    // Configuration for a frozen site set: fewest antennas per area, or the frozen layout.
    inline Candidate fit_sites(const Scenario &sc, const ChannelSet &cs, const RVec &z, const SolverConfig &cfg,
                               const DeploymentOptions &opts, double ma_unit)
    {
        const int J = cs.num_areas();
        Candidate c;
        c.z = z;
        c.x = RMat::Zero(cs.M, J);
        c.v.assign(J, CVec::Ones(cs.N));
        for (int j = 0; j < J; ++j)
        {
            if (opts.fixed_x)
            {
                const RVec x = opts.fixed_x->col(j);
                CVec v = aligned_phases(sc, cs, j, z, x);
                if (tune_area(sc, cs, j, z, x, v, cfg) < 1.0 + cfg.accept_tolerance)
                    return c;
                c.x.col(j) = x;
                c.v[j] = v;
                continue;
            }
            const AreaFit f = fit_area(sc, cs, j, z, cfg);
            if (!f.ok)
                return c;
            c.x.col(j) = f.x;
            c.v[j] = f.v;
        }
        c.v = unit_modulus(c.v);
        c.ok = meets_thresholds(cs, c.v, z, c.x, cfg.accept_tolerance);
        c.cost = configuration_cost(sc, z, c.x, ma_unit);
        return c;
    }

    struct RepairContext
    {
        const Scenario *sc;
        const ChannelSet *cs;
        const SolverConfig *cfg;
        const DeploymentOptions *options;
        double ma_unit_cost;
    };

    // Greedy restoration: add the single site or antenna with the largest shortfall reduction
    // per unit cost until every sample meets its threshold.
    inline bool repair_configuration(const RepairContext &ctx, RVec &z, RMat &x, std::vector<CVec> &v)
    {
        const Scenario &sc = *ctx.sc;
        const ChannelSet &cs = *ctx.cs;
        const double tol = ctx.cfg->accept_tolerance;
        const int M = cs.M, J = cs.num_areas(), L = cs.L;
        std::vector<std::vector<int>> nb(M);
        for (auto [m, q] : sc.conflicts.pairs)
        {
            nb[m].push_back(q);
            nb[q].push_back(m);
        }
        bool polished = false;
        for (int guard = 0; guard < L + M * J + 2; ++guard)
        {
            if (meets_thresholds(cs, v, z, x, tol))
                return true;
            const double base = shortfall(cs, v, z, x);
            const double base_cost = configuration_cost(sc, z, x, ctx.ma_unit_cost);
            double best_score = 0.0;
            int kind = -1, bi = -1, bj = -1;
            std::vector<CVec> best_v;
            if (!ctx.options->fixed_z)
                for (int l = 0; l < L; ++l)
                {
                    if (z(l) > 0.5)
                        continue;
                    RVec zt = z;
                    zt(l) = 1.0;
                    std::vector<CVec> vt = v;
                    for (int j = 0; j < J; ++j)
                    {
                        const RVec p = cs.snr(j, vt[j], zt, x.col(j));
                        RVec w(p.size());
                        for (int k = 0; k < p.size(); ++k)
                            w(k) = p(k) < cs.threshold[j](k) ? 1.0 : 1e-3;
                        rotate_site(cs, j, vt[j], zt, x.col(j), l, w);
                    }
                    const double gain = base - shortfall(cs, vt, zt, x);
                    const double dc = configuration_cost(sc, zt, x, ctx.ma_unit_cost) - base_cost;
                    const double score = gain / std::max(dc, 1e-9);
                    if (gain > 1e-12 && score > best_score)
                    {
                        best_score = score;
                        kind = 0;
                        bi = l;
                        best_v = vt;
                    }
                }
            if (!ctx.options->fixed_x)
                for (int j = 0; j < J; ++j)
                {
                    if (x.col(j).sum() >= sc.m_max - 0.5)
                        continue;
                    for (int m = 0; m < M; ++m)
                    {
                        if (x(m, j) > 0.5)
                            continue;
                        bool ok = true;
                        for (int q : nb[m])
                            if (x(q, j) > 0.5)
                                ok = false;
                        if (!ok)
                            continue;
                        RMat xt = x;
                        xt(m, j) = 1.0;
                        const double gain = base - shortfall(cs, v, z, xt);
                        const double dc = configuration_cost(sc, z, xt, ctx.ma_unit_cost) - base_cost;
                        const double score = gain / std::max(dc, 1e-9);
                        if (gain > 1e-12 && score > best_score)
                        {
                            best_score = score;
                            kind = 1;
                            bi = m;
                            bj = j;
                        }
                    }
                }
            if (kind < 0)
            {
                if (polished)
                    return false;
                polish_phases(cs, z, x, v, ctx.cfg->polish_iterations, ctx.cfg->conic);
                polished = true;
                continue;
            }
            if (kind == 0)
            {
                z(bi) = 1.0;
                v = best_v;
            }
            else
                x(bi, bj) = 1.0;
        }
        return meets_thresholds(cs, v, z, x, tol);
    }

    // Removal moves on a feasible configuration: drop the most expensive removable site or
    // one antenna from every area at the maximum count, re-tuning phases, while feasible.
    inline void shrink_configuration(const RepairContext &ctx, RVec &z, RMat &x, std::vector<CVec> &v)
    {
        const Scenario &sc = *ctx.sc;
        const ChannelSet &cs = *ctx.cs;
        const double tol = ctx.cfg->accept_tolerance;
        const int L = cs.L, J = cs.num_areas();
        for (int guard = 0; guard < L + cs.M + 2; ++guard)
        {
            struct Move
            {
                double saving;
                RVec z;
                RMat x;
            };
            std::vector<Move> moves;
            if (!ctx.options->fixed_z && z.sum() > 1.5)
                for (int l = 0; l < L; ++l)
                    if (z(l) > 0.5)
                    {
                        RVec zt = z;
                        zt(l) = 0.0;
                        moves.push_back({sc.site_full_cost(l), zt, x});
                    }
            if (!ctx.options->fixed_x)
            {
                double mx = 0.0;
                for (int j = 0; j < J; ++j)
                    mx = std::max(mx, std::round(x.col(j).sum()));
                if (mx > 1.5)
                {
                    RMat xt = x;
                    for (int j = 0; j < J; ++j)
                    {
                        if (std::round(x.col(j).sum()) < mx)
                            continue;
                        // weakest antenna in the area relative to the weakest samples
                        const RMat g = cs.antenna_gains(j, v[j], z);
                        const RVec p = cs.snr(j, v[j], z, x.col(j));
                        int weakest = -1;
                        double lowest = std::numeric_limits<double>::infinity();
                        for (int m = 0; m < cs.M; ++m)
                        {
                            if (x(m, j) < 0.5)
                                continue;
                            double loss = 0.0;
                            for (int k = 0; k < p.size(); ++k)
                                loss = std::max(loss, cs.pbar * g(k, m) / p(k));
                            if (loss < lowest)
                            {
                                lowest = loss;
                                weakest = m;
                            }
                        }
                        xt(weakest, j) = 0.0;
                    }
                    moves.push_back({ctx.ma_unit_cost, z, xt});
                }
            }
            std::stable_sort(moves.begin(), moves.end(), [](const Move &a, const Move &b) { return a.saving > b.saving; });
            bool accepted = false;
            for (Move &mv : moves)
            {
                std::vector<CVec> vt = v;
                if (!meets_thresholds(cs, vt, mv.z, mv.x, tol))
                    polish_phases(cs, mv.z, mv.x, vt, ctx.cfg->polish_iterations, ctx.cfg->conic);
                if (meets_thresholds(cs, vt, mv.z, mv.x, tol))
                {
                    z = mv.z;
                    x = mv.x;
                    v = vt;
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
                return;
        }
    }

    inline Plan make_plan(const Scenario &sc, const ChannelSet &cs, const RVec &z, const RMat &x,
                          const std::vector<CVec> &v, double ma_unit_cost)
    {
        Plan p;
        p.ma_unit_cost = ma_unit_cost;
        p.solution.x = x;
        p.solution.z = z;
        p.solution.phases = unit_modulus(v);
        p.cost = cost_breakdown(p.solution, sc, ma_unit_cost);
        for (int j = 0; j < cs.num_areas(); ++j)
            p.snr.push_back(cs.snr(j, p.solution.phases[j], z, x.col(j)));
        p.feasible = meets_thresholds(cs, p.solution.phases, z, x, 1e-7);
        return p;
    }

    inline Plan infeasible_plan(const Scenario &sc, double ma_unit_cost, const std::string &status)
    {
        Plan p;
        p.ma_unit_cost = ma_unit_cost;
        p.solution.x = RMat::Zero(sc.num_antennas(), sc.num_areas());
        p.solution.z = RVec::Zero(sc.num_sites());
        p.solution.phases.assign(sc.num_areas(), CVec::Ones(sc.total_elements()));
        p.feasible = false;
        p.status = status;
        return p;
    }

    // ---------------------------------------------------------------------------------

    inline Plan run_costmin(const Scenario &sc, const ChannelSet &cs, const FeasibilityReport &init,
                            const SolverConfig &cfg = {}, const DeploymentOptions &opts = {})
    {
        const int J = cs.num_areas(), L = cs.L;
        const double ma_unit = opts.ma_unit_cost.value_or(sc.costs.ma_cost);
        if (!init.feasible)
            throw InfeasibleProblem("cost minimization: the feasibility check failed, thresholds are unreachable");

        RVec z = opts.fixed_z ? *opts.fixed_z : RVec::Ones(L);
        RMat x = opts.fixed_x ? *opts.fixed_x : init.x;
        std::vector<CVec> v = init.phases;
        RepairContext ctx{&sc, &cs, &cfg, &opts, ma_unit};

        // the initial configuration must itself be feasible; frozen blocks may need phases re-tuned
        if (!meets_thresholds(cs, v, z, x, cfg.accept_tolerance))
        {
            polish_phases(cs, z, x, v, cfg.polish_iterations * 2, cfg.conic);
            if (!meets_thresholds(cs, v, z, x, cfg.accept_tolerance) && !repair_configuration(ctx, z, x, v))
                return infeasible_plan(sc, ma_unit, "infeasible");
        }

        RVec best_z = z;
        RMat best_x = x;
        std::vector<CVec> best_v = unit_modulus(v);
        double best_cost = configuration_cost(sc, z, x, ma_unit);

        const double cost_scale = std::max(best_cost, 1.0);
        double zeta = cfg.initial_penalty * cost_scale;
        double xi = cfg.initial_penalty; // margins are normalized by the thresholds

        std::vector<TraceRecord> trace;
        bool converged = false;
        auto penalized = [&](const RVec &zc, const RMat &xc) {
            double c = 0.0;
            for (int j = 0; j < J; ++j)
                c = std::max(c, xc.col(j).sum());
            c *= ma_unit;
            double pen = 0.0;
            for (int l = 0; l < L; ++l)
            {
                c += zc(l) * sc.site_full_cost(l);
                pen += zc(l) * (1.0 - zc(l));
            }
            for (Eigen::Index k = 0; k < xc.size(); ++k)
                pen += xc.data()[k] * (1.0 - xc.data()[k]);
            return c + zeta * pen;
        };

        for (int outer = 0; outer < cfg.costmin_outer_cap; ++outer)
        {
            double prev = penalized(z, x);
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
                din.options = &opts;
                DeploymentStepResult d = deployment_step(din, cfg.conic);

                PhaseStepInput pin;
                pin.cs = &cs;
                pin.areas.resize(J);
                std::iota(pin.areas.begin(), pin.areas.end(), 0);
                pin.penalty = xi;
                pin.objective = PhaseObjective::margins;

                if (d.status != conic::SolveStatus::optimal)
                {
                    // one extra margin pass on the incumbent before giving up on this inner loop
                    pin.expansion = &v;
                    pin.z = z;
                    pin.x = x;
                    pin.margin_lower = 1.0;
                    const PhaseStepResult p = phase_step(pin, cfg.conic);
                    if (p.status == conic::SolveStatus::optimal)
                        v = p.v;
                    d = deployment_step(din, cfg.conic);
                    if (d.status != conic::SolveStatus::optimal)
                        break;
                }
                x = d.x;
                z = d.z;

                pin.expansion = &v;
                pin.z = z;
                pin.x = x;
                pin.margin_lower = 0.0;
                PhaseStepResult p = phase_step(pin, cfg.conic);
                if (p.status != conic::SolveStatus::optimal)
                {
                    pin.margin_lower = 1.0;
                    p = phase_step(pin, cfg.conic);
                }
                if (p.status == conic::SolveStatus::optimal)
                    v = p.v;

                const double now = penalized(z, x);
                const std::vector<int> active = elements_of(cs, z);
                trace.push_back({outer, inner, zeta, xi, now,
                                 std::max({max_binary_violation(x), max_binary_violation(z),
                                           max_modulus_violation(v, active)})});
                if (std::abs(now - prev) <= cfg.inner_tolerance * std::max(1.0, std::abs(now)))
                    break;
                prev = now;
            }

            // rounded, repaired, audited candidate
            RVec zb(L);
            for (int l = 0; l < L; ++l)
                zb(l) = z(l) >= 0.5 ? 1.0 : 0.0;
            if (opts.fixed_z)
                zb = *opts.fixed_z;
            RMat xb = x;
            if (!opts.fixed_x)
            {
                const auto gains = antenna_gain_tables(cs, v, zb);
                for (int j = 0; j < J; ++j)
                    xb.col(j) = round_antennas(sc, x.col(j), gains[j], false);
            }
            std::vector<CVec> vb = unit_modulus(v);
            if (zb.sum() > 0.5 && !meets_thresholds(cs, vb, zb, xb, cfg.accept_tolerance))
                polish_phases(cs, zb, xb, vb, cfg.polish_iterations, cfg.conic);
            bool ok = zb.sum() > 0.5 && meets_thresholds(cs, vb, zb, xb, cfg.accept_tolerance);
            if (!ok)
                ok = repair_configuration(ctx, zb, xb, vb);
            if (ok)
            {
                const double c = configuration_cost(sc, zb, xb, ma_unit);
                if (c < best_cost - 1e-9)
                {
                    best_cost = c;
                    best_z = zb;
                    best_x = xb;
                    best_v = unit_modulus(vb);
                }
            }

            const std::vector<int> active = elements_of(cs, z);
            const double viol = std::max({max_binary_violation(x), max_binary_violation(z), max_modulus_violation(v, active)});
            if (viol < cfg.binary_tolerance)
            {
                converged = true;
                break;
            }
            zeta *= cfg.penalty_growth;
            xi *= cfg.penalty_growth;
        }

        // Site-subset search: every site set (or single flips around the incumbent when
        // there are many sites) with the antennas refitted under frozen sites. Sets are visited
        // by increasing site cost and skipped once they cannot beat the incumbent.
        {
            const double ma_floor = opts.fixed_x ? configuration_cost(sc, RVec::Zero(L), *opts.fixed_x, ma_unit) : ma_unit;
            auto site_cost = [&](const RVec &zs) {
                double c = 0.0;
                for (int l = 0; l < L; ++l)
                    if (zs(l) > 0.5)
                        c += sc.site_full_cost(l);
                return c;
            };
            auto consider = [&](const RVec &zs) {
                if (site_cost(zs) + ma_floor >= best_cost - 1e-9)
                    return false;
                const Candidate c = fit_sites(sc, cs, zs, cfg, opts, ma_unit);
                if (!c.ok || c.cost >= best_cost - 1e-9)
                    return false;
                best_cost = c.cost;
                best_z = c.z;
                best_x = c.x;
                best_v = c.v;
                return true;
            };
            std::vector<RVec> sets;
            if (opts.fixed_z)
                sets.push_back(*opts.fixed_z);
            else if (L <= cfg.subset_enumeration_limit)
                for (int mask = 1; mask < (1 << L); ++mask)
                {
                    RVec zs(L);
                    for (int l = 0; l < L; ++l)
                        zs(l) = (mask >> l) & 1;
                    sets.push_back(zs);
                }
            if (!sets.empty())
            {
                std::stable_sort(sets.begin(), sets.end(),
                                 [&](const RVec &a, const RVec &b) { return site_cost(a) < site_cost(b); });
                for (const RVec &zs : sets)
                    consider(zs);
            }
            else
                for (bool moved = true; moved;)
                {
                    moved = false;
                    const RVec base = best_z;
                    for (int l = 0; l < L; ++l)
                    {
                        RVec zs = base;
                        zs(l) = 1.0 - zs(l);
                        if (zs.sum() > 0.5)
                            moved = consider(zs) || moved;
                    }
                }
        }

        if (opts.removal_moves)
            shrink_configuration(ctx, best_z, best_x, best_v);

        Plan plan = make_plan(sc, cs, best_z, best_x, best_v, ma_unit);
        plan.trace = std::move(trace);
        plan.status = converged ? "converged" : "not-converged";
        if (!plan.feasible)
            plan.status = "infeasible";
        return plan;
    }

} // namespace irsma

#endif // IRSMA_COSTMIN_HPP
