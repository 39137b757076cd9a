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

#ifndef IRSMA_FEASIBILITY_HPP
#define IRSMA_FEASIBILITY_HPP

// Worst-case normalized SNR maximization with every IRS deployed and at most M_max
// antennas per area. Penalty double loop: the inner loop alternates an antenna LP and a
// phase SOCP, the outer loop scales the binary and unit-modulus penalties.

#include "audit.hpp"
#include "conic.hpp"
#include "surrogates.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace irsma
{
    struct SolverConfig
    {
        double penalty_growth = 5.0;     // mu
        double binary_tolerance = 1e-4;
        double inner_tolerance = 1e-3;   // relative
        int inner_cap = 30;
        int outer_cap = 12;
        int costmin_outer_cap = 3;       // penalty passes of the deployment loop before the site search
        double initial_penalty = 1e-3;   // times the objective scale
        double eta_cap = 1e6;
        double accept_tolerance = 1e-7;  // relative SNR slack when accepting a rounded plan
        int polish_iterations = 4;       // phase SCA passes used by repair and polishing
        double polish_reach = 0.9;       // polish only configurations at least this close to the threshold
        int subset_enumeration_limit = 6; // enumerate all site sets up to this many sites
        conic::SolverOptions conic;
    };

    struct TraceRecord
    {
        int outer = 0;
        int inner = 0;
        double penalty_binary = 0;
        double penalty_modulus = 0;
        double objective = 0;
        double violation = 0;
    };

    inline nlohmann::json to_json(const std::vector<TraceRecord> &trace)
    {
        nlohmann::json a = nlohmann::json::array();
        for (const TraceRecord &t : trace)
            a.push_back({{"outer", t.outer},
                         {"inner", t.inner},
                         {"penalty_binary", t.penalty_binary},
                         {"penalty_modulus", t.penalty_modulus},
                         {"objective", t.objective},
                         {"violation", t.violation}});
        return a;
    }

    // ---------------------------------------------------------------------------------
    // Helpers shared by the planners.

    inline double max_binary_violation(const RMat &x)
    {
        double v = 0.0;
        for (Eigen::Index k = 0; k < x.size(); ++k)
            v = std::max(v, binary_violation(x.data()[k]));
        return v;
    }

    inline double max_modulus_violation(const std::vector<CVec> &v, const std::vector<int> &elements)
    {
        double w = 0.0;
        for (const CVec &p : v)
            for (int n : elements)
                w = std::max(w, std::abs(1.0 - std::abs(p(n))));
        return w;
    }

    inline double hinge_sum(const std::vector<CVec> &v, const std::vector<int> &elements)
    {
        double s = 0.0;
        for (const CVec &p : v)
            for (int n : elements)
                s += std::max(0.0, 1.0 - std::norm(p(n)));
        return s;
    }

    inline CVec unit_modulus(const CVec &v)
    {
        CVec out(v.size());
        for (int n = 0; n < v.size(); ++n)
            out(n) = std::abs(v(n)) > 1e-300 ? v(n) / std::abs(v(n)) : cdouble(1.0, 0.0);
        return out;
    }

    inline std::vector<CVec> unit_modulus(const std::vector<CVec> &v)
    {
        std::vector<CVec> out;
        for (const CVec &p : v)
            out.push_back(unit_modulus(p));
        return out;
    }

    inline std::vector<int> elements_of(const ChannelSet &cs, const RVec &z, double threshold = 1e-6)
    {
        std::vector<int> out;
        for (int n = 0; n < cs.N; ++n)
            if (z(cs.site[n]) > threshold)
                out.push_back(n);
        return out;
    }

    // Worst normalized SNR over all areas with MRT.
    inline double worst_ratio(const ChannelSet &cs, const std::vector<CVec> &v, const RVec &z, const RMat &x)
    {
        return cs.worst_normalized(v, z, x);
    }

    // Sample index closest to the area centroid.
    inline int centroid_sample(const TargetArea &a)
    {
        const Vec3 c = a.centroid();
        int best = 0;
        for (std::size_t k = 1; k < a.samples.size(); ++k)
            if ((a.samples[k] - c).norm() < (a.samples[best] - c).norm())
                best = static_cast<int>(k);
        return best;
    }

    // Per-element conjugate alignment to the centroid sample, then per-site common phase
    // offsets by coordinate ascent on the total received power over the area.
    inline CVec aligned_phases(const Scenario &sc, const ChannelSet &cs, int j, const RVec &z, const RVec &x)
    {
        const int kc = centroid_sample(sc.areas[j]);
        CVec v(cs.N);
        for (int n = 0; n < cs.N; ++n)
        {
            const cdouble c = cs.cascade[j](n, kc);
            v(n) = std::abs(c) > 0 ? c / std::abs(c) : cdouble(1.0, 0.0);
        }
        CMat S = cs.site_sums(j, v); // K x L
        const int K = cs.samples(j);
        // per-site contribution D_l(k, m) = z_l S(k, l) bs_row(l, m), combined with rotations
        std::vector<cdouble> rot(cs.L, cdouble(1.0, 0.0));
        for (int sweep = 0; sweep < 4; ++sweep)
            for (int l = 0; l < cs.L; ++l)
            {
                if (z(l) <= 0)
                    continue;
                cdouble acc = 0.0;
                for (int k = 0; k < K; ++k)
                    for (int m = 0; m < cs.M; ++m)
                    {
                        if (x(m) <= 0)
                            continue;
                        cdouble others = 0.0;
                        for (int l2 = 0; l2 < cs.L; ++l2)
                            if (l2 != l)
                                others += z(l2) * rot[l2] * S(k, l2) * cs.bs_row(l2, m);
                        const cdouble mine = z(l) * S(k, l) * cs.bs_row(l, m);
                        acc += x(m) * std::conj(others) * mine;
                    }
                // maximize Re{r * acc}: r = conj(acc)/|acc|
                if (std::abs(acc) > 0)
                    rot[l] = std::conj(acc) / std::abs(acc);
            }
        // conj(v_n) picks up rot, so v_n picks up conj(rot)
        for (int n = 0; n < cs.N; ++n)
            v(n) *= std::conj(rot[cs.site[n]]);
        return v;
    }

    // ---------------------------------------------------------------------------------
    // Phase step: maximize a floor (shared across areas) or per-area margins under the
    // linearized received power, disc constraints and hinge-penalized modulus shells.

    enum class PhaseObjective
    {
        shared_floor, // max eta - pen * sum(delta), pbar/gamma_j * lin >= eta
        margins       // max sum beta_j - pen * sum(delta), pbar/gamma_j * lin >= 1 + beta_j
    };

    struct PhaseStepResult
    {
        conic::SolveStatus status = conic::SolveStatus::numerical_failure;
        std::vector<CVec> v;
        double floor = 0;            // eta (shared_floor)
        std::vector<double> margins; // beta_j (margins)
        double slack_sum = 0;
        double objective = 0;
    };

    struct PhaseStepInput
    {
        const ChannelSet *cs = nullptr;
        std::vector<int> areas;            // areas that get variables
        const std::vector<CVec> *expansion = nullptr;
        RVec z;                            // site weights
        RMat x;                            // M x J antenna weights
        double penalty = 0;
        PhaseObjective objective = PhaseObjective::shared_floor;
        double floor_cap = 1e6;
        double margin_lower = 0.0;         // beta_j >= -margin_lower
    };

    inline PhaseStepResult phase_step(const PhaseStepInput &in, const conic::SolverOptions &opt)
    {
        const ChannelSet &cs = *in.cs;
        const std::vector<CVec> &vr = *in.expansion;
        const std::vector<int> elems = elements_of(cs, in.z);
        PhaseStepResult res;
        res.v = vr;
        if (elems.empty())
        {
            res.status = conic::SolveStatus::infeasible;
            return res;
        }

        conic::ConeProgramSpec sp;
        auto &lp = sp.core;
        int floor_var = -1;
        std::vector<int> margin_var(cs.num_areas(), -1);
        if (in.objective == PhaseObjective::shared_floor)
            floor_var = lp.add_variable(1.0, 0.0, in.floor_cap);
        std::vector<conic::ComplexLayout> layout(cs.num_areas());
        const int ne = static_cast<int>(elems.size());
        for (int j : in.areas)
        {
            const double gamma = cs.threshold[j](0);
            if (in.objective == PhaseObjective::margins)
                margin_var[j] = lp.add_variable(1.0, -in.margin_lower, in.floor_cap);
            layout[j] = conic::lift_complex(lp, ne, -1.0, 1.0);
            const int delta_base = lp.num_vars;
            for (int i = 0; i < ne; ++i)
                lp.add_variable(-in.penalty, 0.0, conic::kInf);
            for (int i = 0; i < ne; ++i)
            {
                const cdouble r = vr[j](elems[i]);
                sp.cones.push_back(layout[j].disc(i));
                // 1 - delta <= 2 Re{conj(r) v} - |r|^2
                std::vector<conic::Term> t;
                for (const conic::Term &q : layout[j].real_inner(i, r))
                    t.push_back({q.var, -2.0 * q.coef});
                t.push_back({delta_base + i, -1.0});
                lp.add_row(std::move(t), -1.0 - std::norm(r));
            }

            const PhaseLinearization lin = linearize_phases(cs, j, vr[j], in.z, in.x.col(j));
            for (int k = 0; k < cs.samples(j); ++k)
            {
                std::vector<conic::Term> t;
                const double w = cs.pbar / gamma;
                for (int i = 0; i < ne; ++i)
                    for (const conic::Term &q : layout[j].real_inner(i, lin.coef(elems[i], k)))
                        if (q.coef != 0.0)
                            t.push_back({q.var, -2.0 * w * q.coef});
                if (in.objective == PhaseObjective::shared_floor)
                {
                    // w (2 Re - f) >= eta
                    t.push_back({floor_var, 1.0});
                    lp.add_row(std::move(t), -w * lin.value(k));
                }
                else
                {
                    // w (2 Re - f) >= 1 + beta
                    t.push_back({margin_var[j], 1.0});
                    lp.add_row(std::move(t), -w * lin.value(k) - 1.0);
                }
            }
        }

        const conic::SolveOutcome out = conic::solve_socp(sp, opt);
        res.status = out.status;
        if (out.status != conic::SolveStatus::optimal)
            return res;
        res.objective = out.objective;
        if (floor_var >= 0)
            res.floor = out.values[floor_var];
        res.margins.assign(cs.num_areas(), 0.0);
        for (int j : in.areas)
        {
            if (margin_var[j] >= 0)
                res.margins[j] = out.values[margin_var[j]];
            const CVec part = layout[j].load(out.values);
            for (int i = 0; i < ne; ++i)
            {
                cdouble val = part(i);
                // the disc holds only up to solver tolerance
                if (std::abs(val) > 1.0)
                    val /= std::abs(val);
                res.v[j](elems[i]) = val;
            }
            const int delta_base = layout[j].base + 2 * ne;
            for (int i = 0; i < ne; ++i)
                res.slack_sum += std::max(0.0, out.values[delta_base + i]);
        }
        return res;
    }

    // ---------------------------------------------------------------------------------
    // Antenna step.

    struct AntennaStepResult
    {
        conic::SolveStatus status = conic::SolveStatus::numerical_failure;
        RMat x;
        double floor = 0;
        double objective = 0;
    };

    // max eta - rho * sum((1 - 2 x^r) x)  s.t.  pbar/gamma_j sum_m C_jkm x_mj >= eta,
    // conflicts, per-area packing limit, 0 <= x <= 1.
    inline AntennaStepResult antenna_step(const Scenario &sc, const ChannelSet &cs, const std::vector<RMat> &gains,
                                          const RMat &xr, double rho, double eta_cap,
                                          const conic::SolverOptions &opt)
    {
        const int M = cs.M, J = cs.num_areas();
        conic::LinearProgramSpec lp;
        const int eta = lp.add_variable(1.0, 0.0, eta_cap);
        auto xv = [&](int m, int j) { return 1 + j * M + m; };
        for (int j = 0; j < J; ++j)
            for (int m = 0; m < M; ++m)
                lp.add_variable(-rho * (1.0 - 2.0 * xr(m, j)), 0.0, 1.0);
        for (int j = 0; j < J; ++j)
        {
            const double w = cs.pbar / cs.threshold[j](0);
            for (int k = 0; k < cs.samples(j); ++k)
            {
                std::vector<conic::Term> t{{eta, 1.0}};
                for (int m = 0; m < M; ++m)
                    if (gains[j](k, m) != 0.0)
                        t.push_back({xv(m, j), -w * gains[j](k, m)});
                lp.add_row(std::move(t), 0.0);
            }
            for (auto [m, q] : sc.conflicts.pairs)
                lp.add_row({{xv(m, j), 1.0}, {xv(q, j), 1.0}}, 1.0);
            if (sc.m_max < M)
            {
                std::vector<conic::Term> t;
                for (int m = 0; m < M; ++m)
                    t.push_back({xv(m, j), 1.0});
                lp.add_row(std::move(t), sc.m_max);
            }
        }
        const conic::SolveOutcome out = conic::solve_lp(lp, opt);
        AntennaStepResult res;
        res.status = out.status;
        if (out.status != conic::SolveStatus::optimal)
            return res;
        res.floor = out.values[eta];
        res.x.resize(M, J);
        for (int j = 0; j < J; ++j)
            for (int m = 0; m < M; ++m)
                res.x(m, j) = std::clamp(out.values[xv(m, j)], 0.0, 1.0);
        res.objective = out.objective;
        return res;
    }

    // ---------------------------------------------------------------------------------
    // Rounding of antenna occupancy: threshold, conflict repair, then greedy fill up to the
    // packing limit by total gain (ties to the smallest index).

    inline RVec round_antennas(const Scenario &sc, const RVec &x, const RMat &gains, bool fill)
    {
        const int M = sc.num_antennas();
        RVec out = RVec::Zero(M);
        std::vector<int> order(M);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x(a) > x(b); });
        std::vector<std::vector<int>> nb(M);
        for (auto [m, q] : sc.conflicts.pairs)
        {
            nb[m].push_back(q);
            nb[q].push_back(m);
        }
        auto compatible = [&](int m) {
            for (int q : nb[m])
                if (out(q) > 0.5)
                    return false;
            return true;
        };
        int count = 0;
        for (int m : order)
            if (x(m) >= 0.5 && count < sc.m_max && compatible(m))
            {
                out(m) = 1.0;
                ++count;
            }
        if (fill)
        {
            RVec score = gains.colwise().sum().transpose();
            std::vector<int> by_gain(M);
            std::iota(by_gain.begin(), by_gain.end(), 0);
            std::stable_sort(by_gain.begin(), by_gain.end(), [&](int a, int b) { return score(a) > score(b); });
            for (int m : by_gain)
                if (count < sc.m_max && out(m) < 0.5 && compatible(m))
                {
                    out(m) = 1.0;
                    ++count;
                }
        }
        return out;
    }

    // ---------------------------------------------------------------------------------

    struct FeasibilityReport
    {
        double eta = 0;                   // worst normalized SNR after rounding
        std::vector<double> worst_snr_db; // per area
        RMat x;                           // binary M x J
        std::vector<CVec> phases;         // unit modulus
        std::vector<TraceRecord> trace;
        bool feasible = false;
        bool converged = false;
        int outer_iterations = 0;

        DeploymentSolution solution(const Scenario &sc) const
        {
            DeploymentSolution s;
            s.x = x;
            s.z = RVec::Ones(sc.num_sites());
            s.phases = phases;
            return s;
        }
    };

    inline std::vector<RMat> antenna_gain_tables(const ChannelSet &cs, const std::vector<CVec> &v, const RVec &z)
    {
        std::vector<RMat> g;
        for (int j = 0; j < cs.num_areas(); ++j)
            g.push_back(cs.antenna_gains(j, v[j], z));
        return g;
    }

    inline RMat packed_occupancy(const Scenario &sc)
    {
        RMat x = RMat::Zero(sc.num_antennas(), sc.num_areas());
        for (int j = 0; j < sc.num_areas(); ++j)
            for (int m : sc.packed)
                x(m, j) = 1.0;
        return x;
    }

    inline FeasibilityReport run_feasibility(const Scenario &sc, const ChannelSet &cs, const SolverConfig &cfg = {})
    {
        const int J = sc.num_areas(), M = sc.num_antennas();
        const RVec z = RVec::Ones(sc.num_sites());
        std::vector<int> all_elements(cs.N);
        std::iota(all_elements.begin(), all_elements.end(), 0);

        RMat x = packed_occupancy(sc);
        std::vector<CVec> v(J);
        for (int j = 0; j < J; ++j)
            v[j] = aligned_phases(sc, cs, j, z, x.col(j));

        FeasibilityReport rep;
        // incumbent: the initial binary configuration
        auto finish = [&](const RMat &xb, const std::vector<CVec> &vb) {
            const double eta = std::min(worst_ratio(cs, vb, z, xb), cfg.eta_cap);
            return eta;
        };
        rep.x = x;
        rep.phases = unit_modulus(v);
        rep.eta = finish(rep.x, rep.phases);

        const double scale = std::max(rep.eta, 1e-6);
        double rho = cfg.initial_penalty * scale;
        double lam = cfg.initial_penalty * scale;

        auto joint = [&](const RMat &xc, const std::vector<CVec> &vc) {
            double pen_x = 0.0;
            for (Eigen::Index k = 0; k < xc.size(); ++k)
                pen_x += xc.data()[k] * (1.0 - xc.data()[k]);
            return std::min(worst_ratio(cs, vc, z, xc), cfg.eta_cap) - rho * pen_x - lam * hinge_sum(vc, all_elements);
        };

        for (int outer = 0; outer < cfg.outer_cap; ++outer)
        {
            rep.outer_iterations = outer + 1;
            double prev = joint(x, v);
            for (int inner = 0; inner < cfg.inner_cap; ++inner)
            {
                const auto gains = antenna_gain_tables(cs, v, z);
                const AntennaStepResult a = antenna_step(sc, cs, gains, x, rho, cfg.eta_cap, cfg.conic);
                if (a.status == conic::SolveStatus::optimal)
                    x = a.x;

                PhaseStepInput pin;
                pin.cs = &cs;
                pin.areas.resize(J);
                std::iota(pin.areas.begin(), pin.areas.end(), 0);
                pin.expansion = &v;
                pin.z = z;
                pin.x = x;
                pin.penalty = lam;
                pin.objective = PhaseObjective::shared_floor;
                pin.floor_cap = cfg.eta_cap;
                const PhaseStepResult p = phase_step(pin, cfg.conic);
                if (p.status == conic::SolveStatus::optimal)
                    v = p.v;

                const double now = joint(x, v);
                rep.trace.push_back({outer, inner, rho, lam, now,
                                     std::max(max_binary_violation(x), max_modulus_violation(v, all_elements))});
                const bool stalled = a.status != conic::SolveStatus::optimal && p.status != conic::SolveStatus::optimal;
                if (stalled || std::abs(now - prev) <= cfg.inner_tolerance * std::max(1.0, std::abs(now)))
                    break;
                prev = now;
            }

            // rounded candidate
            RMat xb(M, J);
            const auto gains = antenna_gain_tables(cs, v, z);
            for (int j = 0; j < J; ++j)
                xb.col(j) = round_antennas(sc, x.col(j), gains[j], true);
            const std::vector<CVec> vb = unit_modulus(v);
            const double eta = finish(xb, vb);
            if (eta > rep.eta)
            {
                rep.eta = eta;
                rep.x = xb;
                rep.phases = vb;
            }

            const double viol = std::max(max_binary_violation(x), max_modulus_violation(v, all_elements));
            if (viol < cfg.binary_tolerance)
            {
                rep.converged = true;
                break;
            }
            rho *= cfg.penalty_growth;
            lam *= cfg.penalty_growth;
        }

        // post-rounding evaluation on every grid sample
        rep.worst_snr_db.assign(J, 0.0);
        for (int j = 0; j < J; ++j)
            rep.worst_snr_db[j] = linear_to_db(cs.snr(j, rep.phases[j], z, rep.x.col(j)).minCoeff());
        rep.feasible = rep.eta >= 1.0;
        return rep;
    }

} // namespace irsma

#endif // IRSMA_FEASIBILITY_HPP
