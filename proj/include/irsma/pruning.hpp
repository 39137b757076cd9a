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

#ifndef IRSMA_PRUNING_HPP
#define IRSMA_PRUNING_HPP

// Element pruning on a feasible plan. Sites, antennas and phases stay fixed; per-element
// installation indicators are relaxed and driven to binary by a penalized LP over the
// linearized received power, then rounded and checked against the exact quadratic.

#include "costmin.hpp"

namespace irsma
{
    // Hermitian Gram matrix of one sample: y^T Q y is the received power (without pbar)
    // when element n is installed with weight y_n.
    inline CMat build_q(const ChannelSet &cs, const DeploymentSolution &sol, int j, int k)
    {
        CMat C(cs.N, cs.M);
        for (int n = 0; n < cs.N; ++n)
        {
            const int l = cs.site[n];
            const cdouble a = sol.z(l) * std::conj(sol.phases[j](n)) * cs.cascade[j](n, k);
            for (int m = 0; m < cs.M; ++m)
                C(n, m) = a * cs.bs_row(l, m) * std::sqrt(sol.x(m, j));
        }
        return C * C.adjoint();
    }

    // Received power of every sample of area j with element weights y.
    inline RVec element_snr(const ChannelSet &cs, const DeploymentSolution &sol, int j, const RVec &y)
    {
        const CVec vy = (sol.phases[j].array() * y.cast<cdouble>().array()).matrix();
        return cs.snr(j, vy, sol.z, sol.x.col(j));
    }

    inline double element_worst_ratio(const ChannelSet &cs, const DeploymentSolution &sol, const RVec &y)
    {
        double w = std::numeric_limits<double>::infinity();
        for (int j = 0; j < cs.num_areas(); ++j)
        {
            const RVec s = element_snr(cs, sol, j, y);
            w = std::min(w, (s.array() / cs.threshold[j].array()).minCoeff());
        }
        return w;
    }

    struct PruneStepResult
    {
        conic::SolveStatus status = conic::SolveStatus::numerical_failure;
        RVec y;
        double objective = 0;
    };

    // min c_e sum y + nu sum((1 - 2 y^r) y)  s.t.  pbar (grad_k^T y - value_k) >= gamma_k,
    // y_n <= z_l(n), 0 <= y <= 1.
    inline PruneStepResult prune_step(const Scenario &sc, const ChannelSet &cs, const DeploymentSolution &sol,
                                      const RVec &yr, double nu, const conic::SolverOptions &opt)
    {
        PruneStepResult res;
        conic::LinearProgramSpec lp;
        std::vector<int> var(cs.N, -1);
        for (int n = 0; n < cs.N; ++n)
            if (sol.z(cs.site[n]) > 0.5)
                var[n] = lp.add_variable(-(sc.costs.element_cost + nu * (1.0 - 2.0 * yr(n))), 0.0, 1.0);
        for (int j = 0; j < cs.num_areas(); ++j)
        {
            const ElementLinearization lin = linearize_elements(cs, j, sol.phases[j], sol.z, sol.x.col(j), yr);
            for (int k = 0; k < cs.samples(j); ++k)
            {
                const double w = cs.pbar / cs.threshold[j](k);
                std::vector<conic::Term> t;
                for (int n = 0; n < cs.N; ++n)
                    if (var[n] >= 0 && lin.grad(n, k) != 0.0)
                        t.push_back({var[n], -w * lin.grad(n, k)});
                lp.add_row(std::move(t), -1.0 - w * lin.value(k));
            }
        }
        const conic::SolveOutcome out = conic::solve_lp(lp, opt);
        res.status = out.status;
        if (out.status != conic::SolveStatus::optimal)
            return res;
        res.objective = -out.objective;
        res.y = RVec::Zero(cs.N);
        for (int n = 0; n < cs.N; ++n)
            if (var[n] >= 0)
                res.y(n) = std::clamp(out.values[var[n]], 0.0, 1.0);
        return res;
    }

    // Adds back removed elements, largest gain in the worst normalized sample first, until
    // every sample meets its threshold under the exact quadratic.
    inline bool restore_elements(const ChannelSet &cs, const DeploymentSolution &sol, RVec &y, double tol)
    {
        for (int guard = 0; guard <= cs.N; ++guard)
        {
            const double now = element_worst_ratio(cs, sol, y);
            if (now >= 1.0 + tol)
                return true;
            int pick = -1;
            double best = -std::numeric_limits<double>::infinity();
            for (int n = 0; n < cs.N; ++n)
            {
                if (y(n) > 0.5 || sol.z(cs.site[n]) < 0.5)
                    continue;
                y(n) = 1.0;
                const double r = element_worst_ratio(cs, sol, y);
                y(n) = 0.0;
                if (r > best)
                {
                    best = r;
                    pick = n;
                }
            }
            if (pick < 0)
                return false;
            y(pick) = 1.0;
        }
        return element_worst_ratio(cs, sol, y) >= 1.0 + tol;
    }

    // Pruned copy of a feasible plan. The result never costs more than the input.
    inline Plan run_pruning(const Scenario &sc, const ChannelSet &cs, const Plan &plan, const SolverConfig &cfg = {})
    {
        const DeploymentSolution &sol = plan.solution;
        if (!plan.feasible || !meets_thresholds(cs, sol.phases, sol.z, sol.x, cfg.accept_tolerance))
            throw AuditError("pruning: the input plan does not meet its thresholds");

        RVec y(cs.N);
        for (int n = 0; n < cs.N; ++n)
            y(n) = element_indicator(sol, sc, n) > 0.5 ? 1.0 : 0.0;
        const RVec start = y;

        const double cost_scale = std::max(sc.costs.element_cost * y.sum(), 1.0);
        double nu = cfg.initial_penalty * cost_scale;
        std::vector<TraceRecord> trace;
        bool converged = false;
        for (int outer = 0; outer < cfg.outer_cap; ++outer)
        {
            for (int inner = 0; inner < cfg.inner_cap; ++inner)
            {
                const PruneStepResult r = prune_step(sc, cs, sol, y, nu, cfg.conic);
                if (r.status != conic::SolveStatus::optimal)
                    break;
                const double change = (r.y - y).cwiseAbs().maxCoeff();
                y = r.y;
                trace.push_back({outer, inner, nu, 0.0, r.objective, max_binary_violation(y)});
                if (change <= cfg.inner_tolerance)
                    break;
            }
            if (max_binary_violation(y) < cfg.binary_tolerance)
            {
                converged = true;
                break;
            }
            nu *= cfg.penalty_growth;
        }

        for (int n = 0; n < cs.N; ++n)
            y(n) = y(n) >= 0.5 && start(n) > 0.5 ? 1.0 : 0.0;
        if (!restore_elements(cs, sol, y, cfg.accept_tolerance))
            y = start;

        Plan out = plan;
        out.solution.y = y;
        out.cost = cost_breakdown(out.solution, sc, plan.ma_unit_cost);
        if (out.cost.total > plan.cost.total)
        {
            out.solution.y = start;
            out.cost = cost_breakdown(out.solution, sc, plan.ma_unit_cost);
        }
        out.snr.clear();
        for (int j = 0; j < cs.num_areas(); ++j)
            out.snr.push_back(element_snr(cs, out.solution, j, out.solution.y));
        out.feasible = element_worst_ratio(cs, out.solution, out.solution.y) >= 1.0 - 1e-7;
        out.trace = std::move(trace);
        out.status = converged ? "converged" : "not-converged";
        return out;
    }

} // namespace irsma

#endif // IRSMA_PRUNING_HPP
