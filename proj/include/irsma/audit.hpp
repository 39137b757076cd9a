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

#ifndef IRSMA_AUDIT_HPP
#define IRSMA_AUDIT_HPP

// Independent SNR re-audit. Channels are materialized from geometry per sample; nothing
// from the factorized ChannelSet is reused.

#include "channel.hpp"

#include <string>
#include <vector>

namespace irsma
{
    struct AuditReport
    {
        std::vector<RVec> snr;   // per area, per sample (linear)
        double worst_ratio = 0;  // min over samples of snr / threshold
        double worst_snr = 0;    // min over all samples (linear)
        int violations = 0;      // samples below threshold beyond tolerance
        std::vector<std::string> problems; // structural issues (binaries, modulus, spacing)

        bool passed() const { return violations == 0 && problems.empty(); }
    };

    inline constexpr double kAuditTolerance = 1e-6;

    // Checks binaries, unit modulus on installed elements, spacing and antenna budget,
    // then evaluates every sample with MRT.
    inline AuditReport audit_solution(const Scenario &sc, const DeploymentSolution &sol,
                                      double tolerance = kAuditTolerance, bool check_thresholds = true)
    {
        AuditReport rep;
        const int M = sc.num_antennas(), J = sc.num_areas(), L = sc.num_sites(), N = sc.total_elements();
        if (sol.x.rows() != M || sol.x.cols() != J || sol.z.size() != L || static_cast<int>(sol.phases.size()) != J)
            throw DimensionMismatch("audit: solution shape does not match scenario");
        for (Eigen::Index k = 0; k < sol.x.size(); ++k)
            if (!is_binary(sol.x.data()[k], 0.0))
                rep.problems.push_back("fractional antenna occupancy");
        for (int l = 0; l < L; ++l)
            if (!is_binary(sol.z(l), 0.0))
                rep.problems.push_back("fractional site selection");
        if (sol.y.size() != 0)
        {
            if (sol.y.size() != N)
                throw DimensionMismatch("audit: indicator length");
            for (int n = 0; n < N; ++n)
            {
                if (!is_binary(sol.y(n), 0.0))
                    rep.problems.push_back("fractional element indicator");
                if (sol.y(n) > sol.z(sc.site_of(n)))
                    rep.problems.push_back("element installed on an unselected site");
            }
        }
        for (int j = 0; j < J; ++j)
        {
            if (sol.phases[j].size() != N)
                throw DimensionMismatch("audit: phase vector length");
            for (auto [m, q] : sc.conflicts.pairs)
                if (sol.x(m, j) > 0.5 && sol.x(q, j) > 0.5)
                    rep.problems.push_back("antennas closer than the minimum spacing");
            if (sol.x.col(j).sum() > sc.m_max + 0.5)
                rep.problems.push_back("antenna count above the packing limit");
        }

        RVec mask(N);
        for (int n = 0; n < N; ++n)
            mask(n) = element_indicator(sol, sc, n);
        for (int j = 0; j < J; ++j)
            for (int n = 0; n < N; ++n)
                if (mask(n) > 0.5 && std::abs(std::abs(sol.phases[j](n)) - 1.0) > 1e-9)
                {
                    rep.problems.push_back("non-unit reflection coefficient on an installed element");
                    break;
                }

        const CMat G = stacked_bs_channel(sc);
        const double pbar = sc.radio.pbar();
        rep.worst_ratio = std::numeric_limits<double>::infinity();
        rep.worst_snr = std::numeric_limits<double>::infinity();
        for (int j = 0; j < J; ++j)
        {
            const TargetArea &a = sc.areas[j];
            RVec s(a.samples.size());
            for (std::size_t k = 0; k < a.samples.size(); ++k)
            {
                const CMat psi = cascaded_channel(stacked_user_channel(sc, a.samples[k]), G);
                const CVec row = effective_row(psi, sol.phases[j], mask);
                double p = 0.0;
                for (int m = 0; m < M; ++m)
                    p += sol.x(m, j) * std::norm(row(m));
                s(k) = pbar * p;
                rep.worst_ratio = std::min(rep.worst_ratio, s(k) / a.threshold);
                rep.worst_snr = std::min(rep.worst_snr, s(k));
                if (check_thresholds && s(k) < a.threshold * (1.0 - tolerance))
                    ++rep.violations;
            }
            rep.snr.push_back(std::move(s));
        }
        std::sort(rep.problems.begin(), rep.problems.end());
        rep.problems.erase(std::unique(rep.problems.begin(), rep.problems.end()), rep.problems.end());
        return rep;
    }

} // namespace irsma

#endif // IRSMA_AUDIT_HPP
