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

#ifndef IRSMA_SURROGATES_HPP
#define IRSMA_SURROGATES_HPP

// First-order lower bounds of convex functions at an expansion point, and their
// factorized forms over a ChannelSet.

#include "channel.hpp"

namespace irsma
{
    // x^2 >= 2 r x - r^2
    inline double square_lower(double r, double x) { return -r * r + 2.0 * r * x; }

    // |v|^2 >= 2 Re{conj(r) v} - |r|^2
    inline double modulus_lower(cdouble r, cdouble v) { return 2.0 * (std::conj(r) * v).real() - std::norm(r); }

    // v^H R v >= 2 Re{(R r)^H v} - r^H R r  for R positive semidefinite
    inline double quadratic_lower(const CMat &R, const CVec &r, const CVec &v)
    {
        const CVec Rr = R * r;
        return 2.0 * Rr.dot(v).real() - r.dot(Rr).real();
    }

    // Linearization of the per-sample received power in the phases.
    // value(k) = sum_m x_m |a_m(k)|^2 at the expansion point; coef(n, k) = (R_k r)_n.
    struct PhaseLinearization
    {
        RVec value;
        CMat coef; // N x K

        // 2 Re{coef_k^H v} - value_k
        double evaluate(int k, const CVec &v) const { return 2.0 * coef.col(k).dot(v).real() - value(k); }
    };

    inline PhaseLinearization linearize_phases(const ChannelSet &cs, int j, const CVec &r, const RVec &z, const RVec &x)
    {
        PhaseLinearization out;
        const CMat A = cs.effective(j, r, z); // K x M
        out.value = A.cwiseAbs2() * x;
        CMat q = A.conjugate();
        for (int m = 0; m < cs.M; ++m)
            q.col(m) *= x(m);
        CMat T = q * cs.bs_row.transpose(); // K x L
        for (int l = 0; l < cs.L; ++l)
            T.col(l) *= z(l);
        out.coef.resize(cs.N, cs.samples(j));
        for (int n = 0; n < cs.N; ++n)
            out.coef.row(n) = cs.cascade[j].row(n).cwiseProduct(T.col(cs.site[n]).transpose());
        return out;
    }

    // Linearization of the per-sample received power in real element indicators y:
    // value(k) = g_k(r), grad(n, k) so that g_k(y) >= grad_k^T y - value_k for y near r
    // (first-order expansion of a convex quadratic in y).
    struct ElementLinearization
    {
        RVec value;
        RMat grad; // N x K

        double evaluate(int k, const RVec &y) const { return grad.col(k).dot(y) - value(k); }
    };

    // g_k(y) = sum_m x_m |sum_n y_n z_l conj(v_n) cascade(n,k) bs_row(l,m)|^2
    inline double element_power(const ChannelSet &cs, int j, int k, const CVec &v, const RVec &z, const RVec &x,
                                const RVec &y)
    {
        CVec vy = (v.array() * y.cast<cdouble>().array()).matrix();
        const CMat A = cs.effective(j, vy, z);
        return A.row(k).cwiseAbs2().dot(x.transpose());
    }

    inline ElementLinearization linearize_elements(const ChannelSet &cs, int j, const CVec &v, const RVec &z,
                                                   const RVec &x, const RVec &r)
    {
        ElementLinearization out;
        CVec vr = (v.array() * r.cast<cdouble>().array()).matrix();
        const CMat A = cs.effective(j, vr, z);
        out.value = A.cwiseAbs2() * x;
        CMat q = A.conjugate();
        for (int m = 0; m < cs.M; ++m)
            q.col(m) *= x(m);
        CMat T = q * cs.bs_row.transpose(); // K x L
        out.grad.resize(cs.N, cs.samples(j));
        for (int n = 0; n < cs.N; ++n)
        {
            const int l = cs.site[n];
            for (int k = 0; k < cs.samples(j); ++k)
                out.grad(n, k) = 2.0 * (z(l) * std::conj(v(n)) * cs.cascade[j](n, k) * T(k, l)).real();
        }
        return out;
    }

} // namespace irsma

#endif // IRSMA_SURROGATES_HPP
