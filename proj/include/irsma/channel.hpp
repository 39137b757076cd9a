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

#ifndef IRSMA_CHANNEL_HPP
#define IRSMA_CHANNEL_HPP

// Line-of-sight BS -> IRS -> user channels.
//
// Phase convention: v = diag(Theta^H), so element n reflects with conj(v_n). The received
// amplitude towards antenna m at sample u is
//
//     a_m(u) = sum_l z_l sum_{n in l} conj(v_n) h_n(u) G_nm,   G_l = amp_l e_l g_l^H,
//
// and with MRT the SNR is pbar * sum_m x_m |a_m(u)|^2.

#include "scenario.hpp"

#include <nlohmann/json.hpp>

#include <limits>
#include <vector>

namespace irsma
{
    inline Vec3 unit_direction(const Vec3 &from, const Vec3 &to)
    {
        const Vec3 d = to - from;
        const double n = d.norm();
        if (!(n > 0.0))
            throw DegenerateGeometry("unit direction between coincident points");
        return d / n;
    }

    // BS reference point is the origin.
    inline CMat bs_irs_channel(const IrsSite &site, const MaGrid &grid, const RadioConstants &rc)
    {
        const double dist = site.reference.norm();
        if (!(dist > 0.0))
            throw DegenerateGeometry("IRS reference coincides with the BS");
        const Vec3 dir = site.reference / dist;
        const double k = rc.wavenumber();
        const double amp = std::sqrt(rc.c0()) / dist;
        const int n_el = site.max_elements();
        CMat G(n_el, grid.count());
        for (int n = 0; n < n_el; ++n)
        {
            const cdouble e = std::polar(1.0, -k * (site.elements[n] - site.reference).dot(dir));
            for (int m = 0; m < grid.count(); ++m)
                G(n, m) = amp * e * std::polar(1.0, k * grid.points[m].dot(dir));
        }
        return G;
    }

    // Row vector h_l^H(u) stored as a column.
    inline CVec irs_user_channel(const IrsSite &site, const Vec3 &u, const RadioConstants &rc)
    {
        const double dist = (u - site.reference).norm();
        if (!(dist > 0.0))
            throw DegenerateGeometry("user location coincides with IRS reference");
        const Vec3 dir = (u - site.reference) / dist;
        const double k = rc.wavenumber();
        const double amp = std::sqrt(rc.c0()) / dist;
        CVec h(site.max_elements());
        for (int n = 0; n < site.max_elements(); ++n)
            h(n) = amp * std::polar(1.0, k * (site.elements[n] - site.reference).dot(dir));
        return h;
    }

    // Stacked channels materialized from geometry (N x M and N).
    inline CMat stacked_bs_channel(const Scenario &sc)
    {
        CMat G(sc.total_elements(), sc.num_antennas());
        for (int l = 0; l < sc.num_sites(); ++l)
            G.middleRows(sc.element_offset(l), sc.sites[l].max_elements()) = bs_irs_channel(sc.sites[l], sc.grid, sc.radio);
        return G;
    }

    inline CVec stacked_user_channel(const Scenario &sc, const Vec3 &u)
    {
        CVec h(sc.total_elements());
        for (int l = 0; l < sc.num_sites(); ++l)
            h.segment(sc.element_offset(l), sc.sites[l].max_elements()) = irs_user_channel(sc.sites[l], u, sc.radio);
        return h;
    }

    // Psi(u) = diag(h^H(u)) G.
    inline CMat cascaded_channel(const CVec &h, const CMat &G)
    {
        if (h.size() != G.rows())
            throw DimensionMismatch("cascaded channel: h and G disagree");
        return h.asDiagonal() * G;
    }

    // Effective row a = sum_n z_{site(n)} conj(v_n) Psi_n (M entries, stored as a column).
    inline CVec effective_row(const CMat &psi, const CVec &v, const RVec &element_mask)
    {
        if (psi.rows() != v.size() || element_mask.size() != v.size())
            throw DimensionMismatch("effective row: dimensions disagree");
        CVec w = (element_mask.cast<cdouble>().array() * v.conjugate().array()).matrix();
        return psi.transpose() * w;
    }

    inline double snr(const CMat &psi, const CVec &v, const RVec &element_mask, const RVec &x, const CVec &w,
                      double pbar)
    {
        if (x.size() != psi.cols() || w.size() != psi.cols())
            throw DimensionMismatch("snr: antenna dimension mismatch");
        const CVec a = effective_row(psi, v, element_mask);
        cdouble s = 0.0;
        for (int m = 0; m < a.size(); ++m)
            s += a(m) * x(m) * w(m);
        return pbar * std::norm(s);
    }

    inline CVec mrt(const CMat &psi, const CVec &v, const RVec &element_mask, const RVec &x)
    {
        const CVec a = effective_row(psi, v, element_mask);
        CVec w(a.size());
        for (int m = 0; m < a.size(); ++m)
            w(m) = x(m) * std::conj(a(m));
        const double n = w.norm();
        if (!(n > 0.0))
            throw NoLinkError("MRT: effective channel is zero on the selected antennas");
        return w / n;
    }

    // Expands a per-site selection into an element mask.
    inline RVec site_mask(const Scenario &sc, const RVec &z)
    {
        RVec mask(sc.total_elements());
        for (int l = 0; l < sc.num_sites(); ++l)
            mask.segment(sc.element_offset(l), sc.sites[l].max_elements()).setConstant(z(l));
        return mask;
    }

    // ---------------------------------------------------------------------------------
    // Materialized coefficient families (one sample).

    // C_m = |sum_n z conj(v_n) Psi_nm|^2
    inline RVec antenna_gains(const CMat &psi, const CVec &v, const RVec &element_mask)
    {
        return effective_row(psi, v, element_mask).cwiseAbs2();
    }

    // b(l, m) = sum_{n in l} conj(v_n) Psi_nm, so B_{l,l',m} = b(l,m) conj(b(l',m)).
    inline CMat site_antenna_terms(const Scenario &sc, const CMat &psi, const CVec &v)
    {
        CMat b(sc.num_sites(), psi.cols());
        for (int l = 0; l < sc.num_sites(); ++l)
        {
            const int off = sc.element_offset(l), len = sc.sites[l].max_elements();
            b.row(l) = (v.segment(off, len).adjoint() * psi.middleRows(off, len));
        }
        return b;
    }

    // R = Psi X X^H Psi^H with diagonal X.
    inline CMat phase_gram(const CMat &psi, const RVec &x)
    {
        return psi * x.cwiseAbs2().cast<cdouble>().asDiagonal() * psi.adjoint();
    }

    // Q_uv = z_u z_v c_u^T conj(c_v), c_{n,m} = conj(v_n) Psi_nm x_m.
    inline CMat element_gram(const CMat &psi, const CVec &v, const RVec &element_mask, const RVec &x)
    {
        CMat c = v.conjugate().asDiagonal() * psi * x.cast<cdouble>().asDiagonal();
        c = element_mask.cast<cdouble>().asDiagonal() * c;
        return c * c.adjoint();
    }

    // ---------------------------------------------------------------------------------
    // Factorized channel set used by the solvers.
    //
    // Per site: amp_l * g_l^H packed as rows of bs_row (L x M). Per area: cascade(n, k) =
    // h_n(u_k) e_n, so G_nm h_n = cascade(n, k) * bs_row(site(n), m).

    struct ChannelSet
    {
        int L = 0, M = 0, N = 0;
        double pbar = 0.0;
        std::vector<int> offset; // L + 1
        std::vector<int> site;   // N
        CMat bs_row;             // L x M
        std::vector<CMat> cascade; // per area, N x K_j
        std::vector<RVec> threshold; // per area, K_j (constant within an area)

        int samples(int j) const { return static_cast<int>(cascade[j].cols()); }
        int num_areas() const { return static_cast<int>(cascade.size()); }

        // S(k, l) = sum_{n in l} conj(v_n) cascade(n, k)
        CMat site_sums(int j, const CVec &v) const
        {
            if (v.size() != N)
                throw DimensionMismatch("phase vector length");
            CMat S(samples(j), L);
            for (int l = 0; l < L; ++l)
            {
                const int len = offset[l + 1] - offset[l];
                S.col(l) = cascade[j].middleRows(offset[l], len).transpose() * v.segment(offset[l], len).conjugate();
            }
            return S;
        }

        // A(k, m) = sum_l z_l S(k, l) bs_row(l, m)
        CMat effective(int j, const CVec &v, const RVec &z) const
        {
            CMat S = site_sums(j, v);
            for (int l = 0; l < L; ++l)
                S.col(l) *= z(l);
            return S * bs_row;
        }

        // b(l, m) for one sample: S(k, l) bs_row(l, m)
        CMat pair_terms(int j, int k, const CMat &S) const
        {
            CMat b(L, M);
            for (int l = 0; l < L; ++l)
                b.row(l) = S(k, l) * bs_row.row(l);
            return b;
        }

        RMat antenna_gains(int j, const CVec &v, const RVec &z) const { return effective(j, v, z).cwiseAbs2(); }

        RVec snr(int j, const CVec &v, const RVec &z, const RVec &x) const
        {
            return pbar * (antenna_gains(j, v, z) * x);
        }

        double worst_normalized(const std::vector<CVec> &v, const RVec &z, const RMat &x) const
        {
            double w = kInfSnr;
            for (int j = 0; j < num_areas(); ++j)
            {
                RVec s = snr(j, v[j], z, x.col(j));
                w = std::min(w, (s.array() / threshold[j].array()).minCoeff());
            }
            return w;
        }

        static constexpr double kInfSnr = std::numeric_limits<double>::infinity();
    };

    inline ChannelSet build_channels(const Scenario &sc)
    {
        validate(sc);
        ChannelSet cs;
        cs.L = sc.num_sites();
        cs.M = sc.num_antennas();
        cs.N = sc.total_elements();
        cs.pbar = sc.radio.pbar();
        const double k = sc.radio.wavenumber();
        const double sq = std::sqrt(sc.radio.c0());
        cs.offset.assign(cs.L + 1, 0);
        for (int l = 0; l < cs.L; ++l)
            cs.offset[l + 1] = cs.offset[l] + sc.sites[l].max_elements();
        cs.site.resize(cs.N);
        for (int l = 0; l < cs.L; ++l)
            for (int n = cs.offset[l]; n < cs.offset[l + 1]; ++n)
                cs.site[n] = l;

        cs.bs_row.resize(cs.L, cs.M);
        std::vector<CVec> arrival(cs.L);
        for (int l = 0; l < cs.L; ++l)
        {
            const IrsSite &s = sc.sites[l];
            const double dist = s.reference.norm();
            if (!(dist > 0.0))
                throw DegenerateGeometry("IRS reference coincides with the BS");
            const Vec3 dir = unit_direction(Vec3::Zero(), s.reference);
            for (int m = 0; m < cs.M; ++m)
                cs.bs_row(l, m) = (sq / dist) * std::exp(cdouble(0.0, k * sc.grid.points[m].dot(dir)));
            arrival[l].resize(s.max_elements());
            for (int n = 0; n < s.max_elements(); ++n)
                arrival[l](n) = std::exp(cdouble(0.0, -k * (s.elements[n] - s.reference).dot(dir)));
        }
        for (const TargetArea &a : sc.areas)
        {
            const int K = static_cast<int>(a.samples.size());
            CMat W(cs.N, K);
            for (int kk = 0; kk < K; ++kk)
                for (int l = 0; l < cs.L; ++l)
                {
                    const IrsSite &s = sc.sites[l];
                    const Vec3 dir = unit_direction(s.reference, a.samples[kk]);
                    const double amp = sq / (a.samples[kk] - s.reference).norm();
                    for (int n = 0; n < s.max_elements(); ++n)
                        W(cs.offset[l] + n, kk) =
                            amp * std::exp(cdouble(0.0, k * (s.elements[n] - s.reference).dot(dir))) * arrival[l](n);
                }
            cs.cascade.push_back(std::move(W));
            cs.threshold.push_back(RVec::Constant(K, a.threshold));
        }
        return cs;
    }

    // Per-sample channel magnitudes and phases for offline inspection.
    inline nlohmann::json dump_channels(const Scenario &sc, const ChannelSet &cs)
    {
        nlohmann::json out;
        out["sites"] = nlohmann::json::array();
        for (int l = 0; l < cs.L; ++l)
        {
            nlohmann::json s;
            s["index"] = l;
            s["bs_gain_magnitude"] = std::abs(cs.bs_row(l, 0));
            std::vector<double> ph;
            for (int m = 0; m < cs.M; ++m)
                ph.push_back(std::arg(cs.bs_row(l, m)));
            s["bs_phase_rad"] = ph;
            out["sites"].push_back(s);
        }
        out["areas"] = nlohmann::json::array();
        for (int j = 0; j < cs.num_areas(); ++j)
        {
            nlohmann::json a = nlohmann::json::array();
            for (int kk = 0; kk < cs.samples(j); ++kk)
            {
                nlohmann::json row;
                const Vec3 &u = sc.areas[j].samples[kk];
                row["position"] = {u.x(), u.y(), u.z()};
                std::vector<double> mag, ph;
                for (int l = 0; l < cs.L; ++l)
                {
                    mag.push_back(std::abs(cs.cascade[j](cs.offset[l], kk)));
                    ph.push_back(std::arg(cs.cascade[j](cs.offset[l], kk)));
                }
                row["site_magnitude"] = mag;
                row["site_reference_phase_rad"] = ph;
                a.push_back(row);
            }
            out["areas"].push_back(a);
        }
        return out;
    }

} // namespace irsma

#endif // IRSMA_CHANNEL_HPP
