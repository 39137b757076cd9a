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

#ifndef IRSMA_CONIC_HPP
#define IRSMA_CONIC_HPP

// Linear and second-order-cone programs.
//
// Both program classes are solved by one primal-dual interior-point method on the
// homogeneous self-dual embedding of
//
//     minimize  c'x   subject to  G x + s = h,   s in K,
//
// with K a product of a nonnegative orthant and second-order cones. Search directions
// use Nesterov-Todd scaling and a Mehrotra predictor-corrector; each Newton system is
// the quasi-definite KKT matrix [[delta I, (W^-1 G)'], [W^-1 G, -I]] factored by a
// sparse LDL' with AMD ordering, followed by iterative refinement.

#include "common.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

namespace irsma::conic
{
    inline constexpr double kInf = std::numeric_limits<double>::infinity();

    struct Term
    {
        int var;
        double coef;
    };

    // sum(coef * x[var]) <= bound
    struct LinearRow
    {
        std::vector<Term> terms;
        double bound = 0.0;
    };

    struct LinearProgramSpec
    {
        int num_vars = 0;
        std::vector<double> objective; // maximized
        std::vector<LinearRow> rows;
        std::vector<double> lower; // -kInf allowed
        std::vector<double> upper; // +kInf allowed

        int add_variable(double obj, double lo = -kInf, double hi = kInf)
        {
            objective.push_back(obj);
            lower.push_back(lo);
            upper.push_back(hi);
            return num_vars++;
        }

        void add_row(std::vector<Term> terms, double bound)
        {
            rows.push_back(LinearRow{std::move(terms), bound});
        }
    };

    struct AffineExpr
    {
        std::vector<Term> terms;
        double constant = 0.0;
    };

    // ||(head_1, ..., head_k)|| <= tail
    struct ConeBlock
    {
        AffineExpr tail;
        std::vector<AffineExpr> head;
    };

    struct ConeProgramSpec
    {
        LinearProgramSpec core;
        std::vector<ConeBlock> cones;
    };

    enum class SolveStatus
    {
        optimal,
        infeasible,
        unbounded,
        numerical_failure
    };

    inline const char *to_string(SolveStatus s)
    {
        switch (s)
        {
        case SolveStatus::optimal:
            return "optimal";
        case SolveStatus::infeasible:
            return "infeasible";
        case SolveStatus::unbounded:
            return "unbounded";
        default:
            return "numerical-failure";
        }
    }

    struct SolveOutcome
    {
        SolveStatus status = SolveStatus::numerical_failure;
        std::vector<double> values;
        double objective = 0.0;
        // Largest violation over rows, bounds and cones. Each row is measured after
        // dividing by the largest magnitude among its coefficients (and 1).
        double max_violation = 0.0;
        int iterations = 0;
    };

    struct SolverOptions
    {
        double tolerance = 1e-8;
        int max_iterations = 120;
        double regularization = 1e-10;
        int refinement_steps = 3;
    };

    // ---------------------------------------------------------------------------------
    // Complex-to-real lifting. Complex slot k occupies real variables (base + 2k, base + 2k + 1).

    struct ComplexLayout
    {
        int base = 0;
        int count = 0;

        int re(int k) const { return base + 2 * k; }
        int im(int k) const { return base + 2 * k + 1; }

        // Terms of Re{conj(c) * v_k} = Re(c) re_k + Im(c) im_k.
        std::vector<Term> real_inner(int k, cdouble c) const
        {
            return {Term{re(k), c.real()}, Term{im(k), c.imag()}};
        }

        // |v_k| <= radius as a cone block.
        ConeBlock disc(int k, double radius = 1.0) const
        {
            ConeBlock b;
            b.tail.constant = radius;
            b.head.push_back(AffineExpr{{Term{re(k), 1.0}}, 0.0});
            b.head.push_back(AffineExpr{{Term{im(k), 1.0}}, 0.0});
            return b;
        }

        void store(std::span<double> x, const CVec &v) const
        {
            for (int k = 0; k < count; ++k)
            {
                x[re(k)] = v(k).real();
                x[im(k)] = v(k).imag();
            }
        }

        CVec load(std::span<const double> x) const
        {
            CVec v(count);
            for (int k = 0; k < count; ++k)
                v(k) = cdouble(x[re(k)], x[im(k)]);
            return v;
        }
    };

    // Reserves 2 * count real variables with the given box (applied to both parts).
    inline ComplexLayout lift_complex(LinearProgramSpec &spec, int count, double lo = -kInf, double hi = kInf)
    {
        ComplexLayout layout{spec.num_vars, count};
        for (int k = 0; k < 2 * count; ++k)
            spec.add_variable(0.0, lo, hi);
        return layout;
    }

    // ---------------------------------------------------------------------------------

    namespace detail
    {
        // Cone K = R+^nonneg x Q^{dims[0]} x Q^{dims[1]} x ...
        struct ConeLayout
        {
            int nonneg = 0;
            std::vector<int> soc_dims;
            std::vector<int> soc_start;

            int size() const
            {
                int m = nonneg;
                for (int p : soc_dims)
                    m += p;
                return m;
            }
            int degree() const { return nonneg + static_cast<int>(soc_dims.size()); }
        };

        inline double soc_det(const double *u, int p)
        {
            double t = u[0] * u[0];
            for (int i = 1; i < p; ++i)
                t -= u[i] * u[i];
            return t;
        }

        inline double soc_tail_norm(const double *u, int p)
        {
            double t = 0.0;
            for (int i = 1; i < p; ++i)
                t += u[i] * u[i];
            return std::sqrt(t);
        }

        // Smallest eigenvalue over the product cone.
        inline double min_eigen(const ConeLayout &k, const RVec &u)
        {
            double lo = kInf;
            for (int i = 0; i < k.nonneg; ++i)
                lo = std::min(lo, u(i));
            for (std::size_t b = 0; b < k.soc_dims.size(); ++b)
            {
                const double *p = u.data() + k.soc_start[b];
                lo = std::min(lo, p[0] - soc_tail_norm(p, k.soc_dims[b]));
            }
            return lo;
        }

        inline void add_identity(const ConeLayout &k, RVec &u, double a)
        {
            for (int i = 0; i < k.nonneg; ++i)
                u(i) += a;
            for (int s : k.soc_start)
                u(s) += a;
        }

        inline RVec jordan_product(const ConeLayout &k, const RVec &u, const RVec &v)
        {
            RVec out(u.size());
            for (int i = 0; i < k.nonneg; ++i)
                out(i) = u(i) * v(i);
            for (std::size_t b = 0; b < k.soc_dims.size(); ++b)
            {
                const int s = k.soc_start[b], p = k.soc_dims[b];
                out(s) = u.segment(s, p).dot(v.segment(s, p));
                out.segment(s + 1, p - 1) = u(s) * v.segment(s + 1, p - 1) + v(s) * u.segment(s + 1, p - 1);
            }
            return out;
        }

        // Solves lambda o out = r.
        inline RVec jordan_divide(const ConeLayout &k, const RVec &lambda, const RVec &r)
        {
            RVec out(r.size());
            for (int i = 0; i < k.nonneg; ++i)
                out(i) = r(i) / lambda(i);
            for (std::size_t b = 0; b < k.soc_dims.size(); ++b)
            {
                const int s = k.soc_start[b], p = k.soc_dims[b];
                const double l0 = lambda(s);
                const double det = soc_det(lambda.data() + s, p);
                const double l1r1 = lambda.segment(s + 1, p - 1).dot(r.segment(s + 1, p - 1));
                const double u0 = (l0 * r(s) - l1r1) / det;
                out(s) = u0;
                out.segment(s + 1, p - 1) = (r.segment(s + 1, p - 1) - u0 * lambda.segment(s + 1, p - 1)) / l0;
            }
            return out;
        }

        // Largest step a >= 0 keeping u + a du inside the cone (capped at `cap`).
        inline double max_step(const ConeLayout &k, const RVec &u, const RVec &du, double cap)
        {
            double a = cap;
            for (int i = 0; i < k.nonneg; ++i)
                if (du(i) < 0.0)
                    a = std::min(a, -u(i) / du(i));
            for (std::size_t b = 0; b < k.soc_dims.size(); ++b)
            {
                const int s = k.soc_start[b], p = k.soc_dims[b];
                const double *x = u.data() + s;
                const double *d = du.data() + s;
                // q(a) = (x0 + a d0)^2 - ||x1 + a d1||^2 >= 0 and x0 + a d0 >= 0
                double qa = d[0] * d[0], qb = x[0] * d[0], qc = x[0] * x[0];
                for (int i = 1; i < p; ++i)
                {
                    qa -= d[i] * d[i];
                    qb -= x[i] * d[i];
                    qc -= x[i] * x[i];
                }
                qb *= 2.0;
                double root = kInf;
                if (std::abs(qa) < 1e-300)
                {
                    if (qb < 0.0)
                        root = -qc / qb;
                }
                else
                {
                    const double disc = qb * qb - 4.0 * qa * qc;
                    if (disc >= 0.0)
                    {
                        const double sq = std::sqrt(disc);
                        const double qq = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
                        double r1 = qq / qa;
                        double r2 = (qq != 0.0) ? qc / qq : kInf;
                        if (r1 > r2)
                            std::swap(r1, r2);
                        if (r1 > 0.0)
                            root = r1;
                        else if (r2 > 0.0)
                            root = r2;
                    }
                }
                if (d[0] < 0.0)
                    root = std::min(root, -x[0] / d[0]);
                a = std::min(a, root);
            }
            return std::max(a, 0.0);
        }

        // Nesterov-Todd scaling W (block diagonal, symmetric) with W z = W^-1 s = lambda.
        struct Scaling
        {
            const ConeLayout *cones = nullptr;
            RVec lp_w;                   // diagonal part
            std::vector<double> eta;     // per SOC block
            std::vector<RVec> wbar;      // per SOC block, wbar' J wbar = 1
            RVec lambda;

            void update(const ConeLayout &k, const RVec &s, const RVec &z)
            {
                cones = &k;
                lp_w.resize(k.nonneg);
                for (int i = 0; i < k.nonneg; ++i)
                    lp_w(i) = std::sqrt(s(i) / z(i));
                eta.resize(k.soc_dims.size());
                wbar.resize(k.soc_dims.size());
                for (std::size_t b = 0; b < k.soc_dims.size(); ++b)
                {
                    const int st = k.soc_start[b], p = k.soc_dims[b];
                    const double sn = std::sqrt(soc_det(s.data() + st, p));
                    const double zn = std::sqrt(soc_det(z.data() + st, p));
                    RVec sb = s.segment(st, p) / sn;
                    RVec zb = z.segment(st, p) / zn;
                    const double g = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
                    RVec w(p);
                    w(0) = (sb(0) + zb(0)) / (2.0 * g);
                    w.tail(p - 1) = (sb.tail(p - 1) - zb.tail(p - 1)) / (2.0 * g);
                    eta[b] = std::sqrt(sn / zn);
                    wbar[b] = std::move(w);
                }
                lambda = apply(z, false);
            }

            // W v (inverse = false) or W^-1 v (inverse = true).
            RVec apply(const RVec &v, bool inverse) const
            {
                const ConeLayout &k = *cones;
                RVec out(v.size());
                for (int i = 0; i < k.nonneg; ++i)
                    out(i) = inverse ? v(i) / lp_w(i) : v(i) * lp_w(i);
                for (std::size_t b = 0; b < k.soc_dims.size(); ++b)
                {
                    const int st = k.soc_start[b], p = k.soc_dims[b];
                    const RVec &w = wbar[b];
                    const double sgn = inverse ? -1.0 : 1.0;
                    const double scale = inverse ? 1.0 / eta[b] : eta[b];
                    const double w1v1 = w.tail(p - 1).dot(v.segment(st + 1, p - 1));
                    out(st) = scale * (w(0) * v(st) + sgn * w1v1);
                    out.segment(st + 1, p - 1) =
                        scale * (v.segment(st + 1, p - 1) + (sgn * v(st) + w1v1 / (1.0 + w(0))) * w.tail(p - 1));
                }
                return out;
            }

            // Dense W^-1 block for SOC block b.
            RMat inverse_block(std::size_t b) const
            {
                const RVec &w = wbar[b];
                const int p = static_cast<int>(w.size());
                RMat m(p, p);
                m(0, 0) = w(0);
                m.block(0, 1, 1, p - 1) = -w.tail(p - 1).transpose();
                m.block(1, 0, p - 1, 1) = -w.tail(p - 1);
                m.block(1, 1, p - 1, p - 1) = RMat::Identity(p - 1, p - 1) + w.tail(p - 1) * w.tail(p - 1).transpose() / (1.0 + w(0));
                return m / eta[b];
            }
        };

        // Standard-form problem: minimize c'x s.t. G x + s = h, s in K.
        struct StandardForm
        {
            int n = 0;
            ConeLayout cones;
            Eigen::SparseMatrix<double, Eigen::RowMajor> G;
            RVec h;
            RVec c;
        };

        class HomogeneousIpm
        {
        public:
            HomogeneousIpm(const StandardForm &p, const SolverOptions &o) : prob_(p), opt_(o) {}

            struct Result
            {
                SolveStatus status = SolveStatus::numerical_failure;
                RVec x;
                int iterations = 0;
            };

            Result run()
            {
                const int n = prob_.n;
                const int m = prob_.cones.size();
                Result res;
                setup_kkt();

                // Initial point: least-squares primal and minimum-norm dual, shifted into K.
                scaling_.update(prob_.cones, RVec::Ones(m), RVec::Ones(m));
                for (int b = 0; b < static_cast<int>(prob_.cones.soc_dims.size()); ++b)
                {
                    // Identity scaling for the SOC blocks: wbar = e, eta = 1.
                    scaling_.wbar[b].setZero();
                    scaling_.wbar[b](0) = 1.0;
                    scaling_.eta[b] = 1.0;
                }
                if (!factor())
                    return res;
                RVec x(n), z(m), s(m);
                {
                    RVec r1 = RVec::Zero(n), r2 = prob_.h;
                    RVec dx, dz;
                    solve(r1, r2, dx, dz);
                    x = dx;
                    s = -dz;
                    shift_into_cone(s);
                }
                {
                    RVec r1 = -prob_.c, r2 = RVec::Zero(m);
                    RVec dx, dz;
                    solve(r1, r2, dx, dz);
                    z = dz;
                    shift_into_cone(z);
                }
                double tau = 1.0, kappa = 1.0;

                const double hnorm = std::max(1.0, prob_.h.norm());
                const double cnorm = std::max(1.0, prob_.c.norm());
                const double tol = opt_.tolerance;
                const int degree = prob_.cones.degree();

                for (int it = 0; it <= opt_.max_iterations; ++it)
                {
                    res.iterations = it;
                    RVec gx = prob_.G * x;
                    RVec gtz = prob_.G.transpose() * z;
                    RVec rx = gtz + prob_.c * tau;
                    RVec rz = s + gx - prob_.h * tau;
                    const double cx = prob_.c.dot(x), hz = prob_.h.dot(z);
                    const double rt = kappa + cx + hz;
                    const double mu = (s.dot(z) + tau * kappa) / (degree + 1);

                    // Termination.
                    const double pres = (gx / tau + s / tau - prob_.h).norm() / hnorm;
                    const double dres = (gtz / tau + prob_.c).norm() / cnorm;
                    const double pcost = cx / tau, dcost = -hz / tau;
                    const double gap = s.dot(z) / (tau * tau);
                    const double relgap = gap / std::max(1e-12, std::min(std::abs(pcost), std::abs(dcost)));
                    if (pres < tol && dres < tol && (gap < tol || relgap < tol))
                    {
                        res.status = SolveStatus::optimal;
                        res.x = x / tau;
                        return res;
                    }
                    if (hz < 0.0 && gtz.norm() / std::max(1.0, -hz) * (1.0 / cnorm) < tol &&
                        gtz.norm() < tol * (-hz))
                    {
                        res.status = SolveStatus::infeasible;
                        return res;
                    }
                    if (cx < 0.0 && (gx + s).norm() < tol * (-cx))
                    {
                        res.status = SolveStatus::unbounded;
                        return res;
                    }
                    if (it == opt_.max_iterations)
                        break;

                    scaling_.update(prob_.cones, s, z);
                    if (!factor())
                        break;
                    const RVec &lam = scaling_.lambda;

                    // Direction for the tau column.
                    RVec x1, z1;
                    solve(-prob_.c, prob_.h, x1, z1);
                    const double denom = prob_.c.dot(x1) + prob_.h.dot(z1) - kappa / tau;

                    auto direction = [&](double sigma, const RVec &ds_target, double dk_target, RVec &dx, RVec &dz,
                                         RVec &ds, double &dtau, double &dkappa) {
                        const double f = 1.0 - sigma;
                        RVec ldiv = jordan_divide(prob_.cones, lam, ds_target);
                        RVec rhs2 = -f * rz - scaling_.apply(ldiv, false);
                        RVec x2, z2;
                        solve(-f * rx, rhs2, x2, z2);
                        dtau = (-f * rt - dk_target / tau - prob_.c.dot(x2) - prob_.h.dot(z2)) / denom;
                        dx = x2 + dtau * x1;
                        dz = z2 + dtau * z1;
                        ds = scaling_.apply(ldiv - scaling_.apply(dz, false), false);
                        dkappa = (dk_target - kappa * dtau) / tau;
                    };

                    auto step_length = [&](const RVec &ds, const RVec &dz, double dtau, double dkappa) {
                        double a = 1.0 / 0.99;
                        a = max_step(prob_.cones, s, ds, a);
                        a = max_step(prob_.cones, z, dz, a);
                        if (dtau < 0.0)
                            a = std::min(a, -tau / dtau);
                        if (dkappa < 0.0)
                            a = std::min(a, -kappa / dkappa);
                        return a;
                    };

                    // Predictor.
                    RVec dxa, dza, dsa;
                    double dta, dka;
                    RVec target_a = -jordan_product(prob_.cones, lam, lam);
                    direction(0.0, target_a, -tau * kappa, dxa, dza, dsa, dta, dka);
                    const double alpha_a = std::min(1.0, step_length(dsa, dza, dta, dka));
                    double sigma = std::pow(1.0 - alpha_a, 3);
                    sigma = std::clamp(sigma, 0.0, 1.0);

                    // Corrector.
                    RVec target = target_a -
                                  jordan_product(prob_.cones, scaling_.apply(dsa, true), scaling_.apply(dza, false));
                    add_identity(prob_.cones, target, sigma * mu);
                    const double kt = -tau * kappa - dta * dka + sigma * mu;
                    RVec dx, dz, ds;
                    double dt, dk;
                    direction(sigma, target, kt, dx, dz, ds, dt, dk);
                    double alpha = std::min(1.0, 0.99 * step_length(ds, dz, dt, dk));
                    if (!(alpha > 1e-14) || !dx.allFinite())
                        break;

                    x += alpha * dx;
                    s += alpha * ds;
                    z += alpha * dz;
                    tau += alpha * dt;
                    kappa += alpha * dk;
                }
                res.status = SolveStatus::numerical_failure;
                res.x = x / tau;
                return res;
            }

        private:
            void shift_into_cone(RVec &u) const
            {
                const double a = -min_eigen(prob_.cones, u);
                if (a >= 0.0)
                    add_identity(prob_.cones, u, 1.0 + a);
            }

            // Builds the sparsity pattern of the lower-triangular KKT matrix once.
            void setup_kkt()
            {
                const int n = prob_.n;
                const ConeLayout &k = prob_.cones;
                const int m = k.size();
                std::vector<Eigen::Triplet<double>> trip;
                trip.reserve(prob_.G.nonZeros() * 2 + n + m);
                for (int j = 0; j < n; ++j)
                    trip.emplace_back(j, j, 1.0);
                for (int i = 0; i < m; ++i)
                    trip.emplace_back(n + i, n + i, -1.0);

                // Nonnegative rows keep their own pattern; each SOC row takes the union pattern of its block.
                for (int i = 0; i < k.nonneg; ++i)
                    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itr(prob_.G, i); itr; ++itr)
                        trip.emplace_back(n + i, itr.col(), 1.0);
                block_cols_.assign(k.soc_dims.size(), {});
                for (std::size_t b = 0; b < k.soc_dims.size(); ++b)
                {
                    std::vector<int> &cols = block_cols_[b];
                    for (int r = k.soc_start[b]; r < k.soc_start[b] + k.soc_dims[b]; ++r)
                        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itr(prob_.G, r); itr; ++itr)
                            cols.push_back(static_cast<int>(itr.col()));
                    std::sort(cols.begin(), cols.end());
                    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
                    for (int r = k.soc_start[b]; r < k.soc_start[b] + k.soc_dims[b]; ++r)
                        for (int c : cols)
                            trip.emplace_back(n + r, c, 1.0);
                }
                kkt_.resize(n + m, n + m);
                kkt_.setFromTriplets(trip.begin(), trip.end(), [](double a, double) { return a; });
                kkt_.makeCompressed();

                auto locate = [&](int row, int col) -> int {
                    const int *outer = kkt_.outerIndexPtr();
                    const int *inner = kkt_.innerIndexPtr();
                    const int *p = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
                    return static_cast<int>(p - inner);
                };
                diag_pos_.resize(n + m);
                for (int i = 0; i < n + m; ++i)
                    diag_pos_[i] = locate(i, i);
                lp_pos_.clear();
                for (int i = 0; i < k.nonneg; ++i)
                    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itr(prob_.G, i); itr; ++itr)
                        lp_pos_.push_back(locate(n + i, static_cast<int>(itr.col())));
                block_pos_.assign(k.soc_dims.size(), {});
                block_dense_.assign(k.soc_dims.size(), RMat());
                for (std::size_t b = 0; b < k.soc_dims.size(); ++b)
                {
                    const std::vector<int> &cols = block_cols_[b];
                    const int p = k.soc_dims[b];
                    RMat dense = RMat::Zero(p, static_cast<int>(cols.size()));
                    for (int r = 0; r < p; ++r)
                        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itr(prob_.G, k.soc_start[b] + r); itr; ++itr)
                        {
                            const int c = static_cast<int>(std::lower_bound(cols.begin(), cols.end(), static_cast<int>(itr.col())) - cols.begin());
                            dense(r, c) = itr.value();
                        }
                    block_dense_[b] = std::move(dense);
                    for (int r = 0; r < p; ++r)
                        for (int c : cols)
                            block_pos_[b].push_back(locate(n + k.soc_start[b] + r, c));
                }
                ldlt_.analyzePattern(kkt_);
            }

            bool factor()
            {
                const int n = prob_.n;
                const ConeLayout &k = prob_.cones;
                const int m = k.size();
                double *val = kkt_.valuePtr();
                for (int j = 0; j < n; ++j)
                    val[diag_pos_[j]] = opt_.regularization;
                for (int i = 0; i < m; ++i)
                    val[diag_pos_[n + i]] = -1.0;
                std::size_t q = 0;
                for (int i = 0; i < k.nonneg; ++i)
                {
                    const double wi = scaling_.lp_w(i);
                    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itr(prob_.G, i); itr; ++itr)
                        val[lp_pos_[q++]] = itr.value() / wi;
                }
                for (std::size_t b = 0; b < k.soc_dims.size(); ++b)
                {
                    RMat scaled = scaling_.inverse_block(b) * block_dense_[b];
                    std::size_t t = 0;
                    for (int r = 0; r < scaled.rows(); ++r)
                        for (int c = 0; c < scaled.cols(); ++c)
                            val[block_pos_[b][t++]] = scaled(r, c);
                }
                ldlt_.factorize(kkt_);
                return ldlt_.info() == Eigen::Success;
            }

            // Solves [[0, G'], [G, -W^2]] [dx; dz] = [r1; r2].
            void solve(const RVec &r1, const RVec &r2, RVec &dx, RVec &dz) const
            {
                const int n = prob_.n;
                const int m = prob_.cones.size();
                RVec rhs(n + m);
                rhs.head(n) = r1;
                rhs.tail(m) = scaling_.apply(r2, true);
                RVec u = ldlt_.solve(rhs);
                for (int it = 0; it < opt_.refinement_steps; ++it)
                {
                    RVec res = rhs - apply_kkt(u);
                    if (res.lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()))
                        break;
                    u += ldlt_.solve(res);
                }
                dx = u.head(n);
                dz = scaling_.apply(u.tail(m), true);
            }

            RVec apply_kkt(const RVec &u) const
            {
                const int n = prob_.n;
                const int m = prob_.cones.size();
                RVec out(n + m);
                RVec winv_b = scaling_.apply(u.tail(m), true);
                out.head(n) = prob_.G.transpose() * winv_b;
                out.tail(m) = scaling_.apply(prob_.G * u.head(n), true) - u.tail(m);
                return out;
            }

            const StandardForm &prob_;
            SolverOptions opt_;
            Scaling scaling_;
            Eigen::SparseMatrix<double> kkt_;
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
            std::vector<int> diag_pos_;
            std::vector<int> lp_pos_;
            std::vector<std::vector<int>> block_cols_;
            std::vector<std::vector<int>> block_pos_;
            std::vector<RMat> block_dense_;
        };

        inline double row_scale(const std::vector<Term> &terms)
        {
            double mx = 0.0;
            for (const Term &t : terms)
                mx = std::max(mx, std::abs(t.coef));
            return mx > 0.0 ? 1.0 / mx : 1.0;
        }

        inline double evaluate(const std::vector<Term> &terms, const std::vector<double> &x)
        {
            double v = 0.0;
            for (const Term &t : terms)
                v += t.coef * x[t.var];
            return v;
        }

        inline void validate(const LinearProgramSpec &lp, const std::vector<ConeBlock> &cones)
        {
            const auto n = static_cast<std::size_t>(lp.num_vars);
            if (lp.objective.size() != n || lp.lower.size() != n || lp.upper.size() != n)
                throw DimensionMismatch("linear program: per-variable arrays do not match num_vars");
            auto check_terms = [&](const std::vector<Term> &terms) {
                for (const Term &t : terms)
                {
                    if (t.var < 0 || t.var >= lp.num_vars)
                        throw DimensionMismatch("linear program: term references unknown variable");
                    if (!std::isfinite(t.coef))
                        throw DimensionMismatch("linear program: non-finite coefficient");
                }
            };
            for (const LinearRow &r : lp.rows)
            {
                check_terms(r.terms);
                if (std::isnan(r.bound))
                    throw DimensionMismatch("linear program: NaN row bound");
            }
            for (double c : lp.objective)
                if (!std::isfinite(c))
                    throw DimensionMismatch("linear program: non-finite objective coefficient");
            for (const ConeBlock &b : cones)
            {
                check_terms(b.tail.terms);
                for (const AffineExpr &e : b.head)
                    check_terms(e.terms);
            }
        }

        inline SolveOutcome solve_impl(const LinearProgramSpec &lp, const std::vector<ConeBlock> &cones,
                                       const SolverOptions &opt)
        {
            validate(lp, cones);
            SolveOutcome out;
            const int n = lp.num_vars;
            for (int j = 0; j < n; ++j)
                if (lp.lower[j] > lp.upper[j])
                {
                    out.status = SolveStatus::infeasible;
                    return out;
                }

            StandardForm sf;
            sf.n = n;
            std::vector<Eigen::Triplet<double>> trip;
            std::vector<double> h;
            int row = 0;
            auto push_row = [&](const std::vector<Term> &terms, double bound, double scale) {
                for (const Term &t : terms)
                    if (t.coef != 0.0)
                        trip.emplace_back(row, t.var, t.coef * scale);
                h.push_back(bound * scale);
                ++row;
            };
            for (const LinearRow &r : lp.rows)
            {
                if (r.terms.empty())
                {
                    if (r.bound < 0.0)
                    {
                        out.status = SolveStatus::infeasible;
                        return out;
                    }
                    continue;
                }
                if (r.bound == kInf)
                    continue;
                push_row(r.terms, r.bound, row_scale(r.terms));
            }
            for (int j = 0; j < n; ++j)
            {
                if (std::isfinite(lp.upper[j]))
                    push_row({Term{j, 1.0}}, lp.upper[j], 1.0);
                if (std::isfinite(lp.lower[j]))
                    push_row({Term{j, -1.0}}, -lp.lower[j], 1.0);
            }
            sf.cones.nonneg = row;
            for (const ConeBlock &b : cones)
            {
                double mx = 0.0;
                for (const Term &t : b.tail.terms)
                    mx = std::max(mx, std::abs(t.coef));
                for (const AffineExpr &e : b.head)
                    for (const Term &t : e.terms)
                        mx = std::max(mx, std::abs(t.coef));
                const double sc = mx > 0.0 ? 1.0 / mx : 1.0;
                sf.cones.soc_start.push_back(row);
                sf.cones.soc_dims.push_back(1 + static_cast<int>(b.head.size()));
                // s = h - G x must equal the affine expression: G = -coef, h = constant.
                auto push_affine = [&](const AffineExpr &e) {
                    for (const Term &t : e.terms)
                        if (t.coef != 0.0)
                            trip.emplace_back(row, t.var, -t.coef * sc);
                    h.push_back(e.constant * sc);
                    ++row;
                };
                push_affine(b.tail);
                for (const AffineExpr &e : b.head)
                    push_affine(e);
            }
            sf.G.resize(row, n);
            sf.G.setFromTriplets(trip.begin(), trip.end());
            sf.G.makeCompressed();
            sf.h = Eigen::Map<const RVec>(h.data(), static_cast<Eigen::Index>(h.size()));
            sf.c.resize(n);
            for (int j = 0; j < n; ++j)
                sf.c(j) = -lp.objective[j];

            HomogeneousIpm ipm(sf, opt);
            auto res = ipm.run();
            out.iterations = res.iterations;
            out.status = res.status;
            if (res.status != SolveStatus::optimal && res.status != SolveStatus::numerical_failure)
                return out;
            if (res.x.size() != n || !res.x.allFinite())
            {
                out.status = SolveStatus::numerical_failure;
                return out;
            }
            out.values.assign(res.x.data(), res.x.data() + n);

            // Violation audit in the caller's units.
            double viol = 0.0;
            for (const LinearRow &r : lp.rows)
            {
                if (r.terms.empty() || r.bound == kInf)
                    continue;
                const double scale = std::min(1.0, row_scale(r.terms));
                viol = std::max(viol, (evaluate(r.terms, out.values) - r.bound) * scale);
            }
            for (int j = 0; j < n; ++j)
            {
                viol = std::max(viol, lp.lower[j] - out.values[j]);
                viol = std::max(viol, out.values[j] - lp.upper[j]);
            }
            for (const ConeBlock &b : cones)
            {
                double hn = 0.0;
                for (const AffineExpr &e : b.head)
                {
                    const double v = evaluate(e.terms, out.values) + e.constant;
                    hn += v * v;
                }
                const double tail = evaluate(b.tail.terms, out.values) + b.tail.constant;
                viol = std::max(viol, std::sqrt(hn) - tail);
            }
            out.max_violation = std::max(0.0, viol);
            out.objective = 0.0;
            for (int j = 0; j < n; ++j)
                out.objective += lp.objective[j] * out.values[j];
            if (out.status == SolveStatus::optimal && out.max_violation > opt.tolerance * 10.0)
                out.status = SolveStatus::numerical_failure;
            return out;
        }
    } // namespace detail

    inline SolveOutcome solve_lp(const LinearProgramSpec &spec, const SolverOptions &opt = {})
    {
        return detail::solve_impl(spec, {}, opt);
    }

    inline SolveOutcome solve_socp(const ConeProgramSpec &spec, const SolverOptions &opt = {})
    {
        return detail::solve_impl(spec.core, spec.cones, opt);
    }

    // Structured-text dump of a program for offline cross-checking against another solver.
    inline nlohmann::json to_json(const ConeProgramSpec &spec)
    {
        using nlohmann::json;
        auto terms_json = [](const std::vector<Term> &terms) {
            json a = json::array();
            for (const Term &t : terms)
                a.push_back({t.var, t.coef});
            return a;
        };
        auto bound_json = [](double v) -> json {
            if (std::isinf(v))
                return v > 0 ? "inf" : "-inf";
            return v;
        };
        json j;
        j["sense"] = "maximize";
        j["num_vars"] = spec.core.num_vars;
        j["objective"] = spec.core.objective;
        json lo = json::array(), hi = json::array();
        for (int k = 0; k < spec.core.num_vars; ++k)
        {
            lo.push_back(bound_json(spec.core.lower[k]));
            hi.push_back(bound_json(spec.core.upper[k]));
        }
        j["lower"] = lo;
        j["upper"] = hi;
        json rows = json::array();
        for (const LinearRow &r : spec.core.rows)
            rows.push_back({{"terms", terms_json(r.terms)}, {"le", bound_json(r.bound)}});
        j["rows"] = rows;
        json cones = json::array();
        for (const ConeBlock &b : spec.cones)
        {
            json head = json::array();
            for (const AffineExpr &e : b.head)
                head.push_back({{"terms", terms_json(e.terms)}, {"constant", e.constant}});
            cones.push_back({{"tail", {{"terms", terms_json(b.tail.terms)}, {"constant", b.tail.constant}}}, {"head", head}});
        }
        j["cones"] = cones;
        return j;
    }

    inline nlohmann::json to_json(const LinearProgramSpec &spec)
    {
        ConeProgramSpec c{spec, {}};
        return to_json(c);
    }

} // namespace irsma::conic

#endif // IRSMA_CONIC_HPP
