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

#ifndef IRSMA_SCENARIO_HPP
#define IRSMA_SCENARIO_HPP

// Geometry and economics of a planning instance: the movable-antenna grid with its
// spacing conflicts, candidate IRS panels, sampled target areas and the cost model.

#include "common.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace irsma
{
    struct RadioConstants
    {
        double wavelength = 0.1;       // m
        double transmit_power = 0.1;   // W
        double noise_power = 1e-12;    // W

        double pbar() const { return transmit_power / noise_power; }
        double c0() const
        {
            const double r = wavelength / (4.0 * kPi);
            return r * r;
        }
        double wavenumber() const { return 2.0 * kPi / wavelength; }
    };

    // Uniform square lattice in the y-z plane at x = 0. Index m = row * per_side + col,
    // row along z, col along y.
    struct MaGrid
    {
        double aperture = 0.0;
        double step = 0.0;
        int per_side = 0;
        std::vector<Vec3> points;

        int count() const { return static_cast<int>(points.size()); }
    };

    struct ConflictSet
    {
        double min_distance = 0.0;
        std::vector<std::pair<int, int>> pairs; // m < q
    };

    enum class PanelOrientation
    {
        horizontal_down,
        vertical
    };

    struct IrsSite
    {
        int index = 0;
        Vec3 reference = Vec3::Zero();
        PanelOrientation orientation = PanelOrientation::vertical;
        double facing_azimuth = 0.0; // rad, vertical panels only
        int rows = 1;
        int cols = 1;
        double spacing = 0.05;
        double install_cost = 0.0;
        std::vector<Vec3> elements; // elements[0] == reference

        int max_elements() const { return rows * cols; }
    };

    struct TargetArea
    {
        int index = 0;
        Vec3 corner = Vec3::Zero();
        double extent_x = 5.0;
        double extent_y = 5.0;
        double resolution = 1.0;
        double threshold = 10.0; // linear
        std::vector<Vec3> samples;

        Vec3 centroid() const
        {
            Vec3 c = Vec3::Zero();
            for (const Vec3 &u : samples)
                c += u;
            return c / static_cast<double>(samples.size());
        }
    };

    struct CostModel
    {
        double ma_cost = 30.0;
        double element_cost = 1.0;
        double fpa_ratio = 1.0 / 3.0;
    };

    // ---------------------------------------------------------------------------------

    inline MaGrid build_ma_grid(double aperture, double step)
    {
        if (!(aperture > 0.0) || !(step > 0.0) || !std::isfinite(aperture) || !std::isfinite(step))
            throw InvalidGeometry("MA grid: aperture and step must be positive");
        if (step > aperture * (1.0 + 1e-12))
            throw InvalidGeometry("MA grid: step exceeds aperture");
        MaGrid g;
        g.aperture = aperture;
        g.step = step;
        g.per_side = static_cast<int>(std::floor(aperture / step + 1e-9)) + 1;
        g.points.reserve(static_cast<std::size_t>(g.per_side) * g.per_side);
        for (int r = 0; r < g.per_side; ++r)
            for (int c = 0; c < g.per_side; ++c)
                g.points.emplace_back(0.0, c * step, r * step);
        return g;
    }

    inline ConflictSet conflict_set(const MaGrid &grid, double min_distance)
    {
        if (!(min_distance > 0.0))
            throw InvalidGeometry("conflict set: minimum distance must be positive");
        ConflictSet cs;
        cs.min_distance = min_distance;
        const double lim = min_distance * (1.0 - 1e-9);
        for (int m = 0; m < grid.count(); ++m)
            for (int q = m + 1; q < grid.count(); ++q)
                if ((grid.points[m] - grid.points[q]).norm() < lim)
                    cs.pairs.emplace_back(m, q);
        return cs;
    }

    namespace detail
    {
        // Maximum independent set by branch and bound (max clique on the complement with
        // greedy-colouring bounds). Returns a lexicographically early optimum.
        class IndependentSetSearch
        {
        public:
            IndependentSetSearch(int n, const std::vector<std::pair<int, int>> &edges) : n_(n), words_((n + 63) / 64)
            {
                compat_.assign(n, std::vector<std::uint64_t>(words_, 0));
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        if (i != j)
                            set(compat_[i], j);
                for (auto [a, b] : edges)
                {
                    clear(compat_[a], b);
                    clear(compat_[b], a);
                }
            }

            std::vector<int> solve()
            {
                std::vector<int> all(n_);
                for (int i = 0; i < n_; ++i)
                    all[i] = i;
                best_.clear();
                cur_.clear();
                expand(all);
                std::sort(best_.begin(), best_.end());
                return best_;
            }

        private:
            static void set(std::vector<std::uint64_t> &b, int i) { b[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
            static void clear(std::vector<std::uint64_t> &b, int i) { b[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
            static bool test(const std::vector<std::uint64_t> &b, int i) { return (b[i >> 6] >> (i & 63)) & 1u; }

            void expand(std::vector<int> cand)
            {
                // colour classes in the compatibility graph = sets of mutually conflicting points
                std::vector<int> order, bound;
                colour(cand, order, bound);
                for (int k = static_cast<int>(order.size()) - 1; k >= 0; --k)
                {
                    if (static_cast<int>(cur_.size()) + bound[k] <= static_cast<int>(best_.size()))
                        return;
                    const int v = order[k];
                    cur_.push_back(v);
                    std::vector<int> next;
                    for (int i = 0; i < k; ++i)
                        if (test(compat_[v], order[i]))
                            next.push_back(order[i]);
                    if (next.empty())
                    {
                        if (cur_.size() > best_.size())
                            best_ = cur_;
                    }
                    else
                        expand(std::move(next));
                    cur_.pop_back();
                    order.erase(order.begin() + k);
                    // bound for the remaining prefix is still valid
                }
            }

            void colour(const std::vector<int> &cand, std::vector<int> &order, std::vector<int> &bound) const
            {
                std::vector<std::vector<int>> classes;
                for (int v : cand)
                {
                    bool placed = false;
                    for (auto &cl : classes)
                    {
                        bool ok = true;
                        for (int u : cl)
                            if (test(compat_[v], u))
                            {
                                ok = false;
                                break;
                            }
                        if (ok)
                        {
                            cl.push_back(v);
                            placed = true;
                            break;
                        }
                    }
                    if (!placed)
                        classes.push_back({v});
                }
                order.clear();
                bound.clear();
                for (std::size_t c = 0; c < classes.size(); ++c)
                    for (int v : classes[c])
                    {
                        order.push_back(v);
                        bound.push_back(static_cast<int>(c) + 1);
                    }
            }

            int n_;
            int words_;
            std::vector<std::vector<std::uint64_t>> compat_;
            std::vector<int> cur_, best_;
        };

        // Stride packing is exact when every k x k block of the lattice is a clique.
        inline int packing_stride(const MaGrid &grid, double min_distance)
        {
            const int k = std::max(1, static_cast<int>(std::ceil(min_distance / grid.step - 1e-9)));
            if (k == 1)
                return 1;
            const double block_diag = (k - 1) * std::sqrt(2.0) * grid.step;
            return block_diag < min_distance * (1.0 - 1e-9) ? k : 0;
        }

        inline bool is_lattice(const MaGrid &grid)
        {
            return grid.per_side > 0 && grid.count() == grid.per_side * grid.per_side;
        }
    } // namespace detail

    // Indices of a maximum set of mutually compatible grid points, sorted ascending.
    inline std::vector<int> packed_layout(const MaGrid &grid, const ConflictSet &conflicts)
    {
        if (grid.count() == 0)
            return {};
        if (detail::is_lattice(grid))
        {
            const int k = detail::packing_stride(grid, conflicts.min_distance);
            if (k > 0)
            {
                std::vector<int> out;
                for (int r = 0; r < grid.per_side; r += k)
                    for (int c = 0; c < grid.per_side; c += k)
                        out.push_back(r * grid.per_side + c);
                return out;
            }
        }
        return detail::IndependentSetSearch(grid.count(), conflicts.pairs).solve();
    }

    inline int max_deployable(const MaGrid &grid, const ConflictSet &conflicts)
    {
        return static_cast<int>(packed_layout(grid, conflicts).size());
    }

    // ---------------------------------------------------------------------------------

    inline IrsSite make_site(int index, const Vec3 &reference, PanelOrientation orientation, int rows, int cols,
                             double spacing, double install_cost, double facing_azimuth = 0.0)
    {
        if (rows < 1 || cols < 1 || !(spacing > 0.0))
            throw InvalidGeometry("IRS site: layout must have at least one element and positive spacing");
        if (install_cost < 0.0)
            throw InvalidGeometry("IRS site: negative install cost");
        IrsSite s;
        s.index = index;
        s.reference = reference;
        s.orientation = orientation;
        s.facing_azimuth = facing_azimuth;
        s.rows = rows;
        s.cols = cols;
        s.spacing = spacing;
        s.install_cost = install_cost;
        Vec3 row_axis, col_axis;
        if (orientation == PanelOrientation::horizontal_down)
        {
            row_axis = Vec3(1.0, 0.0, 0.0);
            col_axis = Vec3(0.0, 1.0, 0.0);
        }
        else
        {
            row_axis = Vec3(0.0, 0.0, 1.0);
            col_axis = Vec3(-std::sin(facing_azimuth), std::cos(facing_azimuth), 0.0);
        }
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                s.elements.push_back(reference + r * spacing * row_axis + c * spacing * col_axis);
        return s;
    }

    // Inclusive sampling of an axis-aligned rectangle on the ground plane.
    inline TargetArea make_area(int index, const Vec3 &corner, double extent_x, double extent_y, double resolution,
                                double threshold)
    {
        if (!(extent_x >= 0.0) || !(extent_y >= 0.0) || !(resolution > 0.0))
            throw InvalidGeometry("target area: extents must be non-negative and resolution positive");
        if (!(threshold > 0.0))
            throw InvalidGeometry("target area: SNR threshold must be positive");
        TargetArea a;
        a.index = index;
        a.corner = corner;
        a.extent_x = extent_x;
        a.extent_y = extent_y;
        a.resolution = resolution;
        a.threshold = threshold;
        const int nx = static_cast<int>(std::floor(extent_x / resolution + 1e-9)) + 1;
        const int ny = static_cast<int>(std::floor(extent_y / resolution + 1e-9)) + 1;
        for (int i = 0; i < nx; ++i)
            for (int k = 0; k < ny; ++k)
                a.samples.emplace_back(corner.x() + i * resolution, corner.y() + k * resolution, corner.z());
        return a;
    }

    // ---------------------------------------------------------------------------------

    struct Scenario
    {
        RadioConstants radio;
        MaGrid grid;
        ConflictSet conflicts;
        std::vector<IrsSite> sites;
        std::vector<TargetArea> areas;
        CostModel costs;
        std::vector<int> packed; // maximum compatible layout
        int m_max = 0;

        int num_sites() const { return static_cast<int>(sites.size()); }
        int num_areas() const { return static_cast<int>(areas.size()); }
        int num_antennas() const { return grid.count(); }

        // Offset of site l in the stacked element index.
        int element_offset(int l) const
        {
            int off = 0;
            for (int k = 0; k < l; ++k)
                off += sites[k].max_elements();
            return off;
        }
        int total_elements() const { return element_offset(num_sites()); }

        // Site owning stacked element n.
        int site_of(int n) const
        {
            int off = 0;
            for (int l = 0; l < num_sites(); ++l)
            {
                off += sites[l].max_elements();
                if (n < off)
                    return l;
            }
            throw DimensionMismatch("element index out of range");
        }

        double site_full_cost(int l) const
        {
            return sites[l].install_cost + costs.element_cost * sites[l].max_elements();
        }
    };

    // Rebuilds derived members (conflicts, packing) after grid or distance changes.
    inline void finalize(Scenario &sc, double min_distance)
    {
        sc.conflicts = conflict_set(sc.grid, min_distance);
        sc.packed = packed_layout(sc.grid, sc.conflicts);
        sc.m_max = static_cast<int>(sc.packed.size());
        for (int l = 0; l < sc.num_sites(); ++l)
            sc.sites[l].index = l;
        for (int j = 0; j < sc.num_areas(); ++j)
            sc.areas[j].index = j;
    }

    inline void validate(const Scenario &sc)
    {
        const RadioConstants &r = sc.radio;
        if (!(r.wavelength > 0.0) || !(r.transmit_power > 0.0) || !(r.noise_power > 0.0))
            throw InvalidGeometry("radio constants must be positive");
        if (sc.costs.ma_cost < 0.0 || sc.costs.element_cost < 0.0 || sc.costs.fpa_ratio < 0.0)
            throw InvalidGeometry("costs must be non-negative");
        if (sc.grid.count() == 0)
            throw InvalidGeometry("empty MA grid");
        for (const TargetArea &a : sc.areas)
            if (a.samples.empty())
                throw InvalidGeometry("target area without samples");
        for (const IrsSite &s : sc.sites)
            if (static_cast<int>(s.elements.size()) != s.max_elements())
                throw DimensionMismatch("IRS site element count does not match layout");
    }

    // Default instance: five candidate sites, two 5 m x 5 m areas, 3-wavelength aperture.
    inline Scenario default_scenario()
    {
        Scenario sc;
        sc.radio.wavelength = 0.1;
        sc.radio.transmit_power = dbm_to_watts(20.0);
        sc.radio.noise_power = dbm_to_watts(-90.0);
        const double lam = sc.radio.wavelength;
        sc.grid = build_ma_grid(3.0 * lam, lam / 2.0);
        const double half = lam / 2.0;
        sc.sites.push_back(make_site(0, Vec3(5, 0, 12), PanelOrientation::horizontal_down, 5, 10, half, 30.0));
        sc.sites.push_back(make_site(1, Vec3(0, 12, 5), PanelOrientation::vertical, 5, 10, half, 20.0));
        sc.sites.push_back(make_site(2, Vec3(0, -12, 5), PanelOrientation::vertical, 5, 10, half, 20.0));
        sc.sites.push_back(make_site(3, Vec3(10, 25, 5), PanelOrientation::vertical, 5, 10, half, 10.0));
        sc.sites.push_back(make_site(4, Vec3(10, -25, 5), PanelOrientation::vertical, 5, 10, half, 10.0));
        const double gamma = db_to_linear(10.0);
        sc.areas.push_back(make_area(0, Vec3(55, -20, 0), 5.0, 5.0, 1.0, gamma));
        sc.areas.push_back(make_area(1, Vec3(60, 15, 0), 5.0, 5.0, 1.0, gamma));
        sc.costs = CostModel{30.0, 1.0, 1.0 / 3.0};
        finalize(sc, lam / 2.0);
        return sc;
    }

    struct PlacementBox
    {
        double x_lo = 50.0, x_hi = 70.0;
        double y_lo = -40.0, y_hi = 40.0;
        double z = 0.0;
    };

    // Draws `count` disjoint square areas fully inside the box by rejection sampling.
    inline std::vector<Vec3> random_area_corners(int count, double extent, const PlacementBox &box,
                                                 std::mt19937_64 &rng, int max_tries = 10000)
    {
        if (box.x_hi - box.x_lo < extent || box.y_hi - box.y_lo < extent)
            throw InvalidGeometry("placement box smaller than one area");
        std::uniform_real_distribution<double> ux(box.x_lo, box.x_hi - extent);
        std::uniform_real_distribution<double> uy(box.y_lo, box.y_hi - extent);
        std::vector<Vec3> corners;
        int tries = 0;
        while (static_cast<int>(corners.size()) < count)
        {
            if (++tries > max_tries)
                throw InvalidGeometry("area placement: rejection sampling exhausted");
            Vec3 c(ux(rng), uy(rng), box.z);
            bool ok = true;
            for (const Vec3 &o : corners)
                if (std::abs(c.x() - o.x()) <= extent && std::abs(c.y() - o.y()) <= extent)
                {
                    ok = false;
                    break;
                }
            if (ok)
                corners.push_back(c);
        }
        return corners;
    }

    // Replaces the scenario's areas by `count` random disjoint placements sharing the first
    // area's extent, resolution and threshold.
    inline void place_areas_randomly(Scenario &sc, int count, std::mt19937_64 &rng, const PlacementBox &box = {})
    {
        TargetArea proto = sc.areas.empty() ? make_area(0, Vec3::Zero(), 5.0, 5.0, 1.0, db_to_linear(10.0)) : sc.areas.front();
        const double ext = std::max(proto.extent_x, proto.extent_y);
        auto corners = random_area_corners(count, ext, box, rng);
        sc.areas.clear();
        for (int j = 0; j < count; ++j)
            sc.areas.push_back(make_area(j, corners[j], proto.extent_x, proto.extent_y, proto.resolution, proto.threshold));
    }

    // ---------------------------------------------------------------------------------

    struct DeploymentSolution
    {
        RMat x;                    // M x J occupancy
        RVec z;                    // L site selection
        std::vector<CVec> phases;  // per area, stacked over all sites (length N)
        RVec y;                    // N element indicators; empty means y = z per site

        int ma_count(int j) const
        {
            return static_cast<int>(std::lround(x.col(j).sum()));
        }
        int max_ma_count() const
        {
            int mx = 0;
            for (int j = 0; j < x.cols(); ++j)
                mx = std::max(mx, ma_count(j));
            return mx;
        }
        int site_count() const { return static_cast<int>(std::lround(z.sum())); }
    };

    // Installed-element indicator for stacked element n.
    inline double element_indicator(const DeploymentSolution &sol, const Scenario &sc, int n)
    {
        if (sol.y.size() > 0)
            return sol.y(n);
        return sol.z(sc.site_of(n));
    }

    inline int installed_elements(const DeploymentSolution &sol, const Scenario &sc)
    {
        int count = 0;
        for (int n = 0; n < sc.total_elements(); ++n)
            if (element_indicator(sol, sc, n) > 0.5)
                ++count;
        return count;
    }

    struct CostBreakdown
    {
        double ma_term = 0.0;
        std::vector<double> site_terms; // install + elements per site
        double total = 0.0;
    };

    inline CostBreakdown cost_breakdown(const DeploymentSolution &sol, const Scenario &sc, double ma_unit_cost)
    {
        const int L = sc.num_sites();
        if (sol.z.size() != L || sol.x.rows() != sc.num_antennas())
            throw DimensionMismatch("deployment solution does not match scenario");
        if (sol.y.size() != 0 && sol.y.size() != sc.total_elements())
            throw DimensionMismatch("element indicator length does not match scenario");
        for (Eigen::Index k = 0; k < sol.x.size(); ++k)
            if (!is_binary(sol.x.data()[k]))
                throw AuditError("cost: fractional antenna occupancy");
        for (int l = 0; l < L; ++l)
            if (!is_binary(sol.z(l)))
                throw AuditError("cost: fractional site selection");
        for (Eigen::Index k = 0; k < sol.y.size(); ++k)
            if (!is_binary(sol.y(k)))
                throw AuditError("cost: fractional element indicator");
        CostBreakdown cb;
        cb.ma_term = ma_unit_cost * sol.max_ma_count();
        cb.site_terms.assign(L, 0.0);
        for (int l = 0; l < L; ++l)
        {
            if (sol.z(l) < 0.5)
                continue;
            double elems = 0.0;
            const int off = sc.element_offset(l);
            for (int n = 0; n < sc.sites[l].max_elements(); ++n)
                elems += sol.y.size() ? sol.y(off + n) : 1.0;
            cb.site_terms[l] = sc.sites[l].install_cost + sc.costs.element_cost * elems;
        }
        cb.total = cb.ma_term;
        for (double t : cb.site_terms)
            cb.total += t;
        return cb;
    }

    inline double total_cost(const DeploymentSolution &sol, const Scenario &sc)
    {
        return cost_breakdown(sol, sc, sc.costs.ma_cost).total;
    }

} // namespace irsma

#endif // IRSMA_SCENARIO_HPP
