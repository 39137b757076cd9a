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

#ifndef IRSMA_EXPERIMENT_HPP
#define IRSMA_EXPERIMENT_HPP

// Scenario files, Monte-Carlo sweeps over random area placements and result tables.
// Files carry powers and thresholds in dB; everything is linear once parsed.

#include "audit.hpp"
#include "baselines.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace irsma
{
    // Knobs a sweep can vary; build() turns them into a Scenario.
    struct ScenarioSpec
    {
        double wavelength = 0.1;
        double transmit_power_dbm = 20.0;
        double noise_power_dbm = -90.0;
        double aperture = 3.0;    // wavelengths
        double grid_step = 0.5;   // wavelengths
        double min_spacing = 0.5; // wavelengths
        CostModel costs;
        std::vector<IrsSite> sites;
        int area_count = 2;
        double area_extent = 5.0;
        double area_resolution = 1.0;
        double threshold_db = 10.0;
        std::vector<Vec3> corners; // fixed placements; random per trial when empty
        PlacementBox box;

        Scenario build(std::mt19937_64 *rng = nullptr) const
        {
            Scenario sc;
            sc.radio.wavelength = wavelength;
            sc.radio.transmit_power = dbm_to_watts(transmit_power_dbm);
            sc.radio.noise_power = dbm_to_watts(noise_power_dbm);
            if (!(aperture > 0.0) || !(grid_step > 0.0) || !(min_spacing > 0.0))
                throw InvalidGeometry("aperture, grid step and minimum spacing must be positive");
            sc.grid = build_ma_grid(aperture * wavelength, grid_step * wavelength);
            sc.sites = sites;
            sc.costs = costs;
            const double gamma = db_to_linear(threshold_db);
            if (area_count < 1)
                throw InvalidGeometry("at least one target area is required");
            std::vector<Vec3> at = corners;
            if (at.empty())
            {
                if (rng == nullptr)
                    throw InvalidGeometry("random area placement needs a seeded generator");
                at = random_area_corners(area_count, area_extent, box, *rng);
            }
            else if (static_cast<int>(at.size()) != area_count)
                throw InvalidGeometry("number of fixed area corners does not match the area count");
            for (int j = 0; j < area_count; ++j)
                sc.areas.push_back(make_area(j, at[j], area_extent, area_extent, area_resolution, gamma));
            finalize(sc, min_spacing * wavelength);
            validate(sc);
            return sc;
        }
    };

    inline ScenarioSpec default_scenario_spec()
    {
        ScenarioSpec s;
        const Scenario d = default_scenario();
        s.sites = d.sites;
        s.costs = d.costs;
        return s;
    }

    namespace detail
    {
        struct JsonReader
        {
            const nlohmann::json &j;
            std::string path;

            [[noreturn]] void fail(const std::string &key, const std::string &what) const
            {
                throw SchemaError("field '" + path + key + "': " + what);
            }

            void only(std::initializer_list<const char *> keys) const
            {
                if (!j.is_object())
                    throw SchemaError("field '" + (path.empty() ? std::string("<root>") : path) + "': expected an object");
                for (auto it = j.begin(); it != j.end(); ++it)
                {
                    bool known = false;
                    for (const char *k : keys)
                        known = known || it.key() == k;
                    if (!known)
                        fail(it.key(), "unknown field");
                }
            }

            double number(const char *key, double fallback) const
            {
                if (!j.contains(key))
                    return fallback;
                if (!j.at(key).is_number())
                    fail(key, "expected a number");
                const double v = j.at(key).get<double>();
                if (!std::isfinite(v))
                    fail(key, "must be finite");
                return v;
            }

            double positive(const char *key, double fallback) const
            {
                const double v = number(key, fallback);
                if (!(v > 0.0))
                    fail(key, "must be positive");
                return v;
            }

            double non_negative(const char *key, double fallback) const
            {
                const double v = number(key, fallback);
                if (v < 0.0)
                    fail(key, "must be non-negative");
                return v;
            }

            int count(const char *key, int fallback) const
            {
                if (!j.contains(key))
                    return fallback;
                if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < 1)
                    fail(key, "expected a positive integer");
                return j.at(key).get<int>();
            }

            std::vector<double> numbers(const nlohmann::json &a, const std::string &key, std::size_t n) const
            {
                if (!a.is_array() || a.size() != n)
                    fail(key, "expected an array of " + std::to_string(n) + " numbers");
                std::vector<double> out;
                for (const auto &e : a)
                {
                    if (!e.is_number())
                        fail(key, "expected numbers");
                    out.push_back(e.get<double>());
                }
                return out;
            }
        };
    } // namespace detail

    // Scenario overrides; absent fields keep the defaults of default_scenario().
    inline ScenarioSpec parse_scenario_spec(const nlohmann::json &doc)
    {
        ScenarioSpec s = default_scenario_spec();
        const detail::JsonReader r{doc, ""};
        r.only({"wavelength_m", "transmit_power_dbm", "noise_power_dbm", "aperture_wavelengths",
                "grid_step_wavelengths", "min_spacing_wavelengths", "ma_cost", "element_cost", "fpa_ratio", "sites",
                "areas"});
        s.wavelength = r.positive("wavelength_m", s.wavelength);
        s.transmit_power_dbm = r.number("transmit_power_dbm", s.transmit_power_dbm);
        s.noise_power_dbm = r.number("noise_power_dbm", s.noise_power_dbm);
        s.aperture = r.positive("aperture_wavelengths", s.aperture);
        s.grid_step = r.positive("grid_step_wavelengths", s.grid_step);
        s.min_spacing = r.positive("min_spacing_wavelengths", s.min_spacing);
        s.costs.ma_cost = r.non_negative("ma_cost", s.costs.ma_cost);
        s.costs.element_cost = r.non_negative("element_cost", s.costs.element_cost);
        s.costs.fpa_ratio = r.positive("fpa_ratio", s.costs.fpa_ratio);

        if (doc.contains("sites"))
        {
            const auto &arr = doc.at("sites");
            if (!arr.is_array() || arr.empty())
                r.fail("sites", "expected a non-empty array");
            s.sites.clear();
            for (std::size_t i = 0; i < arr.size(); ++i)
            {
                const detail::JsonReader e{arr[i], "sites[" + std::to_string(i) + "]."};
                e.only({"position", "orientation", "azimuth_deg", "rows", "cols", "spacing_wavelengths", "install_cost"});
                if (!arr[i].contains("position"))
                    e.fail("position", "required");
                const auto p = e.numbers(arr[i].at("position"), "position", 3);
                PanelOrientation o = PanelOrientation::vertical;
                if (arr[i].contains("orientation"))
                {
                    const auto &v = arr[i].at("orientation");
                    if (v == "horizontal")
                        o = PanelOrientation::horizontal_down;
                    else if (v != "vertical")
                        e.fail("orientation", "expected \"horizontal\" or \"vertical\"");
                }
                const double az = e.number("azimuth_deg", 0.0) * kPi / 180.0;
                s.sites.push_back(make_site(static_cast<int>(i), Vec3(p[0], p[1], p[2]), o, e.count("rows", 5),
                                            e.count("cols", 10), e.positive("spacing_wavelengths", 0.5) * s.wavelength,
                                            e.non_negative("install_cost", 20.0), az));
            }
        }
        else
        {
            // default panels are laid out in half-wavelength steps of the parsed wavelength
            const double half = s.wavelength / 2.0;
            for (IrsSite &site : s.sites)
                site = make_site(site.index, site.reference, site.orientation, site.rows, site.cols, half,
                                 site.install_cost, site.facing_azimuth);
        }

        if (doc.contains("areas"))
        {
            const auto &a = doc.at("areas");
            const detail::JsonReader e{a, "areas."};
            e.only({"count", "extent_m", "resolution_m", "threshold_db", "corners", "box"});
            s.area_count = e.count("count", s.area_count);
            s.area_extent = e.non_negative("extent_m", s.area_extent);
            s.area_resolution = e.positive("resolution_m", s.area_resolution);
            s.threshold_db = e.number("threshold_db", s.threshold_db);
            if (a.contains("corners"))
            {
                if (!a.at("corners").is_array())
                    e.fail("corners", "expected an array of [x, y] pairs");
                for (const auto &c : a.at("corners"))
                {
                    const auto xy = e.numbers(c, "corners", 2);
                    s.corners.emplace_back(xy[0], xy[1], 0.0);
                }
                if (!a.contains("count"))
                    s.area_count = static_cast<int>(s.corners.size());
            }
            if (a.contains("box"))
            {
                const detail::JsonReader b{a.at("box"), "areas.box."};
                b.only({"x", "y"});
                if (a.at("box").contains("x"))
                {
                    const auto x = b.numbers(a.at("box").at("x"), "x", 2);
                    s.box.x_lo = x[0];
                    s.box.x_hi = x[1];
                }
                if (a.at("box").contains("y"))
                {
                    const auto y = b.numbers(a.at("box").at("y"), "y", 2);
                    s.box.y_lo = y[0];
                    s.box.y_hi = y[1];
                }
            }
        }
        return s;
    }

    inline ScenarioSpec load_scenario_spec(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw SchemaError("cannot open scenario file '" + path + "'");
        nlohmann::json doc;
        try
        {
            doc = nlohmann::json::parse(in);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw SchemaError("scenario file '" + path + "': " + e.what());
        }
        return parse_scenario_spec(doc);
    }

    // Scenario from a file. Areas without fixed corners use the two default placements when
    // there are two of them, otherwise a placement drawn with seed 0.
    inline Scenario parse_scenario(const std::string &path)
    {
        ScenarioSpec s = load_scenario_spec(path);
        if (s.corners.empty() && s.area_count == 2)
            for (const TargetArea &a : default_scenario().areas)
                s.corners.push_back(a.corner);
        std::mt19937_64 rng(0);
        return s.build(&rng);
    }

    // ---------------------------------------------------------------------------------

    enum class SweepAxis
    {
        none,
        ma_cost,
        aperture,
        areas,
        threshold,
        grid_step,
        budget
    };

    inline std::string to_string(SweepAxis a)
    {
        switch (a)
        {
        case SweepAxis::none: return "none";
        case SweepAxis::ma_cost: return "c_MA";
        case SweepAxis::aperture: return "A";
        case SweepAxis::areas: return "J";
        case SweepAxis::threshold: return "gamma";
        case SweepAxis::grid_step: return "d";
        case SweepAxis::budget: return "budget";
        }
        return "none";
    }

    inline SweepAxis parse_axis(const std::string &name)
    {
        for (SweepAxis a : {SweepAxis::ma_cost, SweepAxis::aperture, SweepAxis::areas, SweepAxis::threshold,
                            SweepAxis::grid_step, SweepAxis::budget})
            if (name == to_string(a))
                return a;
        if (name == "γ")
            return SweepAxis::threshold;
        throw SchemaError("unknown sweep axis '" + name + "' (expected c_MA, A, J, gamma, d or budget)");
    }

    // Accepts plain numbers and fractions such as 1/3.
    inline double parse_value(const std::string &text)
    {
        auto number = [&](const std::string &t) {
            std::size_t used = 0;
            double v = 0.0;
            try
            {
                v = std::stod(t, &used);
            }
            catch (const std::exception &)
            {
                throw SchemaError("sweep value '" + text + "' is not a number");
            }
            if (used != t.size())
                throw SchemaError("sweep value '" + text + "' is not a number");
            return v;
        };
        const auto slash = text.find('/');
        const double v = slash == std::string::npos ? number(text)
                                                    : number(text.substr(0, slash)) / number(text.substr(slash + 1));
        if (!std::isfinite(v))
            throw SchemaError("sweep value '" + text + "' is not finite");
        return v;
    }

    enum class Command
    {
        feasibility,
        costmin,
        prune,
        baseline,
        budget,
        sweep
    };

    struct ExperimentSpec
    {
        Command command = Command::costmin;
        std::string baseline;  // union | all_irs | fpa_irs
        SweepAxis axis = SweepAxis::none;
        std::vector<double> values;
        int trials = 1;
        std::uint64_t seed = 1;
        int jobs = 1;
        bool timing = false;
        bool keep_plans = false;
        std::string scenario_path;
    };

    inline std::string command_name(const ExperimentSpec &e)
    {
        switch (e.command)
        {
        case Command::feasibility: return "feasibility";
        case Command::costmin: return "costmin";
        case Command::prune: return "prune";
        case Command::baseline: return "baseline:" + e.baseline;
        case Command::budget: return "budget";
        case Command::sweep: return "sweep";
        }
        return "";
    }

    inline void parse_command(const std::string &text, ExperimentSpec &e)
    {
        if (text == "feasibility")
            e.command = Command::feasibility;
        else if (text == "costmin")
            e.command = Command::costmin;
        else if (text == "prune")
            e.command = Command::prune;
        else if (text == "budget")
            e.command = Command::budget;
        else if (text == "sweep")
            e.command = Command::sweep;
        else if (text.rfind("baseline:", 0) == 0)
        {
            e.command = Command::baseline;
            e.baseline = text.substr(9);
            if (e.baseline != "union" && e.baseline != "all_irs" && e.baseline != "fpa_irs")
                throw SchemaError("unknown baseline '" + e.baseline + "' (expected union, all_irs or fpa_irs)");
        }
        else
            throw SchemaError("unknown command '" + text + "'");
    }

    // Parses "axis=v1,v2,...". Values are sorted.
    inline void parse_sweep(const std::string &text, ExperimentSpec &e)
    {
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw SchemaError("sweep must look like axis=v1,v2,...");
        e.axis = parse_axis(text.substr(0, eq));
        e.values.clear();
        std::stringstream ss(text.substr(eq + 1));
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty())
                e.values.push_back(parse_value(item));
        if (e.values.empty())
            throw SchemaError("sweep needs at least one value");
        std::sort(e.values.begin(), e.values.end());
    }

    inline void validate(const ExperimentSpec &e)
    {
        if (e.trials < 1)
            throw SchemaError("trials must be at least 1");
        if (e.jobs < 1)
            throw SchemaError("jobs must be at least 1");
        if (e.command == Command::budget && e.axis != SweepAxis::budget)
            throw SchemaError("the budget command needs --sweep budget=...");
        if (e.command != Command::budget && e.axis == SweepAxis::budget)
            throw SchemaError("the budget axis applies to the budget command only");
        for (double v : e.values)
        {
            if (e.axis == SweepAxis::areas && (v < 1 || v != std::floor(v)))
                throw SchemaError("J values must be positive integers");
            if ((e.axis == SweepAxis::aperture || e.axis == SweepAxis::grid_step) && !(v > 0))
                throw SchemaError("A and d values must be positive");
            if ((e.axis == SweepAxis::ma_cost || e.axis == SweepAxis::budget) && v < 0)
                throw SchemaError("c_MA and budget values must be non-negative");
        }
    }

    // ---------------------------------------------------------------------------------

    struct ResultRow
    {
        std::string axis = "none";
        double value = 0;
        int trial = 0;
        std::uint64_t seed = 0;
        std::string scheme;
        std::string status;
        double cost = std::nan("");
        double worst_snr_db = std::nan("");
        int ma_count = 0;
        int site_count = 0;
        int element_count = 0;
        int m_max = 0;
        std::string audit = "none"; // pass | fail | none
        double wall_seconds = std::nan("");
        nlohmann::json plan;        // structured output only

        bool failed() const { return status.rfind("error", 0) == 0 || audit == "fail"; }
    };

    // Binaries, phases in radians, cost breakdown and per-sample SNR margins in dB.
    inline nlohmann::json plan_json(const Scenario &sc, const SchemeResult &r, const AuditReport &audit)
    {
        const DeploymentSolution &s = r.solution;
        nlohmann::json p;
        p["z"] = std::vector<int>(s.z.size());
        for (int l = 0; l < s.z.size(); ++l)
            p["z"][l] = s.z(l) > 0.5 ? 1 : 0;
        p["x"] = nlohmann::json::array();
        for (int j = 0; j < s.x.cols(); ++j)
        {
            std::vector<int> col(s.x.rows());
            for (int m = 0; m < s.x.rows(); ++m)
                col[m] = s.x(m, j) > 0.5 ? 1 : 0;
            p["x"].push_back(col);
        }
        p["phases_rad"] = nlohmann::json::array();
        for (const CVec &v : s.phases)
        {
            std::vector<double> a(v.size());
            for (int n = 0; n < v.size(); ++n)
                a[n] = std::arg(v(n));
            p["phases_rad"].push_back(a);
        }
        if (s.y.size() > 0)
        {
            p["installed"] = nlohmann::json::array();
            for (int l = 0; l < sc.num_sites(); ++l)
            {
                std::string bits;
                for (int n = 0; n < sc.sites[l].max_elements(); ++n)
                    bits += s.y(sc.element_offset(l) + n) > 0.5 ? '1' : '0';
                p["installed"].push_back(bits);
            }
        }
        p["cost"] = {{"ma_term", r.cost.ma_term}, {"site_terms", r.cost.site_terms}, {"total", r.cost.total}};
        p["snr_margin_db"] = nlohmann::json::array();
        for (int j = 0; j < static_cast<int>(audit.snr.size()); ++j)
        {
            std::vector<double> m(audit.snr[j].size());
            for (int k = 0; k < audit.snr[j].size(); ++k)
                m[k] = linear_to_db(audit.snr[j](k) / sc.areas[j].threshold);
            p["snr_margin_db"].push_back(m);
        }
        return p;
    }

    namespace detail
    {
        inline void apply_axis(ScenarioSpec &s, SweepAxis axis, double v)
        {
            switch (axis)
            {
            case SweepAxis::ma_cost: s.costs.ma_cost = v; break;
            case SweepAxis::aperture: s.aperture = v; break;
            case SweepAxis::areas:
                s.area_count = static_cast<int>(v);
                s.corners.clear();
                break;
            case SweepAxis::threshold: s.threshold_db = v; break;
            case SweepAxis::grid_step: s.grid_step = v; break;
            case SweepAxis::none:
            case SweepAxis::budget: break;
            }
        }

        inline std::uint64_t trial_seed(std::uint64_t seed, int trial)
        {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(trial)};
            std::array<std::uint32_t, 2> out{};
            seq.generate(out.begin(), out.end());
            return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        }

        struct TrialContext
        {
            const ExperimentSpec *spec;
            int trial;
            std::uint64_t seed;
            SolverConfig cfg;
        };

        inline ResultRow row_from(const TrialContext &t, double value, const Scenario &sc, const SchemeResult &r,
                                  bool keep_plan)
        {
            ResultRow row;
            row.axis = to_string(t.spec->axis);
            row.value = value;
            row.trial = t.trial;
            row.seed = t.seed;
            row.scheme = r.scheme;
            row.status = !r.feasible ? "infeasible" : (r.status.empty() ? "ok" : r.status);
            row.m_max = sc.m_max;
            if (r.solution.z.size() == 0 || (!r.feasible && r.solution.z.sum() < 0.5))
                return row;
            row.cost = r.cost.total;
            row.worst_snr_db = r.worst_db();
            row.ma_count = r.solution.max_ma_count();
            row.site_count = r.sites;
            row.element_count = r.elements;
            // budget plans promise affordability, not the thresholds
            const bool budgeted = t.spec->command == Command::budget;
            const AuditReport a = audit_solution(sc, r.solution, kAuditTolerance, r.feasible && !budgeted);
            const bool affordable = !budgeted || r.cost.total <= value * (1.0 + 1e-12) + 1e-9;
            row.audit = a.passed() && affordable ? "pass" : "fail";
            if (keep_plan)
                row.plan = plan_json(sc, r, a);
            return row;
        }

        // Rows of one (trial, value) cell. Budget cells chain incumbents through `carry`.
        inline std::vector<ResultRow> run_cell(const TrialContext &t, const ScenarioSpec &base, double value,
                                               std::vector<SchemeResult> &carry)
        {
            const ExperimentSpec &e = *t.spec;
            ScenarioSpec s = base;
            detail::apply_axis(s, e.axis, value);
            std::mt19937_64 rng(t.seed);
            const Scenario sc = s.build(&rng);
            const ChannelSet cs = build_channels(sc);
            const SolverConfig &cfg = t.cfg;
            std::vector<ResultRow> rows;
            auto add = [&](const SchemeResult &r) { rows.push_back(row_from(t, value, sc, r, e.keep_plans)); };

            switch (e.command)
            {
            case Command::feasibility:
            {
                const FeasibilityReport rep = run_feasibility(sc, cs, cfg);
                DeploymentSolution sol = rep.solution(sc);
                SchemeResult r = scheme_result("feasibility", sc, cs, sol, sc.costs.ma_cost, rep.feasible,
                                               rep.feasible ? "ok" : "infeasible");
                r.floor = rep.eta;
                add(r);
                break;
            }
            case Command::costmin:
            case Command::prune:
            case Command::sweep:
            {
                const Plan joint = plan_joint(sc, cs, cfg);
                add(scheme_result("joint", sc, cs, joint));
                if (e.command != Command::costmin)
                {
                    if (joint.feasible)
                        add(scheme_result("pruned", sc, cs, run_pruning(sc, cs, joint, cfg)));
                    else
                        add(infeasible_scheme("pruned", sc.costs.ma_cost, "infeasible"));
                }
                if (e.command == Command::sweep)
                {
                    add(per_area_union(sc, cs, cfg));
                    add(all_irs(sc, cs, cfg));
                    add(fpa_irs(sc, cs, sc.costs.fpa_ratio, cfg));
                }
                break;
            }
            case Command::baseline:
                if (e.baseline == "union")
                    add(per_area_union(sc, cs, cfg));
                else if (e.baseline == "all_irs")
                    add(all_irs(sc, cs, cfg));
                else
                    add(fpa_irs(sc, cs, sc.costs.fpa_ratio, cfg));
                break;
            case Command::budget:
            {
                carry.resize(2);
                BudgetOptions ma;
                if (carry[0].feasible)
                    ma.incumbent = &carry[0];
                SchemeResult rm = budget_snr_max(sc, cs, value, cfg, ma);
                BudgetOptions fpa;
                fpa.fixed_x = packed_occupancy(sc);
                fpa.ma_unit_cost = sc.costs.fpa_ratio * sc.costs.ma_cost;
                if (carry[1].feasible)
                    fpa.incumbent = &carry[1];
                SchemeResult rf = budget_snr_max(sc, cs, value, cfg, fpa);
                add(rm);
                add(rf);
                if (rm.feasible)
                    carry[0] = rm;
                if (rf.feasible)
                    carry[1] = rf;
                break;
            }
            }
            return rows;
        }
    } // namespace detail

    // Runs every (value, trial) cell; trials run concurrently up to spec.jobs. Rows come back
    // ordered by (value, trial, scheme order). Failures become rows with an error status.
    inline std::vector<ResultRow> run_experiment(const ExperimentSpec &spec, const ScenarioSpec &base,
                                                 const SolverConfig &cfg = {})
    {
        validate(spec);
        const std::vector<double> values = spec.axis == SweepAxis::none ? std::vector<double>{0.0} : spec.values;
        std::vector<std::vector<std::vector<ResultRow>>> cells(values.size(),
                                                              std::vector<std::vector<ResultRow>>(spec.trials));
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int t = next++; t < spec.trials; t = next++)
            {
                detail::TrialContext ctx{&spec, t, detail::trial_seed(spec.seed, t), cfg};
                std::vector<SchemeResult> carry;
                for (std::size_t i = 0; i < values.size(); ++i)
                {
                    const auto start = std::chrono::steady_clock::now();
                    try
                    {
                        cells[i][t] = detail::run_cell(ctx, base, values[i], carry);
                    }
                    catch (const std::exception &ex)
                    {
                        ResultRow row;
                        row.axis = to_string(spec.axis);
                        row.value = values[i];
                        row.trial = t;
                        row.seed = ctx.seed;
                        row.scheme = command_name(spec);
                        row.status = std::string("error: ") + ex.what();
                        cells[i][t] = {row};
                    }
                    if (spec.timing)
                    {
                        const double secs =
                            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                        for (ResultRow &r : cells[i][t])
                            r.wall_seconds = secs;
                    }
                }
            }
        };
        const int n = std::min(spec.jobs, spec.trials);
        std::vector<std::thread> pool;
        for (int k = 1; k < n; ++k)
            pool.emplace_back(worker);
        worker();
        for (std::thread &th : pool)
            th.join();

        std::vector<ResultRow> rows;
        for (auto &per_value : cells)
            for (auto &cell : per_value)
                for (ResultRow &r : cell)
                    rows.push_back(std::move(r));
        return rows;
    }

    // ---------------------------------------------------------------------------------
    // Output.

    enum class OutputFormat
    {
        csv,
        structured
    };

    inline OutputFormat parse_format(const std::string &s)
    {
        if (s == "csv")
            return OutputFormat::csv;
        if (s == "structured" || s == "json")
            return OutputFormat::structured;
        throw SchemaError("unknown output format '" + s + "' (expected csv or structured)");
    }

    namespace detail
    {
        inline std::string fixed(double v, int digits)
        {
            if (std::isnan(v))
                return "nan";
            if (std::isinf(v))
                return v > 0 ? "inf" : "-inf";
            std::ostringstream o;
            o << std::fixed << std::setprecision(digits) << v;
            std::string s = o.str();
            if (s == "-0.00" || s == "-0.0000")
                s.erase(0, 1);
            return s;
        }

        inline std::string value_text(double v) { return fixed(v, 4); }

        inline nlohmann::json number_or_null(double v, int digits)
        {
            if (!std::isfinite(v))
                return nullptr;
            return nlohmann::json::parse(fixed(v, digits));
        }

        inline double from_json(const nlohmann::json &j)
        {
            return j.is_null() ? std::nan("") : j.get<double>();
        }
    } // namespace detail

    struct ExperimentMeta
    {
        std::string command;
        std::string axis = "none";
        int trials = 1;
        std::uint64_t seed = 1;
    };

    inline ExperimentMeta meta_of(const ExperimentSpec &e)
    {
        return {command_name(e), to_string(e.axis), e.trials, e.seed};
    }

    inline std::string to_csv(const std::vector<ResultRow> &rows, bool timing)
    {
        std::ostringstream o;
        o << "axis,value,trial,seed,scheme,status,cost,worst_snr_db,ma_count,site_count,element_count,m_max,audit";
        if (timing)
            o << ",wall_s";
        o << "\n";
        for (const ResultRow &r : rows)
        {
            std::string status = r.status;
            std::replace(status.begin(), status.end(), ',', ';');
            std::replace(status.begin(), status.end(), '\n', ' ');
            o << r.axis << ',' << detail::value_text(r.value) << ',' << r.trial << ',' << r.seed << ',' << r.scheme << ','
              << status << ',' << detail::fixed(r.cost, 2) << ',' << detail::fixed(r.worst_snr_db, 2) << ','
              << r.ma_count << ',' << r.site_count << ',' << r.element_count << ',' << r.m_max << ',' << r.audit;
            if (timing)
                o << ',' << detail::fixed(r.wall_seconds, 3);
            o << "\n";
        }
        return o.str();
    }

    inline nlohmann::json to_structured(const std::vector<ResultRow> &rows, const ExperimentMeta &meta, bool timing)
    {
        nlohmann::json doc;
        doc["meta"] = {{"command", meta.command}, {"axis", meta.axis}, {"trials", meta.trials}, {"seed", meta.seed}};
        doc["rows"] = nlohmann::json::array();
        for (const ResultRow &r : rows)
        {
            nlohmann::json j = {{"axis", r.axis},
                                {"value", detail::number_or_null(r.value, 4)},
                                {"trial", r.trial},
                                {"seed", r.seed},
                                {"scheme", r.scheme},
                                {"status", r.status},
                                {"cost", detail::number_or_null(r.cost, 2)},
                                {"worst_snr_db", detail::number_or_null(r.worst_snr_db, 2)},
                                {"ma_count", r.ma_count},
                                {"site_count", r.site_count},
                                {"element_count", r.element_count},
                                {"m_max", r.m_max},
                                {"audit", r.audit}};
            if (timing)
                j["wall_s"] = detail::number_or_null(r.wall_seconds, 3);
            if (!r.plan.is_null())
                j["plan"] = r.plan;
            doc["rows"].push_back(std::move(j));
        }
        return doc;
    }

    inline std::vector<ResultRow> parse_structured(const nlohmann::json &doc, ExperimentMeta *meta = nullptr)
    {
        if (!doc.is_object() || !doc.contains("rows") || !doc.at("rows").is_array())
            throw SchemaError("structured results: missing rows array");
        if (meta && doc.contains("meta"))
        {
            const auto &m = doc.at("meta");
            meta->command = m.value("command", "");
            meta->axis = m.value("axis", "none");
            meta->trials = m.value("trials", 1);
            meta->seed = m.value("seed", std::uint64_t{1});
        }
        std::vector<ResultRow> rows;
        for (const auto &j : doc.at("rows"))
        {
            ResultRow r;
            r.axis = j.at("axis").get<std::string>();
            r.value = detail::from_json(j.at("value"));
            r.trial = j.at("trial").get<int>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.scheme = j.at("scheme").get<std::string>();
            r.status = j.at("status").get<std::string>();
            r.cost = detail::from_json(j.at("cost"));
            r.worst_snr_db = detail::from_json(j.at("worst_snr_db"));
            r.ma_count = j.at("ma_count").get<int>();
            r.site_count = j.at("site_count").get<int>();
            r.element_count = j.at("element_count").get<int>();
            r.m_max = j.at("m_max").get<int>();
            r.audit = j.at("audit").get<std::string>();
            if (j.contains("wall_s"))
                r.wall_seconds = detail::from_json(j.at("wall_s"));
            if (j.contains("plan"))
                r.plan = j.at("plan");
            rows.push_back(std::move(r));
        }
        return rows;
    }

    inline std::string emit_text(const std::vector<ResultRow> &rows, OutputFormat format, const ExperimentMeta &meta,
                                 bool timing)
    {
        if (rows.empty())
            throw SchemaError("no result rows to write");
        if (format == OutputFormat::csv)
            return to_csv(rows, timing);
        return to_structured(rows, meta, timing).dump(1) + "\n";
    }

    // Writes rows to `path` ("-" for standard output).
    inline void emit(const std::vector<ResultRow> &rows, const std::string &path, OutputFormat format,
                     const ExperimentMeta &meta, bool timing = false)
    {
        const std::string text = emit_text(rows, format, meta, timing);
        if (path == "-")
        {
            std::fwrite(text.data(), 1, text.size(), stdout);
            std::fflush(stdout);
            return;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open output file '" + path + "'");
        out << text;
        if (!out)
            throw std::runtime_error("write failed for output file '" + path + "'");
    }

} // namespace irsma

#endif // IRSMA_EXPERIMENT_HPP
