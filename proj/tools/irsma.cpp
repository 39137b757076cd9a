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

// Command-line front end. Exit status: 0 success, 1 bad input, 2 some rows failed.

#include <irsma/experiment.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv)
{
    CLI::App app{"Joint IRS site selection, movable-antenna placement and phase planning"};
    std::string command;
    std::string scenario;
    std::string sweep;
    std::string out = "-";
    std::string format = "csv";
    int trials = 1;
    std::uint64_t seed = 1;
    int jobs = 1;
    bool timing = false;
    bool no_plans = false;

    app.add_option("command", command,
                   "feasibility | costmin | prune | baseline:union | baseline:all_irs | baseline:fpa_irs | budget | sweep")
        ->required();
    app.add_option("--scenario", scenario, "scenario file (JSON); built-in defaults when omitted");
    app.add_option("--sweep", sweep, "axis=v1,v2,... with axis one of c_MA, A, J, gamma, d, budget");
    app.add_option("--trials", trials, "random area placements per sweep value")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "base seed");
    app.add_option("--out", out, "output file, - for standard output");
    app.add_option("--format", format, "csv | structured");
    app.add_option("--jobs", jobs, "trials run in parallel")->check(CLI::PositiveNumber);
    app.add_flag("--timing", timing, "add wall-clock seconds per row");
    app.add_flag("--no-plans", no_plans, "omit plan details from structured output");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    irsma::ExperimentSpec spec;
    irsma::ScenarioSpec base;
    irsma::OutputFormat fmt;
    try
    {
        irsma::parse_command(command, spec);
        if (!sweep.empty())
            irsma::parse_sweep(sweep, spec);
        spec.trials = trials;
        spec.seed = seed;
        spec.jobs = jobs;
        spec.timing = timing;
        spec.scenario_path = scenario;
        fmt = irsma::parse_format(format);
        spec.keep_plans = fmt == irsma::OutputFormat::structured && !no_plans;
        base = scenario.empty() ? irsma::default_scenario_spec() : irsma::load_scenario_spec(scenario);
        irsma::validate(spec);
        std::mt19937_64 probe(0);
        (void)base.build(&probe); // geometry errors surface before any solve
    }
    catch (const std::exception &e)
    {
        std::cerr << "irsma: " << e.what() << "\n";
        return 1;
    }

    std::vector<irsma::ResultRow> rows;
    try
    {
        rows = irsma::run_experiment(spec, base);
        irsma::emit(rows, out, fmt, irsma::meta_of(spec), timing);
    }
    catch (const std::exception &e)
    {
        std::cerr << "irsma: " << e.what() << "\n";
        return 1;
    }

    int failed = 0;
    for (const irsma::ResultRow &r : rows)
        if (r.failed())
        {
            ++failed;
            std::cerr << "irsma: " << r.scheme << " value " << r.value << " trial " << r.trial << ": " << r.status
                      << " (audit " << r.audit << ")\n";
        }
    return failed > 0 ? 2 : 0;
}
