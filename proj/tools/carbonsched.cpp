#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "carbonsched/manifest.hpp"

using namespace carbonsched::cli;

int main(int argc, char** argv) {
    CLI::App app{"Carbon-aware VM scheduling across regions and time slots", "carbonsched"};
    app.set_version_flag("--version", carbonsched::kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "RNG seed, overrides the config");
    app.add_option("--jobs", g.jobs, "Parallel batch workers")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output file or directory");

    IngestArgs ingest;
    auto* ci = app.add_subcommand("ingest", "Normalize a raw carbon-intensity CSV into a dataset directory");
    ci->add_option("--region", ingest.region, "Region code")->required();
    ci->add_option("--csv", ingest.csv, "Raw CSV file")->required()->check(CLI::ExistingFile);
    ci->add_option("--ts-col", ingest.ts_col, "Timestamp column")->capture_default_str();
    ci->add_option("--ci-col", ingest.ci_col, "Intensity column")->capture_default_str();
    ci->add_option("--max-gap", ingest.max_gap_hours, "Longest gap to interpolate, hours")->capture_default_str();

    ForecastArgs fc;
    auto* cf = app.add_subcommand("forecast", "Build a rolling forecast store for a dataset");
    cf->add_option("--dataset", fc.dataset, "Dataset directory (default: $CARBON_SCHED_DATA)");
    cf->add_option("--method", fc.method, "persistence, seasonal-naive, moving-average or perfect")
        ->check(CLI::IsMember({"persistence", "seasonal-naive", "seasonal_naive", "moving-average", "moving_average",
                               "perfect"}))
        ->capture_default_str();
    cf->add_option("--period", fc.period, "Seasonal period, slots")->check(CLI::PositiveNumber)->capture_default_str();
    cf->add_option("--window", fc.window, "Moving-average window, slots")->check(CLI::PositiveNumber)->capture_default_str();
    cf->add_option("--horizon", fc.horizon, "Forecast horizon, slots")->check(CLI::PositiveNumber)->capture_default_str();
    cf->add_option("--every", fc.every, "Issue cadence, slots")->check(CLI::PositiveNumber)->capture_default_str();
    cf->add_option("--context", fc.context, "Context length, slots")->check(CLI::PositiveNumber)->capture_default_str();
    cf->add_option("--region", fc.regions, "Restrict to these regions");

    RunArgs run;
    auto* cr = app.add_subcommand("run", "Run an experiment config and write reports");
    cr->add_option("--config", run.config, "Experiment config")->required();

    ReportArgs report;
    auto* cp = app.add_subcommand("report", "Merge report JSON files into comparison tables");
    cp->add_option("reports", report.reports, "Report JSON files")->required()->check(CLI::ExistingFile);
    cp->add_option("--tables", report.tables, "Directory for per-region and delay tables");

    ValidateArgs validate;
    auto* cv = app.add_subcommand("validate", "Check an experiment config and its inputs");
    cv->add_option("--config", validate.config, "Experiment config")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
        return kUsage;
    }

    if (*ci) return cmd_ingest(g, ingest);
    if (*cf) return cmd_forecast(g, fc);
    if (*cr) return cmd_run(g, run);
    if (*cp) return cmd_report(g, report);
    if (*cv) return cmd_validate(g, validate);
    return kUsage;
}
