#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "carbonsched/carbon_data.hpp"
#include "carbonsched/csv.hpp"
#include "carbonsched/forecaster.hpp"

using namespace carbonsched;
namespace fs = std::filesystem;

namespace {

const fs::path kPresets = fs::path(CARBONSCHED_SOURCE_DIR) / "presets";

struct Result {
    int code;
    std::string out, err;
};

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("carbonsched_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Result run(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = "env -u CARBON_SCHED_DATA " + std::string(CARBONSCHED_BIN) + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
}

std::string raw_csv(std::size_t hours) {
    std::string s = "datetime,carbon_intensity_avg\n";
    for (std::size_t h = 0; h < hours; ++h)
        s += format_iso8601(1651536000 + static_cast<UnixSeconds>(h) * 3600) + "," +
             std::to_string(200 + static_cast<int>((h * 37) % 90)) + "\n";
    return s;
}

}  // namespace

TEST_CASE("ingest writes the series and index, deterministically") {
    const auto dir = scratch("ingest");
    write_file(dir / "it.csv", raw_csv(48));
    auto r = run("ingest --region IT-NO --csv " + (dir / "it.csv").string() + " --out " + (dir / "data").string(), dir);
    CHECK(r.code == 0);
    REQUIRE(fs::exists(dir / "data/IT-NO.csv"));
    CHECK(read_file(dir / "data/index.csv").find("IT-NO,IT-NO.csv") != std::string::npos);
    const auto first = read_file(dir / "data/IT-NO.csv");
    CHECK(ingest_carbon_csv(dir / "data/IT-NO.csv", RegionId("IT-NO")).size() == 48);

    r = run("--out " + (dir / "data").string() + " ingest --region IT-NO --csv " + (dir / "it.csv").string(), dir);
    CHECK(r.code == 0);
    CHECK(read_file(dir / "data/IT-NO.csv") == first);

    write_file(dir / "bad.csv", "datetime,carbon_intensity_avg\n2022-05-03T00:00:00Z,100\nnot-a-time,5\n");
    r = run("ingest --region X --csv " + (dir / "bad.csv").string() + " --out " + (dir / "data").string(), dir);
    CHECK(r.code != 0);
    CHECK(r.out.empty());
    CHECK(r.err.find("bad.csv:3") != std::string::npos);

    r = run("ingest --region X --csv " + (dir / "it.csv").string(), dir);
    CHECK(r.code == 2);
}

TEST_CASE("forecast builds stores and validates the horizon") {
    const auto dir = scratch("forecast");
    write_file(dir / "de.csv", raw_csv(1100));
    REQUIRE(run("ingest --region DE --csv " + (dir / "de.csv").string() + " --out " + (dir / "data").string(), dir).code == 0);

    auto r = run("--out " + (dir / "sn.csv").string() + " forecast --dataset " + (dir / "data").string() +
                     " --method seasonal-naive --period 24 --horizon 96 --every 24",
                 dir);
    CHECK(r.code == 0);
    const auto sn = ForecastStore::read_csv(dir / "sn.csv");
    CHECK(sn.size() == 4);
    for (const auto& f : sn.by_region().at(RegionId("DE"))) CHECK(f.values.size() == 96);

    r = run("--out " + (dir / "perfect.csv").string() + " forecast --dataset " + (dir / "data").string() +
                " --method perfect",
            dir);
    CHECK(r.code == 0);
    const auto series = ingest_carbon_csv(dir / "data/DE.csv", RegionId("DE"));
    const auto perfect = ForecastStore::read_csv(dir / "perfect.csv");
    CHECK(perfect.size() == 1100 - 1024);
    for (const auto& f : perfect.by_region().at(RegionId("DE")))
        CHECK(f.values == slice(series, f.issue_slot, f.values.size()));

    r = run("forecast --dataset " + (dir / "data").string() + " --horizon 0", dir);
    CHECK(r.code == 2);
    CHECK(!r.err.empty());

    r = run("forecast --dataset " + (dir / "data").string() + " --context 5000", dir);
    CHECK(r.code == 1);
}

TEST_CASE("run is reproducible and writes every artifact") {
    const auto dir = scratch("run");
    const std::string cfg = (kPresets / "desk_subset_m50.toml").string();
    REQUIRE(run("--out " + (dir / "a").string() + " run --config " + cfg, dir).code == 0);
    REQUIRE(run("--out " + (dir / "b").string() + " --jobs 2 run --config " + cfg, dir).code == 0);
    for (const char* f : {"report.json", "report.csv", "regions.csv", "manifest.json",
                          "decisions/all_m50_dl24_ideal.csv", "delays/all_m50_dl24_forecast.csv",
                          "unschedulable/all_m50_dl24_ideal.csv"}) {
        REQUIRE(fs::exists(dir / "a" / f));
        CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
    }
    CHECK(read_file(dir / "a/report.csv").rfind("policy,m_per_region,deadline_margin_hours,mode,total_gco2,baseline_gco2,reduction_pct", 0) == 0);

    REQUIRE(run("--out " + (dir / "c").string() + " --seed 7 run --config " + cfg, dir).code == 0);
    CHECK(read_file(dir / "c/manifest.json").find("\"seed\": 7") != std::string::npos);
    CHECK(read_file(dir / "c/report.json") != read_file(dir / "a/report.json"));
}

TEST_CASE("validate lists all problems at once") {
    const auto dir = scratch("validate");
    CHECK(run("validate --config " + (kPresets / "desk_default.toml").string(), dir).code == 0);

    write_file(dir / "bad.toml",
               "policy_file = [\"nope.toml\", \"" + (kPresets / "policies/gdpr.toml").string() +
                   "\"]\nregions_dir = \"/nonexistent\"\ntraces = \"missing.csv\"\n");
    auto r = run("validate --config " + (dir / "bad.toml").string(), dir);
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK(r.err.find("nope.toml") != std::string::npos);
    CHECK(r.err.find("/nonexistent") != std::string::npos);
    CHECK(r.err.find("missing.csv") != std::string::npos);

    write_file(dir / "typo.toml", "batchez = 3\nmode = \"sideways\"\n");
    r = run("validate --config " + (dir / "typo.toml").string(), dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("batchez") != std::string::npos);
    CHECK(r.err.find("sideways") != std::string::npos);

    CHECK(run("run --config " + (dir / "bad.toml").string(), dir).code == 1);
}

TEST_CASE("report merges runs into comparison tables") {
    const auto dir = scratch("report");
    const std::string policy = (kPresets / "synthetic/all.toml").string();
    const std::string common = "policy_file = \"" + policy + "\"\nsynthetic_regions = 4\nbatches = 2\nbatch_size = 30\n" +
                               "m_per_region = 10\ndeadline_margin_hours = 12\n";
    write_file(dir / "baseline.toml", common + "name = \"baseline\"\nmode = \"round_robin\"\n");
    write_file(dir / "optimized.toml", common + "name = \"optimized\"\nmode = \"ideal\"\n");
    REQUIRE(run("--out " + (dir / "base").string() + " run --config " + (dir / "baseline.toml").string(), dir).code == 0);
    REQUIRE(run("--out " + (dir / "opt").string() + " run --config " + (dir / "optimized.toml").string(), dir).code == 0);
    fs::copy_file(dir / "base/report.json", dir / "baseline.json");
    fs::copy_file(dir / "opt/report.json", dir / "optimized.json");

    auto r = run("report " + (dir / "baseline.json").string() + " " + (dir / "optimized.json").string() + " --tables " +
                     (dir / "tables").string(),
                 dir);
    CHECK(r.code == 0);
    const auto table = CsvTable::parse(r.out, "stdout");
    REQUIRE(table.rows().size() == 2);
    const auto col = table.column("reduction_pct");
    CHECK(parse_double(table.rows()[0].fields[col]).value() == 0);
    const double reduction = parse_double(table.rows()[1].fields[col]).value();
    CHECK(reduction > 0);
    const auto own = CsvTable::read(dir / "opt/report.csv");
    CHECK(reduction == doctest::Approx(parse_double(own.rows()[0].fields[own.column("reduction_pct")]).value()).epsilon(1e-12));
    CHECK(fs::exists(dir / "tables/regions.csv"));
    CHECK(fs::exists(dir / "tables/delays.csv"));

    r = run("report " + (dir / "optimized.json").string(), dir);
    CHECK(r.code == 0);
    CHECK(!CsvTable::parse(r.out, "stdout").find_column("reduction_pct"));

    CHECK(run("report", dir).code == 2);

    auto text = read_file(dir / "optimized.json");
    text.replace(text.find("\"schema_version\": 1"), 19, "\"schema_version\": 99");
    write_file(dir / "future.json", text);
    r = run("report " + (dir / "future.json").string(), dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("schema version 99") != std::string::npos);
}
