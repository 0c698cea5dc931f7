#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "carbonsched/policy.hpp"

using namespace carbonsched;

namespace {

std::vector<RegionId> ids(std::initializer_list<const char*> codes) {
    std::vector<RegionId> out;
    for (const char* c : codes) out.emplace_back(c);
    return out;
}

VmRequest vm_from(const char* origin, double ml = std::numeric_limits<double>::infinity()) {
    VmRequest vm;
    vm.id = "vm";
    vm.origin = RegionId(origin);
    vm.max_latency_ms = ml;
    return vm;
}

// The EU list used for data-residency experiments, as grid zone codes.
const char* kMetadata =
    "region,tags\n"
    "IE,eu\nSE-SE3,eu;nordic\nNL,eu\nFR,eu\nDE,eu\nIT-NO,eu\nPL,eu\nES,eu\n"
    "GB,europe\nUS-TEX-ERCO,us\nJP-KN,apac\n";

}  // namespace

TEST_CASE("latency ceiling excludes slow regions") {
    LatencyTable lat;
    lat.set(RegionId("A"), RegionId("B"), 80);
    lat.set(RegionId("A"), RegionId("C"), 20);
    PolicySpec p{"latency", std::nullopt, 50.0, std::nullopt};
    auto out = eligible_regions(vm_from("A"), ids({"A", "B", "C"}), p, lat);
    CHECK(out == ids({"A", "C"}));
}

TEST_CASE("effective ceiling is the minimum of VM and policy limits") {
    LatencyTable lat;
    lat.set(RegionId("A"), RegionId("B"), 30);
    PolicySpec p{"latency", std::nullopt, 50.0, std::nullopt};
    CHECK(eligible_regions(vm_from("A", 25), ids({"A", "B"}), p, lat) == ids({"A"}));
    PolicySpec loose{"subset", ids({"A", "B"}), std::nullopt, std::nullopt};
    CHECK(eligible_regions(vm_from("A", 35), ids({"A", "B"}), loose, lat) == ids({"A", "B"}));
}

TEST_CASE("GDPR tag filter") {
    const auto meta = RegionMetadata::parse_csv(kMetadata, "regions.csv");
    const auto all = ids({"GB", "IE", "US-TEX-ERCO", "SE-SE3", "NL", "FR", "DE", "JP-KN", "IT-NO", "PL", "ES"});
    PolicySpec p{"gdpr", std::nullopt, std::nullopt, "eu"};
    auto out = eligible_regions(vm_from("DE"), all, p, LatencyTable{}, &meta);
    CHECK(out == ids({"IE", "SE-SE3", "NL", "FR", "DE", "IT-NO", "PL", "ES"}));
}

TEST_CASE("allowed list covering everything is the identity") {
    const auto all = ids({"X", "Y", "Z"});
    PolicySpec p{"all", all, std::nullopt, std::nullopt};
    CHECK(eligible_regions(vm_from("X"), all, p, LatencyTable{}) == all);
}

TEST_CASE("errors") {
    LatencyTable lat;
    lat.set(RegionId("A"), RegionId("B"), 10);
    PolicySpec p{"latency", std::nullopt, 50.0, std::nullopt};
    // Missing A -> C entry is a hard error.
    CHECK_THROWS_AS(eligible_regions(vm_from("A"), ids({"A", "B", "C"}), p, lat), PolicyDataError);
    VmRequest no_origin;
    no_origin.id = "x";
    CHECK_THROWS_AS(eligible_regions(no_origin, ids({"A"}), p, lat), PolicyDataError);
    PolicySpec none{"none", ids({"Q"}), std::nullopt, std::nullopt};
    CHECK_THROWS_AS(eligible_regions(vm_from("A"), ids({"A", "B"}), none, lat), NoEligibleRegionError);
    CHECK_THROWS_AS(lat.set(RegionId("A"), RegionId("B"), -1), PolicyDataError);
}

TEST_CASE("policy file parsing") {
    auto p = parse_policy(
        "# evaluated subset\nname = \"subset\"\nallowed_regions = [\"IT-NO\", \"GB\"]\nmax_latency_ms = 50\n"
        "require_tag = \"eu\"\n",
        "p.toml");
    CHECK(p.name == "subset");
    CHECK(*p.allowed_regions == ids({"IT-NO", "GB"}));
    CHECK(*p.max_latency_ms == 50);
    CHECK(*p.require_tag == "eu");

    CHECK_THROWS_AS(parse_policy("name = \"empty\"\n", "p.toml"), PolicyDataError);
    CHECK_THROWS_WITH_AS(parse_policy("name = \"x\"\nbogus = 1\nmax_latency_ms = \"fast\"\n", "p.toml"),
                         doctest::Contains("bogus"), PolicyDataError);

    const auto meta = RegionMetadata::parse_csv(kMetadata, "regions.csv");
    PolicySpec bad{"bad", ids({"IT-NO", "MARS"}), std::nullopt, "antarctica"};
    const auto problems = validate_policy(bad, ids({"IT-NO", "GB"}), &meta);
    CHECK(problems.size() == 2);
}

TEST_CASE("latency table CSV") {
    auto lat = LatencyTable::parse_csv("origin,target,latency_ms\nA,B,12.5\nB,A,13\nA,A,1\n", "lat.csv");
    CHECK(*lat.get(RegionId("A"), RegionId("B")) == 12.5);
    CHECK(*lat.get(RegionId("A"), RegionId("A")) == 1);
    CHECK(*lat.get(RegionId("B"), RegionId("B")) == 0);
    CHECK(!lat.get(RegionId("B"), RegionId("C")));
    CHECK_THROWS_AS(LatencyTable::parse_csv("origin,target,latency_ms\nA,B,-3\n", "lat.csv"), PolicyDataError);
}

TEST_CASE("filtering is a monotone, idempotent, order-preserving subset") {
    std::mt19937_64 gen(5);
    const auto all = ids({"R0", "R1", "R2", "R3", "R4", "R5", "R6", "R7"});
    RegionMetadata meta;
    LatencyTable lat;
    for (const auto& a : all) {
        std::set<std::string> tags;
        if (gen() % 2) tags.insert("eu");
        if (gen() % 3 == 0) tags.insert("green");
        meta.add(a, tags);
        for (const auto& b : all) lat.set(a, b, a == b ? 0.0 : static_cast<double>(gen() % 120));
    }
    auto subset_of = [](const std::vector<RegionId>& small, const std::vector<RegionId>& big) {
        return std::all_of(small.begin(), small.end(),
                           [&](const RegionId& r) { return std::find(big.begin(), big.end(), r) != big.end(); });
    };
    auto run = [&](const VmRequest& vm, const std::vector<RegionId>& pool, const PolicySpec& p) {
        try {
            return eligible_regions(vm, pool, p, lat, &meta);
        } catch (const NoEligibleRegionError&) {
            return std::vector<RegionId>{};
        }
    };
    for (int trial = 0; trial < 500; ++trial) {
        PolicySpec p{"p", std::nullopt, std::nullopt, std::nullopt};
        std::vector<RegionId> allowed;
        for (const auto& r : all)
            if (gen() % 3) allowed.push_back(r);
        if (gen() % 2) p.allowed_regions = allowed;
        if (gen() % 2) p.max_latency_ms = static_cast<double>(gen() % 120);
        if (gen() % 4 == 0) p.require_tag = gen() % 2 ? "eu" : "green";
        if (!p.has_constraint()) p.max_latency_ms = 200;
        const VmRequest vm = vm_from(all[gen() % all.size()].code().c_str());

        const auto out = run(vm, all, p);
        CHECK(subset_of(out, all));
        // Order preserved: positions in `all` strictly increase.
        for (std::size_t i = 1; i < out.size(); ++i)
            CHECK(std::find(all.begin(), all.end(), out[i - 1]) < std::find(all.begin(), all.end(), out[i]));
        if (!out.empty()) CHECK(run(vm, out, p) == out);

        PolicySpec tighter = p;
        tighter.max_latency_ms = p.max_latency_ms ? *p.max_latency_ms * 0.5 : 60.0;
        CHECK(subset_of(run(vm, all, tighter), out));
        if (p.allowed_regions && !p.allowed_regions->empty()) {
            PolicySpec fewer = p;
            fewer.allowed_regions->pop_back();
            CHECK(subset_of(run(vm, all, fewer), out));
        }
    }
}
