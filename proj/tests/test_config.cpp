#include "doctest.h"

#include <fstream>
#include <sstream>

#include "tdthr/config.hpp"

using namespace tdthr;
using nlohmann::json;

namespace {

std::string issues_of(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ConfigError& e) {
        std::string all;
        for (const auto& i : e.issues()) all += i + "\n";
        return all;
    }
    return {};
}

bool mentions(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("empty document resolves to the defaults") {
    const SimConfig c = parse_config(json::object());
    CHECK(c.topology.node_count == 900);
    CHECK(c.topology.field_width == 1800.0);
    CHECK(c.traffic.critical_rate == 0.5);
    CHECK(c.traffic.start_time_s == 10.0);
    CHECK(c.routing.protocol == Protocol::Tdthr);
    CHECK(c.sinks.size() == 2);
}

TEST_CASE("resolved config round-trips through json") {
    json doc = {{"traffic", {{"critical_rate", 0.3}, {"delay_responsive_rate", 0.2}}},
                {"routing", {{"protocol", "GreedyGeo"}, {"critical_prr_scope", "one_hop"}}},
                {"run", {{"seed", 42}, {"lifetime", "source_disconnect"}}}};
    const SimConfig a = parse_config(doc);
    const SimConfig b = parse_config(to_json(a));
    CHECK(to_json(a) == to_json(b));
    CHECK(b.traffic.regular_rate() == doctest::Approx(0.5));
    CHECK(b.routing.protocol == Protocol::GreedyGeo);
    CHECK(b.routing.critical_prr_scope == PrrScope::OneHop);
    CHECK(b.run.lifetime == LifetimeDefinition::SourceDisconnect);
}

TEST_CASE("out-of-range rate names its field") {
    const auto err = issues_of({{"traffic", {{"critical_rate", 1.5}}}});
    CHECK(mentions(err, "traffic.critical_rate"));
}

TEST_CASE("rates summing above one are rejected") {
    CHECK(mentions(issues_of({{"traffic", {{"critical_rate", 0.7}, {"delay_responsive_rate", 0.5}}}}),
                   "sum above 1"));
}

TEST_CASE("unknown fields and type mismatches are reported") {
    CHECK(mentions(issues_of({{"traffic", {{"critcal_rate", 0.2}}}}), "traffic.critcal_rate: unknown field"));
    CHECK(mentions(issues_of({{"topology", {{"node_count", "many"}}}}), "topology.node_count"));
    CHECK(mentions(issues_of({{"routing", {{"protocol", "SPEED"}}}}), "routing.protocol"));
    CHECK(mentions(issues_of(json::array()), "<root>"));
}

TEST_CASE("several problems are listed together") {
    const auto err = issues_of({{"estimators", {{"prr_window", 0}, {"prr_beta", 2.0}}}});
    CHECK(mentions(err, "estimators.prr_window"));
    CHECK(mentions(err, "estimators.prr_beta"));
}

TEST_CASE("syntax errors carry line and column") {
    try {
        parse_config_text("{\n  \"traffic\": {\n    \"critical_rate\": ,\n  }\n}");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.issues().size() == 1);
        CHECK(mentions(e.issues()[0], "line 3"));
        CHECK(mentions(e.issues()[0], "column"));
    }
}

TEST_CASE("geometry checks") {
    CHECK(mentions(issues_of({{"sinks", {{{"x", 0}, {"y", 0}}, {{"x", 1900}, {"y", 0}}}}}), "sinks[1]"));
    CHECK(mentions(issues_of({{"source", {{"position", {{"x", -1}, {"y", 5}}}}}}), "source.position"));
    CHECK(mentions(issues_of({{"topology", {{"node_count", 500}}}}), "topology.density"));
    // density cross-check is skipped when density is null
    CHECK(issues_of({{"topology", {{"node_count", 500}, {"density", nullptr}}}}).empty());
    CHECK(mentions(issues_of({{"topology", {{"node_count", 2}, {"density", nullptr}}}}),
                   "topology.node_count"));
}

TEST_CASE("start time defaults to two hello periods") {
    CHECK(parse_config({{"hello", {{"period_s", 2.0}}}}).traffic.start_time_s == 4.0);
    CHECK(parse_config({{"hello", {{"period_s", 2.0}}}, {"traffic", {{"start_time_s", 1.0}}}})
              .traffic.start_time_s == 1.0);
}

TEST_CASE("hash ignores the seed but nothing else") {
    SimConfig a = parse_config(json::object());
    SimConfig b = a;
    b.run.seed = 99;
    CHECK(config_hash(a) == config_hash(b));
    b.traffic.critical_rate = 0.4;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("dotted names become json pointers") {
    CHECK(parameter_pointer("traffic.critical_rate").to_string() == "/traffic/critical_rate");
}

TEST_CASE("shipped default file carries the published parameters") {
    const SimConfig c = load_config(std::string(TDTHR_SOURCE_DIR) + "/configs/default.json");
    CHECK(c.topology.node_count == 900);
    CHECK(c.topology.field_width == 1800.0);
    CHECK(c.topology.field_height == 1800.0);
    CHECK(c.source.payload_bytes == 150);
    CHECK(c.topology.transmission_range == 100.0);
    CHECK(c.energy.initial_j == 2.0);
    CHECK(c.energy.tx_j == 0.0522);
    CHECK(c.energy.rx_j == 0.0591);
    CHECK(c.energy.sleep_j == 0.00006);
    CHECK(c.energy.idle_j == 0.000003);
    CHECK(c.radio.propagation == "free_space");
    CHECK(c.hello.period_s == 5.0);
    CHECK(c.estimators.prr_window == 30);
    CHECK(c.estimators.prr_beta == 0.6);
    CHECK(c.estimators.delay_gamma == 0.5);
    CHECK(c.traffic.deadline_s == 0.3);

    std::ifstream in(std::string(TDTHR_SOURCE_DIR) + "/configs/default.json");
    std::stringstream text;
    text << in.rdbuf();
    CHECK(text.str() == to_json(parse_config(json::object())).dump(2) + "\n");
}

TEST_CASE("missing file is a config error") {
    CHECK_THROWS_AS(load_config("/nonexistent/tdthr.json"), ConfigError);
}
