#include "tdthr/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tdthr {

using nlohmann::json;

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& i : issues) out += "\n  " + i;
    return out;
}

json position_json(Position p) { return json{{"x", p.x}, {"y", p.y}}; }

json positions_json(const std::vector<Position>& ps) {
    json arr = json::array();
    for (auto p : ps) arr.push_back(position_json(p));
    return arr;
}

std::string_view to_string(LifetimeDefinition d) {
    return d == LifetimeDefinition::FirstDeath ? "first_death" : "source_disconnect";
}

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

// Overlays `user` onto `base`, recording unknown fields and type mismatches by path.
void overlay(json& base, const json& user, const std::string& path,
             std::vector<std::string>& issues) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string field = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) {
            issues.push_back(field + ": unknown field");
            continue;
        }
        json& slot = base[it.key()];
        if (slot.is_object() && it->is_object()) {
            overlay(slot, *it, field, issues);
        } else if (slot.is_null() || it->is_null() || same_kind(slot, *it)) {
            slot = *it;
        } else {
            issues.push_back(field + ": expected " + std::string(slot.type_name()) + ", got " +
                             std::string(it->type_name()));
        }
    }
}

class Extractor {
public:
    Extractor(const json& root, std::vector<std::string>& issues) : root_(root), issues_(issues) {}

    template <class T>
    void get(const std::string& dotted, T& out) {
        try {
            const json& v = root_.at(parameter_pointer(dotted));
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_float() || (v.is_number_integer() && v.get<std::int64_t>() < 0)) {
                    issues_.push_back(dotted + ": expected a non-negative integer");
                    return;
                }
            }
            out = v.get<T>();
        } catch (const json::exception& e) {
            issues_.push_back(dotted + ": " + e.what());
        }
    }

    void get(const std::string& dotted, std::optional<double>& out) {
        try {
            const json& v = root_.at(parameter_pointer(dotted));
            if (v.is_null()) {
                out.reset();
            } else {
                out = v.get<double>();
            }
        } catch (const json::exception& e) {
            issues_.push_back(dotted + ": " + e.what());
        }
    }

    void get(const std::string& dotted, std::vector<Position>& out) {
        out.clear();
        try {
            const json& arr = root_.at(parameter_pointer(dotted));
            if (!arr.is_array()) {
                issues_.push_back(dotted + ": expected an array");
                return;
            }
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const json& e = arr[i];
                if (!e.is_object() || !e.contains("x") || !e.contains("y") || e.size() != 2) {
                    issues_.push_back(dotted + "[" + std::to_string(i) + "]: expected {x, y}");
                    continue;
                }
                out.push_back({e.at("x").get<double>(), e.at("y").get<double>()});
            }
        } catch (const json::exception& e) {
            issues_.push_back(dotted + ": " + e.what());
        }
    }

    void get(const std::string& dotted, Position& out) {
        get(dotted + ".x", out.x);
        get(dotted + ".y", out.y);
    }

    std::string str(const std::string& dotted) {
        std::string s;
        get(dotted, s);
        return s;
    }

private:
    const json& root_;
    std::vector<std::string>& issues_;
};

void check(std::vector<std::string>& issues, bool ok, const std::string& field,
           const std::string& what) {
    if (!ok) issues.push_back(field + ": " + what);
}

bool finite(double v) { return std::isfinite(v); }

} // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : Error(join_issues(issues)), issues_(std::move(issues)) {}

json::json_pointer parameter_pointer(const std::string& dotted) {
    std::string ptr;
    std::size_t start = 0;
    while (start <= dotted.size()) {
        const auto dot = dotted.find('.', start);
        const auto part = dotted.substr(start, dot == std::string::npos ? std::string::npos
                                                                        : dot - start);
        ptr += "/" + part;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return json::json_pointer(ptr);
}

json to_json(const SimConfig& c) {
    json classes = json::array();
    for (auto cls : c.traffic.duplicate_classes) classes.push_back(std::string(to_string(cls)));
    const auto& l = c.hello.layout;
    return json{
        {"topology",
         {{"node_count", c.topology.node_count},
          {"field_width", c.topology.field_width},
          {"field_height", c.topology.field_height},
          {"density", c.topology.density ? json(*c.topology.density) : json(nullptr)},
          {"transmission_range", c.topology.transmission_range},
          {"max_placement_attempts", c.topology.max_placement_attempts},
          {"extra_positions", positions_json(c.topology.extra_positions)}}},
        {"sinks", positions_json(c.sinks)},
        {"source",
         {{"position", position_json(c.source.position)},
          {"cbr_bytes_per_s", c.source.cbr_bytes_per_s},
          {"payload_bytes", c.source.payload_bytes}}},
        {"traffic",
         {{"critical_rate", c.traffic.critical_rate},
          {"delay_responsive_rate", c.traffic.delay_responsive_rate},
          {"reliability_responsive_rate", c.traffic.reliability_responsive_rate},
          {"deadline_s", c.traffic.deadline_s},
          {"start_time_s", c.traffic.start_time_s},
          {"duplicate_classes", classes}}},
        {"energy",
         {{"initial_j", c.energy.initial_j},
          {"tx_j", c.energy.tx_j},
          {"rx_j", c.energy.rx_j},
          {"sleep_j", c.energy.sleep_j},
          {"idle_j", c.energy.idle_j},
          {"audit_period_s", c.energy.audit_period_s},
          {"path_loss_exponent", c.energy.path_loss_exponent},
          {"sinks_powered", c.energy.sinks_powered}}},
        {"radio",
         {{"propagation", c.radio.propagation},
          {"bandwidth_bps", c.radio.bandwidth_bps},
          {"ack_bytes", c.radio.ack_bytes},
          {"backoff_window_s", c.radio.backoff_window_s},
          {"max_retries", c.radio.max_retries},
          {"link_kappa", c.radio.link_kappa},
          {"link_p_min", c.radio.link_p_min},
          {"fixed_delivery_probability", c.radio.fixed_delivery_probability
                                             ? json(*c.radio.fixed_delivery_probability)
                                             : json(nullptr)},
          {"propagation_speed_mps", c.radio.propagation_speed_mps}}},
        {"estimators",
         {{"prr_window", c.estimators.prr_window},
          {"prr_beta", c.estimators.prr_beta},
          {"delay_gamma", c.estimators.delay_gamma},
          {"prr_prior", c.estimators.prr_prior}}},
        {"hello",
         {{"period_s", c.hello.period_s},
          {"expiry_factor", c.hello.expiry_factor},
          {"layout",
           {{"sender_bytes", l.sender_bytes},
            {"position_bytes", l.position_bytes},
            {"energy_bytes", l.energy_bytes},
            {"dq_bytes", l.dq_bytes},
            {"reverse_entry_bytes", l.reverse_entry_bytes},
            {"one_hop_entry_bytes", l.one_hop_entry_bytes}}}}},
        {"queue",
         {{"capacity", c.queue.capacity},
          {"promotion_fraction", c.queue.promotion_fraction},
          {"promotion_floor_s", c.queue.promotion_floor_s}}},
        {"routing",
         {{"protocol", std::string(to_string(c.routing.protocol))},
          {"critical_prr_scope", std::string(to_string(c.routing.critical_prr_scope))}}},
        {"run",
         {{"duration_s", c.run.duration_s},
          {"seed", c.run.seed},
          {"drain_after_source_death_s", c.run.drain_after_source_death_s},
          {"lifetime", std::string(to_string(c.run.lifetime))}}},
    };
}

SimConfig parse_config(const json& doc) {
    std::vector<std::string> issues;
    if (!doc.is_object()) throw ConfigError({"<root>: expected an object"});

    json merged = to_json(SimConfig{});
    const bool start_given = doc.contains("traffic") && doc["traffic"].is_object() &&
                             doc["traffic"].contains("start_time_s");
    overlay(merged, doc, "", issues);
    if (!issues.empty()) throw ConfigError(issues);

    SimConfig c;
    Extractor ex(merged, issues);
    ex.get("topology.node_count", c.topology.node_count);
    ex.get("topology.field_width", c.topology.field_width);
    ex.get("topology.field_height", c.topology.field_height);
    ex.get("topology.density", c.topology.density);
    ex.get("topology.transmission_range", c.topology.transmission_range);
    ex.get("topology.max_placement_attempts", c.topology.max_placement_attempts);
    ex.get("topology.extra_positions", c.topology.extra_positions);
    ex.get("sinks", c.sinks);
    ex.get("source.position", c.source.position);
    ex.get("source.cbr_bytes_per_s", c.source.cbr_bytes_per_s);
    ex.get("source.payload_bytes", c.source.payload_bytes);
    ex.get("traffic.critical_rate", c.traffic.critical_rate);
    ex.get("traffic.delay_responsive_rate", c.traffic.delay_responsive_rate);
    ex.get("traffic.reliability_responsive_rate", c.traffic.reliability_responsive_rate);
    ex.get("traffic.deadline_s", c.traffic.deadline_s);
    ex.get("traffic.start_time_s", c.traffic.start_time_s);
    c.traffic.duplicate_classes.clear();
    try {
        for (const auto& name : merged.at("traffic").at("duplicate_classes")) {
            auto cls = parse_packet_class(name.get<std::string>());
            if (!cls) {
                issues.push_back("traffic.duplicate_classes: unknown class " + name.dump());
            } else {
                c.traffic.duplicate_classes.push_back(*cls);
            }
        }
    } catch (const json::exception& e) {
        issues.push_back(std::string("traffic.duplicate_classes: ") + e.what());
    }
    ex.get("energy.initial_j", c.energy.initial_j);
    ex.get("energy.tx_j", c.energy.tx_j);
    ex.get("energy.rx_j", c.energy.rx_j);
    ex.get("energy.sleep_j", c.energy.sleep_j);
    ex.get("energy.idle_j", c.energy.idle_j);
    ex.get("energy.audit_period_s", c.energy.audit_period_s);
    ex.get("energy.path_loss_exponent", c.energy.path_loss_exponent);
    ex.get("energy.sinks_powered", c.energy.sinks_powered);
    ex.get("radio.propagation", c.radio.propagation);
    ex.get("radio.bandwidth_bps", c.radio.bandwidth_bps);
    ex.get("radio.ack_bytes", c.radio.ack_bytes);
    ex.get("radio.backoff_window_s", c.radio.backoff_window_s);
    ex.get("radio.max_retries", c.radio.max_retries);
    ex.get("radio.link_kappa", c.radio.link_kappa);
    ex.get("radio.link_p_min", c.radio.link_p_min);
    ex.get("radio.fixed_delivery_probability", c.radio.fixed_delivery_probability);
    ex.get("radio.propagation_speed_mps", c.radio.propagation_speed_mps);
    ex.get("estimators.prr_window", c.estimators.prr_window);
    ex.get("estimators.prr_beta", c.estimators.prr_beta);
    ex.get("estimators.delay_gamma", c.estimators.delay_gamma);
    ex.get("estimators.prr_prior", c.estimators.prr_prior);
    ex.get("hello.period_s", c.hello.period_s);
    ex.get("hello.expiry_factor", c.hello.expiry_factor);
    ex.get("hello.layout.sender_bytes", c.hello.layout.sender_bytes);
    ex.get("hello.layout.position_bytes", c.hello.layout.position_bytes);
    ex.get("hello.layout.energy_bytes", c.hello.layout.energy_bytes);
    ex.get("hello.layout.dq_bytes", c.hello.layout.dq_bytes);
    ex.get("hello.layout.reverse_entry_bytes", c.hello.layout.reverse_entry_bytes);
    ex.get("hello.layout.one_hop_entry_bytes", c.hello.layout.one_hop_entry_bytes);
    ex.get("queue.capacity", c.queue.capacity);
    ex.get("queue.promotion_fraction", c.queue.promotion_fraction);
    ex.get("queue.promotion_floor_s", c.queue.promotion_floor_s);
    if (auto p = parse_protocol(ex.str("routing.protocol"))) {
        c.routing.protocol = *p;
    } else {
        issues.push_back("routing.protocol: expected one of TDTHR, OneHopVelocity, GreedyGeo");
    }
    if (auto s = parse_prr_scope(ex.str("routing.critical_prr_scope"))) {
        c.routing.critical_prr_scope = *s;
    } else {
        issues.push_back("routing.critical_prr_scope: expected one_hop or two_hop");
    }
    ex.get("run.duration_s", c.run.duration_s);
    ex.get("run.seed", c.run.seed);
    ex.get("run.drain_after_source_death_s", c.run.drain_after_source_death_s);
    const std::string lifetime = ex.str("run.lifetime");
    if (lifetime == "first_death") {
        c.run.lifetime = LifetimeDefinition::FirstDeath;
    } else if (lifetime == "source_disconnect") {
        c.run.lifetime = LifetimeDefinition::SourceDisconnect;
    } else {
        issues.push_back("run.lifetime: expected first_death or source_disconnect");
    }
    if (!start_given) c.traffic.start_time_s = 2.0 * c.hello.period_s;

    if (issues.empty()) issues = validate(c);
    if (!issues.empty()) throw ConfigError(issues);
    return c;
}

SimConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << "line " << line << ", column " << col << ": syntax error";
        throw ConfigError({msg.str()});
    }
    return parse_config(doc);
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({path.string() + ": cannot open file"});
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::vector<std::string> validate(const SimConfig& c) {
    std::vector<std::string> v;
    const auto& t = c.topology;
    check(v, t.field_width > 0 && finite(t.field_width), "topology.field_width", "must be > 0");
    check(v, t.field_height > 0 && finite(t.field_height), "topology.field_height", "must be > 0");
    check(v, t.transmission_range > 0 && finite(t.transmission_range),
          "topology.transmission_range", "must be > 0");
    check(v, t.max_placement_attempts >= 1, "topology.max_placement_attempts", "must be >= 1");
    check(v, !c.sinks.empty(), "sinks", "at least one sink is required");
    check(v, c.sinks.size() <= 2, "sinks", "at most two sinks are supported");
    const std::uint32_t fixed_nodes = static_cast<std::uint32_t>(c.sinks.size()) + 1;
    check(v, t.node_count >= fixed_nodes, "topology.node_count",
          "must cover the sinks and the source (>= " + std::to_string(fixed_nodes) + ")");
    if (!t.extra_positions.empty()) {
        check(v, t.node_count == fixed_nodes + t.extra_positions.size(), "topology.extra_positions",
              "explicit positions must cover every non-sink, non-source node");
    }
    auto inside = [&](Position p) {
        return finite(p.x) && finite(p.y) && p.x >= 0 && p.y >= 0 && p.x <= t.field_width &&
               p.y <= t.field_height;
    };
    for (std::size_t i = 0; i < c.sinks.size(); ++i) {
        check(v, inside(c.sinks[i]), "sinks[" + std::to_string(i) + "]",
              "sink " + std::to_string(i) + " lies outside the field");
    }
    for (std::size_t i = 0; i < t.extra_positions.size(); ++i) {
        check(v, inside(t.extra_positions[i]), "topology.extra_positions[" + std::to_string(i) + "]",
              "position lies outside the field");
    }
    check(v, inside(c.source.position), "source.position", "source lies outside the field");
    if (t.density) {
        const double area = t.field_width * t.field_height;
        const double actual = t.node_count / area;
        check(v, *t.density > 0, "topology.density", "must be > 0");
        if (*t.density > 0)
            check(v, std::abs(actual - *t.density) <= 0.2 * *t.density, "topology.density",
                  "inconsistent with node_count / area (" + std::to_string(actual) +
                      ") by more than 20%");
    }

    check(v, c.source.cbr_bytes_per_s > 0 && finite(c.source.cbr_bytes_per_s),
          "source.cbr_bytes_per_s", "must be > 0");
    check(v, c.source.payload_bytes > 0, "source.payload_bytes", "must be > 0");

    const auto& tr = c.traffic;
    auto unit = [](double x) { return finite(x) && x >= 0.0 && x <= 1.0; };
    check(v, unit(tr.critical_rate), "traffic.critical_rate", "must lie in [0, 1]");
    check(v, unit(tr.delay_responsive_rate), "traffic.delay_responsive_rate", "must lie in [0, 1]");
    check(v, unit(tr.reliability_responsive_rate), "traffic.reliability_responsive_rate",
          "must lie in [0, 1]");
    check(v, tr.regular_rate() >= -1e-12, "traffic",
          "critical, delay-responsive and reliability-responsive rates sum above 1");
    check(v, tr.deadline_s > 0 && finite(tr.deadline_s), "traffic.deadline_s", "must be > 0");
    check(v, tr.start_time_s >= 0 && finite(tr.start_time_s), "traffic.start_time_s",
          "must be >= 0");

    const auto& e = c.energy;
    check(v, e.initial_j > 0 && finite(e.initial_j), "energy.initial_j", "must be > 0");
    check(v, e.tx_j > 0 && finite(e.tx_j), "energy.tx_j", "must be > 0");
    check(v, e.rx_j >= 0 && finite(e.rx_j), "energy.rx_j", "must be >= 0");
    check(v, e.sleep_j >= 0 && finite(e.sleep_j), "energy.sleep_j", "must be >= 0");
    check(v, e.idle_j >= 0 && finite(e.idle_j), "energy.idle_j", "must be >= 0");
    check(v, e.audit_period_s > 0, "energy.audit_period_s", "must be > 0");
    check(v, e.path_loss_exponent >= 2.0 && finite(e.path_loss_exponent),
          "energy.path_loss_exponent", "must be >= 2");

    const auto& r = c.radio;
    check(v, r.propagation == "free_space", "radio.propagation", "only free_space is supported");
    check(v, r.bandwidth_bps > 0 && finite(r.bandwidth_bps), "radio.bandwidth_bps", "must be > 0");
    check(v, r.ack_bytes > 0, "radio.ack_bytes", "must be > 0");
    check(v, r.backoff_window_s >= 0 && finite(r.backoff_window_s), "radio.backoff_window_s",
          "must be >= 0");
    check(v, r.link_kappa > 0 && finite(r.link_kappa), "radio.link_kappa", "must be > 0");
    check(v, r.link_p_min > 0 && r.link_p_min <= 1, "radio.link_p_min", "must lie in (0, 1]");
    if (r.fixed_delivery_probability)
        check(v, *r.fixed_delivery_probability > 0 && *r.fixed_delivery_probability <= 1,
              "radio.fixed_delivery_probability", "must lie in (0, 1]");
    check(v, r.propagation_speed_mps > 0, "radio.propagation_speed_mps", "must be > 0");

    const auto& es = c.estimators;
    check(v, es.prr_window >= 1, "estimators.prr_window", "window must be >= 1");
    check(v, unit(es.prr_beta), "estimators.prr_beta", "must lie in [0, 1]");
    check(v, unit(es.delay_gamma), "estimators.delay_gamma", "must lie in [0, 1]");
    check(v, unit(es.prr_prior), "estimators.prr_prior", "must lie in [0, 1]");

    check(v, c.hello.period_s > 0 && finite(c.hello.period_s), "hello.period_s", "must be > 0");
    check(v, c.hello.expiry_factor >= 1.0, "hello.expiry_factor", "must be >= 1");

    check(v, c.queue.capacity >= 1, "queue.capacity", "must be >= 1");
    check(v, c.queue.promotion_fraction > 0 && finite(c.queue.promotion_fraction),
          "queue.promotion_fraction", "must be > 0");
    check(v, c.queue.promotion_floor_s > 0 && finite(c.queue.promotion_floor_s),
          "queue.promotion_floor_s", "must be > 0");

    check(v, c.run.duration_s >= 0 && finite(c.run.duration_s), "run.duration_s", "must be >= 0");
    check(v, c.run.drain_after_source_death_s >= 0, "run.drain_after_source_death_s",
          "must be >= 0");
    return v;
}

std::string config_hash(const SimConfig& cfg) {
    SimConfig unseeded = cfg;
    unseeded.run.seed = 0;
    const std::string text = to_json(unseeded).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace tdthr
