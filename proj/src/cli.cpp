#include "tdthr/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "tdthr/simkernel.hpp"

namespace tdthr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void collect_leaves(const json& node, const std::string& prefix, const std::string& leaf,
                    std::vector<std::string>& hits) {
    if (!node.is_object()) return;
    for (const auto& [key, value] : node.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (key == leaf) hits.push_back(path);
        collect_leaves(value, path, leaf, hits);
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({path.string() + ": cannot open file"});
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot write file");
    out << text;
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

double numeric_x(const json& value) {
    if (value.is_number()) return value.get<double>();
    if (value.is_boolean()) return value.get<bool>() ? 1.0 : 0.0;
    return 0.0;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

void report(std::ostream& err, const ConfigError& e) {
    for (const auto& issue : e.issues()) err << "error: " << issue << '\n';
}

} // namespace

std::string resolve_parameter(const json& config_doc, const std::string& name) {
    if (name.empty()) throw ConfigError({"parameter: must not be empty"});
    if (name.find('.') != std::string::npos) {
        if (!config_doc.contains(parameter_pointer(name)))
            throw ConfigError({"parameter: '" + name + "' does not exist in the configuration"});
        return name;
    }
    std::vector<std::string> hits;
    collect_leaves(config_doc, "", name, hits);
    if (hits.empty())
        throw ConfigError({"parameter: '" + name + "' does not exist in the configuration"});
    if (hits.size() > 1)
        throw ConfigError({"parameter: '" + name + "' is ambiguous; use a dotted path"});
    return hits.front();
}

SweepSpec parse_sweep_spec(const json& doc, const fs::path& base_dir) {
    std::vector<std::string> issues;
    if (!doc.is_object()) throw ConfigError({"<root>: expected an object"});
    static const std::vector<std::string> known{"base_config", "overrides", "parameter",
                                                "values", "seeds_per_point", "first_seed",
                                                "protocols", "output_dir"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            issues.push_back(key + ": unknown field");
    }

    SweepSpec spec;
    try {
        if (!doc.contains("base_config") || !doc["base_config"].is_string()) {
            issues.push_back("base_config: required string");
        } else {
            fs::path p = doc["base_config"].get<std::string>();
            spec.base_config = p.is_absolute() ? p : base_dir / p;
        }
        if (doc.contains("overrides")) {
            if (!doc["overrides"].is_object()) issues.push_back("overrides: expected an object");
            else spec.overrides = doc["overrides"];
        }
        if (!doc.contains("parameter") || !doc["parameter"].is_string()) {
            issues.push_back("parameter: required string");
        } else {
            spec.parameter = doc["parameter"].get<std::string>();
        }
        if (!doc.contains("values") || !doc["values"].is_array()) {
            issues.push_back("values: required array");
        } else if (doc["values"].empty()) {
            issues.push_back("values: must contain at least one value");
        } else {
            for (const auto& v : doc["values"]) spec.values.push_back(v);
        }
        if (doc.contains("seeds_per_point")) {
            const auto& s = doc["seeds_per_point"];
            if (!s.is_number_integer() || s.get<std::int64_t>() < 1)
                issues.push_back("seeds_per_point: must be an integer >= 1");
            else spec.seeds_per_point = s.get<std::uint32_t>();
        }
        if (doc.contains("first_seed")) {
            const auto& s = doc["first_seed"];
            if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
                issues.push_back("first_seed: must be a non-negative integer");
            else spec.first_seed = s.get<std::uint64_t>();
        }
        if (doc.contains("protocols")) {
            if (!doc["protocols"].is_array()) {
                issues.push_back("protocols: expected an array");
            } else {
                for (const auto& p : doc["protocols"]) {
                    auto parsed = p.is_string() ? parse_protocol(p.get<std::string>()) : std::nullopt;
                    if (!parsed) issues.push_back("protocols: unknown protocol " + p.dump());
                    else spec.protocols.push_back(*parsed);
                }
            }
        }
        if (doc.contains("output_dir")) {
            if (!doc["output_dir"].is_string()) {
                issues.push_back("output_dir: expected a string");
            } else {
                fs::path p = doc["output_dir"].get<std::string>();
                spec.output_dir = p.is_absolute() ? p : base_dir / p;
            }
        }
    } catch (const json::exception& e) {
        issues.push_back(e.what());
    }
    if (!issues.empty()) throw ConfigError(issues);
    return spec;
}

SweepSpec load_sweep_spec(const fs::path& path) {
    const std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({path.string() + ": " + e.what()});
    }
    return parse_sweep_spec(doc, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

std::vector<SweepRun> expand_sweep(const SweepSpec& spec) {
    const SimConfig base = load_config(spec.base_config);
    json doc = to_json(base);
    doc.merge_patch(spec.overrides);
    const std::string dotted = resolve_parameter(doc, spec.parameter);
    const auto ptr = parameter_pointer(dotted);

    std::vector<Protocol> protocols = spec.protocols;
    if (protocols.empty()) protocols.push_back(base.routing.protocol);

    std::vector<SweepRun> runs;
    std::vector<std::string> issues;
    for (Protocol proto : protocols) {
        for (std::size_t i = 0; i < spec.values.size(); ++i) {
            json point = doc;
            point[ptr] = spec.values[i];
            point["routing"]["protocol"] = std::string(to_string(proto));
            SimConfig cfg;
            try {
                cfg = parse_config(point);
            } catch (const ConfigError& e) {
                for (const auto& issue : e.issues())
                    issues.push_back("values[" + std::to_string(i) + "]: " + issue);
                continue;
            }
            for (std::uint32_t s = 0; s < spec.seeds_per_point; ++s) {
                SweepRun r;
                r.point = i;
                r.value = spec.values[i];
                r.protocol = proto;
                r.seed = spec.first_seed + s;
                r.config = cfg;
                r.config.run.seed = r.seed;
                runs.push_back(std::move(r));
            }
        }
    }
    if (!issues.empty()) throw ConfigError(issues);
    return runs;
}

std::vector<SweepOutcome> execute_sweep(const std::vector<SweepRun>& runs, unsigned jobs) {
    std::vector<SweepOutcome> results(runs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            SweepOutcome& o = results[i];
            o.run = runs[i];
            try {
                o.ledger = simulate(runs[i].config, runs[i].seed);
            } catch (const std::exception& e) {
                o.error = e.what();
            }
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs.size())));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return results;
}

std::vector<PlotPoint> aggregate_metric(const std::vector<SweepOutcome>& outcomes,
                                        const std::string& metric) {
    const auto cols = metric_columns();
    const auto it = std::find(cols.begin(), cols.end(), metric);
    if (it == cols.end()) throw std::invalid_argument("unknown metric " + metric);
    const auto col = static_cast<std::size_t>(it - cols.begin());

    // Keyed by (protocol, point, seed) so the reduction order never depends on input order.
    std::map<std::pair<std::string, std::size_t>, std::map<std::uint64_t, double>> samples;
    std::map<std::pair<std::string, std::size_t>, double> xs;
    for (const auto& o : outcomes) {
        const auto key = std::make_pair(std::string(to_string(o.run.protocol)), o.run.point);
        xs[key] = numeric_x(o.run.value);
        if (!o.ledger) continue;
        const auto v = csv_metric_values(*o.ledger)[col];
        if (v) samples[key][o.run.seed] = *v;
    }
    std::vector<PlotPoint> out;
    for (const auto& [key, x] : xs) {
        PlotPoint pt;
        pt.protocol = key.first;
        pt.x = x;
        auto s = samples.find(key);
        if (s != samples.end() && !s->second.empty()) {
            double sum = 0.0;
            pt.min = s->second.begin()->second;
            pt.max = pt.min;
            for (const auto& [seed, v] : s->second) {
                sum += v;
                pt.min = std::min(pt.min, v);
                pt.max = std::max(pt.max, v);
            }
            pt.n = s->second.size();
            pt.mean = sum / static_cast<double>(pt.n);
        }
        out.push_back(pt);
    }
    return out;
}

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepOutcome>& outcomes) {
    std::vector<const SweepOutcome*> sorted;
    for (const auto& o : outcomes) sorted.push_back(&o);
    std::sort(sorted.begin(), sorted.end(), [](const SweepOutcome* a, const SweepOutcome* b) {
        const auto ka = std::make_tuple(to_string(a->run.protocol), a->run.point, a->run.seed);
        const auto kb = std::make_tuple(to_string(b->run.protocol), b->run.point, b->run.seed);
        return ka < kb;
    });

    std::string text = "parameter,value," + csv_header() + ",status,error\n";
    for (const auto* o : sorted) {
        RunLabel label;
        label.config_hash = config_hash(o->run.config);
        label.seed = o->run.seed;
        label.protocol = std::string(to_string(o->run.protocol));
        label.critical_rate = o->run.config.traffic.critical_rate;
        const std::string value = o->run.value.is_string() ? o->run.value.get<std::string>()
                                                           : o->run.value.dump();
        text += csv_escape(spec.parameter) + ',' + csv_escape(value) + ',';
        if (o->ledger) {
            text += csv_row(label, *o->ledger) + ",ok,\n";
        } else {
            text += label.config_hash + ',' + std::to_string(label.seed) + ',' + label.protocol +
                    ',' + format_g6(label.critical_rate);
            for (std::size_t i = 0; i < metric_columns().size(); ++i) text += ',';
            text += ",failed," + csv_escape(o->error) + '\n';
        }
    }
    return text;
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
    SimConfig cfg;
    try {
        cfg = load_config(opts.config);
    } catch (const ConfigError& e) {
        report(err, e);
        return kExitValidation;
    }
    cfg.run.seed = opts.seed;

    RunLabel label;
    label.config_hash = config_hash(cfg);
    label.seed = opts.seed;
    label.protocol = std::string(to_string(cfg.routing.protocol));
    label.critical_rate = cfg.traffic.critical_rate;

    try {
        std::optional<std::ofstream> trace_file;
        if (opts.trace) {
            if (opts.trace->has_parent_path()) fs::create_directories(opts.trace->parent_path());
            trace_file.emplace(*opts.trace, std::ios::binary);
            if (!*trace_file) throw std::runtime_error(opts.trace->string() + ": cannot write file");
        }
        MetricsLedger ledger;
        try {
            ledger = simulate(cfg, opts.seed, trace_file ? &*trace_file : nullptr);
        } catch (const ConfigError& e) {
            report(err, e);
            return kExitValidation;
        } catch (const InvariantViolation& e) {
            fs::path trace_path = opts.trace.value_or(fs::path(opts.out.string() + ".trace"));
            if (!opts.trace) {
                std::ofstream replay(trace_path, std::ios::binary);
                try {
                    simulate(cfg, opts.seed, &replay);
                } catch (const InvariantViolation&) {
                }
            }
            err << "error: invariant violation: " << e.what() << "\ntrace: " << trace_path.string()
                << '\n';
            return kExitRuntime;
        }
        write_file(opts.out, csv_header() + '\n' + csv_row(label, ledger) + '\n');
        out << "wrote " << opts.out.string() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
    SweepSpec spec;
    std::vector<SweepRun> runs;
    try {
        spec = load_sweep_spec(opts.spec);
        runs = expand_sweep(spec);
    } catch (const ConfigError& e) {
        report(err, e);
        return kExitValidation;
    }

    if (opts.out) {
        spec.output_dir = *opts.out;
    } else if (auto dir = env("TDTHR_OUT_DIR")) {
        spec.output_dir = *dir;
    }
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    if (opts.jobs) {
        jobs = *opts.jobs;
    } else if (auto j = env("TDTHR_JOBS")) {
        try {
            jobs = static_cast<unsigned>(std::stoul(*j));
        } catch (const std::exception&) {
            err << "error: TDTHR_JOBS: expected a positive integer\n";
            return kExitValidation;
        }
    }
    if (jobs == 0) {
        err << "error: jobs: must be >= 1\n";
        return kExitValidation;
    }

    const auto outcomes = execute_sweep(runs, jobs);
    std::size_t failed = 0;
    for (const auto& o : outcomes) {
        if (!o.ledger) {
            ++failed;
            err << "run failed: " << to_string(o.run.protocol) << " value=" << o.run.value.dump()
                << " seed=" << o.run.seed << ": " << o.error << '\n';
        }
    }

    try {
        write_file(spec.output_dir / "results.csv", sweep_csv(spec, outcomes));
        for (const auto& metric : metric_columns()) {
            std::string text = "protocol,x,mean,min,max,n\n";
            for (const auto& pt : aggregate_metric(outcomes, metric)) {
                text += pt.protocol + ',' + format_g6(pt.x) + ',';
                if (pt.n > 0) {
                    text += format_g6(pt.mean) + ',' + format_g6(pt.min) + ',' + format_g6(pt.max);
                } else {
                    text += ",,";
                }
                text += ',' + std::to_string(pt.n) + '\n';
            }
            write_file(spec.output_dir / ("plot_" + metric + ".csv"), text);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    out << "ran " << outcomes.size() << " runs (" << failed << " failed) into "
        << spec.output_dir.string() << '\n';
    return failed == 0 ? kExitOk : kExitRuntime;
}

int cmd_validate(const fs::path& config, std::ostream& out, std::ostream& err) {
    try {
        const SimConfig cfg = load_config(config);
        out << to_json(cfg).dump(2) << '\n';
    } catch (const ConfigError& e) {
        report(err, e);
        return kExitValidation;
    }
    return kExitOk;
}

} // namespace tdthr
