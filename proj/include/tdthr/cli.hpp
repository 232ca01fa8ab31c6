#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tdthr/config.hpp"
#include "tdthr/forwarding.hpp"
#include "tdthr/metrics.hpp"

namespace tdthr {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

/// A parameter study: one base config, one swept field, several seeds and protocol variants.
struct SweepSpec {
    std::filesystem::path base_config;
    nlohmann::json overrides = nlohmann::json::object();
    std::string parameter; // dotted path into the config, or a unique leaf name
    std::vector<nlohmann::json> values;
    std::uint32_t seeds_per_point{1};
    std::uint64_t first_seed{1};
    std::vector<Protocol> protocols; // empty: the base config's protocol only
    std::filesystem::path output_dir{"sweep_out"};
};

/// Relative paths in the document resolve against `base_dir`. Throws ConfigError.
SweepSpec parse_sweep_spec(const nlohmann::json& doc, const std::filesystem::path& base_dir);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

/// Expands a bare leaf name ("critical_rate") to its dotted path; dotted names must exist.
std::string resolve_parameter(const nlohmann::json& config_doc, const std::string& name);

struct SweepRun {
    std::size_t point{0};
    nlohmann::json value;
    Protocol protocol{Protocol::Tdthr};
    std::uint64_t seed{0};
    SimConfig config;
};

/// All (protocol, value, seed) combinations in a fixed order. Throws ConfigError when any
/// resolved config is invalid.
std::vector<SweepRun> expand_sweep(const SweepSpec& spec);

struct SweepOutcome {
    SweepRun run;
    std::optional<MetricsLedger> ledger;
    std::string error;
};

/// Executes the runs on up to `jobs` threads. Results come back in expansion order.
std::vector<SweepOutcome> execute_sweep(const std::vector<SweepRun>& runs, unsigned jobs);

struct PlotPoint {
    std::string protocol;
    double x{0.0};
    double mean{0.0};
    double min{0.0};
    double max{0.0};
    std::size_t n{0};
};

/// Per-metric series over the swept value: mean, min and max across seeds of successful runs.
/// Independent of the order of `outcomes`.
std::vector<PlotPoint> aggregate_metric(const std::vector<SweepOutcome>& outcomes,
                                        const std::string& metric);

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepOutcome>& outcomes);

struct RunOptions {
    std::filesystem::path config;
    std::uint64_t seed{1};
    std::filesystem::path out;
    std::optional<std::filesystem::path> trace;
};

struct SweepOptions {
    std::filesystem::path spec;
    std::optional<std::filesystem::path> out;
    std::optional<unsigned> jobs;
};

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err);

} // namespace tdthr
