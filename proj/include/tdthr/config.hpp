#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tdthr/core.hpp"
#include "tdthr/forwarding.hpp"
#include "tdthr/neighborhood.hpp"

namespace tdthr {

/// Raised for unreadable or invalid configuration. Each issue names its line or field.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    std::vector<std::string> issues_;
};

struct TopologyConfig {
    std::uint32_t node_count{900};
    double field_width{1800.0};
    double field_height{1800.0};
    std::optional<double> density{0.00027}; // nodes per square meter, cross-checked when set
    double transmission_range{100.0};
    std::uint32_t max_placement_attempts{200};
    std::vector<Position> extra_positions; // explicit positions for the non-sink, non-source nodes
};

struct SourceConfig {
    Position position{900.0, 900.0};
    double cbr_bytes_per_s{1000.0};
    std::uint32_t payload_bytes{150};
};

struct TrafficConfig {
    double critical_rate{0.5};
    double delay_responsive_rate{0.0};
    double reliability_responsive_rate{0.0};
    double deadline_s{0.3};
    double start_time_s{10.0};
    std::vector<PacketClass> duplicate_classes{PacketClass::Critical,
                                               PacketClass::ReliabilityResponsive};

    double regular_rate() const noexcept {
        return 1.0 - critical_rate - delay_responsive_rate - reliability_responsive_rate;
    }
};

struct EnergyConfig {
    double initial_j{2.0};
    double tx_j{0.0522};
    double rx_j{0.0591};
    double sleep_j{0.00006};
    double idle_j{0.000003};
    double audit_period_s{1.0};
    double path_loss_exponent{2.0};
    bool sinks_powered{true};
};

struct RadioConfig {
    std::string propagation{"free_space"};
    double bandwidth_bps{250000.0};
    std::uint32_t ack_bytes{12};
    double backoff_window_s{0.008};
    std::uint32_t max_retries{3};
    double link_kappa{4.0};
    double link_p_min{0.1};
    std::optional<double> fixed_delivery_probability;
    double propagation_speed_mps{3.0e8};
};

struct EstimatorConfig {
    std::uint32_t prr_window{30};
    double prr_beta{0.6};
    double delay_gamma{0.5};
    double prr_prior{1.0};
};

struct HelloConfig {
    double period_s{5.0};
    double expiry_factor{2.5};
    HelloLayout layout;

    double expiry() const noexcept { return period_s * expiry_factor; }
};

struct QueueConfig {
    std::uint32_t capacity{64};
    double promotion_fraction{0.5};
    double promotion_floor_s{0.010};
};

struct RoutingConfig {
    Protocol protocol{Protocol::Tdthr};
    PrrScope critical_prr_scope{PrrScope::TwoHop};
};

enum class LifetimeDefinition { FirstDeath, SourceDisconnect };

struct RunConfig {
    double duration_s{120.0};
    std::uint64_t seed{1};
    double drain_after_source_death_s{1.0};
    LifetimeDefinition lifetime{LifetimeDefinition::FirstDeath};
};

/// Complete simulation configuration. Default member values are the shipped defaults.
struct SimConfig {
    TopologyConfig topology;
    std::vector<Position> sinks{{0.0, 0.0}, {1800.0, 1800.0}};
    SourceConfig source;
    TrafficConfig traffic;
    EnergyConfig energy;
    RadioConfig radio;
    EstimatorConfig estimators;
    HelloConfig hello;
    QueueConfig queue;
    RoutingConfig routing;
    RunConfig run;
};

/// Resolves a (possibly partial) document against the defaults, then validates.
/// Throws ConfigError listing every problem found.
SimConfig parse_config(const nlohmann::json& doc);
SimConfig parse_config_text(const std::string& text);
SimConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const SimConfig& cfg);

/// Bounds and cross-field checks; empty when valid.
std::vector<std::string> validate(const SimConfig& cfg);

/// Stable 64-bit FNV-1a digest of the resolved configuration, as 16 hex digits.
std::string config_hash(const SimConfig& cfg);

/// Converts "a.b.c" into a JSON pointer.
nlohmann::json::json_pointer parameter_pointer(const std::string& dotted);

} // namespace tdthr
