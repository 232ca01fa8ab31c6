#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdthr/core.hpp"

namespace tdthr {

enum class DropCause : std::uint8_t {
    Void = 0,
    QueueFull,
    RetriesExhausted,
    Deadline,
    DeadNode,
    InFlight, // still held somewhere when the run ended
};

inline constexpr std::size_t kDropCauseCount = 6;
std::string_view to_string(DropCause c) noexcept;

/// Logical-packet accounting for one traffic class.
struct ClassStats {
    std::uint64_t generated{0};
    std::uint64_t delivered{0};
    std::uint64_t deadline_misses{0};
    std::array<std::uint64_t, kDropCauseCount> drops{};
    std::vector<double> delays; // one per delivered logical packet, first copy to arrive
    std::uint64_t copies_generated{0}; // including duplicates toward a second sink
    std::uint64_t missed_velocity{0};  // logical packets forwarded at least once best-effort

    std::uint64_t dropped() const noexcept;
};

struct MetricsLedger {
    PerClass<ClassStats> per_class{};
    Energy total_energy_spent;
    std::optional<double> lifetime_event; // time the lifetime-ending event occurred
    double duration{0.0};                 // configured run duration
    double end_time{0.0};                 // simulation clock when the run stopped
    std::uint64_t promotions{0};
    std::uint64_t hop_attempts{0};
    std::uint64_t hello_messages{0};
    std::uint64_t hello_bytes{0};
    std::uint64_t malformed_messages{0};
    std::uint32_t dead_nodes{0};

    const ClassStats& of(PacketClass c) const noexcept { return per_class[class_index(c)]; }
    ClassStats& of(PacketClass c) noexcept { return per_class[class_index(c)]; }
    std::uint64_t delivered() const noexcept;
    std::uint64_t generated() const noexcept;
};

struct DelayStats {
    double mean{0.0};
    double p95{0.0};
    double max{0.0};
};

/// delivered / generated; absent when nothing of the class was generated.
std::optional<double> prr(const MetricsLedger& ledger, PacketClass cls);
std::optional<DelayStats> delay_stats(const MetricsLedger& ledger, PacketClass cls);
std::optional<double> mean_delay(const MetricsLedger& ledger, PacketClass cls);
/// Total energy spent per logically delivered packet, all classes pooled.
std::optional<double> ecpp(const MetricsLedger& ledger);
/// Lifetime-ending event time, or the run duration when it never happened.
double lifetime(const MetricsLedger& ledger);
/// Pooled deadline misses over generated packets.
std::optional<double> deadline_miss_ratio(const MetricsLedger& ledger);

struct RunLabel {
    std::string config_hash;
    std::uint64_t seed{0};
    std::string protocol;
    double critical_rate{0.0};
};

/// Fixed CSV layout, one row per run. Floats use 6 significant digits; absent values are empty.
std::vector<std::string> csv_columns();
std::string csv_header();
std::string csv_row(const RunLabel& label, const MetricsLedger& ledger);
/// Values keyed like metric_columns(), for aggregation.
std::vector<std::optional<double>> csv_metric_values(const MetricsLedger& ledger);
/// Names of the numeric metric columns (those after the label columns).
std::vector<std::string> metric_columns();

std::string format_g6(double v);

} // namespace tdthr
