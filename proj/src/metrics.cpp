#include "tdthr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace tdthr {

std::string_view to_string(DropCause c) noexcept {
    switch (c) {
    case DropCause::Void: return "void";
    case DropCause::QueueFull: return "queue_full";
    case DropCause::RetriesExhausted: return "retries_exhausted";
    case DropCause::Deadline: return "deadline";
    case DropCause::DeadNode: return "dead_node";
    case DropCause::InFlight: return "in_flight";
    }
    return "?";
}

std::uint64_t ClassStats::dropped() const noexcept {
    return std::accumulate(drops.begin(), drops.end(), std::uint64_t{0});
}

std::uint64_t MetricsLedger::delivered() const noexcept {
    std::uint64_t n = 0;
    for (const auto& s : per_class) n += s.delivered;
    return n;
}

std::uint64_t MetricsLedger::generated() const noexcept {
    std::uint64_t n = 0;
    for (const auto& s : per_class) n += s.generated;
    return n;
}

std::optional<double> prr(const MetricsLedger& ledger, PacketClass cls) {
    const auto& s = ledger.of(cls);
    if (s.generated == 0) return std::nullopt;
    return static_cast<double>(s.delivered) / static_cast<double>(s.generated);
}

std::optional<DelayStats> delay_stats(const MetricsLedger& ledger, PacketClass cls) {
    const auto& d = ledger.of(cls).delays;
    if (d.empty()) return std::nullopt;
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    DelayStats out;
    double sum = 0.0;
    for (double v : d) sum += v;
    out.mean = sum / static_cast<double>(d.size());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(d.size())));
    out.p95 = sorted[std::max<std::size_t>(rank, 1) - 1];
    out.max = sorted.back();
    return out;
}

std::optional<double> mean_delay(const MetricsLedger& ledger, PacketClass cls) {
    if (auto s = delay_stats(ledger, cls)) return s->mean;
    return std::nullopt;
}

std::optional<double> ecpp(const MetricsLedger& ledger) {
    const auto n = ledger.delivered();
    if (n == 0) return std::nullopt;
    return ledger.total_energy_spent.joules() / static_cast<double>(n);
}

double lifetime(const MetricsLedger& ledger) {
    return ledger.lifetime_event.value_or(ledger.duration);
}

std::optional<double> deadline_miss_ratio(const MetricsLedger& ledger) {
    std::uint64_t misses = 0;
    for (const auto& s : ledger.per_class) misses += s.deadline_misses;
    const auto g = ledger.generated();
    if (g == 0) return std::nullopt;
    return static_cast<double>(misses) / static_cast<double>(g);
}

std::string format_g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace {

constexpr std::array<std::string_view, 4> kClassTags{"regular", "reliability", "delay",
                                                     "critical"};

std::string opt(const std::optional<double>& v) { return v ? format_g6(*v) : std::string(); }

} // namespace

std::vector<std::string> metric_columns() {
    std::vector<std::string> cols;
    for (auto tag : kClassTags) cols.push_back("prr_" + std::string(tag));
    for (auto tag : kClassTags) {
        cols.push_back("delay_mean_" + std::string(tag));
        cols.push_back("delay_p95_" + std::string(tag));
    }
    cols.insert(cols.end(), {"deadline_miss_ratio", "ecpp", "lifetime"});
    for (std::size_t i = 0; i < kDropCauseCount; ++i)
        cols.push_back("drops_" + std::string(to_string(static_cast<DropCause>(i))));
    cols.insert(cols.end(), {"generated", "delivered", "energy_spent", "promotions",
                             "missed_velocity", "hop_attempts"});
    return cols;
}

std::vector<std::string> csv_columns() {
    std::vector<std::string> cols{"config_hash", "seed", "protocol", "critical_rate"};
    auto m = metric_columns();
    cols.insert(cols.end(), m.begin(), m.end());
    return cols;
}

std::string csv_header() {
    std::string out;
    for (const auto& c : csv_columns()) {
        if (!out.empty()) out += ',';
        out += c;
    }
    return out;
}

std::vector<std::optional<double>> csv_metric_values(const MetricsLedger& l) {
    std::vector<std::optional<double>> v;
    for (auto c : kAllClasses) v.push_back(prr(l, c));
    for (auto c : kAllClasses) {
        auto s = delay_stats(l, c);
        v.push_back(s ? std::optional(s->mean) : std::nullopt);
        v.push_back(s ? std::optional(s->p95) : std::nullopt);
    }
    v.push_back(deadline_miss_ratio(l));
    v.push_back(ecpp(l));
    v.push_back(lifetime(l));
    for (std::size_t i = 0; i < kDropCauseCount; ++i) {
        std::uint64_t n = 0;
        for (const auto& s : l.per_class) n += s.drops[i];
        v.push_back(static_cast<double>(n));
    }
    std::uint64_t missed = 0;
    for (const auto& s : l.per_class) missed += s.missed_velocity;
    v.push_back(static_cast<double>(l.generated()));
    v.push_back(static_cast<double>(l.delivered()));
    v.push_back(l.total_energy_spent.joules());
    v.push_back(static_cast<double>(l.promotions));
    v.push_back(static_cast<double>(missed));
    v.push_back(static_cast<double>(l.hop_attempts));
    return v;
}

std::string csv_row(const RunLabel& label, const MetricsLedger& ledger) {
    std::string out = label.config_hash + ',' + std::to_string(label.seed) + ',' + label.protocol +
                      ',' + format_g6(label.critical_rate);
    for (const auto& v : csv_metric_values(ledger)) out += ',' + opt(v);
    return out;
}

} // namespace tdthr
