#include "tdthr/core.hpp"

#include <cmath>

namespace tdthr {

double dist(Position a, Position b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view to_string(PacketClass c) noexcept {
    switch (c) {
    case PacketClass::Regular: return "Regular";
    case PacketClass::ReliabilityResponsive: return "ReliabilityResponsive";
    case PacketClass::DelayResponsive: return "DelayResponsive";
    case PacketClass::Critical: return "Critical";
    }
    return "?";
}

std::optional<PacketClass> parse_packet_class(std::string_view name) noexcept {
    for (auto c : kAllClasses) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

Energy Energy::from_joules(double j) { return Energy(std::llround(j * 1e9)); }

double tx_power_cost(double d, double alpha, double range, double cost_tx) {
    if (!(d > 0.0)) throw std::domain_error("tx_power_cost: distance must be positive");
    if (d > range) throw std::domain_error("tx_power_cost: distance exceeds transmission range");
    if (!(alpha >= 2.0)) throw std::domain_error("tx_power_cost: path-loss exponent below 2");
    return cost_tx * std::pow(d / range, alpha);
}

} // namespace tdthr
