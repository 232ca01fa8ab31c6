#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tdthr {

using NodeId = std::uint32_t;
using PacketId = std::uint64_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Base class for every protocol-level failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// S_req was empty; the caller decides the fallback.
class NoQualifyingPair : public Error {
public:
    NoQualifyingPair() : Error("no forwarder pair meets the required velocity") {}
};

/// The remaining lag time of a packet reached zero.
class DeadlineExpired : public Error {
public:
    explicit DeadlineExpired(double lag) : Error("lag time exhausted"), lag_(lag) {}
    double lag() const noexcept { return lag_; }

private:
    double lag_;
};

/// No neighbor offers positive progress toward the destination.
class VoidError : public Error {
public:
    VoidError() : Error("no favorable forwarder (void)") {}
};

struct Position {
    double x{0.0};
    double y{0.0};

    friend bool operator==(const Position&, const Position&) = default;
};

double dist(Position a, Position b) noexcept;

enum class PacketClass : std::uint8_t {
    Regular = 0,
    ReliabilityResponsive = 1,
    DelayResponsive = 2,
    Critical = 3,
};

inline constexpr std::array<PacketClass, 4> kAllClasses{
    PacketClass::Regular, PacketClass::ReliabilityResponsive, PacketClass::DelayResponsive,
    PacketClass::Critical};

template <class T>
using PerClass = std::array<T, 4>;

constexpr std::size_t class_index(PacketClass c) noexcept { return static_cast<std::size_t>(c); }

/// Service priority: Critical > DelayResponsive > (ReliabilityResponsive = Regular).
constexpr int priority(PacketClass c) noexcept {
    switch (c) {
    case PacketClass::Critical: return 2;
    case PacketClass::DelayResponsive: return 1;
    default: return 0;
    }
}

/// Classes whose packets are velocity-filtered and dropped when their lag time runs out.
constexpr bool is_deadline_bound(PacketClass c) noexcept {
    return c == PacketClass::Critical || c == PacketClass::DelayResponsive;
}

std::string_view to_string(PacketClass c) noexcept;
std::optional<PacketClass> parse_packet_class(std::string_view name) noexcept;

struct HopRecord {
    NodeId node{kNoNode};
    double arrival{0.0};
};

struct Packet {
    PacketId packet_id{0};
    PacketClass cls{PacketClass::Regular};
    NodeId source{kNoNode};
    NodeId destination_sink{kNoNode};
    double lag_time{0.0};
    double deadline{0.0};
    std::uint32_t payload_size{0};
    double creation_time{0.0};
    std::uint32_t hop_count{0};
    std::optional<PacketId> duplicate_of;

    // Time the current holder received (or generated) the packet; t_rx in the lag-time update.
    double received_at{0.0};
    bool missed_velocity{false};
    std::vector<HopRecord> trace;

    PacketId logical_id() const noexcept { return duplicate_of.value_or(packet_id); }
};

/// Energy quantity held as an integer count of nanojoules so accounting sums are exact.
class Energy {
public:
    constexpr Energy() = default;
    static constexpr Energy from_nanojoules(std::int64_t nj) { return Energy(nj); }
    static Energy from_joules(double j);

    constexpr std::int64_t nanojoules() const noexcept { return nj_; }
    constexpr double joules() const noexcept { return static_cast<double>(nj_) * 1e-9; }

    constexpr Energy& operator+=(Energy o) noexcept { nj_ += o.nj_; return *this; }
    constexpr Energy& operator-=(Energy o) noexcept { nj_ -= o.nj_; return *this; }
    friend constexpr Energy operator+(Energy a, Energy b) noexcept { return Energy(a.nj_ + b.nj_); }
    friend constexpr Energy operator-(Energy a, Energy b) noexcept { return Energy(a.nj_ - b.nj_); }
    friend constexpr auto operator<=>(Energy, Energy) = default;

private:
    constexpr explicit Energy(std::int64_t nj) : nj_(nj) {}
    std::int64_t nj_{0};
};

struct EnergyBudget {
    Energy residual;
    Energy cost_tx;
    Energy cost_rx;
    Energy cost_sleep;
    Energy cost_idle;

    /// A node that cannot afford a nominal transmission is dead.
    bool alive() const noexcept { return residual >= cost_tx; }
    bool can_afford(Energy e) const noexcept { return residual >= e; }
};

/// Transmission cost cost_tx * (d / range)^alpha. Throws std::domain_error when d is not in
/// (0, range] or alpha < 2.
double tx_power_cost(double d, double alpha, double range, double cost_tx);

} // namespace tdthr
