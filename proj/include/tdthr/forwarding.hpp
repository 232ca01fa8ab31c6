#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "tdthr/core.hpp"
#include "tdthr/neighborhood.hpp"

namespace tdthr {

enum class Protocol { Tdthr, OneHopVelocity, GreedyGeo };

std::string_view to_string(Protocol p) noexcept;
std::optional<Protocol> parse_protocol(std::string_view name) noexcept;

/// Which reliability the Critical branch maximizes: the first link alone or the two-hop path.
enum class PrrScope { OneHop, TwoHop };

std::string_view to_string(PrrScope s) noexcept;
std::optional<PrrScope> parse_prr_scope(std::string_view name) noexcept;

/// lt_p - (t_tx - t_rx + bytes * 8 / bandwidth), without any expiry check.
double remaining_lag(double lt_p, double t_rx, double t_tx, double packet_bytes,
                     double bandwidth_bps) noexcept;

/// Renews the lag time before a transmission. Throws DeadlineExpired when the budget is gone
/// and std::invalid_argument when t_tx precedes t_rx.
double update_lag_time(double lt_p, double t_rx, double t_tx, double packet_bytes,
                       double bandwidth_bps);

/// Remaining distance over remaining time. Throws DeadlineExpired for a non-positive lag.
double required_velocity(double dist_to_sink, double lag);

struct VelocityContext {
    double required_velocity{0.0};
    double lag_time{0.0};
    double dist_to_sink{0.0};
    std::vector<ForwarderPair> candidates;
    std::vector<ForwarderPair> qualifying; // candidates with velocity >= required_velocity
};

VelocityContext make_velocity_context(std::vector<ForwarderPair> candidates, double dist_to_sink,
                                      double lag);

/// Next-hop choice for DelayResponsive and Critical packets among the qualifying pairs.
/// Throws NoQualifyingPair when none qualifies.
NodeId select_next_hop(PacketClass cls, const VelocityContext& ctx, PrrScope scope);

/// Greedy geographic choice: the favorable neighbor with maximum progress.
NodeId route_regular(const NeighborSnapshot& snap, Position destination);

/// Most reliable pair; falls back to the most reliable favorable neighbor when there are no
/// pairs. Throws VoidError when nothing makes progress.
NodeId route_reliability(const NeighborSnapshot& snap, Position destination,
                         const std::vector<ForwarderPair>& pairs, const PowerModel& power);

/// Favorable neighbors as degenerate pairs (z = y) scored with the one-hop velocity
/// progress / dt_xy.
std::vector<ForwarderPair> one_hop_candidates(const NeighborSnapshot& snap, Position destination,
                                              const PowerModel& power);

/// Fallback when S_req is empty: the pair with the highest offered velocity.
NodeId fastest_pair(const std::vector<ForwarderPair>& pairs);

struct RoutingPolicy {
    Protocol protocol{Protocol::Tdthr};
    PrrScope prr_scope{PrrScope::TwoHop};
    PowerModel power;
};

struct RoutingDecision {
    NodeId next_hop{kNoNode};
    bool missed_velocity{false};
};

/// Full per-packet decision of a protocol variant. A destination sink in range is always
/// chosen directly. Throws VoidError when no neighbor makes progress.
RoutingDecision choose_next_hop(const NeighborSnapshot& snap, PacketClass cls,
                                Position destination, NodeId destination_id, double lag,
                                const RoutingPolicy& policy);

} // namespace tdthr
