#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "tdthr/core.hpp"
#include "tdthr/estimators.hpp"

namespace tdthr {

/// One entry of a neighbor's own one-hop list, as carried in its HELLO.
struct TwoHopEntry {
    NodeId id{kNoNode};
    Position position;
    double dt{0.0};     // reporter's transmission-delay estimate toward `id`
    double prr{1.0};    // reliability of the link reporter -> `id`
    double energy{0.0}; // residual energy of `id`, joules
};

/// Everything a node knows about one neighbor.
struct NeighborRecord {
    NodeId neighbor{kNoNode};
    Position position;
    double prr{1.0};  // reliability of the link owner -> neighbor, as reported by the neighbor
    double dt{0.0};   // owner's local transmission-delay estimate (filled in snapshots)
    PerClass<double> dq{};
    double energy{0.0};
    double last_heard{0.0};
    std::vector<TwoHopEntry> two_hop;
};

struct ReverseLinkEntry {
    NodeId neighbor{kNoNode};
    double prr{1.0}; // reliability of neighbor -> sender, measured at the sender
};

struct HelloMessage {
    NodeId sender{kNoNode};
    std::uint32_t seq{0};
    Position position;
    double energy{0.0};
    PerClass<double> dq{};
    std::vector<ReverseLinkEntry> reverse_prr;
    std::vector<TwoHopEntry> one_hop;
};

/// Byte sizes used to account HELLO overhead.
struct HelloLayout {
    std::uint32_t sender_bytes{4};
    std::uint32_t position_bytes{8};
    std::uint32_t energy_bytes{4};
    std::uint32_t dq_bytes{16};
    std::uint32_t reverse_entry_bytes{6};
    std::uint32_t one_hop_entry_bytes{26};
};

std::size_t wire_bytes(const HelloMessage& hello, const HelloLayout& layout) noexcept;
bool well_formed(const HelloMessage& hello) noexcept;

/// State a receiver piggybacks on its ACK: its own fields only, no two-hop list.
struct AckPiggyback {
    NodeId sender{kNoNode};
    double prr_reverse{1.0}; // reliability of the acked link, measured at the ACK sender
    PerClass<double> dq{};
    double energy{0.0};
};

class NeighborTable {
public:
    NeighborTable(NodeId owner, double expiry, double prr_prior = 1.0);

    /// Upserts the sender's record. Malformed messages are counted and dropped.
    bool process_hello(const HelloMessage& hello, double now);

    /// Refreshes an existing record; ACKs from unknown nodes carry no position and are ignored.
    bool process_ack(const AckPiggyback& ack, double now);

    /// Evicts records not heard from within the expiry threshold. Returns the count removed.
    std::size_t expire(double now);
    bool evict(NodeId id);

    /// N_1 of the owner at time `now`, sorted.
    std::vector<NodeId> one_hop_set(double now) const;
    /// N_2 of the owner at time `now`: union of live neighbors' one-hop lists, owner excluded.
    std::vector<NodeId> two_hop_set(double now) const;

    const NeighborRecord* find(NodeId id) const;
    const std::map<NodeId, NeighborRecord>& records() const noexcept { return records_; }
    NodeId owner() const noexcept { return owner_; }
    double expiry() const noexcept { return expiry_; }
    std::uint64_t malformed() const noexcept { return malformed_; }

private:
    bool live(const NeighborRecord& r, double now) const noexcept {
        return now - r.last_heard <= expiry_;
    }

    NodeId owner_;
    double expiry_;
    double prr_prior_;
    std::map<NodeId, NeighborRecord> records_;
    std::uint64_t malformed_{0};
};

/// A consistent, read-only view of one node's neighborhood used for a forwarding decision.
struct NeighborSnapshot {
    NodeId self{kNoNode};
    Position position;
    PerClass<double> dq{};
    std::vector<NeighborRecord> neighbors; // live records with local dt filled in, sorted by id

    const NeighborRecord* find(NodeId id) const;
};

NeighborSnapshot make_snapshot(const NeighborTable& table, const DelayEstimator& delays,
                               Position self_position, double now);

/// Parameters of the transmission-cost model used by the power score.
struct PowerModel {
    double range{100.0};
    double alpha{2.0};
    double cost_tx{0.0522};
};

/// Energy per unit transmission cost, E_y / T_a(dist(x, y)).
double power_score(double energy, double distance, const PowerModel& power);

struct ForwarderPair {
    NodeId y{kNoNode};
    NodeId z{kNoNode};
    double progress{0.0};    // dist(x,D) - dist(z,D)
    double denominator{0.0}; // dq_x + dt_xy + dq_y + dt_yz
    double velocity{0.0};
    double prr_first{1.0};   // prr_xy
    double prr_path{1.0};    // prr_xy * prr_yz
    double power_score{0.0};
};

/// Two-hop offered velocity; throws std::domain_error on a non-positive denominator.
double offered_velocity(double progress, double dq_x, double dt_xy, double dq_y, double dt_yz);

/// F_1^{+p}: neighbors strictly closer to `destination` than the owner, sorted.
std::vector<NodeId> favorable_one_hop(const NeighborSnapshot& snap, Position destination);

/// F_2^{+p}: every (y, z) with y favorable and z a neighbor of y strictly closer to the
/// destination than y. Sorted by (y, z).
std::vector<ForwarderPair> favorable_pairs(const NeighborSnapshot& snap, Position destination,
                                           PacketClass cls, const PowerModel& power);

} // namespace tdthr
