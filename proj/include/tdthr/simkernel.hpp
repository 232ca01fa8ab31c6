#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "tdthr/config.hpp"
#include "tdthr/core.hpp"
#include "tdthr/estimators.hpp"
#include "tdthr/forwarding.hpp"
#include "tdthr/metrics.hpp"
#include "tdthr/neighborhood.hpp"
#include "tdthr/queueing.hpp"

namespace tdthr {

/// A run broke one of the kernel's invariants (causality, energy, ordering).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

struct Topology {
    std::vector<Position> positions;
    std::vector<NodeId> sinks;
    NodeId source{kNoNode};
    double range{0.0};
    std::uint32_t placement_attempts{0};
    std::vector<std::vector<NodeId>> in_range; // sorted ground-truth adjacency

    std::size_t size() const noexcept { return positions.size(); }
    bool is_sink(NodeId id) const noexcept;
};

/// Sinks take ids [0, k), the source id k, the rest are placed uniformly in the field.
/// Placement retries with a fresh sub-seed until the source reaches every sink.
/// Throws ConfigError when that never happens within the configured attempts.
Topology generate_topology(const SimConfig& cfg, std::uint64_t seed);

/// Rebuilds the adjacency lists from positions and range.
void connect(Topology& topo);

/// True when `from` reaches any sink over ground-truth links between nodes with alive[i].
bool reaches_sink(const Topology& topo, NodeId from, const std::vector<bool>& alive);

/// True when `from` reaches every sink over ground-truth links.
bool reaches_all_sinks(const Topology& topo, NodeId from);

/// Hidden per-link delivery probability. Distance-degraded by default:
/// clamp(1 - (d / range)^kappa, p_min, 1); zero outside range.
class LinkGroundTruth {
public:
    LinkGroundTruth(const Topology& topo, const RadioConfig& radio);

    double probability(NodeId from, NodeId to) const;
    static double distance_model(double d, double range, double kappa, double p_min) noexcept;

private:
    const Topology* topo_;
    RadioConfig radio_;
};

enum class EventKind : std::uint8_t {
    PacketArrival,
    TransmissionComplete,
    AckReceived,
    AckTimeout,
    HelloDue,
    PromotionTimer,
    CbrTick,
    EnergyAudit,
};

std::string_view to_string(EventKind k) noexcept;

struct Event {
    double time{0.0};
    std::uint64_t sequence{0};
    EventKind kind{EventKind::CbrTick};
    NodeId node{kNoNode};
    NodeId peer{kNoNode};
    std::uint64_t token{0};
    std::uint32_t link_seq{0};
    PacketId packet_id{0};
    std::shared_ptr<const Packet> packet;
    AckPiggyback ack;
};

/// Energy deductions by category; the sum equals the run's total spend.
struct EnergyAccount {
    Energy tx;
    Energy rx;
    Energy ack;
    Energy hello;
    Energy audit;

    Energy total() const noexcept { return tx + rx + ack + hello + audit; }
};

struct DeliveryRecord {
    PacketId packet_id{0};
    PacketId logical_id{0};
    PacketClass cls{PacketClass::Regular};
    NodeId sink{kNoNode};
    double delay{0.0};
    bool first_copy{false};
    std::vector<HopRecord> trace;
};

/// Deterministic single-threaded discrete-event engine wiring every protocol module together.
class Simulator {
public:
    Simulator(SimConfig cfg, std::uint64_t seed, std::ostream* trace = nullptr);
    Simulator(SimConfig cfg, Topology topo, std::uint64_t seed, std::ostream* trace = nullptr);
    ~Simulator();

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    /// Processes every event strictly before `t` (bounded by the run's end time).
    void run_until(double t);

    /// Runs to completion and returns the finalized ledger.
    MetricsLedger run();

    double now() const noexcept { return now_; }
    const SimConfig& config() const noexcept { return cfg_; }
    const Topology& topology() const noexcept { return topo_; }
    const LinkGroundTruth& ground_truth() const noexcept { return truth_; }

    const NeighborTable& table(NodeId id) const;
    NeighborSnapshot snapshot(NodeId id) const;
    const EnergyBudget& energy(NodeId id) const;
    bool alive(NodeId id) const;
    std::optional<double> death_time(NodeId id) const;
    /// The receiver-side estimate of link sender -> receiver, if any packet was heard.
    const PrrEstimator* link_estimate(NodeId receiver, NodeId sender) const;
    const DelayEstimator& delays(NodeId id) const;

    Energy initial_energy() const noexcept { return initial_energy_; }
    Energy residual_energy() const;
    const EnergyAccount& energy_account() const noexcept { return account_; }
    const std::vector<DeliveryRecord>& deliveries() const noexcept { return deliveries_; }
    std::uint64_t events_processed() const noexcept { return events_processed_; }

private:
    struct Node;
    struct Logical {
        PacketClass cls{PacketClass::Regular};
        double creation{0.0};
        double deadline{0.0};
        std::int32_t holders{0};
        bool delivered{false};
        bool finalized{false};
        bool missed_velocity{false};
        std::optional<DropCause> last_cause;
    };

    void init();
    void schedule(Event ev);
    void dispatch(Event& ev);

    void on_cbr_tick();
    void on_hello_due(NodeId x);
    void on_energy_audit();
    void on_transmission_complete(const Event& ev);
    void on_packet_arrival(const Event& ev);
    void on_ack_received(const Event& ev);
    void on_ack_timeout(const Event& ev);
    void on_promotion_timer(const Event& ev);

    void emit(Packet p);
    void accept(Node& n, Packet p);
    void try_serve(NodeId x);
    void start_attempt(NodeId x);
    void finish_service(NodeId x, std::optional<DropCause> cause);
    void deliver(NodeId sink, const Packet& p);

    bool charge(Node& n, Energy amount, Energy EnergyAccount::*bucket);
    void kill(Node& n);
    void note_link_rx(Node& receiver, NodeId sender, std::uint32_t seq, bool hello);

    void hold(const Packet& p);
    void release(const Packet& p, std::optional<DropCause> cause);
    void flag_missed_velocity(const Packet& p);

    void trace(EventKind kind, NodeId node, PacketId pid, const std::string& detail);
    void trace(std::string_view kind, NodeId node, PacketId pid, const std::string& detail);

    SimConfig cfg_;
    std::uint64_t seed_;
    Topology topo_;
    LinkGroundTruth truth_;
    RoutingPolicy policy_;
    std::ostream* trace_;

    std::mt19937_64 traffic_rng_;
    std::mt19937_64 channel_rng_;
    std::mt19937_64 mac_rng_;

    std::vector<std::unique_ptr<Node>> nodes_;
    std::unordered_map<PacketId, Logical> logical_;
    std::vector<Event> heap_;
    std::uint64_t next_sequence_{0};
    std::uint64_t next_token_{0};
    PacketId next_packet_id_{1};
    double now_{0.0};
    double end_time_{0.0};
    bool traffic_stopped_{false};
    bool finalized_{false};
    std::uint64_t events_processed_{0};

    Energy initial_energy_;
    EnergyAccount account_;
    MetricsLedger ledger_;
    std::vector<DeliveryRecord> deliveries_;
};

/// Convenience wrapper: build, run, return the ledger.
MetricsLedger simulate(const SimConfig& cfg, std::uint64_t seed, std::ostream* trace = nullptr);

} // namespace tdthr
