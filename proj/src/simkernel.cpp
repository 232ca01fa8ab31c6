#include "tdthr/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>

namespace tdthr {

namespace {

constexpr double kAckGuard = 1e-6;

double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t sub = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(sub),
                      static_cast<std::uint32_t>(sub >> 32)};
    return std::mt19937_64(seq);
}

bool later(const Event& a, const Event& b) noexcept {
    if (a.time != b.time) return a.time > b.time;
    return a.sequence > b.sequence;
}

} // namespace

bool Topology::is_sink(NodeId id) const noexcept {
    return std::find(sinks.begin(), sinks.end(), id) != sinks.end();
}

void connect(Topology& topo) {
    const std::size_t n = topo.positions.size();
    topo.in_range.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dist(topo.positions[i], topo.positions[j]) <= topo.range) {
                topo.in_range[i].push_back(static_cast<NodeId>(j));
                topo.in_range[j].push_back(static_cast<NodeId>(i));
            }
        }
    }
    for (auto& adj : topo.in_range) std::sort(adj.begin(), adj.end());
}

bool reaches_sink(const Topology& topo, NodeId from, const std::vector<bool>& alive) {
    if (from >= topo.size() || !alive[from]) return false;
    std::vector<bool> seen(topo.size(), false);
    std::deque<NodeId> frontier{from};
    seen[from] = true;
    while (!frontier.empty()) {
        const NodeId u = frontier.front();
        frontier.pop_front();
        if (topo.is_sink(u)) return true;
        for (NodeId v : topo.in_range[u]) {
            if (!seen[v] && alive[v]) {
                seen[v] = true;
                frontier.push_back(v);
            }
        }
    }
    return false;
}

bool reaches_all_sinks(const Topology& topo, NodeId from) {
    if (from >= topo.size()) return false;
    std::vector<bool> seen(topo.size(), false);
    std::deque<NodeId> frontier{from};
    seen[from] = true;
    while (!frontier.empty()) {
        const NodeId u = frontier.front();
        frontier.pop_front();
        for (NodeId v : topo.in_range[u]) {
            if (!seen[v]) {
                seen[v] = true;
                frontier.push_back(v);
            }
        }
    }
    return std::all_of(topo.sinks.begin(), topo.sinks.end(), [&](NodeId s) { return seen[s]; });
}

Topology generate_topology(const SimConfig& cfg, std::uint64_t seed) {
    const auto& tc = cfg.topology;
    const std::size_t k = cfg.sinks.size();
    const bool explicit_layout = !tc.extra_positions.empty();
    const std::uint32_t attempts = explicit_layout ? 1 : std::max<std::uint32_t>(1, tc.max_placement_attempts);

    for (std::uint32_t attempt = 0; attempt < attempts; ++attempt) {
        Topology topo;
        topo.range = tc.transmission_range;
        topo.placement_attempts = attempt + 1;
        topo.positions = cfg.sinks;
        for (std::size_t i = 0; i < k; ++i) topo.sinks.push_back(static_cast<NodeId>(i));
        topo.source = static_cast<NodeId>(k);
        topo.positions.push_back(cfg.source.position);
        if (explicit_layout) {
            topo.positions.insert(topo.positions.end(), tc.extra_positions.begin(),
                                  tc.extra_positions.end());
        } else {
            auto rng = stream(seed, 0x70b0, attempt);
            const std::size_t total = std::max<std::size_t>(tc.node_count, k + 1);
            while (topo.positions.size() < total) {
                const double x = unit(rng) * tc.field_width;
                const double y = unit(rng) * tc.field_height;
                topo.positions.push_back({x, y});
            }
        }
        connect(topo);
        if (reaches_all_sinks(topo, topo.source)) return topo;
    }
    throw ConfigError({"topology: source has no path to every sink after " +
                       std::to_string(attempts) + " placement attempt(s)"});
}

LinkGroundTruth::LinkGroundTruth(const Topology& topo, const RadioConfig& radio)
    : topo_(&topo), radio_(radio) {}

double LinkGroundTruth::distance_model(double d, double range, double kappa, double p_min) noexcept {
    if (d > range) return 0.0;
    const double p = 1.0 - std::pow(d / range, kappa);
    return std::clamp(p, p_min, 1.0);
}

double LinkGroundTruth::probability(NodeId from, NodeId to) const {
    if (from == to) return 0.0;
    const double d = dist(topo_->positions.at(from), topo_->positions.at(to));
    if (d > topo_->range) return 0.0;
    if (radio_.fixed_delivery_probability) return *radio_.fixed_delivery_probability;
    return distance_model(d, topo_->range, radio_.link_kappa, radio_.link_p_min);
}

std::string_view to_string(EventKind k) noexcept {
    switch (k) {
    case EventKind::PacketArrival: return "arrival";
    case EventKind::TransmissionComplete: return "tx_complete";
    case EventKind::AckReceived: return "ack";
    case EventKind::AckTimeout: return "ack_timeout";
    case EventKind::HelloDue: return "hello";
    case EventKind::PromotionTimer: return "promotion_timer";
    case EventKind::CbrTick: return "cbr";
    case EventKind::EnergyAudit: return "audit";
    }
    return "?";
}

struct LinkRx {
    PrrEstimator estimate;
    std::optional<std::uint32_t> last_hello;
    std::optional<std::uint32_t> last_data;
};

struct InService {
    Packet packet;
    NodeId next_hop{kNoNode};
    double t_s{0.0};
    double lag_at_receipt{0.0};
    double received_at{0.0};
    std::uint32_t attempts{0};
    std::uint64_t token{0};
};

struct Simulator::Node {
    NodeId id{kNoNode};
    Position position;
    bool powered{false};
    bool alive{true};
    std::optional<double> died_at;
    EnergyBudget budget;
    std::variant<QueueBank, FifoQueue> queue;
    NeighborTable table;
    DelayEstimator delays;
    std::map<NodeId, LinkRx> links;
    std::map<NodeId, std::uint32_t> data_seq;
    std::uint32_t hello_seq{0};
    std::unordered_set<PacketId> seen;
    std::optional<InService> current;
    bool active{false};

    Node(NodeId i, std::variant<QueueBank, FifoQueue> q, NeighborTable t, DelayEstimator d)
        : id(i), queue(std::move(q)), table(std::move(t)), delays(std::move(d)) {}
};

Simulator::Simulator(SimConfig cfg, std::uint64_t seed, std::ostream* trace)
    : Simulator(cfg, generate_topology(cfg, seed), seed, trace) {}

Simulator::Simulator(SimConfig cfg, Topology topo, std::uint64_t seed, std::ostream* trace)
    : cfg_(std::move(cfg)),
      seed_(seed),
      topo_(std::move(topo)),
      truth_(topo_, cfg_.radio),
      trace_(trace),
      traffic_rng_(stream(seed, 0x7a0f)),
      channel_rng_(stream(seed, 0xc4a1)),
      mac_rng_(stream(seed, 0x3ac0)) {
    if (topo_.in_range.size() != topo_.positions.size()) connect(topo_);
    policy_.protocol = cfg_.routing.protocol;
    policy_.prr_scope = cfg_.routing.critical_prr_scope;
    policy_.power = PowerModel{topo_.range, cfg_.energy.path_loss_exponent, cfg_.energy.tx_j};
    init();
}

Simulator::~Simulator() = default;

void Simulator::init() {
    const double dt_prior = cfg_.source.payload_bytes * 8.0 / cfg_.radio.bandwidth_bps;
    const PromotionRule rule{cfg_.queue.promotion_fraction, cfg_.queue.promotion_floor_s};
    for (std::size_t i = 0; i < topo_.size(); ++i) {
        const auto id = static_cast<NodeId>(i);
        std::variant<QueueBank, FifoQueue> q =
            cfg_.routing.protocol == Protocol::Tdthr
                ? std::variant<QueueBank, FifoQueue>(QueueBank(cfg_.queue.capacity, rule))
                : std::variant<QueueBank, FifoQueue>(FifoQueue(cfg_.queue.capacity));
        auto node = std::make_unique<Node>(
            id, std::move(q), NeighborTable(id, cfg_.hello.expiry(), cfg_.estimators.prr_prior),
            DelayEstimator(cfg_.estimators.delay_gamma, dt_prior));
        node->position = topo_.positions[i];
        node->powered = topo_.is_sink(id) && cfg_.energy.sinks_powered;
        node->budget.residual = Energy::from_joules(cfg_.energy.initial_j);
        node->budget.cost_tx = Energy::from_joules(cfg_.energy.tx_j);
        node->budget.cost_rx = Energy::from_joules(cfg_.energy.rx_j);
        node->budget.cost_sleep = Energy::from_joules(cfg_.energy.sleep_j);
        node->budget.cost_idle = Energy::from_joules(cfg_.energy.idle_j);
        if (!node->powered) initial_energy_ += node->budget.residual;
        nodes_.push_back(std::move(node));
    }

    end_time_ = cfg_.run.duration_s;
    ledger_.duration = cfg_.run.duration_s;

    auto phase_rng = stream(seed_, 0x4e11);
    for (std::size_t i = 0; i < topo_.size(); ++i) {
        Event ev;
        ev.kind = EventKind::HelloDue;
        ev.node = static_cast<NodeId>(i);
        ev.time = unit(phase_rng) * cfg_.hello.period_s;
        schedule(std::move(ev));
    }
    Event cbr;
    cbr.kind = EventKind::CbrTick;
    cbr.node = topo_.source;
    cbr.time = cfg_.traffic.start_time_s;
    schedule(std::move(cbr));
    Event audit;
    audit.kind = EventKind::EnergyAudit;
    audit.time = cfg_.energy.audit_period_s;
    schedule(std::move(audit));
}

void Simulator::schedule(Event ev) {
    if (ev.time < now_) throw InvariantViolation("event scheduled in the past");
    ev.sequence = next_sequence_++;
    heap_.push_back(std::move(ev));
    std::push_heap(heap_.begin(), heap_.end(), later);
}

void Simulator::run_until(double t) {
    if (finalized_) return;
    while (!heap_.empty()) {
        const double limit = std::min(t, end_time_);
        if (!(heap_.front().time < limit)) break;
        std::pop_heap(heap_.begin(), heap_.end(), later);
        Event ev = std::move(heap_.back());
        heap_.pop_back();
        if (ev.time < now_) throw InvariantViolation("event clock moved backwards");
        now_ = ev.time;
        ++events_processed_;
        dispatch(ev);
    }
    now_ = std::max(now_, std::min(t, end_time_));
}

MetricsLedger Simulator::run() {
    run_until(end_time_);
    if (finalized_) return ledger_;
    finalized_ = true;

    for (auto& [id, lg] : logical_) {
        if (lg.delivered || lg.finalized) continue;
        lg.finalized = true;
        ledger_.of(lg.cls).drops[static_cast<std::size_t>(DropCause::InFlight)]++;
    }
    for (const auto& n : nodes_) {
        std::visit([&](const auto& q) { ledger_.promotions += q.counters().promotions; }, n->queue);
        ledger_.malformed_messages += n->table.malformed();
    }
    ledger_.total_energy_spent = account_.total();
    ledger_.end_time = now_;

    if (initial_energy_ - residual_energy() != account_.total())
        throw InvariantViolation("energy ledger does not balance");
    for (const auto& s : ledger_.per_class) {
        if (s.generated != s.delivered + s.dropped())
            throw InvariantViolation("logical packet accounting does not close");
    }
    return ledger_;
}

void Simulator::dispatch(Event& ev) {
    switch (ev.kind) {
    case EventKind::CbrTick: on_cbr_tick(); break;
    case EventKind::HelloDue: on_hello_due(ev.node); break;
    case EventKind::EnergyAudit: on_energy_audit(); break;
    case EventKind::TransmissionComplete: on_transmission_complete(ev); break;
    case EventKind::PacketArrival: on_packet_arrival(ev); break;
    case EventKind::AckReceived: on_ack_received(ev); break;
    case EventKind::AckTimeout: on_ack_timeout(ev); break;
    case EventKind::PromotionTimer: on_promotion_timer(ev); break;
    }
}

// ---- traffic ------------------------------------------------------------------------------

void Simulator::on_cbr_tick() {
    if (traffic_stopped_) return;
    Node& src = *nodes_[topo_.source];
    if (!src.alive) return;

    const auto& tr = cfg_.traffic;
    const double u = unit(traffic_rng_);
    PacketClass cls = PacketClass::Regular;
    if (u < tr.critical_rate) {
        cls = PacketClass::Critical;
    } else if (u < tr.critical_rate + tr.delay_responsive_rate) {
        cls = PacketClass::DelayResponsive;
    } else if (u < tr.critical_rate + tr.delay_responsive_rate + tr.reliability_responsive_rate) {
        cls = PacketClass::ReliabilityResponsive;
    }

    Packet p;
    p.packet_id = next_packet_id_++;
    p.cls = cls;
    p.source = topo_.source;
    p.lag_time = tr.deadline_s;
    p.deadline = tr.deadline_s;
    p.payload_size = cfg_.source.payload_bytes;
    p.creation_time = now_;
    p.received_at = now_;
    p.trace.push_back({topo_.source, now_});

    std::vector<NodeId> by_distance = topo_.sinks;
    std::stable_sort(by_distance.begin(), by_distance.end(), [&](NodeId a, NodeId b) {
        return dist(src.position, topo_.positions[a]) < dist(src.position, topo_.positions[b]);
    });
    p.destination_sink = by_distance.front();

    auto& stats = ledger_.of(cls);
    stats.generated++;
    Logical lg;
    lg.cls = cls;
    lg.creation = now_;
    lg.deadline = tr.deadline_s;
    logical_.emplace(p.packet_id, lg);

    const bool duplicate = std::find(tr.duplicate_classes.begin(), tr.duplicate_classes.end(),
                                     cls) != tr.duplicate_classes.end();
    std::vector<Packet> copies{p};
    if (duplicate) {
        for (std::size_t i = 1; i < by_distance.size(); ++i) {
            Packet d = p;
            d.packet_id = next_packet_id_++;
            d.duplicate_of = p.packet_id;
            d.destination_sink = by_distance[i];
            copies.push_back(std::move(d));
        }
    }
    for (auto& c : copies) {
        stats.copies_generated++;
        trace("generate", topo_.source, c.packet_id,
              std::string(to_string(c.cls)) + " sink=" + std::to_string(c.destination_sink));
        emit(std::move(c));
    }
    try_serve(topo_.source);

    const double interval = cfg_.source.payload_bytes / cfg_.source.cbr_bytes_per_s;
    const double next = now_ + interval;
    if (next < end_time_) {
        Event ev;
        ev.kind = EventKind::CbrTick;
        ev.node = topo_.source;
        ev.time = next;
        schedule(std::move(ev));
    }
}

void Simulator::emit(Packet p) {
    Node& src = *nodes_[topo_.source];
    src.seen.insert(p.packet_id);
    src.active = true;
    hold(p);
    accept(src, std::move(p));
}

void Simulator::accept(Node& n, Packet p) {
    const PacketId pid = p.packet_id;
    const Packet keep = p;
    const EnqueueOutcome out =
        std::visit([&](auto& q) { return q.enqueue(std::move(p), now_); }, n.queue);
    if (!out.accepted) {
        trace("drop", n.id, pid, "queue_full");
        release(keep, DropCause::QueueFull);
        return;
    }
    if (out.timer_deadline) {
        Event ev;
        ev.kind = EventKind::PromotionTimer;
        ev.node = n.id;
        ev.packet_id = pid;
        ev.time = *out.timer_deadline;
        schedule(std::move(ev));
    }
}

// ---- forwarding service ----------------------------------------------------------------------

void Simulator::try_serve(NodeId x) {
    Node& n = *nodes_[x];
    while (n.alive && !n.current) {
        auto next = std::visit([&](auto& q) { return q.dequeue_next(now_); }, n.queue);
        if (!next) return;
        n.active = true;
        Packet p = std::move(next->packet);
        n.delays.update_queuing(p.cls, next->wait);

        const double bytes = p.payload_size;
        const double lt = remaining_lag(p.lag_time, p.received_at, now_, bytes,
                                        cfg_.radio.bandwidth_bps);
        if (lt <= 0.0 && is_deadline_bound(p.cls)) {
            trace("drop", x, p.packet_id, "deadline");
            release(p, DropCause::Deadline);
            continue;
        }

        const NeighborSnapshot snap = make_snapshot(n.table, n.delays, n.position, now_);
        RoutingDecision decision;
        try {
            decision = choose_next_hop(snap, p.cls, topo_.positions[p.destination_sink],
                                       p.destination_sink, lt, policy_);
        } catch (const VoidError&) {
            trace("drop", x, p.packet_id, "void");
            release(p, DropCause::Void);
            continue;
        }
        if (decision.missed_velocity) {
            p.missed_velocity = true;
            flag_missed_velocity(p);
        }

        InService svc;
        svc.next_hop = decision.next_hop;
        svc.t_s = now_;
        svc.lag_at_receipt = p.lag_time;
        svc.received_at = p.received_at;
        svc.packet = std::move(p);
        n.current = std::move(svc);
        trace("forward", x, n.current->packet.packet_id,
              "next=" + std::to_string(decision.next_hop) +
                  (decision.missed_velocity ? " missed_velocity" : ""));
        start_attempt(x);
    }
}

void Simulator::start_attempt(NodeId x) {
    Node& n = *nodes_[x];
    InService& svc = *n.current;
    svc.attempts++;
    svc.token = ++next_token_;

    const NodeId y = svc.next_hop;
    const double d = std::max(dist(n.position, topo_.positions[y]), 1e-9);
    const double cost_j = tx_power_cost(std::min(d, topo_.range), cfg_.energy.path_loss_exponent,
                                        topo_.range, cfg_.energy.tx_j);
    if (!charge(n, Energy::from_joules(cost_j), &EnergyAccount::tx)) {
        trace("drop", x, svc.packet.packet_id, "dead_node");
        finish_service(x, DropCause::DeadNode);
        return;
    }
    ledger_.hop_attempts++;

    const double backoff = unit(mac_rng_) * cfg_.radio.backoff_window_s;
    const double serialization = svc.packet.payload_size * 8.0 / cfg_.radio.bandwidth_bps;
    Event ev;
    ev.kind = EventKind::TransmissionComplete;
    ev.node = x;
    ev.peer = y;
    ev.token = svc.token;
    ev.link_seq = ++n.data_seq[y];
    ev.time = now_ + backoff + serialization;
    schedule(std::move(ev));
}

void Simulator::on_transmission_complete(const Event& ev) {
    Node& n = *nodes_[ev.node];
    if (!n.current || n.current->token != ev.token) return;
    InService& svc = *n.current;
    const NodeId y = ev.peer;
    const double d = dist(n.position, topo_.positions[y]);
    const double prop = d / cfg_.radio.propagation_speed_mps;
    const double serialization = svc.packet.payload_size * 8.0 / cfg_.radio.bandwidth_bps;

    const bool delivered = unit(channel_rng_) < truth_.probability(ev.node, y);
    trace(EventKind::TransmissionComplete, ev.node, svc.packet.packet_id,
          "to=" + std::to_string(y) + " attempt=" + std::to_string(svc.attempts) +
              (delivered ? " ok" : " lost"));
    if (delivered) {
        auto copy = std::make_shared<Packet>(svc.packet);
        copy->lag_time = remaining_lag(svc.lag_at_receipt, svc.received_at, now_ - serialization,
                                       svc.packet.payload_size, cfg_.radio.bandwidth_bps);
        Event arr;
        arr.kind = EventKind::PacketArrival;
        arr.node = y;
        arr.peer = ev.node;
        arr.token = ev.token;
        arr.link_seq = ev.link_seq;
        arr.packet = std::move(copy);
        arr.time = now_ + prop;
        schedule(std::move(arr));
    }
    const double ack_ser = cfg_.radio.ack_bytes * 8.0 / cfg_.radio.bandwidth_bps;
    Event to;
    to.kind = EventKind::AckTimeout;
    to.node = ev.node;
    to.peer = y;
    to.token = ev.token;
    to.time = now_ + 2.0 * prop + ack_ser + kAckGuard;
    schedule(std::move(to));
}

void Simulator::on_packet_arrival(const Event& ev) {
    Node& y = *nodes_[ev.node];
    if (!y.alive) return;
    if (!charge(y, y.budget.cost_rx, &EnergyAccount::rx)) return;
    y.active = true;
    note_link_rx(y, ev.peer, ev.link_seq, false);
    if (!y.alive) return;

    const Packet& incoming = *ev.packet;
    trace(EventKind::PacketArrival, y.id, incoming.packet_id, "from=" + std::to_string(ev.peer));

    if (charge(y, y.budget.cost_idle, &EnergyAccount::ack)) {
        AckPiggyback ack;
        ack.sender = y.id;
        auto it = y.links.find(ev.peer);
        ack.prr_reverse = it->second.estimate.value();
        ack.dq = y.delays.queuing();
        ack.energy = y.powered ? cfg_.energy.initial_j : y.budget.residual.joules();
        if (unit(channel_rng_) < truth_.probability(y.id, ev.peer)) {
            const double prop = dist(y.position, topo_.positions[ev.peer]) /
                                cfg_.radio.propagation_speed_mps;
            Event a;
            a.kind = EventKind::AckReceived;
            a.node = ev.peer;
            a.peer = y.id;
            a.token = ev.token;
            a.ack = ack;
            a.time = now_ + cfg_.radio.ack_bytes * 8.0 / cfg_.radio.bandwidth_bps + prop;
            schedule(std::move(a));
        }
    }

    if (!y.seen.insert(incoming.packet_id).second) return;
    Packet p = incoming;
    p.hop_count++;
    p.received_at = now_;
    p.trace.push_back({y.id, now_});
    hold(p);
    if (topo_.is_sink(y.id)) {
        deliver(y.id, p);
        release(p, std::nullopt);
        return;
    }
    if (!y.alive) {
        release(p, DropCause::DeadNode);
        return;
    }
    accept(y, std::move(p));
    try_serve(y.id);
}

void Simulator::on_ack_received(const Event& ev) {
    Node& n = *nodes_[ev.node];
    if (!n.current || n.current->token != ev.token) return;
    if (n.alive && charge(n, n.budget.cost_idle, &EnergyAccount::ack) && n.alive) {
        n.delays.update_transmission(ev.peer, n.current->t_s, now_, cfg_.radio.ack_bytes,
                                     cfg_.radio.bandwidth_bps);
        n.table.process_ack(ev.ack, now_);
    }
    trace(EventKind::AckReceived, n.id, n.current->packet.packet_id,
          "from=" + std::to_string(ev.peer));
    finish_service(n.id, std::nullopt);
}

void Simulator::on_ack_timeout(const Event& ev) {
    Node& n = *nodes_[ev.node];
    if (!n.current || n.current->token != ev.token) return;
    if (!n.alive) {
        trace("drop", n.id, n.current->packet.packet_id, "dead_node");
        finish_service(n.id, DropCause::DeadNode);
        return;
    }
    if (n.current->attempts <= cfg_.radio.max_retries) {
        start_attempt(n.id);
        return;
    }
    trace("drop", n.id, n.current->packet.packet_id,
          "retries_exhausted next=" + std::to_string(ev.peer));
    finish_service(n.id, DropCause::RetriesExhausted);
}

void Simulator::finish_service(NodeId x, std::optional<DropCause> cause) {
    Node& n = *nodes_[x];
    Packet p = std::move(n.current->packet);
    n.current.reset();
    release(p, cause);
    if (n.alive) try_serve(x);
}

void Simulator::on_promotion_timer(const Event& ev) {
    Node& n = *nodes_[ev.node];
    if (!n.alive) return;
    const bool moved =
        std::visit([&](auto& q) { return q.on_timer_expire(ev.packet_id, now_); }, n.queue);
    if (moved) trace(EventKind::PromotionTimer, n.id, ev.packet_id, "promoted");
}

void Simulator::deliver(NodeId sink, const Packet& p) {
    for (std::size_t i = 1; i < p.trace.size(); ++i) {
        if (!(p.trace[i].arrival > p.trace[i - 1].arrival))
            throw InvariantViolation("hop trace not strictly increasing for packet " +
                                     std::to_string(p.packet_id));
    }
    auto& lg = logical_.at(p.logical_id());
    DeliveryRecord rec;
    rec.packet_id = p.packet_id;
    rec.logical_id = p.logical_id();
    rec.cls = p.cls;
    rec.sink = sink;
    rec.delay = now_ - p.creation_time;
    rec.trace = p.trace;
    rec.first_copy = !lg.delivered;
    if (!lg.delivered) {
        if (lg.finalized) throw InvariantViolation("delivery after the packet was written off");
        lg.delivered = true;
        auto& stats = ledger_.of(lg.cls);
        stats.delivered++;
        stats.delays.push_back(rec.delay);
        if (rec.delay > lg.deadline) stats.deadline_misses++;
    }
    trace("deliver", sink, p.packet_id, "delay=" + format_g6(rec.delay));
    deliveries_.push_back(std::move(rec));
}

// ---- neighborhood ----------------------------------------------------------------------------

void Simulator::note_link_rx(Node& receiver, NodeId sender, std::uint32_t seq, bool hello) {
    auto [it, inserted] = receiver.links.try_emplace(
        sender, LinkRx{PrrEstimator(cfg_.estimators.prr_window, cfg_.estimators.prr_beta,
                                    cfg_.estimators.prr_prior),
                       std::nullopt, std::nullopt});
    LinkRx& link = it->second;
    auto& last = hello ? link.last_hello : link.last_data;
    if (last && seq > *last + 1) link.estimate.record_missed(seq - *last - 1);
    if (!last || seq > *last) last = seq;
    link.estimate.record(true);
}

void Simulator::on_hello_due(NodeId x) {
    Node& n = *nodes_[x];
    if (!n.alive) return;
    n.table.expire(now_);

    HelloMessage hello;
    hello.sender = x;
    hello.seq = ++n.hello_seq;
    hello.position = n.position;
    hello.energy = n.powered ? cfg_.energy.initial_j : n.budget.residual.joules();
    hello.dq = n.delays.queuing();
    for (const auto& [sender, link] : n.links) hello.reverse_prr.push_back({sender, link.estimate.value()});
    for (NodeId id : n.table.one_hop_set(now_)) {
        const NeighborRecord* rec = n.table.find(id);
        hello.one_hop.push_back({id, rec->position, n.delays.transmission(id), rec->prr, rec->energy});
    }

    if (charge(n, n.budget.cost_idle, &EnergyAccount::hello)) {
        ledger_.hello_messages++;
        ledger_.hello_bytes += wire_bytes(hello, cfg_.hello.layout);
        trace(EventKind::HelloDue, x, 0, "seq=" + std::to_string(hello.seq));
        for (NodeId y : topo_.in_range[x]) {
            const bool heard = unit(channel_rng_) < truth_.probability(x, y);
            Node& r = *nodes_[y];
            if (!heard || !r.alive) continue;
            if (!charge(r, r.budget.cost_idle, &EnergyAccount::hello)) continue;
            note_link_rx(r, x, hello.seq, true);
            r.table.process_hello(hello, now_);
        }
    }

    if (n.alive) {
        Event ev;
        ev.kind = EventKind::HelloDue;
        ev.node = x;
        ev.time = now_ + cfg_.hello.period_s;
        if (ev.time < end_time_) schedule(std::move(ev));
    }
}

// ---- energy ----------------------------------------------------------------------------------

bool Simulator::charge(Node& n, Energy amount, Energy EnergyAccount::*bucket) {
    if (n.powered) return true;
    if (!n.alive) return false;
    if (!n.budget.can_afford(amount)) {
        kill(n);
        return false;
    }
    n.budget.residual -= amount;
    account_.*bucket += amount;
    if (!n.budget.alive()) kill(n);
    return true;
}

void Simulator::on_energy_audit() {
    for (auto& np : nodes_) {
        Node& n = *np;
        if (n.powered || !n.alive) {
            n.active = false;
            continue;
        }
        const Energy cost = n.active ? n.budget.cost_idle : n.budget.cost_sleep;
        const Energy paid = std::min(cost, n.budget.residual);
        n.budget.residual -= paid;
        account_.audit += paid;
        n.active = false;
        if (!n.budget.alive()) kill(n);
    }
    const double next = now_ + cfg_.energy.audit_period_s;
    if (next < end_time_) {
        Event ev;
        ev.kind = EventKind::EnergyAudit;
        ev.time = next;
        schedule(std::move(ev));
    }
}

void Simulator::kill(Node& n) {
    if (!n.alive || n.powered) return;
    n.alive = false;
    n.died_at = now_;
    ledger_.dead_nodes++;
    trace("death", n.id, 0, "residual_nj=" + std::to_string(n.budget.residual.nanojoules()));

    auto flushed = std::visit([](auto& q) { return q.flush(); }, n.queue);
    for (const auto& p : flushed) release(p, DropCause::DeadNode);

    if (cfg_.run.lifetime == LifetimeDefinition::FirstDeath) {
        if (!ledger_.lifetime_event) ledger_.lifetime_event = now_;
    } else if (!ledger_.lifetime_event) {
        std::vector<bool> up(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) up[i] = nodes_[i]->alive;
        if (!reaches_sink(topo_, topo_.source, up)) ledger_.lifetime_event = now_;
    }
    if (n.id == topo_.source) {
        traffic_stopped_ = true;
        end_time_ = std::min(end_time_, now_ + cfg_.run.drain_after_source_death_s);
    }
}

// ---- logical-packet ledger -------------------------------------------------------------------

void Simulator::hold(const Packet& p) {
    auto& lg = logical_.at(p.logical_id());
    lg.holders++;
}

void Simulator::release(const Packet& p, std::optional<DropCause> cause) {
    auto& lg = logical_.at(p.logical_id());
    if (lg.holders <= 0) throw InvariantViolation("released a packet nobody holds");
    lg.holders--;
    if (cause) lg.last_cause = cause;
    if (lg.holders > 0 || lg.delivered || lg.finalized) return;
    lg.finalized = true;
    const DropCause c = lg.last_cause.value_or(DropCause::Void);
    auto& stats = ledger_.of(lg.cls);
    stats.drops[static_cast<std::size_t>(c)]++;
    if (c == DropCause::Deadline) stats.deadline_misses++;
}

void Simulator::flag_missed_velocity(const Packet& p) {
    auto& lg = logical_.at(p.logical_id());
    if (lg.missed_velocity) return;
    lg.missed_velocity = true;
    ledger_.of(lg.cls).missed_velocity++;
}

// ---- tracing and accessors -------------------------------------------------------------------

void Simulator::trace(EventKind kind, NodeId node, PacketId pid, const std::string& detail) {
    trace(to_string(kind), node, pid, detail);
}

void Simulator::trace(std::string_view kind, NodeId node, PacketId pid, const std::string& detail) {
    if (!trace_) return;
    char head[96];
    std::snprintf(head, sizeof head, "%.9f %u ", now_, node);
    *trace_ << head << kind << ' ' << pid << ' ' << detail << '\n';
}

const NeighborTable& Simulator::table(NodeId id) const { return nodes_.at(id)->table; }

NeighborSnapshot Simulator::snapshot(NodeId id) const {
    const Node& n = *nodes_.at(id);
    return make_snapshot(n.table, n.delays, n.position, now_);
}

const EnergyBudget& Simulator::energy(NodeId id) const { return nodes_.at(id)->budget; }
bool Simulator::alive(NodeId id) const { return nodes_.at(id)->alive; }
std::optional<double> Simulator::death_time(NodeId id) const { return nodes_.at(id)->died_at; }
const DelayEstimator& Simulator::delays(NodeId id) const { return nodes_.at(id)->delays; }

const PrrEstimator* Simulator::link_estimate(NodeId receiver, NodeId sender) const {
    const auto& links = nodes_.at(receiver)->links;
    auto it = links.find(sender);
    return it == links.end() ? nullptr : &it->second.estimate;
}

Energy Simulator::residual_energy() const {
    Energy total;
    for (const auto& n : nodes_)
        if (!n->powered) total += n->budget.residual;
    return total;
}

MetricsLedger simulate(const SimConfig& cfg, std::uint64_t seed, std::ostream* trace) {
    Simulator sim(cfg, seed, trace);
    return sim.run();
}

} // namespace tdthr
