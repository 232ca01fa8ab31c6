#include "tdthr/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace tdthr {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
bool probability(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }
bool finite_pos(Position p) { return std::isfinite(p.x) && std::isfinite(p.y); }

} // namespace

std::size_t wire_bytes(const HelloMessage& hello, const HelloLayout& layout) noexcept {
    return layout.sender_bytes + layout.position_bytes + layout.energy_bytes + layout.dq_bytes +
           hello.reverse_prr.size() * layout.reverse_entry_bytes +
           hello.one_hop.size() * layout.one_hop_entry_bytes;
}

bool well_formed(const HelloMessage& hello) noexcept {
    if (hello.sender == kNoNode || !finite_pos(hello.position) || !finite_nonneg(hello.energy))
        return false;
    for (double dq : hello.dq) {
        if (!finite_nonneg(dq)) return false;
    }
    std::set<NodeId> seen;
    for (const auto& e : hello.reverse_prr) {
        if (e.neighbor == kNoNode || e.neighbor == hello.sender || !probability(e.prr)) return false;
        if (!seen.insert(e.neighbor).second) return false;
    }
    seen.clear();
    for (const auto& e : hello.one_hop) {
        if (e.id == kNoNode || e.id == hello.sender || !finite_pos(e.position)) return false;
        if (!finite_nonneg(e.dt) || !probability(e.prr) || !finite_nonneg(e.energy)) return false;
        if (!seen.insert(e.id).second) return false;
    }
    return true;
}

NeighborTable::NeighborTable(NodeId owner, double expiry, double prr_prior)
    : owner_(owner), expiry_(expiry), prr_prior_(prr_prior) {}

bool NeighborTable::process_hello(const HelloMessage& hello, double now) {
    if (!well_formed(hello) || hello.sender == owner_) {
        ++malformed_;
        return false;
    }
    auto [it, inserted] = records_.try_emplace(hello.sender);
    NeighborRecord& rec = it->second;
    if (inserted) {
        rec.neighbor = hello.sender;
        rec.prr = prr_prior_;
    }
    rec.position = hello.position;
    rec.energy = hello.energy;
    rec.dq = hello.dq;
    rec.last_heard = now;
    for (const auto& e : hello.reverse_prr) {
        if (e.neighbor == owner_) rec.prr = e.prr;
    }
    rec.two_hop.clear();
    for (const auto& e : hello.one_hop) {
        if (e.id != owner_) rec.two_hop.push_back(e);
    }
    return true;
}

bool NeighborTable::process_ack(const AckPiggyback& ack, double now) {
    auto it = records_.find(ack.sender);
    if (it == records_.end()) return false;
    if (!probability(ack.prr_reverse) || !finite_nonneg(ack.energy)) {
        ++malformed_;
        return false;
    }
    NeighborRecord& rec = it->second;
    rec.prr = ack.prr_reverse;
    rec.dq = ack.dq;
    rec.energy = ack.energy;
    rec.last_heard = now;
    return true;
}

std::size_t NeighborTable::expire(double now) {
    return std::erase_if(records_, [&](const auto& kv) { return !live(kv.second, now); });
}

bool NeighborTable::evict(NodeId id) { return records_.erase(id) > 0; }

std::vector<NodeId> NeighborTable::one_hop_set(double now) const {
    std::vector<NodeId> out;
    for (const auto& [id, rec] : records_) {
        if (live(rec, now)) out.push_back(id);
    }
    return out;
}

std::vector<NodeId> NeighborTable::two_hop_set(double now) const {
    std::set<NodeId> out;
    for (const auto& [id, rec] : records_) {
        if (!live(rec, now)) continue;
        for (const auto& e : rec.two_hop) {
            if (e.id != owner_) out.insert(e.id);
        }
    }
    return {out.begin(), out.end()};
}

const NeighborRecord* NeighborTable::find(NodeId id) const {
    auto it = records_.find(id);
    return it == records_.end() ? nullptr : &it->second;
}

const NeighborRecord* NeighborSnapshot::find(NodeId id) const {
    auto it = std::lower_bound(neighbors.begin(), neighbors.end(), id,
                               [](const NeighborRecord& r, NodeId v) { return r.neighbor < v; });
    return it != neighbors.end() && it->neighbor == id ? &*it : nullptr;
}

NeighborSnapshot make_snapshot(const NeighborTable& table, const DelayEstimator& delays,
                               Position self_position, double now) {
    NeighborSnapshot snap;
    snap.self = table.owner();
    snap.position = self_position;
    snap.dq = delays.queuing();
    for (NodeId id : table.one_hop_set(now)) {
        NeighborRecord rec = *table.find(id);
        rec.dt = delays.transmission(id);
        snap.neighbors.push_back(std::move(rec));
    }
    return snap;
}

double power_score(double energy, double distance, const PowerModel& power) {
    return energy / tx_power_cost(distance, power.alpha, power.range, power.cost_tx);
}

double offered_velocity(double progress, double dq_x, double dt_xy, double dq_y, double dt_yz) {
    const double denominator = dq_x + dt_xy + dq_y + dt_yz;
    if (!(denominator > 0.0)) throw std::domain_error("offered velocity with zero delay");
    return progress / denominator;
}

std::vector<NodeId> favorable_one_hop(const NeighborSnapshot& snap, Position destination) {
    const double own = dist(snap.position, destination);
    std::vector<NodeId> out;
    for (const auto& rec : snap.neighbors) {
        if (rec.neighbor == snap.self) continue;
        if (own - dist(rec.position, destination) > 0.0) out.push_back(rec.neighbor);
    }
    return out;
}

std::vector<ForwarderPair> favorable_pairs(const NeighborSnapshot& snap, Position destination,
                                           PacketClass cls, const PowerModel& power) {
    const double own = dist(snap.position, destination);
    const double dq_x = snap.dq[class_index(cls)];
    std::vector<ForwarderPair> out;
    for (NodeId y : favorable_one_hop(snap, destination)) {
        const NeighborRecord& ry = *snap.find(y);
        const double y_to_d = dist(ry.position, destination);
        const double score = power_score(ry.energy, dist(snap.position, ry.position), power);
        for (const auto& z : ry.two_hop) {
            if (z.id == snap.self || z.id == y) continue;
            const double z_to_d = dist(z.position, destination);
            if (!(y_to_d - z_to_d > 0.0)) continue;
            ForwarderPair p;
            p.y = y;
            p.z = z.id;
            p.progress = own - z_to_d;
            p.denominator = dq_x + ry.dt + ry.dq[class_index(cls)] + z.dt;
            p.velocity = offered_velocity(p.progress, dq_x, ry.dt, ry.dq[class_index(cls)], z.dt);
            p.prr_first = ry.prr;
            p.prr_path = ry.prr * z.prr;
            p.power_score = score;
            out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end(), [](const ForwarderPair& a, const ForwarderPair& b) {
        return a.y != b.y ? a.y < b.y : a.z < b.z;
    });
    return out;
}

} // namespace tdthr
