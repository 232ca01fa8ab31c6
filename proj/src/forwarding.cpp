#include "tdthr/forwarding.hpp"

#include <algorithm>
#include <stdexcept>

namespace tdthr {

std::string_view to_string(Protocol p) noexcept {
    switch (p) {
    case Protocol::Tdthr: return "TDTHR";
    case Protocol::OneHopVelocity: return "OneHopVelocity";
    case Protocol::GreedyGeo: return "GreedyGeo";
    }
    return "?";
}

std::optional<Protocol> parse_protocol(std::string_view name) noexcept {
    for (auto p : {Protocol::Tdthr, Protocol::OneHopVelocity, Protocol::GreedyGeo}) {
        if (to_string(p) == name) return p;
    }
    return std::nullopt;
}

std::string_view to_string(PrrScope s) noexcept {
    return s == PrrScope::OneHop ? "one_hop" : "two_hop";
}

std::optional<PrrScope> parse_prr_scope(std::string_view name) noexcept {
    if (name == "one_hop") return PrrScope::OneHop;
    if (name == "two_hop") return PrrScope::TwoHop;
    return std::nullopt;
}

double remaining_lag(double lt_p, double t_rx, double t_tx, double packet_bytes,
                     double bandwidth_bps) noexcept {
    return lt_p - (t_tx - t_rx + packet_bytes * 8.0 / bandwidth_bps);
}

double update_lag_time(double lt_p, double t_rx, double t_tx, double packet_bytes,
                       double bandwidth_bps) {
    if (t_tx < t_rx) throw std::invalid_argument("transmission before reception");
    const double lt = remaining_lag(lt_p, t_rx, t_tx, packet_bytes, bandwidth_bps);
    if (!(lt > 0.0)) throw DeadlineExpired(lt);
    return lt;
}

double required_velocity(double dist_to_sink, double lag) {
    if (!(lag > 0.0)) throw DeadlineExpired(lag);
    return dist_to_sink / lag;
}

VelocityContext make_velocity_context(std::vector<ForwarderPair> candidates, double dist_to_sink,
                                      double lag) {
    VelocityContext ctx;
    ctx.lag_time = lag;
    ctx.dist_to_sink = dist_to_sink;
    ctx.required_velocity = required_velocity(dist_to_sink, lag);
    ctx.candidates = std::move(candidates);
    for (const auto& p : ctx.candidates) {
        if (p.velocity >= ctx.required_velocity) ctx.qualifying.push_back(p);
    }
    return ctx;
}

namespace {

// Highest power score, lower node id on ties.
NodeId best_power(const std::vector<const ForwarderPair*>& set) {
    const ForwarderPair* best = set.front();
    for (const auto* p : set) {
        if (p->power_score > best->power_score ||
            (p->power_score == best->power_score && p->y < best->y)) {
            best = p;
        }
    }
    return best->y;
}

} // namespace

NodeId select_next_hop(PacketClass cls, const VelocityContext& ctx, PrrScope scope) {
    if (!is_deadline_bound(cls))
        throw std::invalid_argument("velocity selection applies to deadline-bound classes only");
    const auto& s_req = ctx.qualifying;
    if (s_req.empty()) throw NoQualifyingPair();
    if (s_req.size() == 1) return s_req.front().y;

    std::vector<const ForwarderPair*> all;
    for (const auto& p : s_req) all.push_back(&p);
    if (cls == PacketClass::DelayResponsive) return best_power(all);

    auto prr_of = [scope](const ForwarderPair& p) {
        return scope == PrrScope::TwoHop ? p.prr_path : p.prr_first;
    };
    double top = prr_of(s_req.front());
    for (const auto& p : s_req) top = std::max(top, prr_of(p));
    std::vector<const ForwarderPair*> s_c;
    for (const auto& p : s_req) {
        if (prr_of(p) == top) s_c.push_back(&p);
    }
    if (s_c.size() == 1) return s_c.front()->y;
    return best_power(s_c);
}

NodeId route_regular(const NeighborSnapshot& snap, Position destination) {
    const double own = dist(snap.position, destination);
    NodeId best = kNoNode;
    double best_progress = 0.0;
    for (NodeId y : favorable_one_hop(snap, destination)) {
        const double progress = own - dist(snap.find(y)->position, destination);
        if (best == kNoNode || progress > best_progress) {
            best = y;
            best_progress = progress;
        }
    }
    if (best == kNoNode) throw VoidError();
    return best;
}

NodeId route_reliability(const NeighborSnapshot& snap, Position destination,
                         const std::vector<ForwarderPair>& pairs, const PowerModel& power) {
    auto better = [](double prr, double score, NodeId y, double bprr, double bscore, NodeId by) {
        if (prr != bprr) return prr > bprr;
        if (score != bscore) return score > bscore;
        return y < by;
    };
    if (!pairs.empty()) {
        const ForwarderPair* best = &pairs.front();
        for (const auto& p : pairs) {
            if (better(p.prr_path, p.power_score, p.y, best->prr_path, best->power_score, best->y))
                best = &p;
        }
        return best->y;
    }
    NodeId best = kNoNode;
    double bprr = 0.0;
    double bscore = 0.0;
    for (NodeId y : favorable_one_hop(snap, destination)) {
        const NeighborRecord& r = *snap.find(y);
        const double score = power_score(r.energy, dist(snap.position, r.position), power);
        if (best == kNoNode || better(r.prr, score, y, bprr, bscore, best)) {
            best = y;
            bprr = r.prr;
            bscore = score;
        }
    }
    if (best == kNoNode) throw VoidError();
    return best;
}

std::vector<ForwarderPair> one_hop_candidates(const NeighborSnapshot& snap, Position destination,
                                              const PowerModel& power) {
    const double own = dist(snap.position, destination);
    std::vector<ForwarderPair> out;
    for (NodeId y : favorable_one_hop(snap, destination)) {
        const NeighborRecord& r = *snap.find(y);
        ForwarderPair p;
        p.y = y;
        p.z = y;
        p.progress = own - dist(r.position, destination);
        p.denominator = r.dt;
        p.velocity = offered_velocity(p.progress, 0.0, r.dt, 0.0, 0.0);
        p.prr_first = r.prr;
        p.prr_path = r.prr;
        p.power_score = power_score(r.energy, dist(snap.position, r.position), power);
        out.push_back(p);
    }
    return out;
}

NodeId fastest_pair(const std::vector<ForwarderPair>& pairs) {
    if (pairs.empty()) throw VoidError();
    const ForwarderPair* best = &pairs.front();
    for (const auto& p : pairs) {
        if (p.velocity > best->velocity ||
            (p.velocity == best->velocity && (p.y < best->y || (p.y == best->y && p.z < best->z))))
            best = &p;
    }
    return best->y;
}

namespace {

RoutingDecision velocity_route(PacketClass cls, std::vector<ForwarderPair> candidates,
                               double dist_to_sink, double lag, PrrScope scope) {
    if (candidates.empty()) throw VoidError();
    if (!(lag > 0.0)) return {fastest_pair(candidates), true};
    const VelocityContext ctx = make_velocity_context(std::move(candidates), dist_to_sink, lag);
    try {
        return {select_next_hop(cls, ctx, scope), false};
    } catch (const NoQualifyingPair&) {
        return {fastest_pair(ctx.candidates), true};
    }
}

} // namespace

RoutingDecision choose_next_hop(const NeighborSnapshot& snap, PacketClass cls,
                                Position destination, NodeId destination_id, double lag,
                                const RoutingPolicy& policy) {
    if (snap.find(destination_id) != nullptr) return {destination_id, false};

    if (policy.protocol == Protocol::GreedyGeo || cls == PacketClass::Regular)
        return {route_regular(snap, destination), false};

    const double to_sink = dist(snap.position, destination);
    if (policy.protocol == Protocol::OneHopVelocity) {
        if (cls == PacketClass::ReliabilityResponsive)
            return {route_reliability(snap, destination, {}, policy.power), false};
        return velocity_route(cls, one_hop_candidates(snap, destination, policy.power), to_sink,
                              lag, policy.prr_scope);
    }

    auto pairs = favorable_pairs(snap, destination, cls, policy.power);
    if (cls == PacketClass::ReliabilityResponsive)
        return {route_reliability(snap, destination, pairs, policy.power), false};
    if (pairs.empty()) pairs = one_hop_candidates(snap, destination, policy.power);
    return velocity_route(cls, std::move(pairs), to_sink, lag, policy.prr_scope);
}

} // namespace tdthr
