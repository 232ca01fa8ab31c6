#pragma once

// Drives a QueueBank and the reference model with one random operation sequence and
// reports the first disagreement.

#include <map>
#include <string>

#include "generators.hpp"
#include "oracles.hpp"
#include "tdthr/queueing.hpp"

namespace qcheck {

inline std::string run_sequence(std::uint64_t seed, int ops) {
    using namespace tdthr;
    gen::Rng r(seed);
    const std::size_t cap = 1 + r.below(6);
    QueueBank bank(cap);
    oracle::QueueModel model(cap);
    std::map<PacketId, double> timers; // pending promotion deadlines
    double now = 0.0;
    PacketId next = 1;
    const PacketClass classes[] = {PacketClass::Critical, PacketClass::DelayResponsive,
                                   PacketClass::ReliabilityResponsive, PacketClass::Regular};

    for (int i = 0; i < ops; ++i) {
        now += r.uniform(0.0, 0.02);
        // fire due timers in deadline order, as the event loop would
        for (;;) {
            auto due = timers.end();
            for (auto it = timers.begin(); it != timers.end(); ++it)
                if (it->second <= now && (due == timers.end() || it->second < due->second)) due = it;
            if (due == timers.end()) break;
            const PacketId id = due->first;
            timers.erase(due);
            if (bank.on_timer_expire(id, now) != model.promote(id))
                return "promotion disagreement at op " + std::to_string(i);
        }

        const std::size_t op = r.below(10);
        if (op < 5) {
            Packet p;
            p.packet_id = next++;
            p.cls = classes[r.below(4)];
            p.lag_time = r.uniform(0.0, 0.1);
            const auto got = bank.enqueue(p, now);
            const bool want = model.offer(p.packet_id, p.cls, now);
            if (got.accepted != want) return "admission disagreement at op " + std::to_string(i);
            const bool timed = want && p.cls != PacketClass::Critical;
            if (got.timer_deadline.has_value() != timed)
                return "timer arming disagreement at op " + std::to_string(i);
            if (timed) {
                const double expect = now + std::max(0.010, 0.5 * p.lag_time);
                if (*got.timer_deadline != expect) return "timer deadline wrong at op " + std::to_string(i);
                timers[p.packet_id] = *got.timer_deadline;
            }
        } else if (op < 9) {
            const auto got = bank.dequeue_next(now);
            const auto want = model.take();
            if (got.has_value() != want.has_value())
                return "dequeue presence disagreement at op " + std::to_string(i);
            if (got) {
                if (got->packet.packet_id != want->id) return "dequeue order disagreement at op " + std::to_string(i);
                if (got->promoted != want->promoted) return "promoted flag disagreement at op " + std::to_string(i);
                if (got->wait != now - want->enqueued) return "wait sample disagreement at op " + std::to_string(i);
                if (got->packet.cls != want->cls) return "class changed at op " + std::to_string(i);
                timers.erase(want->id); // stopped at dequeue
            }
        } else {
            // stale timer for a packet that may already be gone
            if (next > 1) {
                const PacketId id = 1 + static_cast<PacketId>(r.below(next - 1));
                if (!timers.count(id) && bank.on_timer_expire(id, now) != model.promote(id))
                    return "stale timer disagreement at op " + std::to_string(i);
            }
        }
        if (bank.size() != model.size()) return "size disagreement at op " + std::to_string(i);
        for (int k = 0; k < 3; ++k) {
            if (k > 0 && bank.size(static_cast<QueueKind>(k)) > cap)
                return "capacity exceeded at op " + std::to_string(i);
            if (bank.size(static_cast<QueueKind>(k)) != model.lists[k].size())
                return "lane size disagreement at op " + std::to_string(i);
        }
    }
    // accounting closure: everything offered was dropped, sent or is still resident
    const auto& c = bank.counters();
    std::uint64_t offered = 0, gone = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        offered += c.offered[k];
        gone += c.dropped[k] + c.dequeued[k];
    }
    if (offered != gone + bank.size()) return "accounting does not close";
    if (bank.flush().size() != model.size()) return "flush disagreement";
    return {};
}

} // namespace qcheck
