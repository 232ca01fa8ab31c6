#include "tdthr/queueing.hpp"

#include <algorithm>

namespace tdthr {

double PromotionRule::delay_for(const Packet& p) const noexcept {
    return std::max(floor, fraction * p.lag_time);
}

QueueBank::QueueBank(std::size_t capacity_per_queue, PromotionRule rule)
    : capacity_(capacity_per_queue), rule_(rule) {}

QueueKind QueueBank::target_queue(PacketClass cls) noexcept {
    switch (cls) {
    case PacketClass::Critical: return QueueKind::Critical;
    case PacketClass::DelayResponsive: return QueueKind::Delay;
    default: return QueueKind::Reliability;
    }
}

std::deque<QueuedPacket>& QueueBank::q(QueueKind kind) noexcept {
    switch (kind) {
    case QueueKind::Critical: return critical_;
    case QueueKind::Delay: return delay_;
    default: return reliability_;
    }
}

const std::deque<QueuedPacket>& QueueBank::queue(QueueKind kind) const noexcept {
    return const_cast<QueueBank*>(this)->q(kind);
}

EnqueueOutcome QueueBank::enqueue(Packet packet, double now) {
    const auto ci = class_index(packet.cls);
    ++counters_.offered[ci];
    const QueueKind kind = target_queue(packet.cls);
    auto& target = q(kind);
    if (target.size() >= capacity_) {
        ++counters_.dropped[ci];
        return {};
    }
    QueuedPacket entry{std::move(packet), now, std::nullopt, false};
    if (kind != QueueKind::Critical) entry.timer_deadline = now + rule_.delay_for(entry.packet);
    EnqueueOutcome out{true, entry.timer_deadline};
    target.push_back(std::move(entry));
    return out;
}

std::optional<Dequeued> QueueBank::dequeue_next(double now) {
    for (auto kind : {QueueKind::Critical, QueueKind::Delay, QueueKind::Reliability}) {
        auto& src = q(kind);
        if (src.empty()) continue;
        QueuedPacket head = std::move(src.front());
        src.pop_front();
        if (head.timer_deadline) ++counters_.timers_stopped;
        ++counters_.dequeued[class_index(head.packet.cls)];
        return Dequeued{std::move(head.packet), head.enqueue_time, now - head.enqueue_time,
                        head.promoted};
    }
    return std::nullopt;
}

bool QueueBank::on_timer_expire(PacketId id, double) {
    for (auto kind : {QueueKind::Delay, QueueKind::Reliability}) {
        auto& src = q(kind);
        auto it = std::find_if(src.begin(), src.end(),
                               [id](const QueuedPacket& e) { return e.packet.packet_id == id; });
        if (it == src.end()) continue;
        QueuedPacket moved = std::move(*it);
        src.erase(it);
        moved.timer_deadline.reset();
        moved.promoted = true;
        critical_.push_back(std::move(moved));
        ++counters_.promotions;
        return true;
    }
    return false;
}

std::vector<Packet> QueueBank::flush() {
    std::vector<Packet> out;
    for (auto kind : {QueueKind::Critical, QueueKind::Delay, QueueKind::Reliability}) {
        for (auto& e : q(kind)) {
            ++counters_.flushed[class_index(e.packet.cls)];
            out.push_back(std::move(e.packet));
        }
        q(kind).clear();
    }
    return out;
}

std::size_t QueueBank::size(QueueKind kind) const noexcept { return queue(kind).size(); }

std::size_t QueueBank::size() const noexcept {
    return critical_.size() + delay_.size() + reliability_.size();
}

EnqueueOutcome FifoQueue::enqueue(Packet packet, double now) {
    const auto ci = class_index(packet.cls);
    ++counters_.offered[ci];
    if (fifo_.size() >= capacity_) {
        ++counters_.dropped[ci];
        return {};
    }
    fifo_.push_back({std::move(packet), now, std::nullopt, false});
    return {true, std::nullopt};
}

std::optional<Dequeued> FifoQueue::dequeue_next(double now) {
    if (fifo_.empty()) return std::nullopt;
    QueuedPacket head = std::move(fifo_.front());
    fifo_.pop_front();
    ++counters_.dequeued[class_index(head.packet.cls)];
    return Dequeued{std::move(head.packet), head.enqueue_time, now - head.enqueue_time, false};
}

std::vector<Packet> FifoQueue::flush() {
    std::vector<Packet> out;
    for (auto& e : fifo_) {
        ++counters_.flushed[class_index(e.packet.cls)];
        out.push_back(std::move(e.packet));
    }
    fifo_.clear();
    return out;
}

} // namespace tdthr
