#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "tdthr/core.hpp"

namespace tdthr {

enum class QueueKind { Critical = 0, Delay = 1, Reliability = 2 };

/// Promotion timer: fraction of the packet's lag time at enqueue, never below `floor`.
struct PromotionRule {
    double fraction{0.5};
    double floor{0.010};

    double delay_for(const Packet& p) const noexcept;
};

struct QueuedPacket {
    Packet packet;
    double enqueue_time{0.0};
    std::optional<double> timer_deadline;
    bool promoted{false};
};

struct Dequeued {
    Packet packet;
    double enqueue_time{0.0};
    double wait{0.0}; // queuing-delay sample for the packet's original class
    bool promoted{false};
};

struct EnqueueOutcome {
    bool accepted{false};
    std::optional<double> timer_deadline; // set when a promotion timer was armed
};

struct QueueCounters {
    PerClass<std::uint64_t> offered{};
    PerClass<std::uint64_t> dropped{};
    PerClass<std::uint64_t> dequeued{};
    PerClass<std::uint64_t> flushed{};
    std::uint64_t promotions{0};
    std::uint64_t timers_stopped{0};
};

/// Three strict-priority FIFO queues with timer-based promotion into the critical queue.
/// Critical packets carry no timer; every other packet does until it is promoted or sent.
class QueueBank {
public:
    explicit QueueBank(std::size_t capacity_per_queue = 64, PromotionRule rule = {});

    /// Tail-drops (and counts) when the target queue is full.
    EnqueueOutcome enqueue(Packet packet, double now);

    /// Head of the highest-priority non-empty queue. Stops its timer if armed.
    std::optional<Dequeued> dequeue_next(double now);

    /// Moves a still-queued packet to the critical tail. Returns false when the packet is no
    /// longer resident (already sent), which leaves the bank untouched.
    bool on_timer_expire(PacketId id, double now);

    /// Removes everything, e.g. when the owning node dies.
    std::vector<Packet> flush();

    std::size_t size(QueueKind kind) const noexcept;
    std::size_t size() const noexcept;
    bool empty() const noexcept { return size() == 0; }
    std::size_t capacity() const noexcept { return capacity_; }
    const std::deque<QueuedPacket>& queue(QueueKind kind) const noexcept;
    const QueueCounters& counters() const noexcept { return counters_; }

    static QueueKind target_queue(PacketClass cls) noexcept;

private:
    std::deque<QueuedPacket>& q(QueueKind kind) noexcept;

    std::size_t capacity_;
    PromotionRule rule_;
    std::deque<QueuedPacket> critical_;
    std::deque<QueuedPacket> delay_;
    std::deque<QueuedPacket> reliability_;
    QueueCounters counters_;
};

/// Single undifferentiated FIFO used by the baseline variants.
class FifoQueue {
public:
    explicit FifoQueue(std::size_t capacity = 64) : capacity_(capacity) {}

    EnqueueOutcome enqueue(Packet packet, double now);
    std::optional<Dequeued> dequeue_next(double now);
    bool on_timer_expire(PacketId, double) noexcept { return false; }
    std::vector<Packet> flush();

    std::size_t size() const noexcept { return fifo_.size(); }
    bool empty() const noexcept { return fifo_.empty(); }
    const QueueCounters& counters() const noexcept { return counters_; }

private:
    std::size_t capacity_;
    std::deque<QueuedPacket> fifo_;
    QueueCounters counters_;
};

} // namespace tdthr
