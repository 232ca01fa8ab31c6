#pragma once

#include <cstdint>
#include <map>

#include "tdthr/core.hpp"

namespace tdthr {

/// Window-mean EWMA blend: beta * old + (1 - beta) * r / (r + m).
double wmewma(double old, double beta, std::uint32_t received, std::uint32_t missed);

/// Plain EWMA blend: gamma * old + (1 - gamma) * sample.
double ewma(double old, double gamma, double sample) noexcept;

/// Receiver-side link reliability estimator. Outcomes accumulate in a window of w packets;
/// the estimate is refreshed exactly when the window fills.
class PrrEstimator {
public:
    PrrEstimator(std::uint32_t window, double beta, double prior = 1.0);

    void record(bool received);
    void record_missed(std::uint32_t count);

    /// Applies the window-mean update with the current counters and resets them.
    /// Throws std::logic_error when the window is empty.
    void close_window();

    double value() const noexcept { return prr_; }
    std::uint32_t received() const noexcept { return received_; }
    std::uint32_t missed() const noexcept { return missed_; }
    std::uint32_t window() const noexcept { return window_; }
    double beta() const noexcept { return beta_; }
    std::uint64_t windows_closed() const noexcept { return windows_closed_; }

private:
    void maybe_close();

    double prr_;
    std::uint32_t window_;
    double beta_;
    std::uint32_t received_{0};
    std::uint32_t missed_{0};
    std::uint64_t windows_closed_{0};
};

/// Per-class queuing delay and per-neighbor transmission delay, both EWMA-smoothed.
class DelayEstimator {
public:
    DelayEstimator(double gamma, double dt_prior, double dq_prior = 0.0);

    /// Throws std::invalid_argument on a negative sample.
    void update_queuing(PacketClass cls, double sample);

    /// Folds t_ack - ack_bytes * 8 / bandwidth - t_s into the estimate for `neighbor`.
    /// Throws std::invalid_argument when t_ack <= t_s or the derived sample is not positive.
    void update_transmission(NodeId neighbor, double t_s, double t_ack, double ack_bytes,
                             double bandwidth_bps);

    double queuing(PacketClass cls) const noexcept { return dq_[class_index(cls)]; }
    const PerClass<double>& queuing() const noexcept { return dq_; }
    double transmission(NodeId neighbor) const;
    void forget(NodeId neighbor) { dt_.erase(neighbor); }

    double gamma() const noexcept { return gamma_; }
    double dt_prior() const noexcept { return dt_prior_; }

private:
    double gamma_;
    double dt_prior_;
    PerClass<double> dq_;
    std::map<NodeId, double> dt_;
};

/// Per-hop delay: queuing plus transmission, where the transmission estimate already
/// absorbs contention.
double nodal_delay(double dq, double dt);

} // namespace tdthr
