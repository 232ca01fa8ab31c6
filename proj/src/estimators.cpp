#include "tdthr/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace tdthr {

double wmewma(double old, double beta, std::uint32_t received, std::uint32_t missed) {
    const std::uint32_t total = received + missed;
    if (total == 0) throw std::logic_error("prr update with an empty window");
    return beta * old + (1.0 - beta) * (static_cast<double>(received) / static_cast<double>(total));
}

double ewma(double old, double gamma, double sample) noexcept {
    return gamma * old + (1.0 - gamma) * sample;
}

PrrEstimator::PrrEstimator(std::uint32_t window, double beta, double prior)
    : prr_(prior), window_(window), beta_(beta) {
    if (window == 0) throw std::invalid_argument("prr window must be at least 1");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("prr beta outside [0,1]");
    if (!(prior >= 0.0 && prior <= 1.0)) throw std::invalid_argument("prr prior outside [0,1]");
}

void PrrEstimator::record(bool received) {
    if (received) {
        ++received_;
    } else {
        ++missed_;
    }
    maybe_close();
}

void PrrEstimator::record_missed(std::uint32_t count) {
    for (std::uint32_t i = 0; i < count; ++i) record(false);
}

void PrrEstimator::close_window() {
    prr_ = wmewma(prr_, beta_, received_, missed_);
    received_ = 0;
    missed_ = 0;
    ++windows_closed_;
}

void PrrEstimator::maybe_close() {
    if (received_ + missed_ == window_) close_window();
}

DelayEstimator::DelayEstimator(double gamma, double dt_prior, double dq_prior)
    : gamma_(gamma), dt_prior_(dt_prior) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("delay gamma outside [0,1]");
    if (!(dt_prior >= 0.0) || !std::isfinite(dt_prior))
        throw std::invalid_argument("transmission delay prior must be finite and non-negative");
    dq_.fill(dq_prior);
}

void DelayEstimator::update_queuing(PacketClass cls, double sample) {
    if (!(sample >= 0.0) || !std::isfinite(sample))
        throw std::invalid_argument("queuing delay sample must be finite and non-negative");
    auto& dq = dq_[class_index(cls)];
    dq = ewma(dq, gamma_, sample);
}

void DelayEstimator::update_transmission(NodeId neighbor, double t_s, double t_ack,
                                         double ack_bytes, double bandwidth_bps) {
    if (!(t_ack > t_s)) throw std::invalid_argument("ack time precedes transmission start");
    const double sample = t_ack - ack_bytes * 8.0 / bandwidth_bps - t_s;
    if (!(sample > 0.0)) throw std::invalid_argument("non-positive transmission delay sample");
    auto [it, inserted] = dt_.try_emplace(neighbor, dt_prior_);
    it->second = ewma(it->second, gamma_, sample);
}

double DelayEstimator::transmission(NodeId neighbor) const {
    auto it = dt_.find(neighbor);
    return it == dt_.end() ? dt_prior_ : it->second;
}

double nodal_delay(double dq, double dt) {
    if (!(dq >= 0.0) || !(dt >= 0.0)) throw std::invalid_argument("negative delay component");
    return dq + dt;
}

} // namespace tdthr
