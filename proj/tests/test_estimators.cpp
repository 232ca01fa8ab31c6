#include "doctest.h"

#include <cmath>
#include <random>

#include "tdthr/estimators.hpp"

using namespace tdthr;

TEST_CASE("window update worked examples") {
    CHECK(std::abs(wmewma(0.5, 0.6, 27, 3) - 0.66) <= 1e-12);
    CHECK(wmewma(0.37, 1.0, 5, 25) == 0.37);
    CHECK(wmewma(1.0, 0.6, 30, 0) == 1.0);
    CHECK_THROWS_AS(wmewma(0.5, 0.6, 0, 0), std::logic_error);
}

TEST_CASE("estimator closes exactly when the window fills") {
    PrrEstimator est(30, 0.6, 0.5);
    for (int i = 0; i < 27; ++i) est.record(true);
    est.record_missed(2);
    CHECK(est.windows_closed() == 0);
    CHECK(est.value() == 0.5);
    est.record(false);
    CHECK(est.windows_closed() == 1);
    CHECK(std::abs(est.value() - 0.66) <= 1e-12);
    CHECK(est.received() == 0);
    CHECK(est.missed() == 0);
    CHECK_THROWS_AS(est.close_window(), std::logic_error);
}

TEST_CASE("estimator rejects bad parameters") {
    CHECK_THROWS(PrrEstimator(0, 0.6));
    CHECK_THROWS(PrrEstimator(30, 1.5));
    CHECK_THROWS(PrrEstimator(30, 0.6, -0.1));
}

TEST_CASE("window update contracts toward the window measurement") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 2000; ++i) {
        const double old = u(rng), beta = u(rng);
        const auto r = static_cast<std::uint32_t>(rng() % 31);
        const std::uint32_t m = 30 - r;
        const double meas = r / 30.0;
        const double next = wmewma(old, beta, r, m);
        CHECK(std::abs(next - meas) <= beta * std::abs(old - meas) + 1e-15);
        CHECK(next >= 0.0);
        CHECK(next <= 1.0);
    }
}

TEST_CASE("queuing delay worked examples") {
    DelayEstimator d(0.5, 0.0048);
    d.update_queuing(PacketClass::Critical, 0.040);
    CHECK(std::abs(d.queuing(PacketClass::Critical) - 0.020) <= 1e-12);

    DelayEstimator e(0.5, 0.0048, 0.010);
    e.update_queuing(PacketClass::Regular, 0.030);
    CHECK(std::abs(e.queuing(PacketClass::Regular) - 0.020) <= 1e-12);
    CHECK(e.queuing(PacketClass::Critical) == 0.010);
    CHECK(e.queuing(PacketClass::DelayResponsive) == 0.010);

    DelayEstimator frozen(1.0, 0.0048, 0.010);
    frozen.update_queuing(PacketClass::Regular, 5.0);
    CHECK(frozen.queuing(PacketClass::Regular) == 0.010);
    CHECK_THROWS_AS(d.update_queuing(PacketClass::Regular, -0.001), std::invalid_argument);
}

TEST_CASE("transmission delay worked example") {
    DelayEstimator d(0.5, 0.004);
    d.update_transmission(9, 10.000, 10.0105, 12, 250000.0);
    CHECK(std::abs(d.transmission(9) - 0.007058) <= 1e-12);
    CHECK(d.transmission(4) == 0.004);

    DelayEstimator frozen(1.0, 0.004);
    frozen.update_transmission(9, 10.000, 10.0105, 12, 250000.0);
    CHECK(frozen.transmission(9) == 0.004);

    CHECK_THROWS_AS(d.update_transmission(9, 10.0, 10.0, 12, 250000.0), std::invalid_argument);
    CHECK_THROWS_AS(d.update_transmission(9, 10.0, 10.0002, 12, 250000.0), std::invalid_argument);
}

TEST_CASE("nodal delay composition") {
    CHECK(nodal_delay(0.020, 0.007) == doctest::Approx(0.027));
    CHECK(nodal_delay(0.0, 0.0) == 0.0);
    CHECK(std::abs(nodal_delay(0.015, 0.010116) - 0.025116) <= 1e-12);
}

TEST_CASE("delay estimates stay inside the hull of prior and samples") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    DelayEstimator d(0.5, 0.0048);
    double lo = 0.0, hi = 0.0;
    double tlo = 0.0048, thi = 0.0048;
    double t = 0.0;
    for (int i = 0; i < 500; ++i) {
        const double s = u(rng);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        d.update_queuing(PacketClass::DelayResponsive, s);
        CHECK(d.queuing(PacketClass::DelayResponsive) >= lo);
        CHECK(d.queuing(PacketClass::DelayResponsive) <= hi);

        const double sample = 0.001 + u(rng);
        tlo = std::min(tlo, sample);
        thi = std::max(thi, sample);
        d.update_transmission(1, t, t + sample + 12 * 8.0 / 250000.0, 12, 250000.0);
        CHECK(d.transmission(1) >= tlo - 1e-15);
        CHECK(d.transmission(1) <= thi + 1e-15);
        t += 1.0;
    }
}
