// Acceptance runner: one PASS/FAIL line per criterion, tolerances pinned below.
//   tdthr_acceptance [--criterion N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "queue_check.hpp"
#include "tdthr/cli.hpp"
#include "tdthr/estimators.hpp"
#include "tdthr/forwarding.hpp"
#include "tdthr/simkernel.hpp"

using namespace tdthr;
namespace fs = std::filesystem;

namespace {

constexpr double kExactTol = 1e-12;        // AC1
constexpr double kConvergeTol = 0.05;      // AC2
constexpr int kConvergeSeeds = 100;        // AC2
constexpr int kConvergeNeeded = 99;        // AC2
constexpr int kConvergeWindows = 200;      // AC2
constexpr int kTopologies = 200;           // AC3
constexpr std::size_t kMaxNodes = 50;      // AC3
constexpr int kSnapshots = 10000;          // AC4
constexpr int kQueueSequences = 10000;     // AC5
constexpr int kQueueOps = 200;             // AC5
constexpr double kInversionSlack = 0.02;   // AC8b
constexpr int kAllowedInversions = 1;      // AC8b

const fs::path kSource{TDTHR_SOURCE_DIR};

struct Verdict {
    bool pass{false};
    std::string detail;
};

void report(const std::string& tag, const Verdict& v, double seconds) {
    std::printf("%s %s (%.2fs) %s\n", tag.c_str(), v.pass ? "PASS" : "FAIL", seconds, v.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- AC1 ----

Verdict estimator_exactness() {
    int bad = 0;
    double worst = 0.0;
    auto expect = [&](double got, double want) {
        const double e = std::abs(got - want);
        worst = std::max(worst, e);
        if (!(e <= kExactTol)) ++bad;
    };
    // worked examples
    expect(wmewma(0.5, 0.6, 27, 3), 0.66);
    {
        DelayEstimator d(0.5, 0.0048);
        d.update_queuing(PacketClass::Critical, 0.040);
        expect(d.queuing(PacketClass::Critical), 0.020);
        DelayEstimator e(0.5, 0.004);
        e.update_transmission(9, 10.000, 10.0105, 12, 250000.0);
        expect(e.transmission(9), 0.007058);
        expect(nodal_delay(0.015, 0.010116), 0.025116);
    }
    // hand-evaluated formulas on random inputs
    gen::Rng r(2718);
    for (int i = 0; i < 20000; ++i) {
        const double old = r.uniform(0, 1), beta = r.uniform(0, 1);
        const auto rcv = static_cast<std::uint32_t>(r.below(31));
        const auto miss = static_cast<std::uint32_t>(r.below(31 - rcv) + (rcv == 0 ? 1 : 0));
        expect(wmewma(old, beta, rcv, miss), beta * old + (1 - beta) * rcv / double(rcv + miss));

        const double gamma = r.uniform(0, 1), q0 = r.uniform(0, 0.1), sample = r.uniform(0, 0.3);
        DelayEstimator d(gamma, 0.0048, q0);
        d.update_queuing(PacketClass::Regular, sample);
        expect(d.queuing(PacketClass::Regular), gamma * q0 + (1 - gamma) * sample);

        const double dt0 = r.uniform(0.001, 0.02), ts = r.uniform(0, 100), span = r.uniform(0.001, 0.05);
        const std::uint32_t ack = 12;
        const double bw = 250000.0;
        DelayEstimator t(gamma, dt0);
        t.update_transmission(3, ts, ts + span, ack, bw);
        expect(t.transmission(3), gamma * dt0 + (1 - gamma) * ((ts + span) - ack * 8.0 / bw - ts));
    }
    return {bad == 0, "mismatches=" + std::to_string(bad) + " worst_abs_err=" + fmt("%.3g", worst)};
}

// ---- AC2 ----

Verdict estimator_convergence() {
    bool pass = true;
    std::string detail;
    for (double p : {0.3, 0.6, 0.9}) {
        int ok = 0;
        for (int seed = 1; seed <= kConvergeSeeds; ++seed) {
            std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 7919 + static_cast<std::uint64_t>(p * 100));
            std::bernoulli_distribution link(p);
            PrrEstimator est(30, 0.6, 1.0);
            while (est.windows_closed() < static_cast<std::uint64_t>(kConvergeWindows)) est.record(link(rng));
            if (std::abs(est.value() - p) < kConvergeTol) ++ok;
        }
        if (ok < kConvergeNeeded) pass = false;
        detail += "p=" + fmt("%.1f", p) + ":" + std::to_string(ok) + "/" + std::to_string(kConvergeSeeds) + " ";
    }
    return {pass, detail + "(need >=" + std::to_string(kConvergeNeeded) + " within " + fmt("%.2f", kConvergeTol) + ")"};
}

// ---- AC3 ----

Verdict neighborhood_oracle() {
    gen::Rng r(31415);
    std::size_t mismatches = 0, checked = 0;
    for (int t = 0; t < kTopologies; ++t) {
        const std::size_t n = 3 + r.below(kMaxNodes - 2);
        const double side = r.uniform(150, 400);
        SimConfig cfg;
        cfg.topology.node_count = static_cast<std::uint32_t>(n);
        cfg.topology.field_width = side;
        cfg.topology.field_height = side;
        cfg.topology.density.reset();
        cfg.sinks = {{0, 0}};
        cfg.source.position = {side / 2, side / 2};
        cfg.radio.fixed_delivery_probability = 1.0;
        Topology topo;
        topo.range = cfg.topology.transmission_range;
        topo.positions.push_back(cfg.sinks[0]);
        topo.sinks = {0};
        topo.positions.push_back(cfg.source.position);
        topo.source = 1;
        while (topo.positions.size() < n) topo.positions.push_back({r.uniform(0, side), r.uniform(0, side)});
        connect(topo);

        Simulator sim(cfg, topo, static_cast<std::uint64_t>(t) + 1);
        sim.run_until(2.0 * cfg.hello.period_s);
        const auto& pos = topo.positions;
        const double range = topo.range;
        const Position dest{r.uniform(-side, 2 * side), r.uniform(-side, 2 * side)};
        for (NodeId x = 0; x < n; ++x) {
            const auto one = sim.table(x).one_hop_set(sim.now());
            const auto two = sim.table(x).two_hop_set(sim.now());
            const auto snap = sim.snapshot(x);
            const auto f1 = favorable_one_hop(snap, dest);
            std::set<std::pair<NodeId, NodeId>> f2;
            for (const auto& p : favorable_pairs(snap, dest, PacketClass::Critical, PowerModel{}))
                f2.insert({p.y, p.z});
            mismatches += std::set<NodeId>(one.begin(), one.end()) != oracle::n1(pos, range, x);
            mismatches += std::set<NodeId>(two.begin(), two.end()) != oracle::n2(pos, range, x);
            mismatches += std::set<NodeId>(f1.begin(), f1.end()) != oracle::f1(pos, range, x, dest);
            mismatches += f2 != oracle::f2(pos, range, x, dest);
            checked += 4;
        }
    }
    return {mismatches == 0, "set_comparisons=" + std::to_string(checked) + " mismatches=" + std::to_string(mismatches)};
}

// ---- AC4 ----

Verdict algorithm_oracle() {
    gen::Rng r(1618);
    const PowerModel power{};
    std::size_t mismatches = 0, decisions = 0, nonempty = 0;
    for (int i = 0; i < kSnapshots; ++i) {
        Position dest;
        const auto snap = gen::snapshot(r, power.range, dest);
        const double lag = r.uniform(0.001, 0.3);
        const double to_sink = dist(snap.position, dest);
        for (auto cls : {PacketClass::DelayResponsive, PacketClass::Critical}) {
            const auto pairs = favorable_pairs(snap, dest, cls, power);
            const auto ref = oracle::enumerate_pairs(snap, dest, cls, power.range, power.alpha, power.cost_tx);
            const auto ctx = make_velocity_context(pairs, to_sink, lag);
            if (!ctx.qualifying.empty()) ++nonempty;
            for (auto scope : {PrrScope::OneHop, PrrScope::TwoHop}) {
                std::optional<NodeId> got;
                try {
                    got = select_next_hop(cls, ctx, scope);
                } catch (const NoQualifyingPair&) {
                }
                const auto want = oracle::algorithm1(ref, to_sink, lag, cls, scope == PrrScope::TwoHop);
                mismatches += got != want;
                ++decisions;
            }
        }
    }
    return {mismatches == 0, "snapshots=" + std::to_string(kSnapshots) + " decisions=" + std::to_string(decisions) +
                                 " with_qualifying=" + std::to_string(nonempty) +
                                 " mismatches=" + std::to_string(mismatches)};
}

// ---- AC5 ----

Verdict queue_properties() {
    int failures = 0;
    std::string first;
    for (int s = 1; s <= kQueueSequences; ++s) {
        const std::string err = qcheck::run_sequence(static_cast<std::uint64_t>(s), kQueueOps);
        if (!err.empty()) {
            if (failures++ == 0) first = "seed " + std::to_string(s) + ": " + err;
        }
    }
    return {failures == 0, "sequences=" + std::to_string(kQueueSequences) + " failures=" + std::to_string(failures) +
                               (first.empty() ? "" : " first=" + first)};
}

// ---- AC6 ----

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism() {
    const fs::path dir = fs::temp_directory_path() / ("tdthr_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::ostringstream sink;
    const fs::path cfg = kSource / "configs" / "desk.json";
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const int a = cmd_run({cfg, 7, dir / "a.csv", dir / "a.trace"}, sink, sink);
    const auto t1 = clock::now();
    const int b = cmd_run({cfg, 7, dir / "b.csv", dir / "b.trace"}, sink, sink);
    const auto t2 = clock::now();
    const bool same_csv = slurp(dir / "a.csv") == slurp(dir / "b.csv");
    const bool same_trace = slurp(dir / "a.trace") == slurp(dir / "b.trace");
    const auto bytes = slurp(dir / "a.trace").size();
    fs::remove_all(dir);
    const double one = std::chrono::duration<double>(t1 - t0).count();
    const double two = std::chrono::duration<double>(t2 - t0).count();
    return {a == 0 && b == 0 && same_csv && same_trace && bytes > 0,
            std::string("csv_identical=") + (same_csv ? "yes" : "no") + " trace_identical=" + (same_trace ? "yes" : "no") +
                " trace_bytes=" + std::to_string(bytes) + " one_run=" + fmt("%.3fs", one) + " both=" + fmt("%.3fs", two)};
}

// ---- AC7 ----

Verdict energy_conservation() {
    int runs = 0, bad = 0;
    const SimConfig base = load_config(kSource / "configs" / "desk.json");
    for (auto proto : {Protocol::Tdthr, Protocol::OneHopVelocity, Protocol::GreedyGeo}) {
        for (double cr : {0.2, 0.8}) {
            for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                SimConfig cfg = base;
                cfg.routing.protocol = proto;
                cfg.traffic.critical_rate = cr;
                cfg.traffic.delay_responsive_rate = 0.1;
                Simulator sim(cfg, seed);
                const MetricsLedger l = sim.run();
                const Energy spent = sim.initial_energy() - sim.residual_energy();
                ++runs;
                if (spent != sim.energy_account().total() || spent != l.total_energy_spent) ++bad;
            }
        }
    }
    return {bad == 0, "runs=" + std::to_string(runs) + " unbalanced=" + std::to_string(bad)};
}

// ---- AC8 ----

struct SeriesPoint {
    double x;
    double critical_prr;
    std::optional<double> regular_prr;
};

std::vector<SweepOutcome> run_sweep(const std::string& name) {
    const SweepSpec spec = load_sweep_spec(kSource / "configs" / name);
    return execute_sweep(expand_sweep(spec), std::max(1u, std::thread::hardware_concurrency()));
}

double mean_of(const std::vector<double>& v) { return oracle::mean(v); }

bool trend_suite() {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const auto crit = run_sweep("sweep_critical.json");
    const auto qos = run_sweep("sweep_qos_delay.json");
    const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();

    std::size_t failed_runs = 0;
    for (const auto* set : {&crit, &qos})
        for (const auto& o : *set) failed_runs += o.ledger ? 0 : 1;

    // per-point means over seeds, TDTHR only
    std::map<double, std::vector<double>> cprr, rprr;
    std::map<Protocol, std::vector<double>> life, drdelay;
    for (const auto& o : crit) {
        if (!o.ledger) continue;
        const double x = o.run.config.traffic.critical_rate;
        life[o.run.protocol].push_back(lifetime(*o.ledger));
        if (o.run.protocol != Protocol::Tdthr) continue;
        if (auto p = prr(*o.ledger, PacketClass::Critical)) cprr[x].push_back(*p);
        if (auto p = prr(*o.ledger, PacketClass::Regular)) rprr[x].push_back(*p);
    }
    for (const auto& o : qos) {
        if (!o.ledger) continue;
        if (auto d = mean_delay(*o.ledger, PacketClass::DelayResponsive)) drdelay[o.run.protocol].push_back(*d);
    }

    // a
    bool a = failed_runs == 0 && !cprr.empty();
    std::string ad;
    for (const auto& [x, v] : cprr) {
        const double c = mean_of(v);
        ad += fmt("%.1f:", x) + fmt("%.3f", c);
        if (rprr.count(x) && !rprr[x].empty()) {
            const double g = mean_of(rprr[x]);
            ad += ">=" + fmt("%.3f", g);
            if (!(c >= g)) {
                a = false;
                ad += "!";
            }
        }
        ad += " ";
    }
    // b
    int inversions = 0;
    bool b = !cprr.empty();
    std::string bd;
    double prev = -1.0;
    for (const auto& [x, v] : cprr) {
        const double c = mean_of(v);
        bd += fmt("%.3f ", c);
        if (prev >= 0.0 && c < prev) {
            ++inversions;
            if (prev - c > kInversionSlack) b = false;
        }
        prev = c;
    }
    if (inversions > kAllowedInversions) b = false;
    // c
    const double td = mean_of(drdelay[Protocol::Tdthr]);
    const double oh = mean_of(drdelay[Protocol::OneHopVelocity]);
    const bool c = !drdelay[Protocol::Tdthr].empty() && !drdelay[Protocol::OneHopVelocity].empty() && td <= oh;
    // d
    const double lt = mean_of(life[Protocol::Tdthr]);
    const double lg = mean_of(life[Protocol::GreedyGeo]);
    const bool d = !life[Protocol::Tdthr].empty() && !life[Protocol::GreedyGeo].empty() && lt >= lg;

    const double per = elapsed;
    report("AC8a", {a, "critical_prr>=regular_prr per point: " + ad}, per);
    report("AC8b", {b, "critical_prr by rate: " + bd + "inversions=" + std::to_string(inversions)}, per);
    report("AC8c", {c, "delay_responsive mean delay TDTHR=" + fmt("%.4fs", td) + " OneHopVelocity=" + fmt("%.4fs", oh)}, per);
    report("AC8d", {d, "mean lifetime TDTHR=" + fmt("%.3fs", lt) + " GreedyGeo=" + fmt("%.3fs", lg)}, per);
    const bool all = a && b && c && d && elapsed < 120.0;
    report("AC8", {all, "failed_runs=" + std::to_string(failed_runs) + " suite_runtime=" + fmt("%.1fs", elapsed)}, elapsed);
    return all;
}

// ---- AC9 ----

Verdict config_fidelity() {
    const fs::path file = kSource / "configs" / "default.json";
    SimConfig c;
    try {
        c = load_config(file);
    } catch (const std::exception& e) {
        return {false, e.what()};
    }
    struct Row {
        const char* field;
        double pinned;
        double actual;
    };
    const std::vector<Row> rows{
        {"topology.node_count", 900, double(c.topology.node_count)},
        {"topology.field_width", 1800, c.topology.field_width},
        {"source.payload_bytes", 150, double(c.source.payload_bytes)},
        {"topology.transmission_range", 100, c.topology.transmission_range},
        {"energy.initial_j", 2.0, c.energy.initial_j},
        {"energy.tx_j", 0.0522, c.energy.tx_j},
        {"energy.rx_j", 0.0591, c.energy.rx_j},
        {"energy.sleep_j", 0.00006, c.energy.sleep_j},
        {"energy.idle_j", 0.000003, c.energy.idle_j},
        {"hello.period_s", 5, c.hello.period_s},
        {"estimators.prr_window", 30, double(c.estimators.prr_window)},
        {"estimators.prr_beta", 0.6, c.estimators.prr_beta},
        {"estimators.delay_gamma", 0.5, c.estimators.delay_gamma},
    };
    int bad = 0;
    std::string which;
    for (const auto& r : rows) {
        if (r.actual != r.pinned) {
            ++bad;
            which += std::string(" ") + r.field;
        }
    }
    if (c.topology.field_height != 1800) ++bad, which += " field_height";
    if (c.radio.propagation != "free_space") ++bad, which += " propagation";
    if (c.traffic.deadline_s != 0.3) ++bad, which += " deadline";
    if (c.traffic.regular_rate() != 1.0 - c.traffic.critical_rate) ++bad, which += " regular_rate";
    const bool golden = slurp(file) == to_json(SimConfig{}).dump(2) + "\n";
    return {bad == 0 && golden,
            "values_checked=" + std::to_string(rows.size() + 4) + " mismatches=" + std::to_string(bad) + which + " golden_file=" + (golden ? "match" : "differs")};
}

bool run_criterion(int n) {
    using clock = std::chrono::steady_clock;
    if (n == 8) return trend_suite();
    const std::map<int, std::function<Verdict()>> table{
        {1, estimator_exactness}, {2, estimator_convergence}, {3, neighborhood_oracle},
        {4, algorithm_oracle},    {5, queue_properties},      {6, determinism},
        {7, energy_conservation}, {9, config_fidelity},
    };
    const auto it = table.find(n);
    if (it == table.end()) {
        std::printf("unknown criterion %d\n", n);
        return false;
    }
    const auto t0 = clock::now();
    Verdict v;
    try {
        v = it->second();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    report("AC" + std::to_string(n), v, std::chrono::duration<double>(clock::now() - t0).count());
    return v.pass;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) which.push_back(std::atoi(argv[++i]));
    }
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    bool all = true;
    for (int n : which) all = run_criterion(n) && all;
    return all ? 0 : 1;
}
