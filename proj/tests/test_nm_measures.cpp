#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rmtnm/error.hpp"
#include "rmtnm/nm_measures.hpp"

using namespace rmtnm;

namespace {

// Smooth synthetic trajectory with genuine backflow: damped oscillating coherences.
ChannelPoint wobble(double t) {
    const cplx i(0.0, 1.0);
    const double r = 0.5 + 0.5 * std::exp(-0.3 * t) * (0.8 + 0.2 * std::cos(2.0 * t));
    const cplx z1 = std::exp(-0.2 * t) * (0.85 + 0.15 * std::cos(3.0 * t)) * std::exp(i * 0.7 * t);
    const cplx z2 = 0.1 * std::sin(1.3 * t) * std::exp(-0.5 * t) * std::exp(i * 0.2);
    return ChannelPoint{t, r, z1, z2};
}

std::vector<ChannelPoint> sample(ChannelPoint (*f)(double), double dt, std::size_t n) {
    std::vector<ChannelPoint> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(f(dt * static_cast<double>(k)));
    return out;
}

ChannelPoint rotation(double t) { return ChannelPoint{t, 1.0, std::polar(1.0, 0.4 * t), 0.0}; }

// |z1| decreasing, z2 = 0, r = 1/2 + |z1|/2.
ChannelPoint contraction(double t) {
    const double a = std::exp(-0.25 * t);
    return ChannelPoint{t, 0.5 + 0.5 * a, std::polar(a, 1.1 * t), 0.0};
}

ChannelTrajectory as_trajectory(const std::vector<ChannelPoint>& pts) {
    ChannelTrajectory tr;
    tr.points = pts;
    tr.errors.assign(pts.size(), ChannelErrors{});
    tr.n_accumulated = 1;
    return tr;
}

bool nondecreasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k] < v[k - 1] - 1e-12) return false;
    }
    return true;
}

} // namespace

TEST_SUITE("nm_measures") {

TEST_CASE("derivative stencils are exact on quadratics") {
    std::vector<ChannelPoint> pts;
    const double dt = 0.25;
    for (int k = 0; k < 9; ++k) {
        const double t = dt * k;
        pts.push_back({t, 0.3 + 0.2 * t - 0.05 * t * t, cplx(1.0 - t * t, 2.0 * t), cplx(0.5 * t * t, -t)});
    }
    const Derivatives d = estimate_derivatives(pts);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double t = pts[k].t;
        CHECK(d.r[k] == doctest::Approx(0.2 - 0.1 * t).epsilon(1e-12));
        CHECK(std::abs(d.z1[k] - cplx(-2.0 * t, 2.0)) < 1e-12);
        CHECK(std::abs(d.z2[k] - cplx(t, -1.0)) < 1e-12);
    }
    const Derivatives s = estimate_derivatives(pts, DerivativeOptions{5});
    for (std::size_t k = 0; k < pts.size(); ++k) CHECK(s.r[k] == doctest::Approx(0.2 - 0.1 * pts[k].t).epsilon(1e-12));
}

TEST_CASE("derivative preconditions") {
    std::vector<ChannelPoint> two = {ChannelPoint{0.0}, ChannelPoint{0.1}};
    CHECK_THROWS_AS(estimate_derivatives(two), InvalidArgument);
    std::vector<ChannelPoint> uneven = {ChannelPoint{0.0}, ChannelPoint{0.1}, ChannelPoint{0.3}};
    CHECK_THROWS_AS(estimate_derivatives(uneven), InvalidArgument);
    const auto pts = sample(wobble, 0.1, 20);
    CHECK_THROWS_AS(estimate_derivatives(pts, DerivativeOptions{4}), InvalidArgument);
    CHECK_THROWS_AS(estimate_derivatives(pts, DerivativeOptions{-1}), InvalidArgument);
}

TEST_CASE("validity of divisibility deltas") {
    const auto pts = sample(wobble, 0.01, 10);
    const auto dd = divisibility_deltas(pts, estimate_derivatives(pts));
    CHECK(dd[0].valid);
    std::vector<ChannelPoint> half = {{0.0, 0.5, 0.9, 0.0}, {0.1, 0.5, 0.9, 0.0}, {0.2, 0.5, 0.9, 0.0}};
    const auto dh = divisibility_deltas(half, estimate_derivatives(half));
    CHECK_FALSE(dh[1].valid);
    CHECK(std::isnan(dh[1].delta1));
    CHECK_FALSE(g_of_t(dh[1]).has_value());
}

TEST_CASE("g examples") {
    CHECK(g_value(0.5, 0.2, 0.1) == 0.0);
    CHECK(g_value(0.1, 0.2, 0.3) == doctest::Approx(0.2));
}

TEST_CASE("g equals the symmetric absolute-value form and vanishes exactly on the double inequality") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> grid(-16, 16);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 20000; ++k) {
        // quantized draws hit the boundaries exactly
        const bool quantized = k % 2 == 0;
        const double d1 = quantized ? grid(rng) / 8.0 : u(rng);
        const double dq = quantized ? grid(rng) / 8.0 : u(rng);
        const double d2 = quantized ? std::abs(grid(rng)) / 8.0 : std::abs(u(rng));
        const double g = g_value(d1, dq, d2);
        const double sym = (std::abs(d1 - dq) + std::abs(dq + d2) + std::abs(dq - d2) - dq - d1) / 2.0;
        CHECK(g >= 0.0);
        CHECK(std::abs(g - sym) < 1e-14);
        CHECK((g == 0.0) == (d2 <= dq && dq <= d1));
    }
}

TEST_CASE("g matches the extrapolated finite-eps trace norm of the intermediate Choi matrix") {
    const double dt = 0.02;
    const auto pts = sample(wobble, dt, 400);
    const auto dd = divisibility_deltas(pts, estimate_derivatives(pts));
    int positive = 0;
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
        REQUIRE(dd[k].valid);
        const double g = *g_of_t(dd[k]);
        const double ref = oracle::g_extrapolated(pts, k, 1e-3 * dt);
        CHECK(std::abs(g - ref) < 1e-5 * (1.0 + std::abs(g)));
        if (g > 1e-6) ++positive;
    }
    CHECK(positive > 10);
}

TEST_CASE("RHP: trapezoid, invalid points excised, monotone") {
    std::vector<DivisibilityDeltas> d = {
        {0.0, 0.0, 0.3, 0.0, true}, {1.0, 0.0, 0.1, 0.0, true}, {2.0, 0.0, 0.0, 0.0, false}, {3.0, 0.0, 0.5, 0.0, true}};
    const RhpResult r = nm_rhp(d);
    CHECK(r.g[0] == doctest::Approx(0.3));
    CHECK(r.g[2] == 0.0);
    CHECK(r.value == doctest::Approx(0.5 * 0.4 + 0.5 * 0.1 + 0.5 * 0.5));
    CHECK(nondecreasing(r.cumulative));

    // the last point only has a one-sided derivative and is left out, as in analyze()
    const auto pts = sample(rotation, 0.05, 200);
    auto deltas = divisibility_deltas(pts, estimate_derivatives(pts));
    deltas.pop_back();
    CHECK(nm_rhp(deltas).value < 1e-10);
}

TEST_CASE("trace distance closed form") {
    for (double th : {0.0, 0.4, 1.2}) {
        CHECK(trace_distance(ChannelPoint{}, BlochPair{th, 0.7, 2.0}) == doctest::Approx(1.0).epsilon(1e-14));
    }
    const ChannelPoint p{0.0, 0.8, cplx(0.3, 0.2), cplx(0.05, -0.1)};
    CHECK(trace_distance(p, BlochPair{0.0, 1.3, 1.5}) == doctest::Approx(1.5 * 0.6 / 2.0));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        const ChannelPoint q = oracle::random_point(rng, false);
        const double th = std::numbers::pi * u(rng);
        const double ph = 2.0 * std::numbers::pi * u(rng);
        const double R = 2.0 * u(rng);
        CHECK(std::abs(trace_distance(q, BlochPair{th, ph, R}) - oracle::trace_distance_eig(q, th, ph, R)) < 1e-12);
        CHECK(trace_distance(q, BlochPair{th, ph, 1.0}) * 2.0 == trace_distance(q, BlochPair{th, ph, 2.0}));
    }
}

TEST_CASE("maximum over phi of M is (|z1| + |z2|)^2") {
    std::mt19937_64 rng(9);
    for (int k = 0; k < 200; ++k) {
        const ChannelPoint p = oracle::random_point(rng, false);
        const double phi_star = -0.5 * std::arg(p.z1 * std::conj(p.z2));
        const double m = std::norm(p.z1 + p.z2 * std::polar(1.0, -2.0 * phi_star));
        CHECK(m == doctest::Approx(std::pow(std::abs(p.z1) + std::abs(p.z2), 2)).epsilon(1e-12));
        for (int j = 0; j < 16; ++j) {
            const double ph = std::numbers::pi * j / 16.0;
            CHECK(std::norm(p.z1 + p.z2 * std::polar(1.0, -2.0 * ph)) <= m + 1e-12);
        }
    }
}

TEST_CASE("BLP and MDR vanish without backflow") {
    for (auto f : {rotation, contraction}) {
        const auto pts = sample(f, 0.1, 300);
        const BlpResult b = nm_blp(pts);
        const MdrResult m = nm_mdr(pts);
        CHECK(b.value < 1e-10);
        CHECK(m.value < 1e-10);
    }
    // exact ties resolve to the first grid pair
    const std::vector<ChannelPoint> still(50, ChannelPoint{0.0, 0.8, cplx(0.6, 0.1), 0.05});
    std::vector<ChannelPoint> pts = still;
    for (std::size_t k = 0; k < pts.size(); ++k) pts[k].t = 0.1 * static_cast<double>(k);
    CHECK(nm_blp(pts).argmax.theta == 0.0);
    CHECK(nm_blp(pts).argmax.phi == 0.0);
    CHECK(nm_mdr(pts).argmax.theta == 0.0);
    CHECK(nm_mdr(pts).argmax.phi == 0.0);
}

TEST_CASE("BLP and MDR on a revival") {
    const auto pts = sample(wobble, 0.02, 600);
    const BlpResult b = nm_blp(pts);
    const MdrResult m = nm_mdr(pts);
    CHECK(b.value > 0.0);
    CHECK(m.value > 0.0);
    CHECK(m.value <= 1.0);
    CHECK(m.value <= b.value + 1e-12);
    CHECK(m.t1 >= m.t2);
    CHECK(nondecreasing(b.cumulative));
    CHECK(nondecreasing(m.cumulative));
    CHECK(b.cumulative.back() == b.value);

    // exhaustive pairwise check of the argmax pair
    std::vector<double> dist;
    for (const auto& p : pts) dist.push_back(trace_distance(p, m.argmax));
    double best = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) best = std::max(best, dist[i] - dist[j]);
    }
    CHECK(best == doctest::Approx(m.value).epsilon(1e-14));

    // R only rescales
    StateGrid half;
    half.R = 1.0;
    const BlpResult bh = nm_blp(pts, half);
    CHECK(bh.value * 2.0 == b.value);
    CHECK(bh.argmax.theta == b.argmax.theta);
    CHECK(bh.argmax.phi == b.argmax.phi);
}

TEST_CASE("state grid") {
    StateGrid g;
    CHECK_NOTHROW(g.validate());
    CHECK(g.pair(30, 0).theta == doctest::Approx(std::numbers::pi / 2));
    CHECK(g.pair(0, 30).phi < std::numbers::pi);
    g.theta_points = 1;
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
    g = StateGrid{};
    g.R = 0.0;
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
}

TEST_CASE("contractivity deltas") {
    // interior points are exact; the one-sided end stencils carry an O(dt^2) residue
    const auto rot = sample(rotation, 0.05, 100);
    const auto cr = contractivity_deltas(rot, estimate_derivatives(rot));
    for (std::size_t k = 0; k < cr.size(); ++k) {
        const double tol = (k == 0 || k + 1 == cr.size()) ? 1e-5 : 1e-12;
        CHECK(std::abs(cr[k].delta1C) < tol);
        CHECK(std::abs(cr[k].delta2C) < 1e-12);
        CHECK(std::abs(cr[k].deltaq) < 1e-12);
    }

    const double gamma = 0.3;
    std::vector<ChannelPoint> decay;
    for (int k = 0; k < 100; ++k) {
        const double t = 0.01 * k;
        decay.push_back({t, 1.0, std::exp(-gamma * t), 0.0});
    }
    const auto cd = contractivity_deltas(decay, estimate_derivatives(decay));
    for (std::size_t k = 0; k < cd.size(); ++k) {
        const double t = decay[k].t;
        CHECK(cd[k].delta1C == doctest::Approx(gamma * std::exp(-2.0 * gamma * t)).epsilon(1e-4));
        CHECK(cd[k].delta2C == 0.0);
    }

    const auto pts = sample(wobble, 0.03, 300);
    for (const auto& c : contractivity_deltas(pts, estimate_derivatives(pts))) {
        const double diff = c.delta2C - c.delta1C;
        CHECK((c.m_dot_max > 0.0) == (diff > 0.0));
    }
}

TEST_CASE("sigma_max") {
    const auto rot = sample(rotation, 0.1, 100);
    const SigmaMaxSeries z = sigma_max(rot, BlochPair{0.7, 0.3, 2.0});
    for (double s : z.sigma) CHECK(std::abs(s) < 1e-12);

    const auto pts = sample(wobble, 0.02, 600);
    const BlpResult b = nm_blp(pts);
    const SigmaMaxSeries s = sigma_max(pts, b.argmax);
    CHECK(s.positive_integral == doctest::Approx(b.value).epsilon(1e-10));
    double mid = 0.0;
    for (double v : s.mid_sigma) mid += 0.02 * std::max(0.0, v);
    CHECK(mid == doctest::Approx(b.value).epsilon(1e-10));
    bool pos = false, neg = false;
    for (double v : s.sigma) {
        pos = pos || v > 0.0;
        neg = neg || v < 0.0;
    }
    CHECK(pos);
    CHECK(neg);
}

TEST_CASE("purity and ending time") {
    CHECK(purity_y(ChannelPoint{}) == 1.0);
    std::mt19937_64 rng(12);
    for (int k = 0; k < 200; ++k) {
        const ChannelPoint p = oracle::random_point(rng, false);
        const Eigen::Matrix2cd rho = oracle::apply_point(p, oracle::probe('y'));
        CHECK(std::abs(purity_y(p) - (rho * rho).trace().real()) < 1e-10);
    }

    const auto rot = sample(rotation, 0.1, 100);
    CHECK_THROWS_AS(ending_time(rot), EndingTimeNotReached);
    try {
        ending_time(rot);
    } catch (const EndingTimeNotReached& e) {
        CHECK(e.horizon() == doctest::Approx(9.9));
    }

    // |z1| = 1 - t / 10 gives P = 1/2 + (1 - t/10)^2 / 2, hitting 0.51 at t = 10 (1 - sqrt(0.02))
    std::vector<ChannelPoint> lin;
    for (int k = 0; k < 100; ++k) {
        const double t = 0.1 * k;
        lin.push_back({t, 1.0, 1.0 - t / 10.0, 0.0});
    }
    CHECK(ending_time(lin) == doctest::Approx(10.0 * (1.0 - std::sqrt(0.02))).epsilon(1e-3));
}

TEST_CASE("analysis horizon and uncoupled limit") {
    const ChannelTrajectory rot = as_trajectory(sample(rotation, 0.05, 400));
    const Analysis a = analyze(rot);
    CHECK_FALSE(a.report.t_end_reached);
    CHECK(a.report.nm_rhp < 1e-10);
    CHECK(a.report.nm_blp < 1e-10);
    CHECK(a.report.nm_mdr < 1e-10);
    CHECK(a.report.horizon_points == 399);

    std::vector<ChannelPoint> lin;
    for (int k = 0; k < 200; ++k) {
        const double t = 0.1 * k;
        lin.push_back({t, 1.0, std::max(0.0, 1.0 - t / 10.0), 0.0});
    }
    const Analysis b = analyze(as_trajectory(lin));
    CHECK(b.report.t_end_reached);
    CHECK(b.times.back() <= b.report.t_end);
    CHECK(b.times.size() == b.report.horizon_points);
    CHECK(b.divisibility.size() == b.times.size());
    CHECK(nondecreasing(b.rhp.cumulative));

    // extra points past the crossing do not change the result
    lin.resize(150);
    const NMReport c = compute_report(as_trajectory(lin));
    CHECK(c.nm_rhp == b.report.nm_rhp);
    CHECK(c.nm_blp == b.report.nm_blp);
    CHECK(c.t_end == b.report.t_end);
}

TEST_CASE("doubling the state grid changes BLP and MDR by less than 1%") {
    const auto pts = sample(wobble, 0.02, 600);
    StateGrid fine;
    fine.theta_points = 61;
    fine.phi_points = 62;
    const double b = nm_blp(pts).value;
    const double bf = nm_blp(pts, fine).value;
    CHECK(std::abs(bf - b) < 0.01 * bf);
    const double m = nm_mdr(pts).value;
    const double mf = nm_mdr(pts, fine).value;
    CHECK(std::abs(mf - m) < 0.01 * mf);
}

}
