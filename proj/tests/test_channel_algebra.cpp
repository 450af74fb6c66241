#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rmtnm/channel_algebra.hpp"
#include "rmtnm/error.hpp"

using namespace rmtnm;

TEST_SUITE("channel_algebra") {

TEST_CASE("identity point gives the maximally entangled Choi matrix") {
    const ChoiMatrix c = choi_from_point(ChannelPoint{});
    Matrix4c expected = Matrix4c::Zero();
    expected(0, 0) = expected(0, 3) = expected(3, 0) = expected(3, 3) = 1.0;
    CHECK((c.m - expected).norm() == 0.0);
    CHECK((superop_from_point(ChannelPoint{}).m - Matrix4c::Identity()).norm() == 0.0);
}

TEST_CASE("completely depolarizing point") {
    const ChannelPoint p{0.0, 0.5, 0.0, 0.0};
    CHECK((choi_from_point(p).m - 0.5 * Matrix4c::Identity()).norm() == 0.0);
    CHECK_THROWS_AS(invert_superop(superop_from_point(p)), NonInvertibleChannel);
    CHECK_THROWS_AS(intermediate_map(p, p), NonInvertibleChannel);
}

TEST_CASE("Choi and superoperator agree with the channel action") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 200; ++k) {
        const ChannelPoint p = oracle::random_point(rng, false);
        CHECK((choi_from_point(p).m - oracle::choi_by_action(p)).norm() < 1e-14);
        const Matrix4c l = superop_from_point(p).m;
        for (char axis : {'x', 'y', 'z'}) {
            const auto rho = oracle::probe(axis);
            CHECK((l * oracle::vec(rho) - oracle::vec(oracle::apply_point(p, rho))).norm() < 1e-14);
        }
    }
}

TEST_CASE("reshuffle is an involution linking both representations") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Matrix4c x;
    for (int i = 0; i < 16; ++i) x(i / 4, i % 4) = cplx(nd(rng), nd(rng));
    CHECK((reshuffle(reshuffle(x)) - x).norm() == 0.0);
    for (int k = 0; k < 50; ++k) {
        const ChannelPoint p = oracle::random_point(rng, false);
        CHECK((choi_from_superop(superop_from_point(p)).m - choi_from_point(p).m).norm() == 0.0);
        CHECK((superop_from_choi(choi_from_point(p)).m - superop_from_point(p).m).norm() == 0.0);
    }
}

TEST_CASE("composition and closed-form inverse") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
        const ChannelPoint a = oracle::random_point(rng);
        const ChannelPoint b = oracle::random_point(rng);
        const Superoperator la = superop_from_point(a);
        const Superoperator lb = superop_from_point(b);
        const auto rho = oracle::probe('x');
        CHECK((compose(lb, la).m * oracle::vec(rho) - oracle::vec(oracle::apply_point(b, oracle::apply_point(a, rho))))
                  .norm() < 1e-13);
        const Superoperator inv = invert_superop(la);
        CHECK((inv.m * la.m - Matrix4c::Identity()).norm() < 1e-10);
        CHECK((inv.m - la.m.inverse()).norm() < 1e-9 * (1.0 + la.m.inverse().norm()));
    }
}

TEST_CASE("inversion tolerance") {
    const ChannelPoint near{0.0, 0.5 + 1e-8, 0.9, 0.0};
    CHECK_THROWS_AS(invert_superop(superop_from_point(near)), NonInvertibleChannel);
    CHECK_NOTHROW(invert_superop(superop_from_point(near), 1e-9));
    const ChannelPoint equal_moduli{0.0, 0.8, 0.4, cplx(0.0, 0.4)};
    CHECK_THROWS_AS(invert_superop(superop_from_point(equal_moduli)), NonInvertibleChannel);
}

TEST_CASE("intermediate map from a point to itself is the identity") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 100; ++k) {
        const ChannelPoint p = oracle::random_point(rng);
        const IntermediateMapParams m = intermediate_map(p, p);
        CHECK(std::abs(m.q - 1.0) < 1e-12);
        CHECK(std::abs(m.z1 - 1.0) < 1e-12);
        CHECK(std::abs(m.z2) < 1e-12);
        const auto ev = choi_eigenvalues(m);
        CHECK(std::abs(choi_trace_norm(m) - 2.0) < 1e-12);
        CHECK(*std::min_element(ev.begin(), ev.end()) > -1e-12);
    }
}

TEST_CASE("intermediate map equals reshuffle(L' L^-1) and its spectrum is closed form") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 1000; ++k) {
        const ChannelPoint p = oracle::random_point(rng);
        const ChannelPoint pe = oracle::random_point(rng);
        const IntermediateMapParams m = intermediate_map(p, pe);
        const Matrix4c direct = reshuffle(superop_from_point(pe).m * superop_from_point(p).m.inverse());
        const double scale = 1.0 + direct.norm();
        CHECK((choi_from_intermediate(m).m - direct).norm() < 1e-10 * scale);

        auto closed = choi_eigenvalues(m);
        std::sort(closed.begin(), closed.end());
        const Eigen::Vector4d dense = oracle::dense_eigenvalues(choi_from_intermediate(m).m);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(closed[i] - dense(i)) < 1e-10 * scale);
    }
}

TEST_CASE("intermediate map composes back to the later channel") {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 100; ++k) {
        const ChannelPoint p = oracle::random_point(rng);
        const ChannelPoint pe = oracle::random_point(rng);
        const IntermediateMapParams m = intermediate_map(p, pe);
        const Superoperator inter = superop_from_point(ChannelPoint{0.0, m.q, m.z1, m.z2});
        CHECK((compose(inter, superop_from_point(p)).m - superop_from_point(pe).m).norm() < 1e-10);
    }
}

}
