#include "rmtnm/channel_algebra.hpp"

#include <cmath>
#include <sstream>

#include "rmtnm/error.hpp"

namespace rmtnm {

namespace {

void check_invertible(double small_d, double big_d, double tol) {
    if (std::abs(small_d) <= tol || std::abs(big_d) <= tol) {
        std::ostringstream msg;
        msg << "channel is not invertible: |2r-1| = " << std::abs(small_d) << ", |D| = " << std::abs(big_d)
            << " (tol " << tol << ")";
        throw NonInvertibleChannel(msg.str());
    }
}

} // namespace

ChoiMatrix choi_from_point(const ChannelPoint& p) {
    Matrix4c c = Matrix4c::Zero();
    c(0, 0) = p.r;
    c(1, 1) = 1.0 - p.r;
    c(2, 2) = 1.0 - p.r;
    c(3, 3) = p.r;
    c(0, 3) = std::conj(p.z1);
    c(3, 0) = p.z1;
    c(1, 2) = p.z2;
    c(2, 1) = std::conj(p.z2);
    return ChoiMatrix{c};
}

Superoperator superop_from_point(const ChannelPoint& p) {
    Matrix4c l = Matrix4c::Zero();
    l(0, 0) = p.r;
    l(0, 3) = 1.0 - p.r;
    l(3, 0) = 1.0 - p.r;
    l(3, 3) = p.r;
    l(1, 1) = p.z1;
    l(1, 2) = p.z2;
    l(2, 1) = std::conj(p.z2);
    l(2, 2) = std::conj(p.z1);
    return Superoperator{l};
}

Matrix4c reshuffle(const Matrix4c& x) {
    Matrix4c y;
    for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) {
            for (int j = 0; j < 2; ++j) {
                for (int l = 0; l < 2; ++l) {
                    y(2 * i + k, 2 * j + l) = x(k + 2 * l, i + 2 * j);
                }
            }
        }
    }
    return y;
}

ChoiMatrix choi_from_superop(const Superoperator& s) { return ChoiMatrix{reshuffle(s.m)}; }

Superoperator superop_from_choi(const ChoiMatrix& c) { return Superoperator{reshuffle(c.m)}; }

Superoperator compose(const Superoperator& second, const Superoperator& first) {
    return Superoperator{second.m * first.m};
}

Superoperator invert_superop(const Superoperator& l, double tol) {
    const double r = l.m(0, 0).real();
    const cplx z1 = l.m(1, 1);
    const cplx z2 = l.m(1, 2);
    const double small_d = 2.0 * r - 1.0;
    const double big_d = std::norm(z1) - std::norm(z2);
    check_invertible(small_d, big_d, tol);

    Matrix4c inv = Matrix4c::Zero();
    inv(0, 0) = r / small_d;
    inv(0, 3) = (r - 1.0) / small_d;
    inv(3, 0) = (r - 1.0) / small_d;
    inv(3, 3) = r / small_d;
    inv(1, 1) = std::conj(z1) / big_d;
    inv(1, 2) = -z2 / big_d;
    inv(2, 1) = -std::conj(z2) / big_d;
    inv(2, 2) = z1 / big_d;
    return Superoperator{inv};
}

IntermediateMapParams intermediate_map(const ChannelPoint& at_t, const ChannelPoint& at_t_eps, double tol) {
    const double small_d = 2.0 * at_t.r - 1.0;
    const double big_d = std::norm(at_t.z1) - std::norm(at_t.z2);
    check_invertible(small_d, big_d, tol);

    IntermediateMapParams m;
    m.small_d = small_d;
    m.big_d = big_d;
    m.q = (at_t.r + at_t_eps.r - 1.0) / small_d;
    m.z1 = (at_t_eps.z1 * std::conj(at_t.z1) - at_t_eps.z2 * std::conj(at_t.z2)) / big_d;
    m.z2 = (at_t_eps.z2 * at_t.z1 - at_t_eps.z1 * at_t.z2) / big_d;
    return m;
}

ChoiMatrix choi_from_intermediate(const IntermediateMapParams& m) {
    return choi_from_point(ChannelPoint{0.0, m.q, m.z1, m.z2});
}

std::array<double, 4> choi_eigenvalues(const IntermediateMapParams& m) {
    const double a1 = std::abs(m.z1);
    const double a2 = std::abs(m.z2);
    return {m.q + a1, m.q - a1, (1.0 - m.q) + a2, (1.0 - m.q) - a2};
}

double choi_trace_norm(const IntermediateMapParams& m) {
    double sum = 0.0;
    for (double ev : choi_eigenvalues(m)) {
        sum += std::abs(ev);
    }
    return sum;
}

} // namespace rmtnm
