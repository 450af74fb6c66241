#include "rmtnm/nm_measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "rmtnm/error.hpp"

namespace rmtnm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double grid_step(std::span<const ChannelPoint> points) {
    if (points.size() < 3) {
        throw InvalidArgument("derivative estimation needs at least 3 time points, got " +
                              std::to_string(points.size()));
    }
    const double dt = points[1].t - points[0].t;
    if (!(dt > 0.0)) {
        throw InvalidArgument("time grid must be strictly increasing");
    }
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double step = points[i].t - points[i - 1].t;
        if (std::abs(step - dt) > 1e-6 * dt) {
            throw InvalidArgument("time grid is not uniform at index " + std::to_string(i));
        }
    }
    return dt;
}

// Stencils shared by real and complex series.
template <typename T, typename Get>
std::vector<T> finite_difference(std::size_t n, double dt, int window, Get y) {
    std::vector<T> d(n);
    const double inv2 = 1.0 / (2.0 * dt);
    d[0] = (-3.0 * y(0) + 4.0 * y(1) - y(2)) * inv2;
    d[n - 1] = (3.0 * y(n - 1) - 4.0 * y(n - 2) + y(n - 3)) * inv2;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d[i] = (y(i + 1) - y(i - 1)) * inv2;
    }
    if (window > 1) {
        const std::size_t h = static_cast<std::size_t>(window / 2);
        double norm = 0.0;
        for (std::size_t k = 1; k <= h; ++k) {
            norm += 2.0 * static_cast<double>(k * k);
        }
        for (std::size_t i = h; i + h < n; ++i) {
            T acc{};
            for (std::size_t k = 1; k <= h; ++k) {
                acc += static_cast<double>(k) * (y(i + k) - y(i - k));
            }
            d[i] = acc / (norm * dt);
        }
    }
    return d;
}

void check_window(int window) {
    if (window < 0 || (window > 1 && window % 2 == 0)) {
        throw InvalidArgument("smoothing window must be 0 or an odd positive integer");
    }
}

double m_of_phi(const ChannelPoint& p, double c2, double s2) {
    // |z1 + z2 e^{-2i phi}|^2 = |z1|^2 + |z2|^2 + 2 Re(z1 z2^* e^{2i phi})
    const cplx z = p.z1 * std::conj(p.z2);
    return std::norm(p.z1) + std::norm(p.z2) + 2.0 * (z.real() * c2 - z.imag() * s2);
}

// T(t_k) for one pair, reusing the per-point factors.
void distance_series(std::span<const ChannelPoint> points, const BlochPair& pair, std::vector<double>& out) {
    const double c = std::cos(pair.theta);
    const double s = std::sin(pair.theta);
    const double c2 = std::cos(2.0 * pair.phi);
    const double s2 = std::sin(2.0 * pair.phi);
    out.resize(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double d = 2.0 * points[k].r - 1.0;
        const double m = std::max(0.0, m_of_phi(points[k], c2, s2));
        out[k] = 0.5 * pair.R * std::sqrt(d * d * c * c + m * s * s);
    }
}

} // namespace

std::vector<double> differentiate(std::span<const double> values, double dt) {
    if (values.size() < 3) {
        throw InvalidArgument("derivative estimation needs at least 3 time points");
    }
    return finite_difference<double>(values.size(), dt, 0, [&](std::size_t i) { return values[i]; });
}

Derivatives estimate_derivatives(std::span<const ChannelPoint> points, const DerivativeOptions& options) {
    check_window(options.smoothing_window);
    const double dt = grid_step(points);
    const std::size_t n = points.size();
    const int w = options.smoothing_window;
    Derivatives d;
    d.r = finite_difference<double>(n, dt, w, [&](std::size_t i) { return points[i].r; });
    d.z1 = finite_difference<cplx>(n, dt, w, [&](std::size_t i) { return points[i].z1; });
    d.z2 = finite_difference<cplx>(n, dt, w, [&](std::size_t i) { return points[i].z2; });
    return d;
}

std::vector<DivisibilityDeltas> divisibility_deltas(std::span<const ChannelPoint> points, const Derivatives& deriv,
                                                    double tol) {
    if (deriv.r.size() < points.size()) {
        throw InvalidArgument("derivative series shorter than the trajectory");
    }
    std::vector<DivisibilityDeltas> out(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        const ChannelPoint& p = points[k];
        const double small_d = 2.0 * p.r - 1.0;
        const double big_d = std::norm(p.z1) - std::norm(p.z2);
        DivisibilityDeltas& o = out[k];
        o.t = p.t;
        if (std::abs(small_d) <= tol || std::abs(big_d) <= tol) {
            o.valid = false;
            o.delta1 = o.delta2 = o.deltaq = kNaN;
            continue;
        }
        const cplx dz1 = deriv.z1[k];
        const cplx dz2 = deriv.z2[k];
        o.delta1 = -(dz1 * std::conj(p.z1) - dz2 * std::conj(p.z2)).real() / big_d;
        o.delta2 = std::abs(dz2 * p.z1 - dz1 * p.z2) / std::abs(big_d);
        o.deltaq = -deriv.r[k] / small_d;
    }
    return out;
}

double g_value(double delta1, double deltaq, double delta2) {
    // Case analysis of the symmetric form: the first term measures dq > d1, the rest
    // measures d2 > dq (or |dq| > d2 when dq < 0).
    return std::max(0.0, deltaq - delta1) + std::max(std::abs(deltaq), delta2) - deltaq;
}

std::optional<double> g_of_t(const DivisibilityDeltas& d) {
    if (!d.valid) {
        return std::nullopt;
    }
    return g_value(d.delta1, d.deltaq, d.delta2);
}

RhpResult nm_rhp(std::span<const DivisibilityDeltas> deltas) {
    RhpResult res;
    const std::size_t n = deltas.size();
    res.g.resize(n);
    res.cumulative.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        res.g[k] = g_of_t(deltas[k]).value_or(0.0);
    }
    for (std::size_t k = 1; k < n; ++k) {
        const double h = deltas[k].t - deltas[k - 1].t;
        res.cumulative[k] = res.cumulative[k - 1] + 0.5 * h * (res.g[k - 1] + res.g[k]);
    }
    res.value = n ? res.cumulative.back() : 0.0;
    return res;
}

double trace_distance(const ChannelPoint& p, const BlochPair& pair) {
    const double d = 2.0 * p.r - 1.0;
    const double c = std::cos(pair.theta);
    const double s = std::sin(pair.theta);
    const double m = std::norm(p.z1 + p.z2 * std::polar(1.0, -2.0 * pair.phi));
    return 0.5 * pair.R * std::sqrt(d * d * c * c + m * s * s);
}

void StateGrid::validate() const {
    if (theta_points < 2 || phi_points < 2) {
        throw InvalidArgument("state grid resolutions must be >= 2");
    }
    if (!(R > 0.0) || R > 2.0) {
        throw InvalidArgument("Bloch-pair length R must lie in (0, 2]");
    }
}

BlochPair StateGrid::pair(int i, int j) const {
    return BlochPair{0.5 * std::numbers::pi * i / (theta_points - 1), std::numbers::pi * j / phi_points, R};
}

BlpResult nm_blp(std::span<const ChannelPoint> points, const StateGrid& grid) {
    grid.validate();
    BlpResult res;
    res.argmax = grid.pair(0, 0);
    res.cumulative.assign(points.size(), 0.0);
    std::vector<double> dist;
    bool first = true;
    for (int i = 0; i < grid.theta_points; ++i) {
        for (int j = 0; j < grid.phi_points; ++j) {
            const BlochPair pair = grid.pair(i, j);
            distance_series(points, pair, dist);
            double sum = 0.0;
            for (std::size_t k = 1; k < dist.size(); ++k) {
                sum += std::max(0.0, dist[k] - dist[k - 1]);
                res.cumulative[k] = std::max(res.cumulative[k], sum);
            }
            if (first || sum > res.value) {
                res.value = sum;
                res.argmax = pair;
                first = false;
            }
        }
    }
    return res;
}

MdrResult nm_mdr(std::span<const ChannelPoint> points, const StateGrid& grid) {
    grid.validate();
    MdrResult res;
    res.argmax = grid.pair(0, 0);
    res.cumulative.assign(points.size(), 0.0);
    if (!points.empty()) {
        res.t1 = res.t2 = points.front().t;
    }
    std::vector<double> dist;
    bool first = true;
    for (int i = 0; i < grid.theta_points; ++i) {
        for (int j = 0; j < grid.phi_points; ++j) {
            const BlochPair pair = grid.pair(i, j);
            distance_series(points, pair, dist);
            double best = 0.0;
            std::size_t best_t1 = 0;
            std::size_t best_t2 = 0;
            std::size_t min_at = 0;
            for (std::size_t k = 0; k < dist.size(); ++k) {
                if (dist[k] < dist[min_at]) {
                    min_at = k;
                }
                const double gain = dist[k] - dist[min_at];
                if (gain > best) {
                    best = gain;
                    best_t1 = k;
                    best_t2 = min_at;
                }
                res.cumulative[k] = std::max(res.cumulative[k], best);
            }
            if (first || best > res.value) {
                res.value = best;
                res.argmax = pair;
                if (!points.empty()) {
                    res.t1 = points[best_t1].t;
                    res.t2 = points[best_t2].t;
                }
                first = false;
            }
        }
    }
    return res;
}

std::vector<ContractivityDeltas> contractivity_deltas(std::span<const ChannelPoint> points, const Derivatives& deriv) {
    if (deriv.r.size() < points.size()) {
        throw InvalidArgument("derivative series shorter than the trajectory");
    }
    std::vector<ContractivityDeltas> out(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        const ChannelPoint& p = points[k];
        const cplx dz1 = deriv.z1[k];
        const cplx dz2 = deriv.z2[k];
        ContractivityDeltas& o = out[k];
        o.t = p.t;
        const double small_d = 2.0 * p.r - 1.0;
        o.deltaq = small_d != 0.0 ? -deriv.r[k] / small_d : kNaN;
        o.delta1C = -(dz1 * std::conj(p.z1) + dz2 * std::conj(p.z2)).real();
        o.delta2C = std::abs(dz1 * std::conj(p.z2) + p.z1 * std::conj(dz2));
        o.m_dot_max = 2.0 * (o.delta2C - o.delta1C);
    }
    return out;
}

SigmaMaxSeries sigma_max(std::span<const ChannelPoint> points, const BlochPair& pair) {
    SigmaMaxSeries s;
    const std::size_t n = points.size();
    if (n < 2) {
        s.sigma.assign(n, 0.0);
        return s;
    }
    std::vector<double> dist;
    distance_series(points, pair, dist);
    const double dt = points[1].t - points[0].t;
    if (n >= 3) {
        s.sigma = differentiate(dist, dt);
    } else {
        s.sigma.assign(n, (dist[1] - dist[0]) / dt);
    }
    s.mid_sigma.resize(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double h = points[k + 1].t - points[k].t;
        s.mid_sigma[k] = (dist[k + 1] - dist[k]) / h;
        s.positive_integral += std::max(0.0, dist[k + 1] - dist[k]);
    }
    return s;
}

double purity_y(const ChannelPoint& p) { return 0.5 + 0.5 * std::norm(p.z1 - p.z2); }

double ending_time(std::span<const ChannelPoint> points, double threshold) {
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double pk = purity_y(points[k]);
        if (pk <= threshold) {
            if (k == 0) {
                return points[0].t;
            }
            const double pp = purity_y(points[k - 1]);
            const double frac = (pp - threshold) / (pp - pk);
            return points[k - 1].t + frac * (points[k].t - points[k - 1].t);
        }
    }
    const double horizon = points.empty() ? 0.0 : points.back().t;
    std::ostringstream msg;
    msg << "purity never dropped to " << threshold << " up to t = " << horizon;
    throw EndingTimeNotReached(msg.str(), horizon);
}

Analysis analyze(const ChannelTrajectory& traj, const MeasureOptions& options) {
    options.grid.validate();
    std::span<const ChannelPoint> all(traj.points);
    if (all.size() < 3) {
        throw InvalidArgument("trajectory needs at least 3 time points");
    }

    Analysis a;
    NMReport& rep = a.report;
    rep.delta = traj.params.delta;
    rep.lambda = traj.params.lambda;
    rep.blp_R = options.grid.R;
    rep.n_samples = traj.n_accumulated;

    // Derivatives only see points up to the first crossing, so the result does not
    // depend on how far past t_end the grid happens to extend. Measures use the
    // points before it.
    std::size_t window = all.size();
    std::size_t horizon = all.size();
    try {
        rep.t_end = ending_time(all);
        rep.t_end_reached = true;
        std::size_t k = 0;
        while (purity_y(all[k]) > kEndingPurity) {
            ++k;
        }
        horizon = std::max<std::size_t>(k, 1);
        window = std::max<std::size_t>(k + 1, 3);
    } catch (const EndingTimeNotReached&) {
        // The last point has no right neighbour; like the crossing point it only
        // anchors the derivative of its predecessor.
        horizon = all.size() - 1;
        rep.t_end = all[horizon - 1].t;
        rep.t_end_reached = false;
    }
    rep.horizon_points = horizon;

    const std::span<const ChannelPoint> win = all.first(window);
    const std::span<const ChannelPoint> hor = all.first(horizon);
    const Derivatives deriv = estimate_derivatives(win, options.derivatives);

    a.times.reserve(horizon);
    for (const auto& p : hor) {
        a.times.push_back(p.t);
    }
    a.divisibility = divisibility_deltas(win, deriv, options.invert_tol);
    a.divisibility.resize(horizon);
    a.contractivity = contractivity_deltas(win, deriv);
    a.contractivity.resize(horizon);

    a.rhp = nm_rhp(a.divisibility);
    a.blp = nm_blp(hor, options.grid);
    a.mdr = nm_mdr(hor, options.grid);
    a.sigma = sigma_max(hor, a.blp.argmax);

    rep.nm_rhp = a.rhp.value;
    rep.nm_blp = a.blp.value;
    rep.nm_mdr = a.mdr.value;
    rep.blp_argmax = a.blp.argmax;
    rep.mdr_argmax = a.mdr.argmax;
    rep.mdr_t1 = a.mdr.t1;
    rep.mdr_t2 = a.mdr.t2;
    return a;
}

NMReport compute_report(const ChannelTrajectory& traj, const MeasureOptions& options) {
    return analyze(traj, options).report;
}

} // namespace rmtnm
