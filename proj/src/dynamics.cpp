#include "rmtnm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "parallel.hpp"
#include "rmtnm/error.hpp"

namespace rmtnm {

namespace {

using RowMajorMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr cplx kI{0.0, 1.0};

} // namespace

void ModelParams::validate() const {
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw InvalidArgument("delta must be a finite non-negative number");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("lambda must be a finite non-negative number");
    }
    if (env_dim < 1) {
        throw InvalidArgument("env_dim must be >= 1");
    }
    if (lambda > 0.0 && env_dim < 2) {
        throw InvalidArgument("env_dim must be >= 2 when lambda > 0");
    }
    if (n_samples < 1) {
        throw InvalidArgument("empty ensemble: n_samples must be >= 1");
    }
    if (time_grid.empty() || time_grid.front() != 0.0) {
        throw InvalidArgument("time grid must start at t = 0");
    }
    for (std::size_t i = 1; i < time_grid.size(); ++i) {
        if (!(time_grid[i] > time_grid[i - 1])) {
            throw InvalidArgument("time grid must be strictly increasing (index " + std::to_string(i) + ")");
        }
    }
}

std::vector<double> uniform_time_grid(double dt, std::size_t n_points, std::size_t first_index) {
    if (!(dt > 0.0)) {
        throw InvalidArgument("time step must be positive");
    }
    std::vector<double> t(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        t[i] = static_cast<double>(first_index + i) * dt;
    }
    return t;
}

// ---------------------------------------------------------------------------

std::vector<double> ChannelTrajectory::times() const {
    std::vector<double> t(points.size());
    std::transform(points.begin(), points.end(), t.begin(), [](const ChannelPoint& p) { return p.t; });
    return t;
}

bool ChannelTrajectory::has_prefix(int k) const {
    if (k == n_accumulated) {
        return true;
    }
    return std::any_of(snapshots.begin(), snapshots.end(), [k](const PrefixSnapshot& s) { return s.n_samples == k; });
}

ChannelTrajectory ChannelTrajectory::prefix(int k) const {
    ChannelTrajectory out;
    out.params = params;
    out.params.n_samples = k;
    out.n_accumulated = k;
    if (k == n_accumulated) {
        out.points = points;
        out.errors = errors;
        return out;
    }
    for (const auto& s : snapshots) {
        if (s.n_samples == k) {
            out.points = s.points;
            out.errors = s.errors;
            return out;
        }
    }
    throw InvalidArgument("prefix of size " + std::to_string(k) + " was not recorded");
}

// ---------------------------------------------------------------------------

ChannelAccumulator::ChannelAccumulator(std::size_t n_times) : mean_(n_times, Row{}), m2_(n_times, Row{}) {}

void ChannelAccumulator::add(std::span<const ChannelPoint> realization) {
    if (realization.size() != mean_.size()) {
        throw InvalidArgument("accumulator: realization length does not match the time grid");
    }
    ++count_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        const ChannelPoint& p = realization[i];
        const Row x{p.r, p.z1.real(), p.z1.imag(), p.z2.real(), p.z2.imag()};
        for (std::size_t c = 0; c < x.size(); ++c) {
            const double d = x[c] - mean_[i][c];
            mean_[i][c] += d * inv;
            m2_[i][c] += d * (x[c] - mean_[i][c]);
        }
    }
}

std::vector<ChannelPoint> ChannelAccumulator::mean(std::span<const double> times) const {
    std::vector<ChannelPoint> out(mean_.size());
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        const Row& m = mean_[i];
        out[i] = ChannelPoint{times[i], m[0], {m[1], m[2]}, {m[3], m[4]}};
    }
    return out;
}

std::vector<ChannelErrors> ChannelAccumulator::standard_errors() const {
    std::vector<ChannelErrors> out(m2_.size());
    if (count_ < 2) {
        return out;
    }
    const double n = count_;
    auto se = [n](double m2) { return std::sqrt(std::max(m2, 0.0) / (n - 1.0) / n); };
    for (std::size_t i = 0; i < m2_.size(); ++i) {
        const Row& v = m2_[i];
        out[i] = ChannelErrors{se(v[0]), se(v[1]), se(v[2]), se(v[3]), se(v[4])};
    }
    return out;
}

// ---------------------------------------------------------------------------

Realization sample_realization(const ModelParams& params, std::uint64_t index) {
    const SeededStream h_stream{params.master_seed, index, kEnvHamiltonianStream};
    const SeededStream v_stream{params.master_seed, index, kCouplingStream};
    return Realization{scale_to_unit_spacing(sample_gue(params.env_dim, h_stream)),
                       sample_gue(params.env_dim, v_stream)};
}

ComplexMatrix build_hamiltonian(const ModelParams& params, const GueMatrix& h_env, const GueMatrix& v_env) {
    const Eigen::Index n = h_env.dim();
    if (h_env.entries.cols() != n || v_env.dim() != n || v_env.entries.cols() != n) {
        throw InvalidArgument("build_hamiltonian: environment matrices must both be square of equal size");
    }
    if (params.env_dim != n) {
        throw InvalidArgument("build_hamiltonian: env_dim = " + std::to_string(params.env_dim) +
                              " but matrices have dimension " + std::to_string(n));
    }
    ComplexMatrix h = ComplexMatrix::Zero(2 * n, 2 * n);
    h.topLeftCorner(n, n) = h_env.entries;
    h.bottomRightCorner(n, n) = h_env.entries;
    h.topLeftCorner(n, n).diagonal().array() += 0.5 * params.delta;
    h.bottomRightCorner(n, n).diagonal().array() -= 0.5 * params.delta;
    h.topRightCorner(n, n) = params.lambda * v_env.entries;
    h.bottomLeftCorner(n, n) = params.lambda * v_env.entries;
    return h;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(const ComplexMatrix& h_total, int env_dim) : env_dim_(env_dim) {
    const Eigen::Index n = env_dim;
    if (h_total.rows() != 2 * n || h_total.cols() != 2 * n) {
        throw InvalidArgument("Propagator: Hamiltonian must have dimension 2 * env_dim");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h_total);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("Hermitian eigensolver failed");
    }
    energies_ = solver.eigenvalues();
    const ComplexMatrix& w = solver.eigenvectors();
    w0_ = w.topRows(n);
    w1_ = w.bottomRows(n);

    // Overlap G_ba = W_b^dagger W_a and probe kernels K_psi = V_psi^dagger V_psi with
    // V_psi = sum_c conj(psi_c) W_c. Then
    //   <a| rho_psi(t) |b> = (1/N) sum_kl G_ba(l,k) K_psi(k,l) phi_k conj(phi_l).
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    const ComplexMatrix g00 = w0_.adjoint() * w0_;
    const ComplexMatrix g01 = w0_.adjoint() * w1_;
    const ComplexMatrix vx = inv_sqrt2 * (w0_ + w1_);
    const ComplexMatrix vy = inv_sqrt2 * (w0_ - kI * w1_);
    const ComplexMatrix kx = vx.adjoint() * vx;
    const ComplexMatrix ky = vy.adjoint() * vy;

    const Eigen::Index dim = 2 * n;
    const double inv_n = 1.0 / static_cast<double>(n);
    kernels_.resize(dim, 3 * dim);
    // r = <0|rho_z|0>;  z_x = 2 <1|rho_x|0>;  z_y = 2 <1|rho_y|0>
    kernels_.middleCols(0, dim) = inv_n * g00.transpose().cwiseProduct(g00);
    kernels_.middleCols(dim, dim) = (2.0 * inv_n) * g01.transpose().cwiseProduct(kx);
    kernels_.middleCols(2 * dim, dim) = (2.0 * inv_n) * g01.transpose().cwiseProduct(ky);
}

std::vector<ChannelPoint> Propagator::channel(std::span<const double> times) const {
    const Eigen::Index dim = energies_.size();
    std::vector<ChannelPoint> out(times.size());
    RowMajorMatrix phases(kBlockRows, dim);
    RowMajorMatrix projected(kBlockRows, 3 * dim);
    for (std::size_t start = 0; start < times.size(); start += kBlockRows) {
        const auto rows = static_cast<Eigen::Index>(std::min<std::size_t>(kBlockRows, times.size() - start));
        for (Eigen::Index j = 0; j < kBlockRows; ++j) {
            const double t = j < rows ? times[start + j] : 0.0;
            for (Eigen::Index k = 0; k < dim; ++k) {
                phases(j, k) = std::polar(1.0, -energies_(k) * t);
            }
        }
        projected.noalias() = phases * kernels_;
        for (Eigen::Index j = 0; j < rows; ++j) {
            const auto conj_phase = phases.row(j).conjugate().array();
            const cplx r = (projected.row(j).segment(0, dim).array() * conj_phase).sum();
            const cplx zx = (projected.row(j).segment(dim, dim).array() * conj_phase).sum();
            const cplx zy = (projected.row(j).segment(2 * dim, dim).array() * conj_phase).sum();
            out[start + j] = ChannelPoint{times[start + j], r.real(), 0.5 * (zx - kI * zy), 0.5 * (zx + kI * zy)};
        }
    }
    return out;
}

Eigen::Matrix2cd Propagator::basis_image(int c, int cp, double t) const {
    // Lambda_t[|c><c'|]_{ab} = (1/N) tr[U_ac U_bc'^dagger], U_ac = W_a diag(phi) W_c^dagger.
    const Eigen::VectorXcd phi = (-kI * t * energies_.cast<cplx>()).array().exp();
    const ComplexMatrix* w[2] = {&w0_, &w1_};
    ComplexMatrix u[2][2];
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            u[a][b] = (*w[a]) * phi.asDiagonal() * w[b]->adjoint();
        }
    }
    Eigen::Matrix2cd img;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            img(a, b) = u[a][c].cwiseProduct(u[b][cp].conjugate()).sum() / static_cast<double>(env_dim_);
        }
    }
    return img;
}

Eigen::Matrix2cd Propagator::apply(const Eigen::Matrix2cd& rho, double t) const {
    Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
    for (int c = 0; c < 2; ++c) {
        for (int cp = 0; cp < 2; ++cp) {
            if (rho(c, cp) != cplx{0.0, 0.0}) {
                out += rho(c, cp) * basis_image(c, cp, t);
            }
        }
    }
    return out;
}

Eigen::Matrix4cd Propagator::choi(double t) const {
    Eigen::Matrix4cd m;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            m.block<2, 2>(2 * i, 2 * j) = basis_image(i, j, t);
        }
    }
    return m;
}

std::vector<ChannelPoint> propagate_channel(const ModelParams& params, const ComplexMatrix& h_total) {
    return Propagator(h_total, params.env_dim).channel(params.time_grid);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<ChannelPoint> realization_channel(const ModelParams& params, std::uint64_t index,
                                              std::span<const double> times) {
    const Realization real = sample_realization(params, index);
    const ComplexMatrix h = build_hamiltonian(params, real.h_env, real.v_env);
    try {
        return Propagator(h, params.env_dim).channel(times);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (realization " + std::to_string(index) + ")");
    }
}

} // namespace

ChannelTrajectory accumulate_window(const ModelParams& params, std::span<const double> times,
                                    const EnsembleOptions& options) {
    if (params.n_samples < 1) {
        throw InvalidArgument("empty ensemble: n_samples must be >= 1");
    }
    std::vector<int> prefixes = options.prefix_sizes;
    std::sort(prefixes.begin(), prefixes.end());
    prefixes.erase(std::unique(prefixes.begin(), prefixes.end()), prefixes.end());
    for (int k : prefixes) {
        if (k < 1 || k > params.n_samples) {
            throw InvalidArgument("prefix size " + std::to_string(k) + " outside [1, n_samples]");
        }
    }

    ChannelTrajectory traj;
    traj.params = params;
    traj.params.time_grid.assign(times.begin(), times.end());

    const int threads = std::max(1, options.threads);
    const std::size_t n = static_cast<std::size_t>(params.n_samples);
    const std::size_t batch = threads == 1 ? 1 : 2 * static_cast<std::size_t>(threads);
    std::vector<std::vector<ChannelPoint>> slots(batch);
    ChannelAccumulator acc(times.size());
    auto next_prefix = prefixes.begin();

    for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t count = std::min(batch, n - start);
        detail::parallel_for(count, threads, [&](std::size_t i) {
            slots[i] = realization_channel(params, start + i, times);
        });
        // fixed-order reduction over realization index
        for (std::size_t i = 0; i < count; ++i) {
            acc.add(slots[i]);
            if (options.keep_samples) {
                traj.samples.push_back(std::move(slots[i]));
            }
            if (next_prefix != prefixes.end() && *next_prefix == acc.count()) {
                if (acc.count() != params.n_samples) {
                    traj.snapshots.push_back(PrefixSnapshot{acc.count(), acc.mean(times), acc.standard_errors()});
                }
                ++next_prefix;
            }
        }
    }
    traj.points = acc.mean(times);
    traj.errors = acc.standard_errors();
    traj.n_accumulated = acc.count();
    return traj;
}

ChannelTrajectory accumulate_ensemble(const ModelParams& params, const EnsembleOptions& options) {
    params.validate();
    return accumulate_window(params, params.time_grid, options);
}

void append_chunk(ChannelTrajectory& into, ChannelTrajectory&& chunk) {
    if (into.n_accumulated != chunk.n_accumulated) {
        throw InvalidArgument("append_chunk: ensembles differ in size");
    }
    if (!into.points.empty() && !chunk.points.empty() && !(chunk.points.front().t > into.points.back().t)) {
        throw InvalidArgument("append_chunk: chunk does not start after the trajectory");
    }
    if (into.snapshots.size() != chunk.snapshots.size()) {
        throw InvalidArgument("append_chunk: prefix snapshots differ");
    }
    auto extend = [](auto& a, auto&& b) { a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end())); };
    extend(into.points, chunk.points);
    extend(into.errors, chunk.errors);
    for (std::size_t s = 0; s < into.snapshots.size(); ++s) {
        extend(into.snapshots[s].points, chunk.snapshots[s].points);
        extend(into.snapshots[s].errors, chunk.snapshots[s].errors);
    }
    if (into.samples.size() == chunk.samples.size()) {
        for (std::size_t s = 0; s < into.samples.size(); ++s) {
            extend(into.samples[s], chunk.samples[s]);
        }
    }
    into.params.time_grid = into.times();
}

} // namespace rmtnm
