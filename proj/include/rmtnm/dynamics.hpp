#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rmtnm/rmt_ensembles.hpp"

namespace rmtnm {

using cplx = std::complex<double>;

// Physical and sampling configuration of one (delta, lambda) point.
struct ModelParams {
    double delta{1.0};  // qubit splitting, units of the mean level spacing
    double lambda{0.0}; // coupling strength
    int env_dim{64};
    int n_samples{1};
    std::vector<double> time_grid{0.0}; // starts at 0, strictly increasing
    std::uint64_t master_seed{0};

    void validate() const;
};

std::vector<double> uniform_time_grid(double dt, std::size_t n_points, std::size_t first_index = 0);

// Ensemble-averaged channel at one time: Choi matrix in X form with
// diagonal (r, 1-r, 1-r, r) and anti-diagonal entries built from z1, z2.
struct ChannelPoint {
    double t{0.0};
    double r{1.0};
    cplx z1{1.0, 0.0};
    cplx z2{0.0, 0.0};
};

struct ChannelErrors {
    double r{0.0};
    double re_z1{0.0};
    double im_z1{0.0};
    double re_z2{0.0};
    double im_z2{0.0};
};

struct PrefixSnapshot {
    int n_samples{0};
    std::vector<ChannelPoint> points;
    std::vector<ChannelErrors> errors;
};

struct ChannelTrajectory {
    ModelParams params;
    std::vector<ChannelPoint> points;
    std::vector<ChannelErrors> errors;
    int n_accumulated{0};
    // Means over the first k realizations, for the prefix sizes requested at accumulation time.
    std::vector<PrefixSnapshot> snapshots;
    // Per-realization series, only when requested (bootstrap resampling).
    std::vector<std::vector<ChannelPoint>> samples;

    std::vector<double> times() const;
    bool has_prefix(int k) const;
    ChannelTrajectory prefix(int k) const;
};

// Welford accumulation of (r, Re z1, Im z1, Re z2, Im z2) per time point. Adding
// realizations in a fixed order gives results independent of how they were computed.
class ChannelAccumulator {
public:
    explicit ChannelAccumulator(std::size_t n_times);

    void add(std::span<const ChannelPoint> realization);
    int count() const { return count_; }
    std::vector<ChannelPoint> mean(std::span<const double> times) const;
    std::vector<ChannelErrors> standard_errors() const;

private:
    using Row = std::array<double, 5>;
    std::vector<Row> mean_;
    std::vector<Row> m2_;
    int count_{0};
};

struct Realization {
    GueMatrix h_env; // already scaled to unit level spacing
    GueMatrix v_env;
};

Realization sample_realization(const ModelParams& params, std::uint64_t index);

// (delta/2) sz x 1 + 1 x H_e + lambda sx x V_e, qubit-major ordering.
ComplexMatrix build_hamiltonian(const ModelParams& params, const GueMatrix& h_env, const GueMatrix& v_env);

// Exact propagator of one realization, diagonalised once. With the environment
// maximally mixed, every reduced-state element is a bilinear form
// phi(t)^T M phi(t)^* in the eigenphases phi_k = exp(-i E_k t).
class Propagator {
public:
    Propagator(const ComplexMatrix& h_total, int env_dim);

    // (r, z1, z2) read off from the probe states rho^z, rho^x, rho^y.
    std::vector<ChannelPoint> channel(std::span<const double> times) const;

    // Reduced state at time t for the qubit input rho (any 2x2 operator).
    Eigen::Matrix2cd apply(const Eigen::Matrix2cd& rho, double t) const;

    // Full single-realization Choi matrix, blocks Lambda_t[|i><j|].
    Eigen::Matrix4cd choi(double t) const;

    const Eigen::VectorXd& energies() const { return energies_; }

    // Rows per GEMM block. Blocks always have this shape so each time point is
    // evaluated with the same arithmetic regardless of how the grid is chunked.
    static constexpr Eigen::Index kBlockRows = 256;

private:
    Eigen::Matrix2cd basis_image(int c, int cp, double t) const;

    int env_dim_;
    Eigen::VectorXd energies_;
    ComplexMatrix w0_; // rows of the eigenvector matrix belonging to qubit |0>
    ComplexMatrix w1_;
    ComplexMatrix kernels_; // [M_r | M_x | M_y], 2N x 6N
};

std::vector<ChannelPoint> propagate_channel(const ModelParams& params, const ComplexMatrix& h_total);

struct EnsembleOptions {
    int threads{1};
    std::vector<int> prefix_sizes;
    bool keep_samples{false};
};

ChannelTrajectory accumulate_ensemble(const ModelParams& params, const EnsembleOptions& options = {});

// Same ensemble as accumulate_ensemble(params), evaluated on an arbitrary increasing
// window of times (used to extend a grid chunk by chunk). params.time_grid is ignored.
ChannelTrajectory accumulate_window(const ModelParams& params, std::span<const double> times,
                                    const EnsembleOptions& options = {});

// Appends a later chunk (same ensemble, later times) to a trajectory.
void append_chunk(ChannelTrajectory& into, ChannelTrajectory&& chunk);

} // namespace rmtnm
