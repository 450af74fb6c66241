#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rmtnm/channel_algebra.hpp"
#include "rmtnm/dynamics.hpp"

namespace rmtnm {

// Purity of the evolved sigma_y eigenstate that ends the process.
inline constexpr double kEndingPurity = 0.51;

struct DerivativeOptions {
    // Odd window of a local quadratic least-squares fit; 0 or 1 disables smoothing.
    int smoothing_window{0};
};

struct Derivatives {
    std::vector<double> r;
    std::vector<cplx> z1;
    std::vector<cplx> z2;
};

// Central differences inside, second-order one-sided stencils at both ends.
// Requires a uniform grid with at least 3 points.
Derivatives estimate_derivatives(std::span<const ChannelPoint> points, const DerivativeOptions& options = {});

// Same stencils applied to a real series on a uniform grid with step dt.
std::vector<double> differentiate(std::span<const double> values, double dt);

struct DivisibilityDeltas {
    double t{0.0};
    double delta1{0.0};
    double delta2{0.0};
    double deltaq{0.0};
    bool valid{true};
};

std::vector<DivisibilityDeltas> divisibility_deltas(std::span<const ChannelPoint> points, const Derivatives& deriv,
                                                    double tol = kDefaultInvertTol);

// (|d1 - dq| + |dq + d2| + |dq - d2| - dq - d1) / 2, written so that it is exactly
// zero whenever d2 <= dq <= d1.
double g_value(double delta1, double deltaq, double delta2);

// Empty for invalid points.
std::optional<double> g_of_t(const DivisibilityDeltas& d);

struct RhpResult {
    double value{0.0};
    std::vector<double> g;          // 0 at invalid points
    std::vector<double> cumulative; // N_RHP(t_k)
};

// Trapezoid over the grid; invalid points carry zero weight.
RhpResult nm_rhp(std::span<const DivisibilityDeltas> deltas);

// Pair of initial states whose Bloch vectors differ by R (sin th cos ph, sin th sin ph, cos th).
struct BlochPair {
    double theta{0.0};
    double phi{0.0};
    double R{2.0};
};

double trace_distance(const ChannelPoint& p, const BlochPair& pair);

struct StateGrid {
    int theta_points{31}; // theta in [0, pi/2], endpoints included
    int phi_points{31};   // phi in [0, pi), right end excluded
    double R{2.0};

    void validate() const;
    BlochPair pair(int i, int j) const;
};

struct BlpResult {
    double value{0.0};
    BlochPair argmax;
    std::vector<double> cumulative; // max over pairs of the positive-increment sum up to t_k
};

BlpResult nm_blp(std::span<const ChannelPoint> points, const StateGrid& grid = {});

struct MdrResult {
    double value{0.0};
    BlochPair argmax;
    double t1{0.0};
    double t2{0.0};
    std::vector<double> cumulative;
};

MdrResult nm_mdr(std::span<const ChannelPoint> points, const StateGrid& grid = {});

struct ContractivityDeltas {
    double t{0.0};
    double deltaq{0.0};
    double delta1C{0.0};
    double delta2C{0.0};
    double m_dot_max{0.0};
};

// deltaq is NaN where 2r - 1 vanishes.
std::vector<ContractivityDeltas> contractivity_deltas(std::span<const ChannelPoint> points, const Derivatives& deriv);

struct SigmaMaxSeries {
    std::vector<double> sigma;     // dT/dt on the grid (central differences)
    std::vector<double> mid_sigma; // (T_{k+1} - T_k) / dt at the interval midpoints
    double positive_integral{0.0}; // sum of dt * max(0, mid_sigma)
};

SigmaMaxSeries sigma_max(std::span<const ChannelPoint> points, const BlochPair& pair);

double purity_y(const ChannelPoint& p);

// First time the purity drops to kEndingPurity, linearly interpolated.
// Throws EndingTimeNotReached if it never does.
double ending_time(std::span<const ChannelPoint> points, double threshold = kEndingPurity);

struct MeasureOptions {
    double invert_tol{kDefaultInvertTol};
    StateGrid grid{};
    DerivativeOptions derivatives{};
};

struct NMReport {
    double delta{0.0};
    double lambda{0.0};
    double t_end{0.0};
    bool t_end_reached{false};
    std::size_t horizon_points{0}; // grid points with t <= t_end that enter the measures
    double nm_rhp{0.0};
    double nm_blp{0.0};
    double nm_mdr{0.0};
    BlochPair blp_argmax;
    BlochPair mdr_argmax;
    double mdr_t1{0.0};
    double mdr_t2{0.0};
    double blp_R{2.0};
    int n_samples{0};
};

// Everything the criteria export and measures need, computed on the analysis window
// (points up to and including the first one at or below the ending purity).
struct Analysis {
    NMReport report;
    std::vector<double> times;
    std::vector<DivisibilityDeltas> divisibility;
    std::vector<ContractivityDeltas> contractivity;
    RhpResult rhp;
    BlpResult blp;
    MdrResult mdr;
    SigmaMaxSeries sigma;
};

Analysis analyze(const ChannelTrajectory& traj, const MeasureOptions& options = {});

NMReport compute_report(const ChannelTrajectory& traj, const MeasureOptions& options = {});

} // namespace rmtnm
