#pragma once

#include <array>

#include <Eigen/Dense>

#include "rmtnm/dynamics.hpp"

namespace rmtnm {

using Matrix4c = Eigen::Matrix4cd;

// Absolute threshold on |2r-1| and |D| below which a channel is treated as non-invertible.
inline constexpr double kDefaultInvertTol = 1e-6;

// Choi matrix C = sum_ij |i><j| (x) K[|i><j|], rows/cols indexed 2*i + k.
struct ChoiMatrix {
    Matrix4c m;
};

// Matrix acting on vec(rho) = (rho00, rho10, rho01, rho11).
struct Superoperator {
    Matrix4c m;
};

ChoiMatrix choi_from_point(const ChannelPoint& p);
Superoperator superop_from_point(const ChannelPoint& p);

// Index permutation C[2i+k][2j+l] <-> L[k+2l][i+2j]. An involution.
Matrix4c reshuffle(const Matrix4c& x);
ChoiMatrix choi_from_superop(const Superoperator& s);
Superoperator superop_from_choi(const ChoiMatrix& c);

Superoperator compose(const Superoperator& second, const Superoperator& first);

// Closed-form inverse of an X-structured superoperator. Throws NonInvertibleChannel
// when |2r-1| <= tol or ||z1|^2 - |z2|^2| <= tol.
Superoperator invert_superop(const Superoperator& l, double tol = kDefaultInvertTol);

// Parameters of the intermediate map taking the state at t to the state at t + eps.
struct IntermediateMapParams {
    double q{1.0};
    cplx z1{1.0, 0.0}; // Z1
    cplx z2{0.0, 0.0}; // Z2
    double big_d{1.0}; // D = |z1|^2 - |z2|^2 at t
    double small_d{1.0}; // d = 2r - 1 at t
};

IntermediateMapParams intermediate_map(const ChannelPoint& at_t, const ChannelPoint& at_t_eps,
                                       double tol = kDefaultInvertTol);

ChoiMatrix choi_from_intermediate(const IntermediateMapParams& m);

// {q + |Z1|, q - |Z1|, (1-q) + |Z2|, (1-q) - |Z2|}
std::array<double, 4> choi_eigenvalues(const IntermediateMapParams& m);

double choi_trace_norm(const IntermediateMapParams& m);

} // namespace rmtnm
