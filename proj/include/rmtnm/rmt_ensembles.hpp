#pragma once

#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace rmtnm {

using ComplexMatrix = Eigen::MatrixXcd;

// With unit mean level spacing at the band centre the Heisenberg time is 2*pi.
inline constexpr double kHeisenbergTime = 2.0 * std::numbers::pi;

// Identifies one independent random stream. Realizations can be generated in any
// order (or concurrently) and still reproduce bit for bit.
struct SeededStream {
    std::uint64_t master_seed{0};
    std::uint64_t realization_index{0};
    std::uint64_t substream{0}; // 0: environment Hamiltonian, 1: coupling operator
};

inline constexpr std::uint64_t kEnvHamiltonianStream = 0;
inline constexpr std::uint64_t kCouplingStream = 1;

std::uint64_t stream_key(const SeededStream& stream);

// Standard normal deviates from the Marsaglia polar method over a 64-bit Mersenne
// twister. Uniforms are built from the top 53 bits, so the sequence is portable
// across standard libraries (unlike std::normal_distribution).
class NormalSource {
public:
    explicit NormalSource(const SeededStream& stream);

    double uniform(); // in (0, 1)
    double operator()();

private:
    std::mt19937_64 engine_;
    double spare_{0.0};
    bool has_spare_{false};
};

// Hermitian GUE sample with <|M_ij|^2> = 1: real N(0,1) diagonal, complex
// off-diagonal with N(0,1/2) real and imaginary parts.
struct GueMatrix {
    ComplexMatrix entries;

    Eigen::Index dim() const { return entries.rows(); }
};

GueMatrix sample_gue(int dim, NormalSource& source);
GueMatrix sample_gue(int dim, const SeededStream& stream);

// sqrt(dim)/pi: maps the semicircle centre density sqrt(dim)/pi to one level per unit energy.
double unit_spacing_factor(Eigen::Index dim);
GueMatrix scale_to_unit_spacing(const GueMatrix& m);

double hermiticity_defect(const ComplexMatrix& m);

} // namespace rmtnm
