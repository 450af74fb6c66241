#include "rmtnm/rmt_ensembles.hpp"

#include <cmath>
#include <string>

#include "rmtnm/error.hpp"

namespace rmtnm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t stream_key(const SeededStream& stream) {
    std::uint64_t h = splitmix64(stream.master_seed);
    h = splitmix64(h ^ stream.realization_index);
    h = splitmix64(h ^ (stream.substream * 0xd1342543de82ef95ULL));
    return h;
}

NormalSource::NormalSource(const SeededStream& stream) : engine_(stream_key(stream)) {}

double NormalSource::uniform() {
    for (;;) {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        if (u > 0.0) {
            return u;
        }
    }
}

double NormalSource::operator()() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

GueMatrix sample_gue(int dim, NormalSource& source) {
    if (dim < 1) {
        throw InvalidArgument("sample_gue: dimension must be >= 1, got " + std::to_string(dim));
    }
    const double off_sigma = std::sqrt(0.5);
    GueMatrix m{ComplexMatrix(dim, dim)};
    for (int i = 0; i < dim; ++i) {
        m.entries(i, i) = {source(), 0.0};
        for (int j = i + 1; j < dim; ++j) {
            const double re = off_sigma * source();
            const double im = off_sigma * source();
            m.entries(i, j) = {re, im};
            m.entries(j, i) = {re, -im};
        }
    }
    return m;
}

GueMatrix sample_gue(int dim, const SeededStream& stream) {
    NormalSource source(stream);
    return sample_gue(dim, source);
}

double unit_spacing_factor(Eigen::Index dim) {
    return std::sqrt(static_cast<double>(dim)) / std::numbers::pi;
}

GueMatrix scale_to_unit_spacing(const GueMatrix& m) {
    return GueMatrix{m.entries * unit_spacing_factor(m.dim())};
}

double hermiticity_defect(const ComplexMatrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

} // namespace rmtnm
