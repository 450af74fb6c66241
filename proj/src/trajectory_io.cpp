#include "rmtnm/trajectory_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "rmtnm/error.hpp"

namespace rmtnm {

namespace {

constexpr const char* kColumns = "t,r,re_z1,im_z1,re_z2,im_z2,se_r,se_re_z1,se_im_z1,se_re_z2,se_im_z2";
constexpr std::size_t kNumColumns = 11;

std::string fmt17(double v) {
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string strip_spaces(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c != ' ' && c != '\t' && c != '\r') {
            out.push_back(c);
        }
    }
    return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what, std::size_t line) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        throw ParseError("line " + std::to_string(line) + ": cannot parse " + what + " '" + text + "'", line);
    }
    return value;
}

} // namespace

void write_trajectory(std::ostream& os, const ChannelTrajectory& traj) {
    const ModelParams& p = traj.params;
    os << "# delta=" << fmt17(p.delta) << " lambda=" << fmt17(p.lambda) << " N=" << p.env_dim
       << " N_sam=" << traj.n_accumulated << " seed=" << p.master_seed << '\n';
    os << kColumns << '\n';
    for (std::size_t k = 0; k < traj.points.size(); ++k) {
        const ChannelPoint& c = traj.points[k];
        const ChannelErrors e = k < traj.errors.size() ? traj.errors[k] : ChannelErrors{};
        const double row[kNumColumns] = {c.t,     c.r,     c.z1.real(), c.z1.imag(), c.z2.real(), c.z2.imag(),
                                         e.r,     e.re_z1, e.im_z1,     e.re_z2,     e.im_z2};
        for (std::size_t i = 0; i < kNumColumns; ++i) {
            os << (i ? "," : "") << fmt17(row[i]);
        }
        os << '\n';
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InvalidArgument("cannot open '" + tmp.string() + "' for writing");
        }
        out << contents;
        out.flush();
        if (!out) {
            throw InvalidArgument("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw InvalidArgument("cannot move output into '" + path.string() + "': " + ec.message());
    }
}

void write_trajectory_file(const std::filesystem::path& path, const ChannelTrajectory& traj) {
    std::ostringstream os;
    write_trajectory(os, traj);
    write_file_atomic(path, os.str());
}

ChannelTrajectory read_trajectory(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(is, line)) {
        throw ParseError("line 1: empty trajectory file", 1);
    }
    ++lineno;
    std::string header = trim(line);
    if (header.empty() || header.front() != '#') {
        throw ParseError("line 1: expected '# delta=... lambda=... N=... N_sam=... seed=...' header", 1);
    }
    std::map<std::string, std::string> kv;
    std::istringstream hs(header.substr(1));
    std::string token;
    while (hs >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ParseError("line 1: malformed header entry '" + token + "'", 1);
        }
        kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    for (const char* key : {"delta", "lambda", "N", "N_sam", "seed"}) {
        if (!kv.count(key)) {
            throw ParseError(std::string("line 1: header is missing key '") + key + "'", 1);
        }
    }

    ChannelTrajectory traj;
    ModelParams& p = traj.params;
    p.delta = parse_number<double>(kv["delta"], "delta", 1);
    p.lambda = parse_number<double>(kv["lambda"], "lambda", 1);
    p.env_dim = parse_number<int>(kv["N"], "N", 1);
    p.n_samples = parse_number<int>(kv["N_sam"], "N_sam", 1);
    p.master_seed = parse_number<std::uint64_t>(kv["seed"], "seed", 1);
    if (p.env_dim < 1 || p.n_samples < 1) {
        throw ParseError("line 1: N and N_sam must be positive", 1);
    }
    traj.n_accumulated = p.n_samples;

    if (!std::getline(is, line)) {
        throw ParseError("line 2: missing column header", 2);
    }
    ++lineno;
    if (strip_spaces(line) != kColumns) {
        throw ParseError(std::string("line 2: expected columns ") + kColumns, 2);
    }

    while (std::getline(is, line)) {
        ++lineno;
        const std::string row = trim(line);
        if (row.empty()) {
            continue;
        }
        std::array<double, kNumColumns> v{};
        std::size_t col = 0;
        std::size_t start = 0;
        while (true) {
            const auto comma = row.find(',', start);
            const std::string cell = trim(std::string_view(row).substr(start, comma - start));
            if (col >= kNumColumns) {
                throw ParseError("line " + std::to_string(lineno) + ": too many columns", lineno);
            }
            v[col++] = parse_number<double>(cell, "value", lineno);
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (col != kNumColumns) {
            throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(kNumColumns) +
                                 " columns, found " + std::to_string(col),
                             lineno);
        }
        if (traj.points.empty()) {
            if (v[0] != 0.0) {
                throw ParseError("line " + std::to_string(lineno) + ": first time must be 0", lineno);
            }
        } else if (!(v[0] > traj.points.back().t)) {
            throw ParseError("line " + std::to_string(lineno) + ": time column is not strictly increasing", lineno);
        }
        traj.points.push_back(ChannelPoint{v[0], v[1], {v[2], v[3]}, {v[4], v[5]}});
        traj.errors.push_back(ChannelErrors{v[6], v[7], v[8], v[9], v[10]});

        if (traj.points.size() == 1) {
            const double expected[5] = {1.0, 1.0, 0.0, 0.0, 0.0};
            for (int i = 0; i < 5; ++i) {
                const double tol = std::max(5.0 * std::abs(v[6 + i]), 1e-10);
                if (!(std::abs(v[1 + i] - expected[i]) <= tol)) {
                    throw ParseError("line " + std::to_string(lineno) +
                                         ": t = 0 row must equal (r, z1, z2) = (1, 1, 0)",
                                     lineno);
                }
            }
        }
    }
    if (traj.points.empty()) {
        throw ParseError("line " + std::to_string(lineno) + ": trajectory has no data rows", lineno);
    }
    p.time_grid = traj.times();
    return traj;
}

ChannelTrajectory validate_trajectory_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open trajectory file '" + path.string() + "'");
    }
    return read_trajectory(in);
}

} // namespace rmtnm
