#include "rmtnm/sweep.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "rmtnm/error.hpp"
#include "rmtnm/trajectory_io.hpp"

namespace rmtnm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v, int digits) {
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.*g", digits, v);
    return buf.data();
}

bool reaches_end(std::span<const ChannelPoint> points) {
    return std::any_of(points.begin(), points.end(),
                       [](const ChannelPoint& p) { return purity_y(p) <= kEndingPurity; });
}

bool all_ended(const ChannelTrajectory& traj) {
    if (!reaches_end(traj.points)) {
        return false;
    }
    return std::all_of(traj.snapshots.begin(), traj.snapshots.end(),
                       [](const PrefixSnapshot& s) { return reaches_end(s.points); });
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

long long parse_integer(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("config key '" + key + "': expected an integer, got '" + value + "'");
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

// ---------------------------------------------------------------------------

void TimeGridPolicy::validate() const {
    if (steps_per_period < 1) {
        throw InvalidArgument("steps_per_period must be >= 1");
    }
    if (!(t_max > 0.0)) {
        throw InvalidArgument("t_max must be positive");
    }
    const auto block = static_cast<std::size_t>(Propagator::kBlockRows);
    if (initial_points == 0 || initial_points % block != 0) {
        throw InvalidArgument("initial_points must be a positive multiple of " + std::to_string(block));
    }
}

double TimeGridPolicy::step(double delta) const {
    const double period = delta > 0.0 ? std::min(2.0 * std::numbers::pi / delta, kHeisenbergTime) : kHeisenbergTime;
    return period / steps_per_period;
}

std::size_t TimeGridPolicy::max_points(double delta) const {
    return static_cast<std::size_t>(std::floor(t_max / step(delta) + 1e-9)) + 1;
}

ChannelTrajectory simulate_to_end(const ModelParams& params, const RunOptions& options) {
    ModelParams p = params;
    p.time_grid = {0.0};
    p.validate();
    options.grid.validate();

    const double dt = options.grid.step(p.delta);
    const std::size_t n_max = options.grid.max_points(p.delta);
    const EnsembleOptions eo{options.threads, options.prefix_sizes, options.keep_samples};

    std::optional<ChannelTrajectory> traj;
    std::size_t have = 0;
    std::size_t chunk = options.grid.initial_points;
    while (have < n_max) {
        const std::size_t n = std::min(chunk, n_max - have);
        const std::vector<double> times = uniform_time_grid(dt, n, have);
        ChannelTrajectory part = accumulate_window(p, times, eo);
        if (!traj) {
            traj = std::move(part);
        } else {
            append_chunk(*traj, std::move(part));
        }
        have += n;
        if (all_ended(*traj)) {
            break;
        }
        chunk *= 2;
    }
    traj->params.time_grid = traj->times();
    return std::move(*traj);
}

std::string report_flags(const NMReport& report) { return report.t_end_reached ? "" : "t_end_not_reached"; }

PointResult run_point(const ModelParams& params, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    PointResult res;
    res.trajectory = simulate_to_end(params, options);
    res.report = compute_report(res.trajectory, options.measures);
    res.flags = report_flags(res.report);
    res.wall_time = seconds_since(start);
    return res;
}

// ---------------------------------------------------------------------------

ParameterGrid ParameterGrid::make(double delta_min, double delta_max, int delta_count, double lambda_min,
                                  double lambda_max, int lambda_count) {
    if (!(delta_min > 0.0) || !(delta_max >= delta_min) || delta_count < 1) {
        throw InvalidArgument("delta range must satisfy 0 < delta_min <= delta_max with delta_count >= 1");
    }
    if (!(lambda_min >= 0.0) || !(lambda_max >= lambda_min) || lambda_count < 1) {
        throw InvalidArgument("lambda range must satisfy 0 <= lambda_min <= lambda_max with lambda_count >= 1");
    }
    ParameterGrid g;
    const double l0 = std::log10(delta_min);
    const double l1 = std::log10(delta_max);
    for (int i = 0; i < delta_count; ++i) {
        const double u = delta_count > 1 ? static_cast<double>(i) / (delta_count - 1) : 0.0;
        g.delta_values.push_back(std::pow(10.0, l0 + u * (l1 - l0)));
    }
    for (int i = 0; i < lambda_count; ++i) {
        const double u = lambda_count > 1 ? static_cast<double>(i) / (lambda_count - 1) : 0.0;
        g.lambda_values.push_back(lambda_min + u * (lambda_max - lambda_min));
    }
    return g;
}

ParameterGrid ParameterGrid::desk() { return make(0.016, 16.0, 9, 1.0 / 32.0, 0.5, 8); }

ParameterGrid ParameterGrid::full() {
    ParameterGrid g = make(0.016, 16.0, 25, 1.0 / 32.0, 0.5, 16);
    g.env_dim = 200;
    g.n_samples = 2400;
    return g;
}

void ParameterGrid::validate() const {
    auto increasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!(v[i] > v[i - 1])) {
                return false;
            }
        }
        return !v.empty();
    };
    if (!increasing(delta_values) || !increasing(lambda_values)) {
        throw InvalidArgument("grid values must be non-empty and strictly increasing");
    }
    if (env_dim < 2 || n_samples < 1) {
        throw InvalidArgument("grid needs env_dim >= 2 and n_samples >= 1");
    }
}

std::string trajectory_file_name(double delta, double lambda, int env_dim, int n_samples, std::uint64_t seed) {
    return "traj_d" + fmt(delta, 15) + "_l" + fmt(lambda, 15) + "_N" + std::to_string(env_dim) + "_S" +
           std::to_string(n_samples) + "_seed" + std::to_string(seed) + ".csv";
}

std::vector<SweepRecord> run_sweep(const ParameterGrid& grid, const SweepOptions& options) {
    grid.validate();
    if (!options.checkpoint_dir.empty()) {
        std::filesystem::create_directories(options.checkpoint_dir);
    }
    std::vector<SweepRecord> records;
    for (double lambda : grid.lambda_values) {
        for (double delta : grid.delta_values) {
            const auto start = std::chrono::steady_clock::now();
            ModelParams params;
            params.delta = delta;
            params.lambda = lambda;
            params.env_dim = grid.env_dim;
            params.n_samples = grid.n_samples;
            params.master_seed = grid.master_seed;

            SweepRecord rec;
            rec.delta = delta;
            rec.lambda = lambda;
            rec.n_samples = grid.n_samples;
            bool resumed = false;
            try {
                std::optional<ChannelTrajectory> traj;
                std::filesystem::path file;
                if (!options.checkpoint_dir.empty()) {
                    file = options.checkpoint_dir /
                           trajectory_file_name(delta, lambda, grid.env_dim, grid.n_samples, grid.master_seed);
                    if (std::filesystem::exists(file)) {
                        try {
                            traj = validate_trajectory_file(file);
                            traj->params.master_seed = grid.master_seed;
                            resumed = true;
                        } catch (const InvalidArgument&) {
                            traj.reset();
                        }
                    }
                }
                if (!traj) {
                    traj = simulate_to_end(params, options.run);
                    if (!file.empty()) {
                        write_trajectory_file(file, *traj);
                    }
                }
                const NMReport rep = compute_report(*traj, options.run.measures);
                rec.t_end = rep.t_end;
                rec.nm_rhp = rep.nm_rhp;
                rec.nm_blp = rep.nm_blp;
                rec.nm_mdr = rep.nm_mdr;
                rec.flags = report_flags(rep);
            } catch (const std::exception& e) {
                rec.t_end = rec.nm_rhp = rec.nm_blp = rec.nm_mdr = kNaN;
                std::string msg = e.what();
                std::replace(msg.begin(), msg.end(), ',', ';');
                std::replace(msg.begin(), msg.end(), '\n', ' ');
                rec.flags = "error: " + msg;
            }
            rec.wall_time = seconds_since(start);
            if (options.on_point) {
                options.on_point(rec, resumed);
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
    os << "delta,lambda,t_end,nm_rhp,nm_blp,nm_mdr,n_samples,flags\n";
    for (const auto& r : records) {
        os << fmt(r.delta, 15) << ',' << fmt(r.lambda, 15) << ',' << fmt(r.t_end, 15) << ',' << fmt(r.nm_rhp, 15)
           << ',' << fmt(r.nm_blp, 15) << ',' << fmt(r.nm_mdr, 15) << ',' << r.n_samples << ',' << r.flags << '\n';
    }
}

// ---------------------------------------------------------------------------

ConvergenceSeries convergence_study(const ModelParams& params, const std::vector<int>& prefix_sizes,
                                    const RunOptions& options) {
    if (prefix_sizes.empty()) {
        throw InvalidArgument("convergence study needs at least one prefix size");
    }
    for (std::size_t i = 0; i < prefix_sizes.size(); ++i) {
        if (prefix_sizes[i] < 1 || (i > 0 && prefix_sizes[i] <= prefix_sizes[i - 1])) {
            throw InvalidArgument("prefix sizes must be positive and strictly increasing");
        }
        if (prefix_sizes[i] > params.n_samples) {
            throw InvalidArgument("prefix size " + std::to_string(prefix_sizes[i]) + " exceeds n_samples = " +
                                  std::to_string(params.n_samples));
        }
    }
    RunOptions opts = options;
    opts.prefix_sizes.clear();
    for (int k : prefix_sizes) {
        if (k < params.n_samples) {
            opts.prefix_sizes.push_back(k);
        }
    }
    const ChannelTrajectory traj = simulate_to_end(params, opts);
    ConvergenceSeries series;
    series.sample_prefix_sizes = prefix_sizes;
    for (int k : prefix_sizes) {
        series.reports.push_back(compute_report(traj.prefix(k), options.measures));
    }
    return series;
}

ChannelTrajectory resample(const ChannelTrajectory& traj, const std::vector<int>& indices) {
    if (traj.samples.size() != static_cast<std::size_t>(traj.n_accumulated) || traj.samples.empty()) {
        throw InvalidArgument("resampling needs the per-realization series (keep_samples)");
    }
    if (indices.empty()) {
        throw InvalidArgument("resample needs at least one index");
    }
    const std::vector<double> times = traj.times();
    ChannelAccumulator acc(times.size());
    for (int i : indices) {
        if (i < 0 || i >= traj.n_accumulated) {
            throw InvalidArgument("resample index out of range");
        }
        acc.add(traj.samples[static_cast<std::size_t>(i)]);
    }
    ChannelTrajectory out;
    out.params = traj.params;
    out.params.n_samples = static_cast<int>(indices.size());
    out.n_accumulated = acc.count();
    out.points = acc.mean(times);
    out.errors = acc.standard_errors();
    return out;
}

std::vector<NMReport> bootstrap_reports(const ChannelTrajectory& traj, int n_resamples, std::uint64_t seed,
                                        const MeasureOptions& options) {
    if (n_resamples < 1) {
        throw InvalidArgument("bootstrap needs at least one resample");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, traj.n_accumulated - 1);
    std::vector<NMReport> out;
    std::vector<int> idx(static_cast<std::size_t>(traj.n_accumulated));
    for (int b = 0; b < n_resamples; ++b) {
        for (auto& i : idx) {
            i = pick(rng);
        }
        out.push_back(compute_report(resample(traj, idx), options));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        const long long v = parse_integer("list", item);
        if (v < 1 || v > std::numeric_limits<int>::max()) {
            throw InvalidArgument("list entries must be positive integers, got '" + item + "'");
        }
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) {
        throw InvalidArgument("empty integer list '" + text + "'");
    }
    return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    bool rebuild = false;
    auto positive_int = [&](int& field) {
        const long long v = parse_integer(key, value);
        if (v < 1 || v > std::numeric_limits<int>::max()) {
            throw InvalidArgument("config key '" + key + "' must be a positive integer");
        }
        field = static_cast<int>(v);
    };

    if (key == "scale") {
        if (value == "desk") {
            *this = RunConfig{};
        } else if (value == "full") {
            const RunOptions keep = run;
            *this = RunConfig{};
            run = keep;
            delta_count_ = 25;
            lambda_count_ = 16;
            grid.env_dim = 200;
            grid.n_samples = 2400;
            rebuild = true;
        } else {
            throw InvalidArgument("scale must be 'desk' or 'full'");
        }
    } else if (key == "delta_min") {
        delta_min_ = parse_double(key, value);
        rebuild = true;
    } else if (key == "delta_max") {
        delta_max_ = parse_double(key, value);
        rebuild = true;
    } else if (key == "delta_count") {
        positive_int(delta_count_);
        rebuild = true;
    } else if (key == "lambda_min") {
        lambda_min_ = parse_double(key, value);
        rebuild = true;
    } else if (key == "lambda_max") {
        lambda_max_ = parse_double(key, value);
        rebuild = true;
    } else if (key == "lambda_count") {
        positive_int(lambda_count_);
        rebuild = true;
    } else if (key == "env_dim") {
        positive_int(grid.env_dim);
    } else if (key == "n_samples") {
        positive_int(grid.n_samples);
    } else if (key == "seed") {
        const long long v = parse_integer(key, value);
        if (v < 0) {
            throw InvalidArgument("seed must be non-negative");
        }
        grid.master_seed = static_cast<std::uint64_t>(v);
    } else if (key == "delta") {
        delta = parse_double(key, value);
    } else if (key == "lambda") {
        lambda = parse_double(key, value);
    } else if (key == "prefixes") {
        prefixes = parse_int_list(value);
    } else if (key == "steps_per_period") {
        positive_int(run.grid.steps_per_period);
    } else if (key == "t_max") {
        run.grid.t_max = parse_double(key, value);
    } else if (key == "initial_points") {
        int v = 0;
        positive_int(v);
        run.grid.initial_points = static_cast<std::size_t>(v);
    } else if (key == "threads") {
        positive_int(run.threads);
    } else if (key == "blp_R") {
        const double r = parse_double(key, value);
        if (r != 1.0 && r != 2.0) {
            throw InvalidArgument("blp_R must be 1 or 2");
        }
        run.measures.grid.R = r;
    } else if (key == "theta_points") {
        positive_int(run.measures.grid.theta_points);
    } else if (key == "phi_points") {
        positive_int(run.measures.grid.phi_points);
    } else if (key == "invert_tol") {
        run.measures.invert_tol = parse_double(key, value);
    } else if (key == "smoothing_window") {
        const long long v = parse_integer(key, value);
        if (v < 0) {
            throw InvalidArgument("smoothing_window must be >= 0");
        }
        run.measures.derivatives.smoothing_window = static_cast<int>(v);
    } else {
        throw InvalidArgument("unknown config key '" + key + "'");
    }

    if (rebuild) {
        const ParameterGrid g =
            ParameterGrid::make(delta_min_, delta_max_, delta_count_, lambda_min_, lambda_max_, lambda_count_);
        grid.delta_values = g.delta_values;
        grid.lambda_values = g.lambda_values;
    }
}

ModelParams RunConfig::point_params() const {
    ModelParams p;
    p.delta = delta;
    p.lambda = lambda;
    p.env_dim = grid.env_dim;
    p.n_samples = grid.n_samples;
    p.master_seed = grid.master_seed;
    return p;
}

void load_config(std::istream& is, RunConfig& config) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(lineno) + ": expected key=value", lineno);
        }
        try {
            config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ParseError&) {
            throw;
        } catch (const InvalidArgument& e) {
            throw ParseError("config line " + std::to_string(lineno) + ": " + e.what(), lineno);
        }
    }
}

void load_config_file(const std::filesystem::path& path, RunConfig& config) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open config file '" + path.string() + "'");
    }
    load_config(in, config);
}

} // namespace rmtnm
