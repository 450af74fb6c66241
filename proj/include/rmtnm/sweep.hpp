#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rmtnm/dynamics.hpp"
#include "rmtnm/nm_measures.hpp"

namespace rmtnm {

// Uniform grid dt = min(2 pi / delta, t_H) / steps_per_period, grown in chunks of
// kBlockRows-aligned length (doubling) until the ending purity is reached or t_max.
struct TimeGridPolicy {
    int steps_per_period{40};
    double t_max{200.0 * kHeisenbergTime};
    std::size_t initial_points{1024};

    void validate() const;
    double step(double delta) const;
    std::size_t max_points(double delta) const;
};

struct RunOptions {
    TimeGridPolicy grid{};
    MeasureOptions measures{};
    int threads{1};
    std::vector<int> prefix_sizes; // recorded as snapshots; the grid grows until each of them ends
    bool keep_samples{false};
};

// Accumulates the ensemble on a growing grid; params.time_grid is ignored.
ChannelTrajectory simulate_to_end(const ModelParams& params, const RunOptions& options = {});

struct PointResult {
    ChannelTrajectory trajectory;
    NMReport report;
    std::string flags; // empty or "t_end_not_reached"
    double wall_time{0.0};
};

PointResult run_point(const ModelParams& params, const RunOptions& options = {});

std::string report_flags(const NMReport& report);

struct ParameterGrid {
    std::vector<double> delta_values;
    std::vector<double> lambda_values;
    int env_dim{64};
    int n_samples{160};
    std::uint64_t master_seed{0};

    // 9 log-spaced deltas in [0.016, 16], 8 linear lambdas in [1/32, 1/2], N = 64, N_sam = 160.
    static ParameterGrid desk();
    // 25 x 16 with N = 200, N_sam = 2400.
    static ParameterGrid full();
    static ParameterGrid make(double delta_min, double delta_max, int delta_count, double lambda_min,
                              double lambda_max, int lambda_count);

    void validate() const;
};

struct SweepRecord {
    double delta{0.0};
    double lambda{0.0};
    double t_end{0.0};
    double nm_rhp{0.0};
    double nm_blp{0.0};
    double nm_mdr{0.0};
    int n_samples{0};
    std::string flags;
    double wall_time{0.0};
};

struct SweepOptions {
    RunOptions run{};
    std::filesystem::path checkpoint_dir; // empty: no persistence
    std::function<void(const SweepRecord&, bool resumed)> on_point;
};

std::string trajectory_file_name(double delta, double lambda, int env_dim, int n_samples, std::uint64_t seed);

// Points run in grid order (lambda outer, delta inner). Points whose trajectory file
// already exists in checkpoint_dir are reloaded instead of simulated.
std::vector<SweepRecord> run_sweep(const ParameterGrid& grid, const SweepOptions& options = {});

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records);

struct ConvergenceSeries {
    std::vector<int> sample_prefix_sizes;
    std::vector<NMReport> reports;
};

// One simulation pass; each prefix is analysed from the accumulator snapshot.
ConvergenceSeries convergence_study(const ModelParams& params, const std::vector<int>& prefix_sizes,
                                    const RunOptions& options = {});

// Mean of the realizations listed in `indices`. Needs per-realization samples.
ChannelTrajectory resample(const ChannelTrajectory& traj, const std::vector<int>& indices);

// Reports on bootstrap resamples of the realizations. The same seed draws the same
// index sets for every trajectory of equal size, so replicates of two points pair up.
std::vector<NMReport> bootstrap_reports(const ChannelTrajectory& traj, int n_resamples, std::uint64_t seed,
                                        const MeasureOptions& options = {});

// Flat key=value configuration shared by the CLI and the sweep driver.
struct RunConfig {
    ParameterGrid grid{ParameterGrid::desk()};
    double delta{0.1};
    double lambda{0.03125};
    std::vector<int> prefixes;
    RunOptions run{};

    // Rebuilds grid.delta_values / lambda_values after range keys change.
    void set(const std::string& key, const std::string& value);
    ModelParams point_params() const;

private:
    double delta_min_{0.016};
    double delta_max_{16.0};
    int delta_count_{9};
    double lambda_min_{1.0 / 32.0};
    double lambda_max_{0.5};
    int lambda_count_{8};
};

// '#' starts a comment; blank lines are ignored. Unknown keys are rejected.
void load_config(std::istream& is, RunConfig& config);
void load_config_file(const std::filesystem::path& path, RunConfig& config);

std::vector<int> parse_int_list(const std::string& text);

} // namespace rmtnm
