#include "rmtnm/cli.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "rmtnm/error.hpp"
#include "rmtnm/trajectory_io.hpp"

#ifndef RMTNM_VERSION
#define RMTNM_VERSION "unknown"
#endif

namespace rmtnm {

namespace {

std::string fmt17(double v) {
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

struct Flags {
    std::string config;
    std::string out;
    std::string report;
    std::string traj;
    std::string checkpoint;
    std::string prefixes;
    std::vector<std::string> overrides;
    std::optional<double> delta;
    std::optional<double> lambda;
    std::optional<int> env_dim;
    std::optional<int> n_samples;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> blp_r;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "flat key=value config file (default: $" + std::string(kConfigEnvVar) + ")");
    cmd->add_option("--out", f.out, "output path");
    cmd->add_option("--set", f.overrides, "override a config entry, key=value (repeatable)");
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--blp-R", f.blp_r, "Bloch-pair length for BLP/MDR")->check(CLI::IsMember({1, 2}));
}

void add_model(CLI::App* cmd, Flags& f) {
    cmd->add_option("--delta", f.delta, "qubit splitting");
    cmd->add_option("--lambda", f.lambda, "coupling strength");
    cmd->add_option("--env-dim", f.env_dim, "environment dimension N")->check(CLI::PositiveNumber);
    cmd->add_option("--n-samples", f.n_samples, "ensemble size")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "master seed");
}

RunConfig build_config(const Flags& f) {
    RunConfig cfg;
    std::string path = f.config;
    if (path.empty()) {
        if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
            path = env;
        }
    }
    if (!path.empty()) {
        if (!std::filesystem::exists(path)) {
            throw InvalidArgument("config file '" + path + "' does not exist");
        }
        load_config_file(path, cfg);
    }
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw InvalidArgument("--set expects key=value, got '" + kv + "'");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (f.delta) cfg.delta = *f.delta;
    if (f.lambda) cfg.lambda = *f.lambda;
    if (f.env_dim) cfg.grid.env_dim = *f.env_dim;
    if (f.n_samples) cfg.grid.n_samples = *f.n_samples;
    if (f.seed) cfg.grid.master_seed = *f.seed;
    if (f.threads) cfg.run.threads = *f.threads;
    if (f.blp_r) cfg.run.measures.grid.R = *f.blp_r;
    if (!f.prefixes.empty()) cfg.prefixes = parse_int_list(f.prefixes);
    return cfg;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_file_atomic(path, text);
    }
}

ChannelTrajectory load_traj(const Flags& f) {
    if (f.traj.empty()) {
        throw InvalidArgument("--traj <file> is required");
    }
    return validate_trajectory_file(f.traj);
}

} // namespace

nlohmann::json report_to_json(const NMReport& r, const ModelParams& params, const RunOptions& options) {
    using nlohmann::json;
    json j;
    j["delta"] = r.delta;
    j["lambda"] = r.lambda;
    j["t_end"] = r.t_end;
    j["t_end_reached"] = r.t_end_reached;
    j["horizon_points"] = r.horizon_points;
    j["nm_rhp"] = r.nm_rhp;
    j["nm_blp"] = r.nm_blp;
    j["nm_mdr"] = r.nm_mdr;
    j["blp_argmax"] = {{"theta", r.blp_argmax.theta}, {"phi", r.blp_argmax.phi}};
    j["mdr_argmax"] = {{"theta", r.mdr_argmax.theta}, {"phi", r.mdr_argmax.phi}, {"t1", r.mdr_t1}, {"t2", r.mdr_t2}};
    j["flags"] = report_flags(r);
    const MeasureOptions& m = options.measures;
    j["provenance"] = {
        {"version", RMTNM_VERSION},
        {"seed", params.master_seed},
        {"env_dim", params.env_dim},
        {"n_samples", r.n_samples},
        {"blp_R", r.blp_R},
        {"state_grid", {m.grid.theta_points, m.grid.phi_points}},
        {"invert_tol", m.invert_tol},
        {"smoothing_window", m.derivatives.smoothing_window},
        {"ending_purity", kEndingPurity},
    };
    return j;
}

void write_criteria_csv(std::ostream& os, const Analysis& a) {
    os << "t,delta1,delta2,deltaq,g,delta1C,delta2C,sigma_max,valid\n";
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        const DivisibilityDeltas& d = a.divisibility[k];
        const ContractivityDeltas& c = a.contractivity[k];
        const std::optional<double> g = g_of_t(d);
        os << fmt17(a.times[k]) << ',' << fmt17(d.delta1) << ',' << fmt17(d.delta2) << ',' << fmt17(d.deltaq) << ','
           << fmt17(g.value_or(std::nan(""))) << ',' << fmt17(c.delta1C) << ',' << fmt17(c.delta2C) << ','
           << fmt17(a.sigma.sigma[k]) << ',' << (d.valid ? 1 : 0) << '\n';
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Qubit in a random-matrix environment: channels and non-Markovianity measures", "rmtnm"};
    app.require_subcommand(1);
    app.set_version_flag("--version", RMTNM_VERSION);

    Flags f;
    auto* point = app.add_subcommand("point", "simulate one (delta, lambda) point: trajectory CSV + report JSON");
    add_common(point, f);
    add_model(point, f);
    point->add_option("--report", f.report, "report JSON path (default: <out>.json)");

    auto* measures = app.add_subcommand("measures", "measures of a stored trajectory as JSON");
    add_common(measures, f);
    measures->add_option("--traj", f.traj, "trajectory CSV")->required();

    auto* criteria = app.add_subcommand("criteria", "time-local criteria of a stored trajectory as CSV");
    add_common(criteria, f);
    criteria->add_option("--traj", f.traj, "trajectory CSV")->required();

    auto* endtime = app.add_subcommand("endtime", "ending time of a stored trajectory");
    add_common(endtime, f);
    endtime->add_option("--traj", f.traj, "trajectory CSV")->required();

    auto* sweep = app.add_subcommand("sweep", "grid sweep, one CSV row per (delta, lambda)");
    add_common(sweep, f);
    add_model(sweep, f);
    sweep->add_option("--checkpoint", f.checkpoint, "directory of per-point trajectory files (resume)");

    auto* converge = app.add_subcommand("converge", "measures on ensemble prefixes");
    add_common(converge, f);
    add_model(converge, f);
    converge->add_option("--prefixes", f.prefixes, "comma-separated increasing prefix sizes");

    std::vector<const char*> argv;
    argv.push_back("rmtnm");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {
                out << (e.get_name() == "CallForVersion" ? std::string(RMTNM_VERSION) + "\n"
                                                         : app.help("", CLI::AppFormatMode::All));
                return 0;
            }
            err << "error: " << e.what() << "\n\n" << app.help();
            return 1;
        }

        const RunConfig cfg = build_config(f);

        if (point->parsed()) {
            const ModelParams params = cfg.point_params();
            const PointResult res = run_point(params, cfg.run);
            std::filesystem::path traj_path = f.out.empty()
                ? std::filesystem::path(trajectory_file_name(params.delta, params.lambda, params.env_dim,
                                                             params.n_samples, params.master_seed))
                : std::filesystem::path(f.out);
            std::filesystem::path report_path = f.report;
            if (report_path.empty()) {
                report_path = traj_path;
                report_path.replace_extension(".json");
            }
            write_trajectory_file(traj_path, res.trajectory);
            const std::string json = report_to_json(res.report, params, cfg.run).dump(2) + "\n";
            write_file_atomic(report_path, json);
            out << json;
            err << "wrote " << traj_path.string() << " and " << report_path.string() << " (" << res.wall_time
                << " s)\n";
        } else if (measures->parsed()) {
            const ChannelTrajectory traj = load_traj(f);
            const NMReport rep = compute_report(traj, cfg.run.measures);
            emit(f.out, report_to_json(rep, traj.params, cfg.run).dump(2) + "\n", out);
        } else if (criteria->parsed()) {
            const ChannelTrajectory traj = load_traj(f);
            std::ostringstream os;
            write_criteria_csv(os, analyze(traj, cfg.run.measures));
            emit(f.out, os.str(), out);
        } else if (endtime->parsed()) {
            const ChannelTrajectory traj = load_traj(f);
            const double t_end = ending_time(traj.points);
            nlohmann::json j{{"t_end", t_end}, {"purity_threshold", kEndingPurity}};
            emit(f.out, j.dump(2) + "\n", out);
        } else if (sweep->parsed()) {
            SweepOptions so;
            so.run = cfg.run;
            so.checkpoint_dir = f.checkpoint;
            so.on_point = [&err](const SweepRecord& r, bool resumed) {
                err << "delta=" << r.delta << " lambda=" << r.lambda << " t_end=" << r.t_end
                    << (resumed ? " (resumed)" : "") << " " << r.flags << "\n";
            };
            const auto records = run_sweep(cfg.grid, so);
            std::ostringstream os;
            write_sweep_csv(os, records);
            emit(f.out, os.str(), out);
        } else if (converge->parsed()) {
            const ModelParams params = cfg.point_params();
            if (cfg.prefixes.empty()) {
                throw InvalidArgument("converge needs --prefixes or a 'prefixes' config entry");
            }
            const ConvergenceSeries s = convergence_study(params, cfg.prefixes, cfg.run);
            std::ostringstream os;
            os << "n_samples,t_end,nm_rhp,nm_blp,nm_mdr,flags\n";
            for (std::size_t i = 0; i < s.reports.size(); ++i) {
                const NMReport& r = s.reports[i];
                os << s.sample_prefix_sizes[i] << ',' << fmt17(r.t_end) << ',' << fmt17(r.nm_rhp) << ','
                   << fmt17(r.nm_blp) << ',' << fmt17(r.nm_mdr) << ',' << report_flags(r) << '\n';
            }
            emit(f.out, os.str(), out);
        }
        return 0;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}

} // namespace rmtnm
