#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rmtnm/channel_algebra.hpp"
#include "rmtnm/dynamics.hpp"
#include "rmtnm/error.hpp"
#include "rmtnm/nm_measures.hpp"
#include "rmtnm/rmt_ensembles.hpp"
#include "rmtnm/sweep.hpp"
#include "rmtnm/trajectory_io.hpp"

namespace py = pybind11;
using namespace rmtnm;

namespace {

template <typename T, typename Get>
py::array_t<T> column(const std::vector<ChannelPoint>& pts, Get get) {
    py::array_t<T> a(static_cast<py::ssize_t>(pts.size()));
    auto v = a.template mutable_unchecked<1>();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        v(static_cast<py::ssize_t>(i)) = get(pts[i]);
    }
    return a;
}

// Builds a trajectory from numpy columns, for analysing data produced elsewhere.
ChannelTrajectory make_trajectory(const std::vector<double>& t, const std::vector<double>& r,
                                  const std::vector<cplx>& z1, const std::vector<cplx>& z2, double delta,
                                  double lambda, int n_samples) {
    if (r.size() != t.size() || z1.size() != t.size() || z2.size() != t.size()) {
        throw InvalidArgument("t, r, z1, z2 must have equal length");
    }
    ChannelTrajectory traj;
    traj.params.delta = delta;
    traj.params.lambda = lambda;
    traj.params.n_samples = n_samples;
    traj.params.time_grid = t;
    traj.n_accumulated = n_samples;
    for (std::size_t i = 0; i < t.size(); ++i) {
        traj.points.push_back(ChannelPoint{t[i], r[i], z1[i], z2[i]});
    }
    traj.errors.assign(t.size(), ChannelErrors{});
    return traj;
}

RunOptions run_options(int threads, double blp_r, int grid_points, double t_max) {
    RunOptions o;
    o.threads = threads;
    o.measures.grid.R = blp_r;
    o.measures.grid.theta_points = grid_points;
    o.measures.grid.phi_points = grid_points;
    if (t_max > 0.0) {
        o.grid.t_max = t_max;
    }
    return o;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Qubit coupled to a GUE environment: averaged channels and non-Markovianity measures";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.attr("HEISENBERG_TIME") = kHeisenbergTime;
    m.attr("ENDING_PURITY") = kEndingPurity;

    m.def("sample_gue", [](int dim, std::uint64_t seed, std::uint64_t index, std::uint64_t substream) {
        return sample_gue(dim, SeededStream{seed, index, substream}).entries;
    }, py::arg("dim"), py::arg("seed") = 0, py::arg("index") = 0, py::arg("substream") = 0);
    m.def("unit_spacing_factor", &unit_spacing_factor, py::arg("dim"));

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def_readwrite("delta", &ModelParams::delta)
        .def_readwrite("lambda_", &ModelParams::lambda)
        .def_readwrite("env_dim", &ModelParams::env_dim)
        .def_readwrite("n_samples", &ModelParams::n_samples)
        .def_readwrite("time_grid", &ModelParams::time_grid)
        .def_readwrite("master_seed", &ModelParams::master_seed)
        .def("validate", &ModelParams::validate);

    m.def("build_hamiltonian", [](double delta, double lambda, const ComplexMatrix& h_env, const ComplexMatrix& v_env) {
        ModelParams p;
        p.delta = delta;
        p.lambda = lambda;
        p.env_dim = static_cast<int>(h_env.rows());
        return build_hamiltonian(p, GueMatrix{h_env}, GueMatrix{v_env});
    }, py::arg("delta"), py::arg("lambda_"), py::arg("h_env"), py::arg("v_env"));

    py::class_<ChannelPoint>(m, "ChannelPoint")
        .def(py::init<double, double, cplx, cplx>(), py::arg("t") = 0.0, py::arg("r") = 1.0,
             py::arg("z1") = cplx{1.0, 0.0}, py::arg("z2") = cplx{0.0, 0.0})
        .def_readwrite("t", &ChannelPoint::t)
        .def_readwrite("r", &ChannelPoint::r)
        .def_readwrite("z1", &ChannelPoint::z1)
        .def_readwrite("z2", &ChannelPoint::z2)
        .def("__repr__", [](const ChannelPoint& p) {
            return "ChannelPoint(t=" + std::to_string(p.t) + ", r=" + std::to_string(p.r) + ")";
        });

    py::class_<ChannelTrajectory>(m, "ChannelTrajectory")
        .def_property_readonly("t", [](const ChannelTrajectory& tr) {
            return column<double>(tr.points, [](const ChannelPoint& p) { return p.t; });
        })
        .def_property_readonly("r", [](const ChannelTrajectory& tr) {
            return column<double>(tr.points, [](const ChannelPoint& p) { return p.r; });
        })
        .def_property_readonly("z1", [](const ChannelTrajectory& tr) {
            return column<cplx>(tr.points, [](const ChannelPoint& p) { return p.z1; });
        })
        .def_property_readonly("z2", [](const ChannelTrajectory& tr) {
            return column<cplx>(tr.points, [](const ChannelPoint& p) { return p.z2; });
        })
        .def_property_readonly("se_r", [](const ChannelTrajectory& tr) {
            std::vector<double> v;
            for (const auto& e : tr.errors) v.push_back(e.r);
            return v;
        })
        .def_readonly("n_accumulated", &ChannelTrajectory::n_accumulated)
        .def_readonly("params", &ChannelTrajectory::params)
        .def("prefix", &ChannelTrajectory::prefix, py::arg("k"))
        .def("__len__", [](const ChannelTrajectory& tr) { return tr.points.size(); });

    m.def("accumulate_ensemble", [](double delta, double lambda, int env_dim, int n_samples,
                                    std::vector<double> times, std::uint64_t seed, int threads) {
        ModelParams p;
        p.delta = delta;
        p.lambda = lambda;
        p.env_dim = env_dim;
        p.n_samples = n_samples;
        p.time_grid = std::move(times);
        p.master_seed = seed;
        py::gil_scoped_release release;
        return accumulate_ensemble(p, EnsembleOptions{threads, {}, false});
    }, py::arg("delta"), py::arg("lambda_"), py::arg("env_dim"), py::arg("n_samples"), py::arg("times"),
       py::arg("seed") = 0, py::arg("threads") = 1);

    m.def("trajectory", &make_trajectory, py::arg("t"), py::arg("r"), py::arg("z1"), py::arg("z2"),
          py::arg("delta") = 0.0, py::arg("lambda_") = 0.0, py::arg("n_samples") = 1);
    m.def("read_trajectory", [](const std::string& path) { return validate_trajectory_file(path); }, py::arg("path"));
    m.def("write_trajectory", [](const std::string& path, const ChannelTrajectory& tr) {
        write_trajectory_file(path, tr);
    }, py::arg("path"), py::arg("trajectory"));

    // channel algebra
    m.def("choi_from_point", [](const ChannelPoint& p) { return Eigen::Matrix4cd(choi_from_point(p).m); });
    m.def("superop_from_point", [](const ChannelPoint& p) { return Eigen::Matrix4cd(superop_from_point(p).m); });
    m.def("reshuffle", [](const Eigen::Matrix4cd& x) { return Eigen::Matrix4cd(reshuffle(x)); });
    m.def("invert_superop", [](const Eigen::Matrix4cd& l, double tol) {
        return Eigen::Matrix4cd(invert_superop(Superoperator{l}, tol).m);
    }, py::arg("L"), py::arg("tol") = kDefaultInvertTol);

    py::class_<IntermediateMapParams>(m, "IntermediateMapParams")
        .def_readonly("q", &IntermediateMapParams::q)
        .def_readonly("Z1", &IntermediateMapParams::z1)
        .def_readonly("Z2", &IntermediateMapParams::z2)
        .def_readonly("D", &IntermediateMapParams::big_d)
        .def_readonly("d", &IntermediateMapParams::small_d);
    m.def("intermediate_map", &intermediate_map, py::arg("p_t"), py::arg("p_te"), py::arg("tol") = kDefaultInvertTol);
    m.def("choi_eigenvalues", &choi_eigenvalues, py::arg("m"));

    // measures
    py::class_<BlochPair>(m, "BlochPair")
        .def(py::init<double, double, double>(), py::arg("theta") = 0.0, py::arg("phi") = 0.0, py::arg("R") = 2.0)
        .def_readwrite("theta", &BlochPair::theta)
        .def_readwrite("phi", &BlochPair::phi)
        .def_readwrite("R", &BlochPair::R);
    m.def("trace_distance", &trace_distance, py::arg("p"), py::arg("pair"));
    m.def("g_value", &g_value, py::arg("delta1"), py::arg("deltaq"), py::arg("delta2"));
    m.def("ending_time", [](const ChannelTrajectory& tr) { return ending_time(tr.points); }, py::arg("trajectory"));

    py::class_<NMReport>(m, "NMReport")
        .def_readonly("delta", &NMReport::delta)
        .def_readonly("lambda_", &NMReport::lambda)
        .def_readonly("t_end", &NMReport::t_end)
        .def_readonly("t_end_reached", &NMReport::t_end_reached)
        .def_readonly("horizon_points", &NMReport::horizon_points)
        .def_readonly("nm_rhp", &NMReport::nm_rhp)
        .def_readonly("nm_blp", &NMReport::nm_blp)
        .def_readonly("nm_mdr", &NMReport::nm_mdr)
        .def_readonly("blp_argmax", &NMReport::blp_argmax)
        .def_readonly("mdr_argmax", &NMReport::mdr_argmax)
        .def_readonly("blp_R", &NMReport::blp_R)
        .def_readonly("n_samples", &NMReport::n_samples);

    m.def("measures", [](const ChannelTrajectory& tr, double blp_r, int grid_points) {
        MeasureOptions o;
        o.grid.R = blp_r;
        o.grid.theta_points = o.grid.phi_points = grid_points;
        return compute_report(tr, o);
    }, py::arg("trajectory"), py::arg("blp_R") = 2.0, py::arg("grid_points") = 31);

    m.def("run_point", [](double delta, double lambda, int env_dim, int n_samples, std::uint64_t seed, int threads,
                          double blp_r, int grid_points, double t_max) {
        ModelParams p;
        p.delta = delta;
        p.lambda = lambda;
        p.env_dim = env_dim;
        p.n_samples = n_samples;
        p.master_seed = seed;
        const RunOptions o = run_options(threads, blp_r, grid_points, t_max);
        py::gil_scoped_release release;
        PointResult res = run_point(p, o);
        return std::make_pair(std::move(res.trajectory), res.report);
    }, py::arg("delta"), py::arg("lambda_"), py::arg("env_dim") = 64, py::arg("n_samples") = 16,
       py::arg("seed") = 0, py::arg("threads") = 1, py::arg("blp_R") = 2.0, py::arg("grid_points") = 31,
       py::arg("t_max") = 0.0);

    m.def("convergence_study", [](double delta, double lambda, int env_dim, int n_samples,
                                  const std::vector<int>& prefixes, std::uint64_t seed, int threads) {
        ModelParams p;
        p.delta = delta;
        p.lambda = lambda;
        p.env_dim = env_dim;
        p.n_samples = n_samples;
        p.master_seed = seed;
        py::gil_scoped_release release;
        return convergence_study(p, prefixes, run_options(threads, 2.0, 31, 0.0)).reports;
    }, py::arg("delta"), py::arg("lambda_"), py::arg("env_dim"), py::arg("n_samples"), py::arg("prefixes"),
       py::arg("seed") = 0, py::arg("threads") = 1);
}
