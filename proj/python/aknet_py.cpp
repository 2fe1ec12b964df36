#include "aknet/errors.hpp"
#include "aknet/estimator/corr_estimator.hpp"
#include "aknet/estimator/grid_search.hpp"
#include "aknet/filter/aknet_filter.hpp"
#include "aknet/harness/config.hpp"
#include "aknet/harness/experiments.hpp"
#include "aknet/harness/results.hpp"
#include "aknet/hypercm/hyper_net.hpp"
#include "aknet/kf/kalman_filter.hpp"
#include "aknet/kgain/checkpoint.hpp"
#include "aknet/kgain/gain_net.hpp"
#include "aknet/ssm/dataset_io.hpp"
#include "aknet/ssm/model.hpp"
#include "aknet/training/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace aknet;

namespace {

std::vector<const Trajectory*> pointers(const std::vector<Trajectory>& trs) {
  std::vector<const Trajectory*> out;
  for (const auto& t : trs) out.push_back(&t);
  return out;
}

std::vector<Matrix> run_filter(const SSModel& model, const GainNet& gain_net, const HyperNet* hyper,
                               const std::vector<Trajectory>& trs,
                               std::optional<std::vector<std::vector<double>>> sows) {
  auto batch = pointers(trs);
  std::vector<const std::vector<double>*> s;
  if (sows) {
    if (sows->size() != trs.size()) throw ContractViolation("need one SoW sequence per trajectory");
    for (const auto& v : *sows) s.push_back(&v);
  } else {
    for (const auto& t : trs) s.push_back(&t.sow);
  }
  py::gil_scoped_release release;
  return aknet_filter(model, gain_net, hyper, batch, s);
}

py::dict param_dict(const ParamStore& params) {
  py::dict d;
  for (std::size_t i = 0; i < params.blocks().size(); ++i) {
    d[py::str(params.blocks()[i].name)] = Matrix(params.view(i));
  }
  return d;
}

void set_param(ParamStore& params, const std::string& name, const Matrix& value) {
  auto view = params.view(params.index_of(name));
  if (view.rows() != value.rows() || view.cols() != value.cols()) {
    throw ContractViolation("block '" + name + "' expects shape " + std::to_string(view.rows()) +
                            "x" + std::to_string(view.cols()));
  }
  view = value;
}

}  // namespace

PYBIND11_MODULE(_aknet, m) {
  m.doc() = "Adaptive KalmanNet: hypernetwork-modulated learned Kalman gains";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<UnsupportedConfiguration>(m, "UnsupportedConfiguration",
                                                   PyExc_NotImplementedError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);

  // state-space model
  py::enum_<NoiseFamily>(m, "NoiseFamily")
      .value("GAUSSIAN", NoiseFamily::kGaussian)
      .value("EXPONENTIAL", NoiseFamily::kExponential);
  py::enum_<SplitTag>(m, "SplitTag")
      .value("PSEUDO_STATIONARY", SplitTag::kPseudoStationary)
      .value("FULL", SplitTag::kFull);

  py::class_<SSModel>(m, "SSModel")
      .def(py::init([](Matrix F, Matrix H, Matrix Q0, Matrix R0) {
             SSModel s{std::move(F), std::move(H), std::move(Q0), std::move(R0)};
             s.validate();
             return s;
           }),
           py::arg("F"), py::arg("H"), py::arg("Q0"), py::arg("R0"))
      .def_readwrite("F", &SSModel::F)
      .def_readwrite("H", &SSModel::H)
      .def_readwrite("Q0", &SSModel::Q0)
      .def_readwrite("R0", &SSModel::R0)
      .def_property_readonly("state_dim", &SSModel::state_dim)
      .def_property_readonly("obs_dim", &SSModel::obs_dim)
      .def("validate", &SSModel::validate)
      .def("save", [](const SSModel& s, const std::filesystem::path& p) { save_model(p, s); })
      .def_static("load", &load_model);

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def_readwrite("q2", &NoiseSchedule::q2)
      .def_readwrite("r2", &NoiseSchedule::r2)
      .def_readwrite("family", &NoiseSchedule::family)
      .def_static("constant", &NoiseSchedule::constant, py::arg("q2"), py::arg("r2"),
                  py::arg("length"), py::arg("family") = NoiseFamily::kGaussian)
      .def_static("jump", &NoiseSchedule::jump, py::arg("q2_before"), py::arg("r2_before"),
                  py::arg("q2_after"), py::arg("r2_after"), py::arg("jump_step"),
                  py::arg("length"), py::arg("family") = NoiseFamily::kGaussian);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("states", &Trajectory::states)
      .def_readonly("observations", &Trajectory::observations)
      .def_readonly("sow", &Trajectory::sow)
      .def_readonly("q2", &Trajectory::q2)
      .def_readonly("r2", &Trajectory::r2)
      .def_readonly("x0", &Trajectory::x0)
      .def("__len__", &Trajectory::length);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("trajectories", &Dataset::trajectories)
      .def_readwrite("split", &Dataset::split)
      .def_readwrite("family", &Dataset::family)
      .def("__len__", &Dataset::size)
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_dataset(p, d); })
      .def_static("load", &load_dataset);

  m.def("sow", &aknet::sow, py::arg("Q"), py::arg("R"), "n Tr(Q) / (m Tr(R))");
  m.def(
      "generate",
      [](const SSModel& model, const NoiseSchedule& schedule, std::size_t length,
         std::optional<Vector> x0, std::uint64_t seed) {
        Rng rng(seed);
        return generate(model, schedule, length, x0 ? *x0 : Vector::Zero(model.state_dim()), rng);
      },
      py::arg("model"), py::arg("schedule"), py::arg("length"), py::arg("x0") = py::none(),
      py::arg("seed") = 0);
  m.def("rotation_decay", &rotation_decay, py::arg("dim"), py::arg("radius"), py::arg("angle"));

  // Kalman filter
  py::class_<KFRun>(m, "KFRun")
      .def_readonly("estimates", &KFRun::estimates)
      .def_readonly("gains", &KFRun::gains)
      .def_readonly("covariances", &KFRun::covariances);
  m.def(
      "kf_run",
      [](const SSModel& model, const std::vector<double>& q2, const std::vector<double>& r2,
         const Matrix& observations, std::optional<Vector> x0, std::optional<Matrix> P0) {
        const Index n = model.state_dim();
        return kf_run_scaled(model, q2, r2, observations, x0 ? *x0 : Vector::Zero(n),
                             P0 ? *P0 : Matrix::Zero(n, n));
      },
      py::arg("model"), py::arg("q2"), py::arg("r2"), py::arg("observations"),
      py::arg("x0") = py::none(), py::arg("P0") = py::none(),
      "Kalman filter with Q_t = q2_t Q0 and R_t = r2_t R0.");
  m.def(
      "adaptive_kf_run",
      [](const SSModel& model, const Matrix& observations, double alpha, std::optional<Vector> x0) {
        const Index n = model.state_dim();
        CorrEstimator est(model, CorrEstimatorConfig{alpha});
        auto run = adaptive_kf_run(model, observations, est, x0 ? *x0 : Vector::Zero(n),
                                   Matrix::Zero(n, n));
        std::vector<double> sows;
        for (const auto& e : run.estimates) sows.push_back(e.sow);
        return py::make_tuple(run.run.estimates, sows);
      },
      py::arg("model"), py::arg("observations"), py::arg("alpha") = 0.95,
      py::arg("x0") = py::none(),
      "Kalman filter fed by the correlation estimator; returns (estimates, sow per step).");

  // networks
  py::enum_<FeatureNorm>(m, "FeatureNorm")
      .value("UNIT", FeatureNorm::kUnit)
      .value("RMS", FeatureNorm::kRunningRms);

  py::class_<GainNetConfig>(m, "GainNetConfig")
      .def(py::init([](Index m_, Index n, Index hidden, FeatureNorm norm, double rms_decay) {
             GainNetConfig c{m_, n, hidden > 0 ? hidden : default_hidden_size(m_, n), norm,
                             rms_decay};
             c.validate();
             return c;
           }),
           py::arg("state_dim") = 2, py::arg("obs_dim") = 2, py::arg("hidden") = 0,
           py::arg("norm") = FeatureNorm::kUnit, py::arg("rms_decay") = 0.9)
      .def_readwrite("state_dim", &GainNetConfig::state_dim)
      .def_readwrite("obs_dim", &GainNetConfig::obs_dim)
      .def_readwrite("hidden", &GainNetConfig::hidden)
      .def_readwrite("norm", &GainNetConfig::norm)
      .def_readwrite("rms_decay", &GainNetConfig::rms_decay);

  py::class_<GainNet>(m, "GainNet")
      .def(py::init<GainNetConfig>(), py::arg("config"), "All-zero parameters.")
      .def_static(
          "create",
          [](const GainNetConfig& c, std::uint64_t seed) {
            Rng rng(seed);
            return GainNet::create(c, rng);
          },
          py::arg("config"), py::arg("seed") = 0)
      .def_property_readonly("config", &GainNet::config)
      .def_property_readonly("cm_width", &GainNet::cm_width)
      .def_property_readonly("param_count",
                             [](const GainNet& g) { return param_count(g.params()).total; })
      .def("params", [](const GainNet& g) { return param_dict(g.params()); })
      .def("set_param", [](GainNet& g, const std::string& name,
                           const Matrix& v) { set_param(g.params(), name, v); })
      .def(
          "forward",
          [](const GainNet& g, const Vector& features, const Vector& hidden) {
            auto out = kgain_forward(g, features, hidden, nullptr);
            return py::make_tuple(out.gain, out.hidden);
          },
          py::arg("features"), py::arg("hidden"), "Returns (gain m x n, next hidden).");

  py::class_<HyperNet>(m, "HyperNet")
      .def_static(
          "create",
          [](const GainNet& target, Index hidden, std::uint64_t seed) {
            Rng rng(seed);
            return HyperNet::create(target, hidden, rng);
          },
          py::arg("target"), py::arg("hidden") = 5, py::arg("seed") = 0)
      .def_property_readonly("param_count",
                             [](const HyperNet& h) { return param_count(h.params()).total; })
      .def("params", [](const HyperNet& h) { return param_dict(h.params()); })
      .def("set_param", [](HyperNet& h, const std::string& name,
                           const Matrix& v) { set_param(h.params(), name, v); })
      .def("forward", &HyperNet::forward, py::arg("sow"), py::arg("switch"),
           "Gains (switch = 1) or shifts (switch = 0) for one SoW.");

  m.def("encode_sow", &encode_sow, py::arg("sow"));
  m.def(
      "aknet_filter",
      [](const SSModel& model, const GainNet& g, const HyperNet* h,
         const std::vector<Trajectory>& trs, std::optional<std::vector<std::vector<double>>> sows) {
        return run_filter(model, g, h, trs, std::move(sows));
      },
      py::arg("model"), py::arg("gain_net"), py::arg("hyper"), py::arg("trajectories"),
      py::arg("sows") = py::none(),
      "AKNet state estimates per trajectory; SoW defaults to each trajectory's true SoW.");
  m.def(
      "grid_search_sow",
      [](const SSModel& model, const Matrix& observations, const GainNet& g, const HyperNet& h,
         const std::vector<double>& grid, std::optional<Vector> x0) {
        return grid_search_sow(model, observations, g, h, grid,
                               x0 ? *x0 : Vector::Zero(model.state_dim()));
      },
      py::arg("model"), py::arg("observations"), py::arg("gain_net"), py::arg("hyper"),
      py::arg("grid"), py::arg("x0") = py::none());

  m.def(
      "save_checkpoint",
      [](const std::filesystem::path& p, const GainNet& g, const HyperNet* h) {
        save_checkpoint(p, g, h);
      },
      py::arg("path"), py::arg("gain_net"), py::arg("hyper") = nullptr);
  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& p) {
        LoadedNets n = load_checkpoint(p);
        py::object hyper = n.hyper ? py::cast(std::move(*n.hyper)) : py::object(py::none());
        return py::make_tuple(std::move(n.gain_net), hyper);
      },
      py::arg("path"), "Returns (gain_net, hyper or None).");

  // training
  py::enum_<Stage>(m, "Stage").value("STAGE1", Stage::kStage1).value("STAGE2", Stage::kStage2);
  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("train_loss", &EpochRecord::train_loss)
      .def_readonly("val_loss", &EpochRecord::val_loss)
      .def_readonly("l2_penalty", &EpochRecord::l2_penalty);
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("stage", &TrainConfig::stage)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("step_size", &TrainConfig::step_size)
      .def_readwrite("l2_weight", &TrainConfig::l2_weight)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("validation_fraction", &TrainConfig::validation_fraction);
  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("stage", &TrainReport::stage)
      .def_readonly("epochs", &TrainReport::epochs)
      .def_readonly("best_epoch", &TrainReport::best_epoch)
      .def_readonly("best_val_loss", &TrainReport::best_val_loss)
      .def_readonly("final_val_loss", &TrainReport::final_val_loss)
      .def_readonly("wall_seconds", &TrainReport::wall_seconds)
      .def_readonly("diverged", &TrainReport::diverged)
      .def_readonly("early_stopped", &TrainReport::early_stopped)
      .def_readonly("note", &TrainReport::note)
      .def("__str__", &train_report_summary);
  m.def(
      "loss",
      [](const SSModel& model, const GainNet& g, const HyperNet* h, const Dataset& ds) {
        py::gil_scoped_release release;
        return loss(model, g, h, ds);
      },
      py::arg("model"), py::arg("gain_net"), py::arg("hyper"), py::arg("dataset"));
  m.def(
      "train_stage1",
      [](const SSModel& model, const Dataset& ds, GainNet& g, const TrainConfig& c) {
        py::gil_scoped_release release;
        return train_stage1(model, ds, g, c);
      },
      py::arg("model"), py::arg("dataset"), py::arg("gain_net"), py::arg("config"));
  m.def(
      "train_stage2",
      [](const SSModel& model, const Dataset& ds, const GainNet& g, HyperNet& h,
         const TrainConfig& c) {
        py::gil_scoped_release release;
        return train_stage2(model, ds, g, h, c);
      },
      py::arg("model"), py::arg("dataset"), py::arg("gain_net"), py::arg("hyper"),
      py::arg("config"));

  // evaluation
  py::class_<GroupMse>(m, "GroupMse")
      .def_readonly("q2", &GroupMse::q2)
      .def_readonly("r2", &GroupMse::r2)
      .def_readonly("sow", &GroupMse::sow)
      .def_readonly("count", &GroupMse::count)
      .def_readonly("mse", &GroupMse::mse)
      .def_readonly("mse_db", &GroupMse::mse_db)
      .def_readonly("std_db", &GroupMse::std_db)
      .def_readonly("per_trajectory", &GroupMse::per_trajectory);
  auto options = [](const std::string& source, double alpha, std::vector<double> grid,
                    std::size_t from_step) {
    EvalOptions o;
    o.sow_source = parse_sow_source(source);
    o.corr.alpha = alpha;
    o.grid = std::move(grid);
    o.from_step = from_step;
    return o;
  };
  m.def(
      "evaluate",
      [options](const SSModel& model, const Dataset& ds, const GainNet& g, const HyperNet* h,
                const std::string& source, double alpha, std::vector<double> grid,
                std::size_t from_step) {
        const EvalOptions o = options(source, alpha, std::move(grid), from_step);
        py::gil_scoped_release release;
        return evaluate(model, ds, g, h, o);
      },
      py::arg("model"), py::arg("dataset"), py::arg("gain_net"), py::arg("hyper"),
      py::arg("sow_source") = "oracle", py::arg("alpha") = 0.95,
      py::arg("grid") = std::vector<double>{}, py::arg("from_step") = 0);
  m.def(
      "evaluate_kf",
      [options](const SSModel& model, const Dataset& ds, const std::string& source, double alpha,
                std::size_t from_step) {
        const EvalOptions o = options(source, alpha, {}, from_step);
        py::gil_scoped_release release;
        return evaluate_kf(model, ds, o);
      },
      py::arg("model"), py::arg("dataset"), py::arg("sow_source") = "oracle",
      py::arg("alpha") = 0.95, py::arg("from_step") = 0);

  // experiments
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init([](const std::string& experiment, py::kwargs kw) {
             ExperimentConfig c = default_config(experiment);
             for (auto [k, v] : kw) set_config_value(c, py::str(k), py::str(v));
             return c;
           }),
           py::arg("experiment") = "gaussian-grid",
           "Defaults for the experiment, then key = value overrides, e.g. seed=3.")
      .def("set", &set_config_value)
      .def("validate", &ExperimentConfig::validate)
      .def("dump", &dump_config)
      .def_static("parse", [](const std::string& text) {
        return parse_config(text, ExperimentConfig{});
      })
      .def_readwrite("experiment", &ExperimentConfig::experiment)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def("__str__", &dump_config);
  m.def("make_model", &make_model, py::arg("config"));
  m.def("pair_for_sow", &pair_for_sow, py::arg("model"), py::arg("sow"));
  m.def(
      "make_dataset",
      [](const SSModel& model, const std::vector<std::pair<double, double>>& pairs,
         std::size_t count, std::size_t length, NoiseFamily family, std::uint64_t seed,
         const std::string& key) {
        return make_dataset(model, pairs, count, length, family, SplitTag::kFull, seed, key);
      },
      py::arg("model"), py::arg("pairs"), py::arg("count"), py::arg("length"),
      py::arg("family") = NoiseFamily::kGaussian, py::arg("seed") = 0, py::arg("key") = "data");

  py::class_<ResultRow>(m, "ResultRow")
      .def_readonly("experiment", &ResultRow::experiment)
      .def_readonly("panel", &ResultRow::panel)
      .def_readonly("filter", &ResultRow::filter)
      .def_readonly("q2", &ResultRow::q2)
      .def_readonly("r2", &ResultRow::r2)
      .def_readonly("sow", &ResultRow::sow)
      .def_readonly("sow_source", &ResultRow::sow_source)
      .def_readonly("mse_db", &ResultRow::mse_db)
      .def_readonly("std_db", &ResultRow::std_db)
      .def_readonly("count", &ResultRow::count);
  m.def(
      "run_experiment",
      [](const ExperimentConfig& c, const std::filesystem::path& out) {
        py::gil_scoped_release release;
        ExperimentResult r = run_experiment(c, out);
        return py::make_tuple(r.table.rows, r.report);
      },
      py::arg("config"), py::arg("out"), "Returns (result rows, report text).");
  m.def("read_results", [](const std::filesystem::path& p) { return read_results_csv(p).rows; });
}
