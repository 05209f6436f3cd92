#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "tsbl/block_model.hpp"
#include "tsbl/datagen.hpp"
#include "tsbl/experiment.hpp"
#include "tsbl/metrics.hpp"
#include "tsbl/msbl_solver.hpp"
#include "tsbl/tmsbl_solver.hpp"
#include "tsbl/tsbl_solver.hpp"

namespace py = pybind11;
using namespace tsbl;

namespace {

LambdaPolicy make_lambda_policy(std::optional<double> lambda_fixed) {
  return lambda_fixed ? LambdaPolicy::fixed(*lambda_fixed) : LambdaPolicy::learned();
}

BPolicySpec make_b_policy(const std::string& name, double eta) {
  if (name == "plain") return BPolicySpec::plain();
  if (name == "regularized") return BPolicySpec::regularized(eta);
  if (name == "pinned_identity") return BPolicySpec::pinned_identity();
  throw std::invalid_argument("b_policy must be plain, regularized or pinned_identity");
}

TsblOptions make_tsbl_options(int max_iters, double gamma_tol, double prune_thresh,
                              std::optional<double> lambda_fixed, double init_gamma) {
  TsblOptions opts;
  opts.max_iters = max_iters;
  opts.gamma_tol = gamma_tol;
  opts.prune_thresh = prune_thresh;
  opts.lambda_policy = make_lambda_policy(lambda_fixed);
  opts.init_gamma = init_gamma;
  return opts;
}

datagen::SourceModel make_source_model(const std::string& kind, double beta, int order,
                                       const std::vector<double>& coeffs,
                                       const std::string& rescale) {
  using datagen::SourceModel;
  SourceModel::Rescale r;
  if (rescale == "third_to_one")
    r = SourceModel::Rescale::NoiselessUniformThirdToOne;
  else if (rescale == "unit_norm")
    r = SourceModel::Rescale::UnitNorm;
  else
    throw std::invalid_argument("rescale must be third_to_one or unit_norm");
  if (kind == "common_ar1") return SourceModel::common_ar1(beta, r);
  if (kind == "ar")
    return coeffs.empty() ? SourceModel::ar_sampled(order, r)
                          : SourceModel::ar(order, coeffs, r);
  if (kind == "ma")
    return coeffs.empty() ? SourceModel::ma_sampled(order, r)
                          : SourceModel::ma(order, coeffs, r);
  throw std::invalid_argument("source kind must be common_ar1, ar or ma");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse Bayesian learning for MMV recovery with temporally correlated rows";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<MmvProblem>(m, "MmvProblem")
      .def(py::init([](Matrix phi, Matrix y, std::optional<Matrix> x_gen,
                       std::optional<IndexSet> support, double snr_db) {
             std::optional<Truth> truth;
             if (x_gen && support) truth = Truth{std::move(*x_gen), std::move(*support), snr_db};
             return MmvProblem(std::move(phi), std::move(y), std::move(truth));
           }),
           py::arg("phi"), py::arg("y"), py::arg("x_gen") = std::nullopt,
           py::arg("support") = std::nullopt,
           py::arg("snr_db") = std::numeric_limits<double>::infinity())
      .def_property_readonly("phi", &MmvProblem::phi)
      .def_property_readonly("y", &MmvProblem::y)
      .def_property_readonly("n", &MmvProblem::n)
      .def_property_readonly("m", &MmvProblem::m)
      .def_property_readonly("l", &MmvProblem::l)
      .def_property_readonly("has_truth", &MmvProblem::has_truth)
      .def_property_readonly("x_gen",
                             [](const MmvProblem& p) -> std::optional<Matrix> {
                               if (!p.has_truth()) return std::nullopt;
                               return p.truth().x_gen;
                             })
      .def_property_readonly("support",
                             [](const MmvProblem& p) -> std::optional<IndexSet> {
                               if (!p.has_truth()) return std::nullopt;
                               return p.truth().support;
                             })
      .def("unit_norm_columns", &MmvProblem::unit_norm_columns, py::arg("tol") = 1e-8);

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init([](Vector gamma, Matrix b_mat, double lam) {
             return Hyperparams{std::move(gamma), std::move(b_mat), lam};
           }),
           py::arg("gamma"), py::arg("b_mat"), py::arg("lambda_"))
      .def_readwrite("gamma", &Hyperparams::gamma)
      .def_readwrite("b_mat", &Hyperparams::b_mat)
      .def_readwrite("lambda_", &Hyperparams::lambda);

  py::class_<SolverResult>(m, "SolverResult")
      .def_readonly("x_hat", &SolverResult::x_hat)
      .def_readonly("active_set", &SolverResult::active_set)
      .def_readonly("cost_trace", &SolverResult::cost_trace)
      .def_readonly("iterations", &SolverResult::iterations)
      .def_readonly("converged", &SolverResult::converged)
      .def_property_readonly("gamma", [](const SolverResult& r) { return r.hyper.gamma; })
      .def_property_readonly("b_mat", [](const SolverResult& r) { return r.hyper.b_mat; })
      .def_property_readonly("lambda_", [](const SolverResult& r) { return r.hyper.lambda; });

  m.def("build_block_dictionary", &build_block_dictionary, py::arg("phi"), py::arg("l"),
        py::arg("max_elements") = kDefaultBlockDictionaryCap);
  m.def("cost", &cost, py::arg("problem"), py::arg("hyper"));
  m.def(
      "posterior_moments",
      [](const MmvProblem& problem, const Hyperparams& hyper) {
        auto pm = posterior_moments(problem, hyper);
        return py::make_tuple(pm.mean_matrix(), pm.sigma_blocks);
      },
      py::arg("problem"), py::arg("hyper"),
      "Returns (posterior mean as an M x L matrix, list of L x L covariance blocks)");
  m.def("map_estimate", &map_estimate, py::arg("problem"), py::arg("hyper"));

  m.def(
      "tsbl_solve",
      [](const MmvProblem& problem, int max_iters, double gamma_tol, double prune_thresh,
         std::optional<double> lambda_fixed, double init_gamma) {
        return tsbl_solve(problem, make_tsbl_options(max_iters, gamma_tol, prune_thresh,
                                                     lambda_fixed, init_gamma));
      },
      py::arg("problem"), py::arg("max_iters") = 2000, py::arg("gamma_tol") = 1e-8,
      py::arg("prune_thresh") = 1e-5, py::arg("lambda_fixed") = std::nullopt,
      py::arg("init_gamma") = 1.0);

  m.def(
      "tmsbl_solve",
      [](const MmvProblem& problem, int max_iters, double gamma_tol, double prune_thresh,
         std::optional<double> lambda_fixed, double init_gamma, const std::string& b_policy,
         double eta, bool low_snr_lambda_mod, bool b_identity_switch) {
        TmsblOptions opts;
        opts.max_iters = max_iters;
        opts.gamma_tol = gamma_tol;
        opts.prune_thresh = prune_thresh;
        opts.lambda_policy = make_lambda_policy(lambda_fixed);
        opts.init_gamma = init_gamma;
        opts.b_policy = make_b_policy(b_policy, eta);
        opts.low_snr_lambda_mod = low_snr_lambda_mod;
        opts.b_identity_switch = b_identity_switch;
        return tmsbl_solve(problem, opts);
      },
      py::arg("problem"), py::arg("max_iters") = 2000, py::arg("gamma_tol") = 1e-8,
      py::arg("prune_thresh") = 1e-5, py::arg("lambda_fixed") = std::nullopt,
      py::arg("init_gamma") = 1.0, py::arg("b_policy") = "plain", py::arg("eta") = 2.0,
      py::arg("low_snr_lambda_mod") = false, py::arg("b_identity_switch") = false);

  m.def(
      "msbl_solve",
      [](const MmvProblem& problem, int max_iters, double gamma_tol, double prune_thresh,
         std::optional<double> lambda_fixed, double init_gamma) {
        return msbl_solve(problem, make_tsbl_options(max_iters, gamma_tol, prune_thresh,
                                                     lambda_fixed, init_gamma));
      },
      py::arg("problem"), py::arg("max_iters") = 2000, py::arg("gamma_tol") = 1e-8,
      py::arg("prune_thresh") = 1e-5, py::arg("lambda_fixed") = std::nullopt,
      py::arg("init_gamma") = 1.0);

  m.def("tmsbl_gamma_update", &tmsbl_gamma_update, py::arg("x_cur"), py::arg("xi_diag"),
        py::arg("b_inv"));
  m.def(
      "estimate_b",
      [](const Matrix& x_cur, const Vector& gamma, const std::string& policy, double eta) {
        return estimate_b(x_cur, gamma, make_b_policy(policy, eta));
      },
      py::arg("x_cur"), py::arg("gamma"), py::arg("policy") = "plain", py::arg("eta") = 2.0);
  m.def("tmsbl_lambda_update", &tmsbl_lambda_update, py::arg("problem"), py::arg("x_cur"),
        py::arg("gamma"), py::arg("lambda_prev"), py::arg("low_snr_mod") = false);

  // data generation
  m.def(
      "sample_dictionary",
      [](Index n, Index m, std::uint64_t seed, const std::string& kind, Index order) {
        auto dk = kind == "hadamard_rows" ? datagen::DictionaryKind::hadamard_rows(order)
                                          : datagen::DictionaryKind::unit_hypersphere();
        if (kind != "hadamard_rows" && kind != "unit_hypersphere")
          throw std::invalid_argument("kind must be unit_hypersphere or hadamard_rows");
        return datagen::sample_dictionary(n, m, dk, seed);
      },
      py::arg("n"), py::arg("m"), py::arg("seed"), py::arg("kind") = "unit_hypersphere",
      py::arg("order") = 0);
  m.def(
      "gen_sources",
      [](Index m, Index l, Index k, std::uint64_t seed, const std::string& kind, double beta,
         int order, const std::vector<double>& coeffs, const std::string& rescale) {
        auto model = make_source_model(kind, beta, order, coeffs, rescale);
        auto [x, support] = datagen::gen_sources(m, l, k, model, seed);
        return py::make_tuple(x, support);
      },
      py::arg("m"), py::arg("l"), py::arg("k"), py::arg("seed"), py::arg("kind") = "common_ar1",
      py::arg("beta") = 0.0, py::arg("order") = 1, py::arg("coeffs") = std::vector<double>{},
      py::arg("rescale") = "third_to_one");
  m.def("add_noise", &datagen::add_noise, py::arg("clean"), py::arg("snr_db"), py::arg("seed"));
  m.def("sample_extreme_beta", &datagen::sample_extreme_beta, py::arg("c"));
  m.def(
      "substream_seed",
      [](std::uint64_t master, std::uint64_t cell, std::uint64_t trial, const std::string& tag) {
        datagen::StreamTag t;
        if (tag == "dictionary")
          t = datagen::StreamTag::Dictionary;
        else if (tag == "support")
          t = datagen::StreamTag::Support;
        else if (tag == "sources")
          t = datagen::StreamTag::Sources;
        else if (tag == "noise")
          t = datagen::StreamTag::Noise;
        else
          throw std::invalid_argument("tag must be dictionary, support, sources or noise");
        return datagen::substream_seed(master, cell, trial, t);
      },
      py::arg("master_seed"), py::arg("cell"), py::arg("trial"), py::arg("tag"));

  // metrics
  m.def(
      "is_failure",
      [](const Matrix& x_hat, const IndexSet& support, Index k, const std::string& regime) {
        auto r = regime == "noiseless" ? metrics::FailureRegime::Noiseless
                                       : metrics::FailureRegime::Noisy;
        if (regime != "noiseless" && regime != "noisy")
          throw std::invalid_argument("regime must be noiseless or noisy");
        return metrics::is_failure(x_hat, support, k, r);
      },
      py::arg("x_hat"), py::arg("true_support"), py::arg("k"), py::arg("regime"));
  m.def("mse", &metrics::mse, py::arg("x_hat"), py::arg("x_gen"));
  m.def("source_condition_number", &metrics::source_condition_number, py::arg("x_gen"),
        py::arg("support"));
  m.def("support_stationary_gamma", &metrics::support_stationary_gamma, py::arg("phi"),
        py::arg("y"), py::arg("support"), py::arg("b_mat"), py::arg("residual_tol") = 1e-8);
  m.def("approx_inverse_error", &metrics::approx_inverse_error, py::arg("phi"),
        py::arg("gamma"), py::arg("b_mat"), py::arg("lambda_"));
  m.def("reached_sparsest_support", &metrics::reached_sparsest_support, py::arg("x_hat"),
        py::arg("true_support"));

  // benchmark harness
  m.def("default_config_json",
        []() { return bench::config_to_json(bench::default_config()); });
  m.def(
      "run_experiment_json",
      [](const std::string& config_json) {
        auto config = bench::config_from_json(config_json);
        auto records = bench::run_experiment(config);
        auto rows = bench::aggregate(records);
        return py::make_tuple(bench::raw_csv(records, config),
                              bench::aggregate_csv(rows, config));
      },
      py::arg("config_json"),
      "Runs a sweep from a JSON config; returns (raw_csv, aggregate_csv)");
}
