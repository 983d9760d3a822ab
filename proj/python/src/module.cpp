#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "kfca/delta.hpp"
#include "kfca/io.hpp"
#include "kfca/mechanisms.hpp"
#include "kfca/shapley.hpp"
#include "kfca/truthfulness.hpp"

namespace py = pybind11;
using namespace kfca;

namespace {

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const Matrix& m) {
  Rows out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

DeltaMatrix as_delta(const Rows& rows) { return DeltaMatrix(Matrix::from_rows(rows), DeltaProvenance::kAnalytic); }

ScoreMatrix score_for(const std::string& mechanism, const DeltaMatrix& d) {
  if (mechanism == "kfca") return ScoreMatrix::kfca(d.size());
  if (mechanism == "ca") return ca_score_matrix(d);
  throw Error(Errc::kInvalidArgument, "mechanism must be kfca or ca");
}

py::dict verdict_dict(const CategoricalVerdict& v) {
  py::dict d;
  d["holds"] = v.holds;
  d["min_diagonal"] = v.min_diagonal;
  d["max_offdiagonal"] = v.max_offdiagonal;
  d["violating_entries"] = v.violating_entries;
  return d;
}

py::dict shapley_dict(const ShapleyResult& r) {
  py::dict d;
  d["values"] = r.values;
  d["evaluations"] = r.evaluations_used;
  d["permutations"] = r.permutations_used;
  d["converged"] = r.converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_kfca, m) {
  m.doc() = "Bindings for the kfca core library";
  py::register_exception<Error>(m, "KfcaError", PyExc_ValueError);

  m.def("empirical_delta",
        [](const std::vector<Label>& ri, const std::vector<Label>& rj, std::size_t labels) {
          return to_rows(empirical_delta(ri, rj, labels).entries());
        },
        py::arg("reports_i"), py::arg("reports_j"), py::arg("labels"));

  m.def("analytic_delta",
        [](const std::vector<double>& prior, const Rows& ci, const Rows& cj) {
          return to_rows(analytic_delta(prior, Matrix::from_rows(ci), Matrix::from_rows(cj)).entries());
        },
        py::arg("prior"), py::arg("channel_i"), py::arg("channel_j"));

  m.def("check_categorical", [](const Rows& delta) { return verdict_dict(check_categorical(as_delta(delta))); },
        py::arg("delta"));

  m.def("expected_reward",
        [](const Rows& delta, const std::vector<Label>& f1, const std::vector<Label>& f2, const std::string& mechanism) {
          const auto d = as_delta(delta);
          return expected_reward(d, score_for(mechanism, d), std::span<const Label>(f1), std::span<const Label>(f2));
        },
        py::arg("delta"), py::arg("f1"), py::arg("f2"), py::arg("mechanism") = "kfca");

  m.def("profile_summary",
        [](const Rows& delta, const std::string& mechanism) {
          const auto d = as_delta(delta);
          const auto s = summarize_profiles(enumerate_profiles(d, score_for(mechanism, d), 0));
          py::dict out;
          out["max_value"] = s.max_value;
          out["maximizer_count"] = s.maximizer_count;
          out["maximizers_all_shared_bijections"] = s.maximizers_all_shared_bijections;
          out["truthful_value"] = s.truthful_value;
          out["truthful_is_maximizer"] = s.truthful_is_maximizer;
          out["profile_count"] = s.profile_count;
          return out;
        },
        py::arg("delta"), py::arg("mechanism") = "kfca");

  m.def("binary_robustness", &binary_robustness, py::arg("alpha"), py::arg("lam"));

  m.def("multiclass_robustness",
        [](const std::vector<double>& prior, const Rows& honest, const Rows& malicious, double lam) {
          const auto r = multiclass_robustness(prior, Matrix::from_rows(honest), Matrix::from_rows(malicious), lam);
          py::dict out;
          out["A"] = r.a;
          out["B"] = r.b;
          out["penalty"] = r.penalty;
          out["total"] = r.total;
          out["threshold"] = r.threshold;
          return out;
        },
        py::arg("prior"), py::arg("honest"), py::arg("malicious"), py::arg("lam"));

  m.def("exact_shapley", [](std::vector<double> table) { return shapley_dict(exact_shapley(CoalitionOracle::from_table(std::move(table)))); },
        py::arg("table"));

  m.def("mc_shapley",
        [](std::vector<double> table, std::size_t permutations, std::uint64_t seed, bool stopping, double truncation,
           std::size_t workers) {
          McShapleyConfig c;
          c.max_permutations = permutations;
          c.use_stopping_rule = stopping;
          c.truncation_eps = truncation;
          return shapley_dict(mc_shapley(CoalitionOracle::from_table(std::move(table)), c, StreamKey(seed), workers));
        },
        py::arg("table"), py::arg("permutations") = 1000, py::arg("seed") = 0, py::arg("stopping") = true,
        py::arg("truncation") = 0.0, py::arg("workers") = 1);

  m.def("commitment_digest",
        [](std::vector<std::vector<Label>> reports, std::size_t labels, const std::string& salt) {
          return commitment_digest(ReportMatrix(labels, std::move(reports)), salt);
        },
        py::arg("reports"), py::arg("labels"), py::arg("salt"));

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code = 0;
          {
            py::gil_scoped_release release;
            code = cli::run(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
