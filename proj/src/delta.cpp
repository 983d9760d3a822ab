#include "kfca/delta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kfca {

std::string_view to_string(DeltaProvenance p) {
  switch (p) {
    case DeltaProvenance::kAnalytic: return "analytic";
    case DeltaProvenance::kEmpirical: return "empirical";
    case DeltaProvenance::kRegularized: return "regularized";
  }
  return "unknown";
}

DeltaMatrix::DeltaMatrix(Matrix entries, DeltaProvenance provenance, std::size_t sample_count, double gamma)
    : entries_(std::move(entries)), provenance_(provenance), sample_count_(sample_count), gamma_(gamma) {
  if (entries_.rows() != entries_.cols()) throw Error(Errc::kInvalidArgument, "delta matrix must be square");
}

double DeltaMatrix::max_marginal_error() const {
  double worst = 0.0;
  for (std::size_t a = 0; a < size(); ++a) {
    worst = std::max(worst, std::abs(entries_.row_sum(a)));
    worst = std::max(worst, std::abs(entries_.col_sum(a)));
  }
  return worst;
}

DeltaMatrix DeltaMatrix::transpose() const {
  return DeltaMatrix(entries_.transpose(), provenance_, sample_count_, gamma_);
}

DeltaMatrix analytic_delta(std::span<const double> prior, const Matrix& channel_i, const Matrix& channel_j) {
  const std::size_t l = prior.size();
  if (channel_i.rows() != l || channel_j.rows() != l || channel_i.cols() != channel_j.cols()) {
    throw Error(Errc::kLengthMismatch, "prior and channel shapes disagree");
  }
  const std::size_t labels = channel_i.cols();
  std::vector<double> marg_i(labels, 0.0), marg_j(labels, 0.0);
  for (std::size_t y = 0; y < l; ++y)
    for (std::size_t a = 0; a < labels; ++a) {
      marg_i[a] += prior[y] * channel_i(y, a);
      marg_j[a] += prior[y] * channel_j(y, a);
    }
  // Covariance form: sum_y pi(y) (P_i(a|y) - p_i(a)) (P_j(b|y) - p_j(b)).
  // Centring first keeps the marginal sums at rounding level.
  Matrix d(labels, labels);
  for (std::size_t y = 0; y < l; ++y)
    for (std::size_t a = 0; a < labels; ++a) {
      const double da = channel_i(y, a) - marg_i[a];
      for (std::size_t b = 0; b < labels; ++b) d(a, b) += prior[y] * da * (channel_j(y, b) - marg_j[b]);
    }
  return DeltaMatrix(std::move(d), DeltaProvenance::kAnalytic);
}

DeltaMatrix analytic_delta(const SignalWorld& world, std::size_t i, std::size_t j) {
  return analytic_delta(world.prior(), world.client(i).confusion, world.client(j).confusion);
}

DeltaMatrix empirical_delta(std::span<const Label> reports_i, std::span<const Label> reports_j,
                            std::size_t labels) {
  if (reports_i.size() != reports_j.size()) {
    throw Error(Errc::kLengthMismatch, "report vectors differ in length");
  }
  if (reports_i.empty()) throw Error(Errc::kLengthMismatch, "empirical delta needs m >= 1");
  static_cast<void>(LabelSpace(labels));
  const std::size_t m = reports_i.size();
  std::vector<std::int64_t> joint(labels * labels, 0);
  for (std::size_t k = 0; k < m; ++k) {
    const Label a = reports_i[k];
    const Label b = reports_j[k];
    if (a >= labels || b >= labels) throw Error(Errc::kInvalidArgument, "report label outside [0, L)");
    ++joint[a * labels + b];
  }
  std::vector<std::int64_t> row(labels, 0), col(labels, 0);
  for (std::size_t a = 0; a < labels; ++a)
    for (std::size_t b = 0; b < labels; ++b) {
      row[a] += joint[a * labels + b];
      col[b] += joint[a * labels + b];
    }
  // Delta = (m * n_ab - n_a. n_.b) / m^2; numerators are exact integers with
  // zero row and column sums.
  const auto mm = static_cast<std::int64_t>(m);
  const double denom = static_cast<double>(m) * static_cast<double>(m);
  Matrix d(labels, labels);
  for (std::size_t a = 0; a < labels; ++a)
    for (std::size_t b = 0; b < labels; ++b) {
      const std::int64_t num = mm * joint[a * labels + b] - row[a] * col[b];
      d(a, b) = static_cast<double>(num) / denom;
    }
  return DeltaMatrix(std::move(d), DeltaProvenance::kEmpirical, m);
}

CategoricalVerdict check_categorical(const DeltaMatrix& delta) {
  CategoricalVerdict v;
  v.min_diagonal = std::numeric_limits<double>::infinity();
  v.max_offdiagonal = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < delta.size(); ++a)
    for (std::size_t b = 0; b < delta.size(); ++b) {
      const double x = delta(a, b);
      if (a == b) {
        v.min_diagonal = std::min(v.min_diagonal, x);
        if (!(x > 0.0)) v.violating_entries.emplace_back(a, b);
      } else {
        v.max_offdiagonal = std::max(v.max_offdiagonal, x);
        if (!(x < 0.0)) v.violating_entries.emplace_back(a, b);
      }
    }
  v.holds = v.min_diagonal > 0.0 && v.max_offdiagonal < 0.0;
  return v;
}

DeltaMatrix shirk_scale(const DeltaMatrix& delta_inf, double eta1, double eta2) {
  if (!(eta1 >= 0.0 && eta1 <= 1.0 && eta2 >= 0.0 && eta2 <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "effort probabilities must lie in [0, 1]");
  }
  return DeltaMatrix(delta_inf.entries().scaled(eta1 * eta2), delta_inf.provenance(),
                     delta_inf.sample_count(), delta_inf.gamma());
}

DeltaMatrix regularize(const DeltaMatrix& delta, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(Errc::kInvalidGamma, "gamma must lie in (0, 1)");
  Matrix out = delta.entries();
  for (std::size_t a = 0; a < out.rows(); ++a)
    for (std::size_t b = 0; b < out.cols(); ++b) {
      const double x = out(a, b);
      out(a, b) = x == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(x), gamma), x);
    }
  return DeltaMatrix(std::move(out), DeltaProvenance::kRegularized, delta.sample_count(), gamma);
}

std::vector<Label> sign_quantize(std::span<const double> update) {
  std::vector<Label> out(update.size());
  for (std::size_t p = 0; p < update.size(); ++p) out[p] = update[p] < 0.0 ? 0 : 1;
  return out;
}

std::vector<Label> map_relabel(const Matrix& posteriors) {
  std::vector<Label> out(posteriors.rows());
  for (std::size_t k = 0; k < posteriors.rows(); ++k) {
    const auto row = posteriors.row(k);
    try {
      require_probability_vector(row, 1e-9, "posterior");
    } catch (const Error& e) {
      throw Error(Errc::kInvalidPosterior, "task " + std::to_string(k) + ": " + e.what());
    }
    // max_element returns the first maximum, i.e. the lowest label on ties.
    out[k] = static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<double> signal_posterior(std::span<const double> prior, const Matrix& channel, Label signal) {
  std::vector<double> post(prior.size());
  double total = 0.0;
  for (std::size_t a = 0; a < prior.size(); ++a) {
    post[a] = prior[a] * channel(a, signal);
    total += post[a];
  }
  if (!(total > 0.0)) throw Error(Errc::kInvalidPosterior, "signal has zero probability under every state");
  for (double& p : post) p /= total;
  return post;
}

}  // namespace kfca
