#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kfca/common.hpp"
#include "kfca/signal_world.hpp"

namespace kfca {

enum class DeltaProvenance { kAnalytic, kEmpirical, kRegularized };

std::string_view to_string(DeltaProvenance p);

// Delta(a, b) = P(Z1 = a, Z2 = b) - P(Z1 = a) P(Z2 = b).
//
// Analytic and empirical deltas have zero row and column sums. Regularized
// deltas are a sign-preserving power transform of one of those and are not
// re-centred, so the zero-marginal property does not hold for them.
class DeltaMatrix {
 public:
  DeltaMatrix(Matrix entries, DeltaProvenance provenance, std::size_t sample_count = 0, double gamma = 0.0);

  std::size_t size() const noexcept { return entries_.rows(); }
  double operator()(std::size_t a, std::size_t b) const { return entries_(a, b); }
  const Matrix& entries() const noexcept { return entries_; }
  DeltaProvenance provenance() const noexcept { return provenance_; }
  std::size_t sample_count() const noexcept { return sample_count_; }
  double gamma() const noexcept { return gamma_; }

  // Largest |row sum| or |column sum|.
  double max_marginal_error() const;
  DeltaMatrix transpose() const;

 private:
  Matrix entries_;
  DeltaProvenance provenance_;
  std::size_t sample_count_;
  double gamma_;
};

struct CategoricalVerdict {
  bool holds = false;
  double min_diagonal = 0.0;
  double max_offdiagonal = 0.0;
  std::vector<std::pair<Label, Label>> violating_entries;
};

// Full-effort delta between clients i and j of a world. Apply shirk_scale for
// partial effort.
DeltaMatrix analytic_delta(const SignalWorld& world, std::size_t i, std::size_t j);

// Same, for explicit prior and channels (rows y, columns a).
DeltaMatrix analytic_delta(std::span<const double> prior, const Matrix& channel_i, const Matrix& channel_j);

// Exact integer joint counts, divided once. Throws kLengthMismatch.
DeltaMatrix empirical_delta(std::span<const Label> reports_i, std::span<const Label> reports_j,
                            std::size_t labels);

CategoricalVerdict check_categorical(const DeltaMatrix& delta);

// eta1 * eta2 * delta_inf.
DeltaMatrix shirk_scale(const DeltaMatrix& delta_inf, double eta1, double eta2);

// sign(d) |d|^gamma entrywise, gamma in (0, 1). Throws kInvalidGamma.
DeltaMatrix regularize(const DeltaMatrix& delta, double gamma);

// Coordinate-wise sign over the {-1, +1} alphabet stored as labels {0, 1}.
// Zero maps to +1 (label 1).
std::vector<Label> sign_quantize(std::span<const double> update);

// MAP relabelling of per-task posteriors (rows). Ties break to the lowest
// label. Throws kInvalidPosterior when a row is not a probability vector.
std::vector<Label> map_relabel(const Matrix& posteriors);

// Posterior P(Y = a | Z = z) proportional to prior(a) * channel(a, z).
std::vector<double> signal_posterior(std::span<const double> prior, const Matrix& channel, Label signal);

}  // namespace kfca
