#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kfca {

// Labels are 0-based indices into [0, L).
using Label = std::uint32_t;

enum class Errc {
  kInvalidArgument,
  kLengthMismatch,
  kInvalidConcentration,
  kInvalidGamma,
  kInvalidPosterior,
  kTooFewTasks,
  kNotEnoughPeers,
  kLabelSpaceTooLarge,
  kInvalidAlpha,
  kNotCategorical,
  kTooManyClients,
  kZeroVector,
  kDegenerateRewards,
  kConfig,
  kIo,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Dense row-major matrix. Sized for L x L label tables, not for linear algebra.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transpose() const;
  Matrix operator*(const Matrix& rhs) const;
  Matrix scaled(double factor) const;

  double row_sum(std::size_t r) const;
  double col_sum(std::size_t c) const;
  double max_abs_diff(const Matrix& other) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Throws kInvalidArgument unless entries are >= 0 and sum to 1 within tol.
void require_probability_vector(std::span<const double> p, double tol, std::string_view what);

// Throws kInvalidArgument unless every row is a probability vector.
void require_row_stochastic(const Matrix& m, double tol, std::string_view what);

// Shortest round-trip decimal rendering; used by every CSV writer.
std::string format_double(double value);

}  // namespace kfca
