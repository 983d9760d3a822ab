#include "kfca/common.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace kfca {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kInvalidConcentration: return "InvalidConcentration";
    case Errc::kInvalidGamma: return "InvalidGamma";
    case Errc::kInvalidPosterior: return "InvalidPosterior";
    case Errc::kTooFewTasks: return "TooFewTasks";
    case Errc::kNotEnoughPeers: return "NotEnoughPeers";
    case Errc::kLabelSpaceTooLarge: return "LabelSpaceTooLarge";
    case Errc::kInvalidAlpha: return "InvalidAlpha";
    case Errc::kNotCategorical: return "NotCategorical";
    case Errc::kTooManyClients: return "TooManyClients";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kDegenerateRewards: return "DegenerateRewards";
    case Errc::kConfig: return "ConfigError";
    case Errc::kIo: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(Errc::kLengthMismatch, "matrix data does not match its shape");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw Error(Errc::kLengthMismatch, "ragged matrix rows");
    }
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  if (cols_ != rhs.rows_) throw Error(Errc::kLengthMismatch, "matrix product shape");
  Matrix out(rows_, rhs.cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(r, k);
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < rhs.cols_; ++c) out(r, c) += a * rhs(k, c);
    }
  return out;
}

Matrix Matrix::scaled(double factor) const {
  Matrix out = *this;
  for (double& v : out.data_) v *= factor;
  return out;
}

double Matrix::row_sum(std::size_t r) const {
  double s = 0.0;
  for (double v : row(r)) s += v;
  return s;
}

double Matrix::col_sum(std::size_t c) const {
  double s = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) s += (*this)(r, c);
  return s;
}

double Matrix::max_abs_diff(const Matrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw Error(Errc::kLengthMismatch, "matrix comparison shape");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    worst = std::max(worst, std::abs(data_[i] - other.data_[i]));
  }
  return worst;
}

void require_probability_vector(std::span<const double> p, double tol, std::string_view what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) {
      throw Error(Errc::kInvalidArgument, std::string(what) + " has a negative entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol) {
    std::ostringstream os;
    os << what << " sums to " << sum << ", expected 1";
    throw Error(Errc::kInvalidArgument, os.str());
  }
}

void require_row_stochastic(const Matrix& m, double tol, std::string_view what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    require_probability_vector(m.row(r), tol, std::string(what) + " row " + std::to_string(r));
  }
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

}  // namespace kfca
