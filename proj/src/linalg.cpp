#include "dissect/linalg.hpp"

#include <cassert>
#include <cmath>

namespace dissect {

double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void matvec(const Matrix& m, std::span<const double> x, std::span<double> out) {
  assert(x.size() == m.cols && out.size() == m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = &m.a[r * m.cols];
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

void matvec_transpose(const Matrix& m, std::span<const double> y, std::span<double> out) {
  assert(y.size() == m.rows && out.size() == m.cols);
  for (std::size_t c = 0; c < m.cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = &m.a[r * m.cols];
    const double yr = y[r];
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c] * yr;
  }
}

void add_outer(Matrix& m, std::span<const double> u, std::span<const double> v) {
  assert(u.size() == m.rows && v.size() == m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* row = &m.a[r * m.cols];
    const double ur = u[r];
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += ur * v[c];
  }
}

void axpy(double s, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

bool all_finite(const Matrix& m) {
  for (double v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace dissect
