#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dissect {

// Dense row-major matrix of doubles. Sizes in this project are tiny
// (<= a few hundred per side), so plain loops are all we need.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  bool empty() const { return a.empty(); }
  std::size_t size() const { return a.size(); }

  void fill(double v) { a.assign(a.size(), v); }
};

double dot(std::span<const double> x, std::span<const double> y);

// out = m * x
void matvec(const Matrix& m, std::span<const double> x, std::span<double> out);

// out = m^T * y
void matvec_transpose(const Matrix& m, std::span<const double> y, std::span<double> out);

// m += u * v^T
void add_outer(Matrix& m, std::span<const double> u, std::span<const double> v);

// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);

bool all_finite(const Matrix& m);

}  // namespace dissect
