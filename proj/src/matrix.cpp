#include "causarc/matrix.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace causarc {

Matrix::Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
  if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dims");
}

Matrix::Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != static_cast<size_t>(r) * c)
    throw std::invalid_argument("Matrix: data size does not match dims");
}

Matrix Matrix::full(int r, int c, double v) {
  Matrix m(r, c);
  for (auto& x : m.data) x = v;
  return m;
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rs) {
  int r = static_cast<int>(rs.size());
  int c = r == 0 ? 0 : static_cast<int>(rs.begin()->size());
  Matrix m(r, c);
  int i = 0;
  for (const auto& row : rs) {
    if (static_cast<int>(row.size()) != c) throw std::invalid_argument("from_rows: ragged rows");
    int j = 0;
    for (double v : row) m.at(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dims differ");
  Matrix c(a.rows, b.cols);
  // ikj order so the inner loop streams over contiguous rows of b and c
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int k = 0; k < a.cols; ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

static void check_same(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

Matrix add(const Matrix& a, const Matrix& b) {
  check_same(a, b, "add");
  Matrix c = a;
  for (size_t i = 0; i < c.size(); ++i) c.data[i] += b.data[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  check_same(a, b, "sub");
  Matrix c = a;
  for (size_t i = 0; i < c.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  check_same(a, b, "hadamard");
  Matrix c = a;
  for (size_t i = 0; i < c.size(); ++i) c.data[i] *= b.data[i];
  return c;
}

Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (auto& v : c.data) v *= s;
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  check_same(a, b, "max_abs_diff");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace causarc
