#include "causarc/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace causarc {

namespace {

constexpr double kLnEps = 1e-5;  // layer_norm variance floor

void check_broadcast(const Matrix& a, const Matrix& b, const char* op) {
  bool rows_ok = b.rows == a.rows || b.rows == 1;
  bool cols_ok = b.cols == a.cols || b.cols == 1;
  if (!rows_ok || !cols_ok) throw std::invalid_argument(std::string(op) + ": incompatible shapes");
}

// Accumulates src (shaped like a) into dst (shaped like the broadcast operand).
void reduce_into(Matrix& dst, const Matrix& src) {
  for (int i = 0; i < src.rows; ++i)
    for (int j = 0; j < src.cols; ++j)
      dst.at(dst.rows == 1 ? 0 : i, dst.cols == 1 ? 0 : j) += src.at(i, j);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

int Tape::push(Matrix v, bool needs_grad) {
  Node n;
  n.value = std::move(v);
  n.needs_grad = track_ && needs_grad;
  if (n.needs_grad) n.grad = Matrix(n.value.rows, n.value.cols);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::input(Matrix v) { return {push(std::move(v), false)}; }

Var Tape::param(Param& p) {
  auto it = param_cache_.find(&p);
  if (it != param_cache_.end()) return {it->second};
  int i = push(p.value, true);
  nodes_[i].bound = &p;
  param_cache_[&p] = i;
  return {i};
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = v(a.i);
  const Matrix& B = v(b.i);
  int out = push(causarc::matmul(A, B), wants(a) || wants(b));
  if (nodes_[out].needs_grad) {
    int ai = a.i, bi = b.i;
    nodes_[out].back = [this, ai, bi, out]() {
      const Matrix& go = g(out);
      if (nodes_[ai].needs_grad) {
        Matrix da = causarc::matmul(go, causarc::transpose(v(bi)));
        reduce_into(g(ai), da);
      }
      if (nodes_[bi].needs_grad) {
        Matrix db = causarc::matmul(causarc::transpose(v(ai)), go);
        reduce_into(g(bi), db);
      }
    };
  }
  return {out};
}

Var Tape::add(Var a, Var b) {
  const Matrix& A = v(a.i);
  const Matrix& B = v(b.i);
  check_broadcast(A, B, "add");
  Matrix c = A;
  for (int i = 0; i < c.rows; ++i)
    for (int j = 0; j < c.cols; ++j)
      c.at(i, j) += B.at(B.rows == 1 ? 0 : i, B.cols == 1 ? 0 : j);
  int out = push(std::move(c), wants(a) || wants(b));
  if (nodes_[out].needs_grad) {
    int ai = a.i, bi = b.i;
    nodes_[out].back = [this, ai, bi, out]() {
      if (nodes_[ai].needs_grad) reduce_into(g(ai), g(out));
      if (nodes_[bi].needs_grad) reduce_into(g(bi), g(out));
    };
  }
  return {out};
}

Var Tape::sub(Var a, Var b) {
  const Matrix& A = v(a.i);
  const Matrix& B = v(b.i);
  check_broadcast(A, B, "sub");
  Matrix c = A;
  for (int i = 0; i < c.rows; ++i)
    for (int j = 0; j < c.cols; ++j)
      c.at(i, j) -= B.at(B.rows == 1 ? 0 : i, B.cols == 1 ? 0 : j);
  int out = push(std::move(c), wants(a) || wants(b));
  if (nodes_[out].needs_grad) {
    int ai = a.i, bi = b.i;
    nodes_[out].back = [this, ai, bi, out]() {
      if (nodes_[ai].needs_grad) reduce_into(g(ai), g(out));
      if (nodes_[bi].needs_grad) {
        Matrix neg = causarc::scale(g(out), -1.0);
        reduce_into(g(bi), neg);
      }
    };
  }
  return {out};
}

Var Tape::mul(Var a, Var b) {
  const Matrix& A = v(a.i);
  const Matrix& B = v(b.i);
  check_broadcast(A, B, "mul");
  Matrix c = A;
  for (int i = 0; i < c.rows; ++i)
    for (int j = 0; j < c.cols; ++j)
      c.at(i, j) *= B.at(B.rows == 1 ? 0 : i, B.cols == 1 ? 0 : j);
  int out = push(std::move(c), wants(a) || wants(b));
  if (nodes_[out].needs_grad) {
    int ai = a.i, bi = b.i;
    nodes_[out].back = [this, ai, bi, out]() {
      const Matrix& go = g(out);
      const Matrix& A2 = v(ai);
      const Matrix& B2 = v(bi);
      if (nodes_[ai].needs_grad) {
        Matrix da = go;
        for (int i = 0; i < da.rows; ++i)
          for (int j = 0; j < da.cols; ++j)
            da.at(i, j) *= B2.at(B2.rows == 1 ? 0 : i, B2.cols == 1 ? 0 : j);
        reduce_into(g(ai), da);
      }
      if (nodes_[bi].needs_grad) {
        Matrix db = go;
        for (int i = 0; i < db.rows; ++i)
          for (int j = 0; j < db.cols; ++j) db.at(i, j) *= A2.at(i, j);
        reduce_into(g(bi), db);
      }
    };
  }
  return {out};
}

Var Tape::scale(Var a, double s) {
  int out = push(causarc::scale(v(a.i), s), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out, s]() {
      Matrix da = causarc::scale(g(out), s);
      reduce_into(g(ai), da);
    };
  }
  return {out};
}

Var Tape::add_scalar(Var a, double s) {
  Matrix c = v(a.i);
  for (auto& x : c.data) x += s;
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out]() { reduce_into(g(ai), g(out)); };
  }
  return {out};
}

Var Tape::sigmoid(Var a) {
  Matrix c = v(a.i);
  for (auto& x : c.data) x = stable_sigmoid(x);
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out]() {
      const Matrix& y = v(out);
      const Matrix& go = g(out);
      Matrix& da = g(ai);
      for (size_t i = 0; i < y.size(); ++i)
        da.data[i] += go.data[i] * y.data[i] * (1.0 - y.data[i]);
    };
  }
  return {out};
}

Var Tape::tanh_(Var a) {
  Matrix c = v(a.i);
  for (auto& x : c.data) x = std::tanh(x);
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out]() {
      const Matrix& y = v(out);
      const Matrix& go = g(out);
      Matrix& da = g(ai);
      for (size_t i = 0; i < y.size(); ++i)
        da.data[i] += go.data[i] * (1.0 - y.data[i] * y.data[i]);
    };
  }
  return {out};
}

Var Tape::exp_(Var a) {
  Matrix c = v(a.i);
  for (auto& x : c.data) x = std::exp(x);
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out]() {
      const Matrix& y = v(out);
      const Matrix& go = g(out);
      Matrix& da = g(ai);
      for (size_t i = 0; i < y.size(); ++i) da.data[i] += go.data[i] * y.data[i];
    };
  }
  return {out};
}

Var Tape::log_(Var a) {
  Matrix c = v(a.i);
  for (auto& x : c.data) x = std::log(x);
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out]() {
      const Matrix& x = v(ai);
      const Matrix& go = g(out);
      Matrix& da = g(ai);
      for (size_t i = 0; i < x.size(); ++i) da.data[i] += go.data[i] / x.data[i];
    };
  }
  return {out};
}

Var Tape::clamp(Var a, double lo, double hi) {
  Matrix c = v(a.i);
  for (auto& x : c.data) x = x < lo ? lo : (x > hi ? hi : x);
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out, lo, hi]() {
      const Matrix& x = v(ai);
      const Matrix& go = g(out);
      Matrix& da = g(ai);
      for (size_t i = 0; i < x.size(); ++i)
        if (x.data[i] > lo && x.data[i] < hi) da.data[i] += go.data[i];
    };
  }
  return {out};
}

Var Tape::softmax_rows(Var a, const Matrix* add_mask) {
  Matrix c = v(a.i);
  if (add_mask) {
    if (!add_mask->same_shape(c)) throw std::invalid_argument("softmax_rows: mask shape");
    for (size_t i = 0; i < c.size(); ++i) c.data[i] += add_mask->data[i];
  }
  for (int i = 0; i < c.rows; ++i) {
    double* row = c.row_ptr(i);
    double mx = row[0];
    for (int j = 1; j < c.cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < c.cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int j = 0; j < c.cols; ++j) row[j] /= sum;
  }
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out]() {
      const Matrix& y = v(out);
      const Matrix& go = g(out);
      Matrix& da = g(ai);
      for (int i = 0; i < y.rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < y.cols; ++j) dot += go.at(i, j) * y.at(i, j);
        for (int j = 0; j < y.cols; ++j)
          da.at(i, j) += y.at(i, j) * (go.at(i, j) - dot);
      }
    };
  }
  return {out};
}

Var Tape::log_softmax_rows(Var a, const Matrix* add_mask) {
  Matrix c = v(a.i);
  if (add_mask) {
    if (!add_mask->same_shape(c)) throw std::invalid_argument("log_softmax_rows: mask shape");
    for (size_t i = 0; i < c.size(); ++i) c.data[i] += add_mask->data[i];
  }
  for (int i = 0; i < c.rows; ++i) {
    double* row = c.row_ptr(i);
    double mx = row[0];
    for (int j = 1; j < c.cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < c.cols; ++j) sum += std::exp(row[j] - mx);
    double lse = mx + std::log(sum);
    for (int j = 0; j < c.cols; ++j) row[j] -= lse;
  }
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out]() {
      const Matrix& y = v(out);  // log-probs
      const Matrix& go = g(out);
      Matrix& da = g(ai);
      for (int i = 0; i < y.rows; ++i) {
        double gsum = 0.0;
        for (int j = 0; j < y.cols; ++j) gsum += go.at(i, j);
        for (int j = 0; j < y.cols; ++j)
          da.at(i, j) += go.at(i, j) - std::exp(y.at(i, j)) * gsum;
      }
    };
  }
  return {out};
}

Var Tape::layer_norm(Var x, Var gamma, Var beta) {
  const Matrix& X = v(x.i);
  const Matrix& G = v(gamma.i);
  const Matrix& B = v(beta.i);
  if (G.rows != 1 || G.cols != X.cols || B.rows != 1 || B.cols != X.cols)
    throw std::invalid_argument("layer_norm: gamma/beta must be 1 x cols");
  int C = X.cols;
  Matrix z(X.rows, C);   // normalized rows, kept for backward
  Matrix istd(X.rows, 1);
  Matrix y(X.rows, C);
  for (int i = 0; i < X.rows; ++i) {
    double mu = 0.0;
    for (int j = 0; j < C; ++j) mu += X.at(i, j);
    mu /= C;
    double var = 0.0;
    for (int j = 0; j < C; ++j) {
      double d = X.at(i, j) - mu;
      var += d * d;
    }
    var /= C;
    double is = 1.0 / std::sqrt(var + kLnEps);
    istd.at(i, 0) = is;
    for (int j = 0; j < C; ++j) {
      z.at(i, j) = (X.at(i, j) - mu) * is;
      y.at(i, j) = z.at(i, j) * G.at(0, j) + B.at(0, j);
    }
  }
  bool ng = wants(x) || wants(gamma) || wants(beta);
  int out = push(std::move(y), ng);
  if (nodes_[out].needs_grad) {
    int xi = x.i, gi = gamma.i, bi = beta.i;
    auto zc = std::make_shared<Matrix>(std::move(z));
    auto ic = std::make_shared<Matrix>(std::move(istd));
    nodes_[out].back = [this, xi, gi, bi, out, zc, ic]() {
      const Matrix& go = g(out);
      const Matrix& G2 = v(gi);
      int C = go.cols;
      if (nodes_[gi].needs_grad || nodes_[bi].needs_grad) {
        for (int i = 0; i < go.rows; ++i)
          for (int j = 0; j < C; ++j) {
            if (nodes_[gi].needs_grad) g(gi).at(0, j) += go.at(i, j) * zc->at(i, j);
            if (nodes_[bi].needs_grad) g(bi).at(0, j) += go.at(i, j);
          }
      }
      if (nodes_[xi].needs_grad) {
        Matrix& dx = g(xi);
        for (int i = 0; i < go.rows; ++i) {
          double mean_dz = 0.0, mean_dzz = 0.0;
          for (int j = 0; j < C; ++j) {
            double dz = go.at(i, j) * G2.at(0, j);
            mean_dz += dz;
            mean_dzz += dz * zc->at(i, j);
          }
          mean_dz /= C;
          mean_dzz /= C;
          double is = ic->at(i, 0);
          for (int j = 0; j < C; ++j) {
            double dz = go.at(i, j) * G2.at(0, j);
            dx.at(i, j) += is * (dz - mean_dz - zc->at(i, j) * mean_dzz);
          }
        }
      }
    };
  }
  return {out};
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& A = v(a.i);
  const Matrix& B = v(b.i);
  if (A.rows != B.rows) throw std::invalid_argument("concat_cols: row mismatch");
  Matrix c(A.rows, A.cols + B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) c.at(i, j) = A.at(i, j);
    for (int j = 0; j < B.cols; ++j) c.at(i, A.cols + j) = B.at(i, j);
  }
  int out = push(std::move(c), wants(a) || wants(b));
  if (nodes_[out].needs_grad) {
    int ai = a.i, bi = b.i;
    int ac = A.cols, bc = B.cols;
    nodes_[out].back = [this, ai, bi, out, ac, bc]() {
      const Matrix& go = g(out);
      for (int i = 0; i < go.rows; ++i) {
        if (nodes_[ai].needs_grad)
          for (int j = 0; j < ac; ++j) g(ai).at(i, j) += go.at(i, j);
        if (nodes_[bi].needs_grad)
          for (int j = 0; j < bc; ++j) g(bi).at(i, j) += go.at(i, ac + j);
      }
    };
  }
  return {out};
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  int cols = v(parts[0].i).cols;
  int rows = 0;
  bool ng = false;
  for (Var p : parts) {
    if (v(p.i).cols != cols) throw std::invalid_argument("concat_rows: col mismatch");
    rows += v(p.i).rows;
    ng = ng || wants(p);
  }
  Matrix c(rows, cols);
  int r = 0;
  for (Var p : parts) {
    const Matrix& P = v(p.i);
    for (int i = 0; i < P.rows; ++i, ++r)
      for (int j = 0; j < cols; ++j) c.at(r, j) = P.at(i, j);
  }
  int out = push(std::move(c), ng);
  if (nodes_[out].needs_grad) {
    std::vector<int> idx;
    for (Var p : parts) idx.push_back(p.i);
    nodes_[out].back = [this, idx, out]() {
      const Matrix& go = g(out);
      int r = 0;
      for (int pi : idx) {
        int pr = v(pi).rows;
        if (nodes_[pi].needs_grad) {
          for (int i = 0; i < pr; ++i)
            for (int j = 0; j < go.cols; ++j) g(pi).at(i, j) += go.at(r + i, j);
        }
        r += pr;
      }
    };
  }
  return {out};
}

Var Tape::slice_rows(Var a, int r0, int r1) {
  const Matrix& A = v(a.i);
  if (r0 < 0 || r1 > A.rows || r0 >= r1) throw std::invalid_argument("slice_rows: bad range");
  Matrix c(r1 - r0, A.cols);
  for (int i = r0; i < r1; ++i)
    for (int j = 0; j < A.cols; ++j) c.at(i - r0, j) = A.at(i, j);
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out, r0]() {
      const Matrix& go = g(out);
      for (int i = 0; i < go.rows; ++i)
        for (int j = 0; j < go.cols; ++j) g(ai).at(r0 + i, j) += go.at(i, j);
    };
  }
  return {out};
}

Var Tape::slice_cols(Var a, int c0, int c1) {
  const Matrix& A = v(a.i);
  if (c0 < 0 || c1 > A.cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
  Matrix c(A.rows, c1 - c0);
  for (int i = 0; i < A.rows; ++i)
    for (int j = c0; j < c1; ++j) c.at(i, j - c0) = A.at(i, j);
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out, c0]() {
      const Matrix& go = g(out);
      for (int i = 0; i < go.rows; ++i)
        for (int j = 0; j < go.cols; ++j) g(ai).at(i, c0 + j) += go.at(i, j);
    };
  }
  return {out};
}

Var Tape::mean_rows(Var a) {
  const Matrix& A = v(a.i);
  Matrix c(1, A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) c.at(0, j) += A.at(i, j);
  for (int j = 0; j < A.cols; ++j) c.at(0, j) /= A.rows;
  int out = push(std::move(c), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    int r = A.rows;
    nodes_[out].back = [this, ai, out, r]() {
      const Matrix& go = g(out);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < go.cols; ++j) g(ai).at(i, j) += go.at(0, j) / r;
    };
  }
  return {out};
}

Var Tape::sum_all(Var a) {
  const Matrix& A = v(a.i);
  double s = 0.0;
  for (double x : A.data) s += x;
  int out = push(Matrix(1, 1, {s}), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out]() {
      double go = g(out).at(0, 0);
      for (auto& x : g(ai).data) x += go;
    };
  }
  return {out};
}

Var Tape::mean_all(Var a) {
  const Matrix& A = v(a.i);
  double s = 0.0;
  for (double x : A.data) s += x;
  double n = static_cast<double>(A.size());
  int out = push(Matrix(1, 1, {s / n}), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out, n]() {
      double go = g(out).at(0, 0) / n;
      for (auto& x : g(ai).data) x += go;
    };
  }
  return {out};
}

Var Tape::transpose(Var a) {
  int out = push(causarc::transpose(v(a.i)), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out]() {
      Matrix da = causarc::transpose(g(out));
      reduce_into(g(ai), da);
    };
  }
  return {out};
}

Var Tape::rows_of(Var table, std::vector<int> ids) {
  const Matrix& T = v(table.i);
  Matrix c(static_cast<int>(ids.size()), T.cols);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= T.rows) throw std::invalid_argument("rows_of: id out of range");
    for (int j = 0; j < T.cols; ++j) c.at(static_cast<int>(i), j) = T.at(ids[i], j);
  }
  int out = push(std::move(c), wants(table));
  if (nodes_[out].needs_grad) {
    int ti = table.i;
    nodes_[out].back = [this, ti, out, ids]() {
      const Matrix& go = g(out);
      for (size_t i = 0; i < ids.size(); ++i)
        for (int j = 0; j < go.cols; ++j)
          g(ti).at(ids[i], j) += go.at(static_cast<int>(i), j);
    };
  }
  return {out};
}

Var Tape::pick(Var a, int r, int c) {
  const Matrix& A = v(a.i);
  if (r < 0 || r >= A.rows || c < 0 || c >= A.cols) throw std::invalid_argument("pick: out of range");
  int out = push(Matrix(1, 1, {A.at(r, c)}), wants(a));
  if (nodes_[out].needs_grad) {
    int ai = a.i;
    nodes_[out].back = [this, ai, out, r, c]() { g(ai).at(r, c) += g(out).at(0, 0); };
  }
  return {out};
}

Var Tape::masked_mean_nll(Var log_probs, std::vector<int> targets, std::vector<double> weights) {
  const Matrix& L = v(log_probs.i);
  if (static_cast<int>(targets.size()) != L.rows || weights.size() != targets.size())
    throw std::invalid_argument("masked_mean_nll: size mismatch");
  double wsum = 0.0, acc = 0.0;
  for (int i = 0; i < L.rows; ++i) {
    if (targets[i] < 0 || targets[i] >= L.cols)
      throw std::invalid_argument("masked_mean_nll: target out of range");
    wsum += weights[i];
    acc -= weights[i] * L.at(i, targets[i]);
  }
  if (wsum <= 0.0) throw std::invalid_argument("masked_mean_nll: all positions masked");
  int out = push(Matrix(1, 1, {acc / wsum}), wants(log_probs));
  if (nodes_[out].needs_grad) {
    int li = log_probs.i;
    nodes_[out].back = [this, li, out, targets, weights, wsum]() {
      double go = g(out).at(0, 0);
      for (size_t i = 0; i < targets.size(); ++i)
        g(li).at(static_cast<int>(i), targets[i]) -= go * weights[i] / wsum;
    };
  }
  return {out};
}

void Tape::backward(Var loss) {
  if (!track_) throw std::logic_error("backward on a non-tracking tape");
  Node& ln = node(loss);
  if (ln.value.rows != 1 || ln.value.cols != 1)
    throw std::invalid_argument("backward: loss must be 1x1");
  if (!ln.needs_grad) return;  // loss does not depend on any parameter
  ln.grad.at(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (nodes_[i].needs_grad && nodes_[i].back) nodes_[i].back();
  }
  for (auto& [p, idx] : param_cache_) {
    Param* pp = nodes_[idx].bound;
    const Matrix& gr = nodes_[idx].grad;
    if (pp->grad.size() != pp->value.size()) pp->zero_grad();
    for (size_t k = 0; k < gr.size(); ++k) pp->grad.data[k] += gr.data[k];
    (void)p;
  }
}

const Matrix& Tape::val(Var v_) const { return node(v_).value; }

const Matrix& Tape::grad_of(Var v_) const { return node(v_).grad; }

}  // namespace causarc
