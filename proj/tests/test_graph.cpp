#include <cmath>
#include <functional>

#include "doctest.h"

#include "causarc/graph.hpp"
#include "causarc/rng.hpp"

using namespace causarc;

namespace {

Matrix random_matrix(int r, int c, RngStream& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.data) v = scale * rng.normal();
  return m;
}

// Central finite differences against the tape gradient for a scalar-valued
// builder. The builder must be a pure function of the input matrix.
void fd_check(const Matrix& x0, const std::function<Var(Tape&, Var)>& build, double tol = 1e-6) {
  // gradients only flow to Param-bound leafs, so bind the probe to one
  Param px{"x", ParamGroup::kNew, x0, Matrix(x0.rows, x0.cols)};
  Tape t;
  Var x = t.param(px);
  Var y = build(t, x);
  REQUIRE(t.val(y).rows == 1);
  REQUIRE(t.val(y).cols == 1);
  t.backward(y);
  Matrix g = t.grad_of(x);

  const double h = 1e-5;
  for (size_t i = 0; i < x0.data.size(); ++i) {
    Matrix xp = x0, xm = x0;
    xp.data[i] += h;
    xm.data[i] -= h;
    Tape tp(false), tm(false);
    double fp = tp.val(build(tp, tp.input(xp))).data[0];
    double fm = tm.val(build(tm, tm.input(xm))).data[0];
    double num = (fp - fm) / (2.0 * h);
    double scale = std::max({1.0, std::fabs(num), std::fabs(g.data[i])});
    CHECK(std::fabs(num - g.data[i]) / scale < tol);
  }
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("matrix multiply hand values") {
  Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
  Matrix b(3, 2, {7, 8, 9, 10, 11, 12});
  Matrix c = matmul(a, b);
  CHECK(c.at(0, 0) == 58);
  CHECK(c.at(0, 1) == 64);
  CHECK(c.at(1, 0) == 139);
  CHECK(c.at(1, 1) == 154);
  Matrix i = Matrix::identity(3);
  CHECK(max_abs_diff(matmul(i, b), b) == 0.0);
  CHECK(max_abs_diff(transpose(transpose(a)), a) == 0.0);
}

TEST_CASE("broadcast add and mul values") {
  Matrix x(2, 3, {1, 2, 3, 4, 5, 6});
  Matrix row(1, 3, {10, 20, 30});
  Matrix col(2, 1, {100, 200});
  Matrix one(1, 1, {7});
  Tape t;
  CHECK(t.val(t.add(t.input(x), t.input(row))).at(1, 2) == 36);
  CHECK(t.val(t.add(t.input(x), t.input(col))).at(1, 0) == 204);
  CHECK(t.val(t.add(t.input(x), t.input(one))).at(0, 0) == 8);
  CHECK(t.val(t.mul(t.input(x), t.input(row))).at(0, 1) == 40);
  CHECK(t.val(t.mul(t.input(x), t.input(col))).at(1, 2) == 1200);
}

TEST_CASE("finite differences across the op set") {
  RngStream rng(101);
  Matrix x = random_matrix(3, 4, rng);
  Matrix w = random_matrix(4, 2, rng);
  Matrix c34 = random_matrix(3, 4, rng);
  Matrix row = random_matrix(1, 4, rng);
  Matrix col = random_matrix(3, 1, rng);

  fd_check(x, [&](Tape& t, Var v) { return t.sum_all(t.matmul(v, t.input(w))); });
  fd_check(w, [&](Tape& t, Var v) { return t.sum_all(t.matmul(t.input(x), v)); });
  fd_check(x, [&](Tape& t, Var v) { return t.mean_all(t.mul(v, t.input(c34))); });
  fd_check(x, [&](Tape& t, Var v) { return t.sum_all(t.sub(t.input(c34), v)); });
  fd_check(row, [&](Tape& t, Var v) { return t.sum_all(t.mul(t.add(t.input(x), v), t.input(c34))); });
  fd_check(col, [&](Tape& t, Var v) { return t.sum_all(t.mul(t.mul(t.input(x), v), t.input(c34))); });
  fd_check(x, [&](Tape& t, Var v) { return t.sum_all(t.mul(t.sigmoid(v), t.input(c34))); });
  fd_check(x, [&](Tape& t, Var v) { return t.sum_all(t.mul(t.tanh_(v), t.input(c34))); });
  fd_check(x, [&](Tape& t, Var v) { return t.sum_all(t.mul(t.exp_(t.scale(v, 0.5)), t.input(c34))); });
  fd_check(x, [&](Tape& t, Var v) {
    return t.sum_all(t.mul(t.log_(t.add_scalar(t.exp_(v), 1.0)), t.input(c34)));
  });
  fd_check(x, [&](Tape& t, Var v) { return t.sum_all(t.mul(t.softmax_rows(v), t.input(c34))); });
  fd_check(x, [&](Tape& t, Var v) {
    return t.sum_all(t.mul(t.log_softmax_rows(v), t.input(c34)));
  });
  Matrix c36 = random_matrix(3, 6, rng);
  Matrix c24 = random_matrix(2, 4, rng);
  fd_check(x, [&](Tape& t, Var v) {
    return t.sum_all(t.mul(t.concat_cols(v, t.slice_cols(v, 0, 2)), t.input(c36)));
  });
  fd_check(x, [&](Tape& t, Var v) { return t.sum_all(t.mul(t.mean_rows(v), t.input(row))); });
  fd_check(x, [&](Tape& t, Var v) { return t.pick(t.matmul(v, t.input(w)), 1, 1); });
  fd_check(x, [&](Tape& t, Var v) {
    return t.sum_all(t.mul(t.transpose(v), t.input(transpose(c34))));
  });
  fd_check(x, [&](Tape& t, Var v) {
    return t.sum_all(t.mul(t.slice_rows(v, 1, 3), t.input(c24)));
  });
}

TEST_CASE("finite differences through layer norm") {
  RngStream rng(55);
  Matrix x = random_matrix(3, 5, rng);
  Matrix gamma = random_matrix(1, 5, rng, 0.5);
  Matrix beta = random_matrix(1, 5, rng, 0.5);
  Matrix c = random_matrix(3, 5, rng);
  fd_check(x, [&](Tape& t, Var v) {
    return t.sum_all(t.mul(t.layer_norm(v, t.input(gamma), t.input(beta)), t.input(c)));
  });
  fd_check(gamma, [&](Tape& t, Var v) {
    return t.sum_all(t.mul(t.layer_norm(t.input(x), v, t.input(beta)), t.input(c)));
  });
  fd_check(beta, [&](Tape& t, Var v) {
    return t.sum_all(t.mul(t.layer_norm(t.input(x), t.input(gamma), v), t.input(c)));
  });
}

TEST_CASE("finite differences through masked nll and clamp") {
  RngStream rng(77);
  Matrix lp = random_matrix(4, 6, rng);
  std::vector<int> targets{1, 3, 0, 5};
  std::vector<double> weights{1, 1, 0, 1};
  fd_check(lp, [&](Tape& t, Var v) {
    return t.masked_mean_nll(t.log_softmax_rows(v), targets, weights);
  });
  // clamp passes gradients through strictly inside the range
  Matrix x(1, 3, {-0.5, 0.2, 0.9});
  Matrix c(1, 3, {2.0, -1.0, 3.0});
  fd_check(x, [&](Tape& t, Var v) {
    return t.sum_all(t.mul(t.clamp(v, -1.0, 1.0), t.input(c)));
  });
  Tape t;
  Param pv{"v", ParamGroup::kNew, Matrix(1, 3, {-5.0, 0.0, 5.0}), Matrix(1, 3)};
  Var v = t.param(pv);
  Var y = t.sum_all(t.clamp(v, -1.0, 1.0));
  t.backward(y);
  CHECK(t.grad_of(v).at(0, 0) == 0.0);  // saturated entries block gradient
  CHECK(t.grad_of(v).at(0, 1) == 1.0);
  CHECK(t.grad_of(v).at(0, 2) == 0.0);
}

TEST_CASE("rows_of routes gradient only to used rows") {
  Matrix table(5, 3, std::vector<double>(15, 0.5));
  Param p{"emb", ParamGroup::kBase, table, Matrix(5, 3)};
  Tape t;
  Var rows = t.rows_of(t.param(p), {1, 3, 1});
  t.backward(t.sum_all(rows));
  for (int c = 0; c < 3; ++c) {
    CHECK(p.grad.at(0, c) == 0.0);
    CHECK(p.grad.at(1, c) == 2.0);  // gathered twice
    CHECK(p.grad.at(2, c) == 0.0);
    CHECK(p.grad.at(3, c) == 1.0);
    CHECK(p.grad.at(4, c) == 0.0);
  }
}

TEST_CASE("reusing a parameter accumulates its gradient") {
  Param p{"w", ParamGroup::kNew, Matrix(1, 1, {3.0}), Matrix(1, 1)};
  Tape t;
  Var w = t.param(p);
  Var w2 = t.param(p);
  CHECK(w.i == w2.i);  // cached node
  // y = w * w + 2w -> dy/dw = 2w + 2 = 8
  Var y = t.add(t.mul(w, w2), t.scale(w, 2.0));
  t.backward(t.sum_all(y));
  CHECK(p.grad.at(0, 0) == doctest::Approx(8.0));
}

TEST_CASE("concat_rows splits gradient by block") {
  Tape t;
  Param pa{"a", ParamGroup::kNew, Matrix(1, 2, {1, 2}), Matrix(1, 2)};
  Param pb{"b", ParamGroup::kNew, Matrix(2, 2, {3, 4, 5, 6}), Matrix(2, 2)};
  Var a = t.param(pa);
  Var b = t.param(pb);
  Var cr = t.concat_rows({a, b});
  CHECK(t.val(cr).rows == 3);
  Matrix m(3, 2, {1, 0, 0, 2, 0, 0});
  t.backward(t.sum_all(t.mul(cr, t.input(m))));
  CHECK(t.grad_of(a).at(0, 0) == 1.0);
  CHECK(t.grad_of(a).at(0, 1) == 0.0);
  CHECK(t.grad_of(b).at(0, 1) == 2.0);
  CHECK(t.grad_of(b).at(1, 0) == 0.0);
}

TEST_CASE("softmax rows sum to one and respect masks") {
  RngStream rng(5);
  Tape t(false);
  Var s = t.softmax_rows(t.input(random_matrix(4, 7, rng)));
  for (int r = 0; r < 4; ++r) {
    double sum = 0;
    for (int c = 0; c < 7; ++c) sum += t.val(s).at(r, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  Matrix mask(2, 2, {0.0, -1e9, 0.0, 0.0});
  Var ms = t.softmax_rows(t.input(Matrix(2, 2, {1.0, 5.0, 1.0, 1.0})), &mask);
  CHECK(t.val(ms).at(0, 0) == doctest::Approx(1.0));
  CHECK(t.val(ms).at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("non-tracking tape still computes values") {
  Tape t(false);
  Var x = t.input(Matrix(1, 2, {1.0, 2.0}));
  Var y = t.sum_all(t.mul(x, x));
  CHECK(t.val(y).at(0, 0) == doctest::Approx(5.0));
}

}  // TEST_SUITE
