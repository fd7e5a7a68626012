#include "hjbnn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hjbnn/error.hpp"

namespace hjbnn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

void require_finite(std::span<const double> values, const char* what) {
  if (!all_finite(values)) throw ParameterError(std::string(what) + ": non-finite entry");
}

// Returns a symmetrized copy, rejecting inputs whose asymmetry exceeds tolerance.
Matrix checked_symmetric(const Matrix& a) {
  if (!a.square()) throw DimensionError("symmetric eigensolver: matrix is not square");
  const std::size_t n = a.rows();
  const double tol = kSymmetryTolerance * std::max(1.0, max_abs(a));
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol)
        throw DimensionError("symmetric eigensolver: matrix is not symmetric");
      const double v = 0.5 * (a(i, j) + a(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

// Sorts eigenpairs descending. `vt` holds eigenvectors as rows.
EigenDecomposition sorted_descending(const std::vector<double>& values, const Matrix& vt) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
  EigenDecomposition out{Matrix(n, n), Vector(n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.eigenvalues[c] = values[src];
    for (std::size_t r = 0; r < n; ++r) out.u_matrix(r, c) = vt(src, r);
  }
  return out;
}

// Householder reduction to tridiagonal form (after the EISPACK tred2 routine),
// run on the transposed layout so inner loops walk contiguous rows. On return
// v holds the accumulated orthogonal transform transposed (eigenvectors of the
// tridiagonal problem map to rows), d the diagonal and e the subdiagonal in e[1..n-1].
void tridiagonalize(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = v.rows();
  for (std::size_t j = 0; j < n; ++j) d[j] = v(j, n - 1);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(j, i - 1);
        v(j, i) = 0.0;
        v(i, j) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(i, j) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k + 1 <= i; ++k) {
          g += v(j, k) * d[k];
          e[k] += v(j, k) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k + 1 <= i; ++k) v(j, k) -= (f * e[k] + g * d[k]);
        d[j] = v(j, i - 1);
        v(j, i) = 0.0;
      }
    }
    d[i] = h;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(i, n - 1) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(i + 1, k) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(i + 1, k) * v(j, k);
        for (std::size_t k = 0; k <= i; ++k) v(j, k) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(i + 1, k) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(j, n - 1);
    v(j, n - 1) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit-shift QL on the tridiagonal (d, e). `vt` holds the transform
// transposed so the plane rotations walk contiguous rows.
void tridiagonal_ql(Matrix& vt, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  const double machine_eps = std::ldexp(1.0, -52);
  const int max_iter = 60;
  double f = 0.0;
  double tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > machine_eps * tst1) ++m;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > max_iter) throw NumericError("sym_eig: QL iteration did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          auto lo = vt.row(ii);
          auto hi = vt.row(ii + 1);
          for (std::size_t k = 0; k < n; ++k) {
            const double vh = hi[k];
            hi[k] = s * lo[k] + c * vh;
            lo[k] = c * lo[k] - s * vh;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > machine_eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Vector / Matrix

Vector::Vector(std::size_t n, double fill) : data_(n, fill) {}

Vector::Vector(std::vector<double> values) : data_(std::move(values)) {
  require_finite(data_, "Vector");
}

Vector::Vector(std::initializer_list<double> values) : data_(values) {
  require_finite(data_, "Vector");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  require(data_.size() == rows * cols, "Matrix: entry count does not match rows x cols");
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

// ---------------------------------------------------------------------------
// Algebra

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "multiply: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Vector multiply(const Matrix& a, const Vector& x) {
  require(a.cols() == x.size(), "multiply: matrix columns differ from vector length");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector multiply_transposed(const Matrix& a, const Vector& x) {
  require(a.rows() == x.size(), "multiply_transposed: matrix rows differ from vector length");
  Vector y(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    auto ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += ai[j] * xi;
  }
  return y;
}

Matrix gram_rows(const Matrix& a) {
  const std::size_t m = a.rows();
  Matrix g(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      auto aj = a.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * aj[k];
      g(i, j) = s;
      g(j, i) = s;
    }
  }
  return g;
}

Matrix gram_cols(const Matrix& a) {
  const std::size_t n = a.cols();
  Matrix g(n, n);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto ar = a.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = ar[i];
      if (v == 0.0) continue;
      auto gi = g.row(i);
      for (std::size_t j = 0; j <= i; ++j) gi[j] += v * ar[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g(j, i) = g(i, j);
  return g;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Matrix c = a;
  auto cs = c.span();
  auto bs = b.span();
  for (std::size_t i = 0; i < cs.size(); ++i) cs[i] += bs[i];
  return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "subtract: shape mismatch");
  Matrix c = a;
  auto cs = c.span();
  auto bs = b.span();
  for (std::size_t i = 0; i < cs.size(); ++i) cs[i] -= bs[i];
  return c;
}

Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (double& v : c.span()) v *= s;
  return c;
}

Vector add(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "add: length mismatch");
  Vector c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

Vector subtract(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "subtract: length mismatch");
  Vector c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

Vector scale(const Vector& a, double s) {
  Vector c = a;
  for (double& v : c) v *= s;
  return c;
}

void axpy(double s, const Vector& x, Vector& y) {
  require(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

double dot(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(const Vector& a) { return dot(a, a); }

double norm2(const Vector& a) {
  // Scaled accumulation so huge/tiny entries do not overflow.
  const double m = max_abs(a);
  if (m == 0.0 || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : a) s += (v / m) * (v / m);
  return m * std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.span()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double m = 0.0;
  auto as = a.span();
  auto bs = b.span();
  for (std::size_t i = 0; i < as.size(); ++i) m = std::max(m, std::abs(as[i] - bs[i]));
  return m;
}

double max_abs_diff(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "max_abs_diff: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Vector solve_spd(const Matrix& a, const Vector& b) {
  if (!a.square()) throw DimensionError("solve_spd: matrix is not square");
  require(a.rows() == b.size(), "solve_spd: right-hand side length mismatch");
  const std::size_t n = a.rows();
  const double tol = kSymmetryTolerance * std::max(1.0, max_abs(a));
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_diag = std::max(max_diag, std::abs(a(i, i)));
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) throw NumericError("solve_spd: matrix is not symmetric");
  }

  // Lower Cholesky factor, in place.
  Matrix l = a;
  const double pivot_floor = 1e-14 * std::max(max_diag, 1e-300);
  for (std::size_t j = 0; j < n; ++j) {
    auto lj = l.row(j);
    double d = lj[j];
    for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
    if (!(d > pivot_floor)) throw NumericError("solve_spd: matrix is not positive definite");
    d = std::sqrt(d);
    lj[j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      auto li = l.row(i);
      double s = li[j];
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / d;
    }
  }

  Vector x = b;
  for (std::size_t i = 0; i < n; ++i) {
    auto li = l.row(i);
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * x[k];
    x[i] = s / li[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Eigensolvers

EigenDecomposition sym_eig(const Matrix& a) {
  Matrix v = checked_symmetric(a);
  const std::size_t n = v.rows();
  if (n == 0) return {};
  if (!all_finite(v.span())) throw NumericError("sym_eig: non-finite input");
  if (n == 1) return {Matrix{{1.0}}, Vector{v(0, 0)}};

  std::vector<double> d(n);
  std::vector<double> e(n);
  tridiagonalize(v, d, e);
  tridiagonal_ql(v, d, e);
  return sorted_descending(d, v);
}

EigenDecomposition sym_eig_jacobi(const Matrix& input) {
  Matrix a = checked_symmetric(input);
  const std::size_t n = a.rows();
  if (n == 0) return {};
  if (!all_finite(a.span())) throw NumericError("sym_eig_jacobi: non-finite input");

  // Rows of vt are the eigenvectors.
  Matrix vt = Matrix::identity(n);
  double frob = 0.0;
  for (double x : a.span()) frob += x * x;
  frob = std::sqrt(frob);
  const double threshold = 1e-12 * frob;
  const int max_sweeps = 100;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > threshold) {
    if (++sweep > max_sweeps) throw NumericError("sym_eig_jacobi: no convergence within 100 sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        auto rp = a.row(p);
        auto rq = a.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = rp[k];
          const double aqk = rq[k];
          rp[k] = c * apk - s * aqk;
          rq[k] = s * apk + c * aqk;
        }
        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k];
          const double y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
  }
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
  return sorted_descending(d, vt);
}

// ---------------------------------------------------------------------------
// C-matrix

namespace {

std::vector<double> inverse_sqrt_spectrum(const Vector& eigenvalues, double mu, double eps) {
  std::vector<double> out(eigenvalues.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double shifted = std::max(eigenvalues[i], 0.0) + mu + eps;
    if (!(shifted > 0.0)) throw NumericError("build_c: non-positive eigenvalue after regularization");
    out[i] = 1.0 / std::sqrt(shifted);
  }
  return out;
}

Matrix compose_symmetric(const Matrix& u, const std::vector<double>& d) {
  const std::size_t n = u.rows();
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto ui = u.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      auto uj = u.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += ui[k] * d[k] * uj[k];
      c(i, j) = s;
      c(j, i) = s;
    }
  }
  return c;
}

}  // namespace

Matrix build_c(const Matrix& j, double r, double mu, double eps) {
  if (!(r > 0.0)) throw ParameterError("build_c: r must be positive");
  if (mu < 0.0 || eps < 0.0) throw ParameterError("build_c: mu and eps must be nonnegative");
  if (j.rows() == 0) throw DimensionError("build_c: Jacobian has no rows");
  Matrix a = scale(gram_rows(j), 1.0 / r);
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += mu;
  const EigenDecomposition eig = sym_eig(a);
  return compose_symmetric(eig.u_matrix, inverse_sqrt_spectrum(eig.eigenvalues, 0.0, eps));
}

Matrix build_c_from_eig(const EigenDecomposition& scaled_gram, double mu, double eps) {
  if (mu < 0.0 || eps < 0.0) throw ParameterError("build_c: mu and eps must be nonnegative");
  return compose_symmetric(scaled_gram.u_matrix,
                           inverse_sqrt_spectrum(scaled_gram.eigenvalues, mu, eps));
}

Vector apply_c_from_eig(const EigenDecomposition& scaled_gram, double mu, double eps,
                        const Vector& e) {
  if (mu < 0.0 || eps < 0.0) throw ParameterError("build_c: mu and eps must be nonnegative");
  const Matrix& u = scaled_gram.u_matrix;
  require(u.rows() == e.size(), "apply_c: error length differs from decomposition size");
  const std::vector<double> d = inverse_sqrt_spectrum(scaled_gram.eigenvalues, mu, eps);
  Vector coeff = multiply_transposed(u, e);
  for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] *= d[k];
  return multiply(u, coeff);
}

}  // namespace hjbnn
