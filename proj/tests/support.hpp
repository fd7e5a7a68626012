#pragma once

// Test-only reference routes. Nothing here calls into the library's numerical
// kernels, so agreement with the library is evidence rather than tautology.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "hjbnn/linalg.hpp"
#include "hjbnn/network.hpp"

namespace oracle {

using hjbnn::Matrix;
using hjbnn::Vector;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = d(gen);
  return m;
}

inline Vector random_vector(std::size_t n, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (double& x : v) x = d(gen);
  return v;
}

// Plain triple loops.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Matrix trans(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline Vector matvec(const Matrix& a, const Vector& x) {
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) y[i] += a(i, k) * x[k];
  return y;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Gauss-Jordan with partial pivoting.
inline Matrix inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) inv(i, i) = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (std::abs(a(p, c)) < 1e-300) throw std::runtime_error("oracle::inverse: singular");
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(a(c, j), a(p, j));
      std::swap(inv(c, j), inv(p, j));
    }
    const double piv = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= piv;
      inv(c, j) /= piv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

// Inverse principal square root of an SPD matrix by Denman-Beavers iteration;
// no eigendecomposition involved.
inline Matrix inverse_sqrt(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix y = a;
  Matrix z(n, n);
  for (std::size_t i = 0; i < n; ++i) z(i, i) = 1.0;
  for (int it = 0; it < 100; ++it) {
    const Matrix yi = inverse(y);
    const Matrix zi = inverse(z);
    Matrix y2(n, n), z2(n, n);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        y2(i, j) = 0.5 * (y(i, j) + zi(i, j));
        z2(i, j) = 0.5 * (z(i, j) + yi(i, j));
        change = std::max(change, std::abs(z2(i, j) - z(i, j)));
      }
    y = y2;
    z = z2;
    if (change < 1e-15) break;
  }
  return z;
}

inline double logistic(double h) { return 1.0 / (1.0 + std::exp(-h)); }

// Forward pass written straight from the layer equations.
inline std::vector<double> forward(const hjbnn::Network& net, const Vector& x) {
  const auto& a = net.arch;
  std::vector<double> v(a.n_hidden), y(a.n_output);
  for (std::size_t h = 0; h < a.n_hidden; ++h) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.n_input; ++i) s += net.w1(h, i) * x[i];
    v[h] = logistic(s);
  }
  for (std::size_t o = 0; o < a.n_output; ++o) {
    double s = 0.0;
    for (std::size_t h = 0; h < a.n_hidden; ++h) s += net.w2(o, h) * v[h];
    y[o] = logistic(s);
  }
  return y;
}

// Central differences over the weights in output-layer-first, row-major order.
inline Matrix fd_jacobian(const hjbnn::Network& net, const Vector& x, double step = 1e-6) {
  const auto& a = net.arch;
  Matrix jac(a.n_output, a.weight_count());
  hjbnn::Network probe = net;
  std::size_t col = 0;
  auto column = [&](double& w) {
    const double w0 = w;
    w = w0 + step;
    const auto up = oracle::forward(probe, x);
    w = w0 - step;
    const auto down = oracle::forward(probe, x);
    w = w0;
    for (std::size_t o = 0; o < a.n_output; ++o) jac(o, col) = (up[o] - down[o]) / (2.0 * step);
    ++col;
  };
  for (std::size_t o = 0; o < a.n_output; ++o)
    for (std::size_t h = 0; h < a.n_hidden; ++h) column(probe.w2(o, h));
  for (std::size_t h = 0; h < a.n_hidden; ++h)
    for (std::size_t i = 0; i < a.n_input; ++i) column(probe.w1(h, i));
  return jac;
}

}  // namespace oracle
