#pragma once

// Reference implementations used only by tests. Each one is written
// independently of the library code path it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "gnode/num/matrix.hpp"

namespace oracle {

using gnode::num::Matrix;

// Central differences with step h, coordinate by coordinate.
inline std::vector<double> gradient(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = f(x);
    x[i] = keep - h;
    const double fm = f(x);
    x[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double rel_err(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-12) {
  double num = 0.0, den = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

// Dense Gaussian elimination with partial pivoting; solves K x = r.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> k, std::vector<double> r) {
  const std::size_t n = r.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t i = c + 1; i < n; ++i)
      if (std::abs(k[i][c]) > std::abs(k[p][c])) p = i;
    if (std::abs(k[p][c]) < 1e-300) throw std::runtime_error("oracle: singular system");
    std::swap(k[p], k[c]);
    std::swap(r[p], r[c]);
    for (std::size_t i = c + 1; i < n; ++i) {
      const double f = k[i][c] / k[c][c];
      for (std::size_t j = c; j < n; ++j) k[i][j] -= f * k[c][j];
      r[i] -= f * r[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = r[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= k[i][j] * x[j];
    x[i] = s / k[i][i];
  }
  return x;
}

// Saddle-point form of the constrained dynamics:
//   [M  A^T] [qdd]   [-N       ]
//   [A  0  ] [lam] = [-Adot qd ]
// with M = diag(masses) repeated over d coordinates. Returns qdd (flat).
inline std::vector<double> kkt_acceleration(const std::vector<double>& masses, std::size_t d,
                                            const Matrix& n_force, const Matrix& a, const Matrix& adot,
                                            const Matrix& qdot) {
  const std::size_t nd = masses.size() * d;
  const std::size_t k = a.rows();
  std::vector<std::vector<double>> sys(nd + k, std::vector<double>(nd + k, 0.0));
  std::vector<double> rhs(nd + k, 0.0);
  for (std::size_t i = 0; i < nd; ++i) {
    sys[i][i] = masses[i / d];
    rhs[i] = -n_force[i];
  }
  for (std::size_t r = 0; r < k; ++r) {
    double adq = 0.0;
    for (std::size_t c = 0; c < nd; ++c) {
      sys[nd + r][c] = a(r, c);
      sys[c][nd + r] = a(r, c);
      adq += adot(r, c) * qdot[c];
    }
    rhs[nd + r] = -adq;
  }
  auto x = gauss_solve(sys, rhs);
  x.resize(nd);
  return x;
}

inline double squareplus(double x) { return 0.5 * (x + std::sqrt(x * x + 4.0)); }

// Plain-loop two-hidden-layer MLP; weights are (in x out) row-major.
struct Mlp {
  std::vector<Matrix> w, b;
  bool squareplus_head = false;

  std::vector<double> operator()(std::vector<double> x) const {
    for (std::size_t l = 0; l < 3; ++l) {
      std::vector<double> y(w[l].cols());
      for (std::size_t o = 0; o < y.size(); ++o) {
        double s = b[l](0, o);
        for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[l](i, o);
        y[o] = (l < 2 || squareplus_head) ? squareplus(s) : s;
      }
      x = std::move(y);
    }
    return x;
  }
};

// Kolmogorov-Smirnov statistic of `xs` against U[lo, hi] and its asymptotic
// p-value.
inline double ks_uniform_pvalue(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    dmax = std::max({dmax, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * dmax;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) p += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lam * lam);
  return std::clamp(p, 0.0, 1.0);
}

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(r, c);
  for (auto& x : m.vec()) x = u(rng);
  return m;
}

}  // namespace oracle
