// Copyright 2026 the cpmftn authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cpmftn/orthant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpmftn/normal.hpp"
#include "cpmftn/rng.hpp"

namespace cpmftn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProbFloor = 1e-300;

// First 32 primes; sqrt(prime) fractional parts drive the Richtmyer
// quasi-random sequence used by the Genz integrator.
constexpr int kPrimes[32] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,  37,  41,  43,  47,  53,
                             59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

struct GenzProblem {
  // lower limits after sign folding (upper limits are all +inf)
  Eigen::VectorXd lower;
  Eigen::MatrixXd chol;  // L, reordered
  int dim = 0;
  double p_fixed = 1.0;  // product of factors resolved in degenerate dims
};

// Cholesky with the variable reordering of Genz (1992): integrate the most
// restrictive variables first. Degenerate (zero-variance) directions resolve
// to a 0/1 factor.
bool prepare(const OrthantQuery& q, GenzProblem& out) {
  const int d = static_cast<int>(q.mean.size());
  Eigen::MatrixXd c = q.cov;
  Eigen::VectorXd a(d);
  for (int i = 0; i < d; ++i) {
    a(i) = -q.signs[i] * q.mean(i);
    for (int j = 0; j < d; ++j) c(i, j) *= q.signs[i] * q.signs[j];
  }

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  const double tiny = 1e-13 * std::max(c.diagonal().maxCoeff(), 1e-30);

  for (int i = 0; i < d; ++i) {
    // pick the remaining variable with the smallest conditional probability
    int best = -1;
    double best_p = 2.0;
    for (int k = i; k < d; ++k) {
      double resid = c(k, k);
      double num = a(k);
      for (int j = 0; j < i; ++j) {
        resid -= l(k, j) * l(k, j);
        num -= l(k, j) * y(j);
      }
      if (resid < tiny) {
        // degenerate direction: resolved below when selected
        if (num > 0) { best = k; best_p = -1.0; break; }
        continue;
      }
      const double p = 1.0 - norm_cdf(num / std::sqrt(std::max(resid, 0.0)));
      if (p < best_p) { best_p = p; best = k; }
    }
    if (best < 0) {
      // all remaining are degenerate and satisfied
      out.dim = i;
      out.lower = a.head(i);
      out.chol = l.topLeftCorner(i, i);
      return true;
    }
    if (best != i) {
      c.row(i).swap(c.row(best));
      c.col(i).swap(c.col(best));
      std::swap(a(i), a(best));
      for (int j = 0; j < i; ++j) std::swap(l(i, j), l(best, j));
      std::swap(order[i], order[best]);
    }
    double resid = c(i, i);
    double num = a(i);
    for (int j = 0; j < i; ++j) {
      resid -= l(i, j) * l(i, j);
      num -= l(i, j) * y(j);
    }
    if (resid < tiny) {
      if (num > 0) { out.p_fixed = 0.0; return false; }
      // satisfied with certainty: drop the dimension
      for (int k = i + 1; k < d; ++k) l(k, i) = 0.0;
      l(i, i) = 0.0;
      y(i) = 0.0;
      a(i) = -kInf;
      continue;
    }
    l(i, i) = std::sqrt(resid);
    for (int k = i + 1; k < d; ++k) {
      double v = c(k, i);
      for (int j = 0; j < i; ++j) v -= l(k, j) * l(i, j);
      l(k, i) = v / l(i, i);
    }
    // conditional expectation of the truncated normal, for ordering
    const double at = num / l(i, i);
    const double denom = std::max(1.0 - norm_cdf(at), 1e-300);
    y(i) = norm_pdf(at) / denom;
  }
  out.dim = d;
  out.lower = a;
  out.chol = l;
  return true;
}

// one evaluation of the sequentially transformed integrand at point w
double integrand(const GenzProblem& pr, const double* w) {
  const int d = pr.dim;
  double prob = 1.0;
  Eigen::VectorXd y(d);
  double e_prev, d_prev;
  {
    const double at = pr.lower(0) == -kInf ? -kInf
                                           : pr.lower(0) / pr.chol(0, 0);
    d_prev = at == -kInf ? 0.0 : norm_cdf(at);
    e_prev = 1.0;
    prob = e_prev - d_prev;
  }
  for (int i = 1; i < d; ++i) {
    const double u = d_prev + w[i - 1] * (e_prev - d_prev);
    y(i - 1) = norm_ppf(std::min(std::max(u, 1e-16), 1.0 - 1e-16));
    double num = pr.lower(i);
    if (num != -kInf) {
      for (int j = 0; j < i; ++j) num -= pr.chol(i, j) * y(j);
    }
    double di;
    if (pr.lower(i) == -kInf) {
      di = 0.0;
    } else if (pr.chol(i, i) <= 0.0) {
      di = num > 0 ? 1.0 : 0.0;  // degenerate leftover
    } else {
      di = norm_cdf(num / pr.chol(i, i));
    }
    const double ei = 1.0;
    prob *= std::max(ei - di, 0.0);
    d_prev = di;
    e_prev = ei;
  }
  return prob;
}

}  // namespace

Eigen::VectorXd interleave_complex(const Eigen::VectorXcd& v) {
  Eigen::VectorXd out(2 * v.size());
  for (int i = 0; i < v.size(); ++i) {
    out(2 * i) = v(i).real();
    out(2 * i + 1) = v(i).imag();
  }
  return out;
}

Eigen::MatrixXd real_cov_from_complex(const Eigen::MatrixXcd& r) {
  const int n = static_cast<int>(r.rows());
  Eigen::MatrixXd out(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double re = 0.5 * r(i, j).real();
      const double im = 0.5 * r(i, j).imag();
      out(2 * i, 2 * j) = re;
      out(2 * i + 1, 2 * j + 1) = re;
      out(2 * i, 2 * j + 1) = -im;
      out(2 * i + 1, 2 * j) = im;
    }
  }
  return out;
}

OrthantResult orthant_probability(const OrthantQuery& q, double tol, int64_t max_points) {
  const int d = static_cast<int>(q.mean.size());
  if (q.cov.rows() != d || q.cov.cols() != d || static_cast<int>(q.signs.size()) != d)
    throw std::invalid_argument("orthant query dimension mismatch");
  if (tol <= 0) throw std::invalid_argument("tol must be positive");
  if ((q.cov - q.cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + q.cov.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("covariance must be symmetric");

  OrthantResult res;
  if (d == 0) {
    res.p = 1.0;
    return res;
  }

  // diagonal fast path
  const double max_diag = q.cov.diagonal().maxCoeff();
  bool diag = true;
  for (int i = 0; i < d && diag; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && std::abs(q.cov(i, j)) >= 1e-12 * max_diag) { diag = false; break; }
  if (diag) {
    double logp = 0.0;
    for (int i = 0; i < d; ++i) {
      const double sd = std::sqrt(std::max(q.cov(i, i), 0.0));
      if (sd == 0.0) {
        if (q.signs[i] * q.mean(i) < 0) { res.p = 0.0; return res; }
        continue;
      }
      logp += log_norm_cdf(q.signs[i] * q.mean(i) / sd);
    }
    if (logp < std::log(kProbFloor)) {
      res.p = kProbFloor;
      res.underflow = true;
    } else {
      res.p = std::exp(logp);
    }
    return res;
  }

  GenzProblem pr;
  if (!prepare(q, pr)) {
    res.p = 0.0;
    return res;
  }
  if (pr.dim == 0) {
    res.p = pr.p_fixed;
    return res;
  }
  if (pr.dim == 1) {
    res.p = 1.0 - norm_cdf(pr.lower(0) / pr.chol(0, 0));
    return res;
  }

  const int nw = pr.dim - 1;
  double sqp[32];
  for (int i = 0; i < nw; ++i) sqp[i] = std::sqrt(static_cast<double>(kPrimes[i % 32]));

  constexpr int kShifts = 12;
  Rng rng(0x0123456789abcdefULL);  // fixed internal seed
  int64_t n_batch = std::max<int64_t>(32 * pr.dim, 256);
  int64_t spent = 0;
  double value = 0.0, error = kInf;
  double shift[kShifts][32];
  for (auto& s : shift)
    for (int i = 0; i < nw; ++i) s[i] = rng.uniform();

  double sums[kShifts] = {0};
  int64_t counts = 0;
  while (true) {
    for (int64_t k = 0; k < n_batch; ++k) {
      const double kk = static_cast<double>(counts + k + 1);
      for (int s = 0; s < kShifts; ++s) {
        double w[32];
        for (int i = 0; i < nw; ++i) {
          double v = kk * sqp[i] + shift[s][i];
          v -= std::floor(v);
          // periodized (tent) transform improves lattice uniformity
          w[i] = std::abs(2.0 * v - 1.0);
        }
        sums[s] += integrand(pr, w);
      }
    }
    counts += n_batch;
    spent = counts * kShifts;
    double mean = 0.0;
    for (double s : sums) mean += s / counts;
    mean /= kShifts;
    double var = 0.0;
    for (double s : sums) {
      const double dmean = s / counts - mean;
      var += dmean * dmean;
    }
    var /= (kShifts - 1);
    value = mean;
    error = 3.0 * std::sqrt(var / kShifts);
    if (error <= tol || spent >= max_points) break;
    n_batch = std::min<int64_t>(n_batch * 2, (max_points - spent) / kShifts + 1);
  }

  res.err = error;
  res.points = spent;
  if (value < kProbFloor) {
    res.p = kProbFloor;
    res.underflow = true;
  } else {
    res.p = std::min(value, 1.0);
  }
  return res;
}

}  // namespace cpmftn
