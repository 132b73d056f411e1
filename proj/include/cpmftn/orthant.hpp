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

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace cpmftn {

/// P(sign(Z_i) = signs_i for all i) for Z ~ N(mean, cov), real-valued.
struct OrthantQuery {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::vector<int> signs;  ///< each +1 or -1
};

struct OrthantResult {
  double p = 0.0;
  double err = 0.0;       ///< estimated absolute error (0 on closed-form paths)
  int64_t points = 0;     ///< quasi-random points spent
  bool underflow = false; ///< true when p was floored
};

/// Multivariate Gaussian orthant probability.
///
/// Diagonal covariances use the closed-form product of 1-D tail
/// probabilities; the general case runs a Genz-style sequentially
/// transformed quasi-Monte Carlo integration with a fixed internal seed
/// (deterministic for fixed tol).
OrthantResult orthant_probability(const OrthantQuery& q, double tol = 1e-6,
                                  int64_t max_points = 100000);

/// Interleaves a complex mean vector as [Re z1, Im z1, Re z2, ...].
Eigen::VectorXd interleave_complex(const Eigen::VectorXcd& v);

/// Real covariance of the interleaved representation of a circularly
/// symmetric complex Gaussian with complex covariance R:
/// blocks Re(R)/2 on Re/Re and Im/Im, -/+ Im(R)/2 across.
Eigen::MatrixXd real_cov_from_complex(const Eigen::MatrixXcd& r);

}  // namespace cpmftn
