#pragma once

#include <Eigen/Dense>

namespace hesim {

/// Cleartext c x h x w tensor, channel-major then row-major storage.
struct Tensor3 {
  Eigen::Index c = 0, h = 0, w = 0;
  Eigen::VectorXd data;  // size c*h*w

  Tensor3() = default;
  Tensor3(Eigen::Index c_, Eigen::Index h_, Eigen::Index w_)
      : c(c_), h(h_), w(w_), data(Eigen::VectorXd::Zero(c_ * h_ * w_)) {}

  double& at(Eigen::Index ci, Eigen::Index y, Eigen::Index x) {
    return data[(ci * h + y) * w + x];
  }
  double at(Eigen::Index ci, Eigen::Index y, Eigen::Index x) const {
    return data[(ci * h + y) * w + x];
  }
};

struct FilterBank {
  Eigen::Index c_out = 0, c_in = 0, k = 0;
  Eigen::VectorXd weights;  // [c_out][c_in][k][k]
  Eigen::VectorXd bias;     // [c_out]

  double at(Eigen::Index co, Eigen::Index ci, Eigen::Index ky,
            Eigen::Index kx) const {
    return weights[((co * c_in + ci) * k + ky) * k + kx];
  }
};

// Textbook valid (no-padding) layers, double precision, row-major
// accumulation order.  This module is the ground-truth oracle for every
// equivalence test; it is deliberately naive.
Tensor3 ref_conv(const Tensor3& input, const FilterBank& f,
                 Eigen::Index stride);
Tensor3 ref_avgpool(const Tensor3& input, Eigen::Index k, Eigen::Index stride);
Tensor3 ref_square(const Tensor3& input);
Eigen::VectorXd ref_dense(const Eigen::VectorXd& v, const Eigen::MatrixXd& W,
                          const Eigen::VectorXd& b);

}  // namespace hesim
