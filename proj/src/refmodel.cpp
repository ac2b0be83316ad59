#include "hesim/refmodel.hpp"

#include <string>

#include "hesim/errors.hpp"

namespace hesim {

namespace {

Eigen::Index out_side(Eigen::Index d_in, Eigen::Index k, Eigen::Index s) {
  if (k > d_in) {
    throw ShapeError("window " + std::to_string(k) + " larger than input " +
                     std::to_string(d_in));
  }
  return (d_in - k) / s + 1;
}

}  // namespace

Tensor3 ref_conv(const Tensor3& input, const FilterBank& f,
                 Eigen::Index stride) {
  if (input.c != f.c_in) {
    throw ShapeError("conv: input has " + std::to_string(input.c) +
                     " channels, filter expects " + std::to_string(f.c_in));
  }
  const Eigen::Index d_out = out_side(input.h, f.k, stride);
  Tensor3 out(f.c_out, d_out, d_out);
  for (Eigen::Index co = 0; co < f.c_out; ++co) {
    for (Eigen::Index oy = 0; oy < d_out; ++oy) {
      for (Eigen::Index ox = 0; ox < d_out; ++ox) {
        double acc = f.bias.size() ? f.bias[co] : 0.0;
        for (Eigen::Index ci = 0; ci < f.c_in; ++ci) {
          for (Eigen::Index ky = 0; ky < f.k; ++ky) {
            for (Eigen::Index kx = 0; kx < f.k; ++kx) {
              acc += f.at(co, ci, ky, kx) *
                     input.at(ci, oy * stride + ky, ox * stride + kx);
            }
          }
        }
        out.at(co, oy, ox) = acc;
      }
    }
  }
  return out;
}

Tensor3 ref_avgpool(const Tensor3& input, Eigen::Index k, Eigen::Index stride) {
  const Eigen::Index d_out = out_side(input.h, k, stride);
  Tensor3 out(input.c, d_out, d_out);
  const double scale = 1.0 / static_cast<double>(k * k);
  for (Eigen::Index ci = 0; ci < input.c; ++ci) {
    for (Eigen::Index oy = 0; oy < d_out; ++oy) {
      for (Eigen::Index ox = 0; ox < d_out; ++ox) {
        double acc = 0.0;
        for (Eigen::Index ky = 0; ky < k; ++ky) {
          for (Eigen::Index kx = 0; kx < k; ++kx) {
            acc += input.at(ci, oy * stride + ky, ox * stride + kx);
          }
        }
        out.at(ci, oy, ox) = acc * scale;
      }
    }
  }
  return out;
}

Tensor3 ref_square(const Tensor3& input) {
  Tensor3 out = input;
  out.data = out.data.cwiseProduct(out.data);
  return out;
}

Eigen::VectorXd ref_dense(const Eigen::VectorXd& v, const Eigen::MatrixXd& W,
                          const Eigen::VectorXd& b) {
  if (W.cols() != v.size() || W.rows() != b.size()) {
    throw ShapeError("dense: dimension mismatch");
  }
  return W * v + b;
}

}  // namespace hesim
