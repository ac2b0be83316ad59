#include "hesim/convlower.hpp"

#include <string>

#include "hesim/errors.hpp"

namespace hesim {

std::vector<SlotVector> conv_pack(const Tensor3& image, const ConvShape& shape,
                                  Eigen::Index n_slots) {
  const Eigen::Index d_out = shape.d_out();
  if (d_out * d_out > n_slots) {
    throw CapacityError("conv_pack: " + std::to_string(d_out * d_out) +
                        " output positions exceed " + std::to_string(n_slots) +
                        " slots");
  }
  if (image.c != shape.c_in || image.h != shape.d_in) {
    throw ShapeError("conv_pack: image does not match shape");
  }
  std::vector<SlotVector> taps;
  taps.reserve(shape.kernel_k * shape.kernel_k * shape.c_in);
  for (Eigen::Index ci = 0; ci < shape.c_in; ++ci) {
    for (Eigen::Index ky = 0; ky < shape.kernel_k; ++ky) {
      for (Eigen::Index kx = 0; kx < shape.kernel_k; ++kx) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n_slots);
        for (Eigen::Index oy = 0; oy < d_out; ++oy) {
          for (Eigen::Index ox = 0; ox < d_out; ++ox) {
            v[oy * d_out + ox] =
                image.at(ci, oy * shape.stride + ky, ox * shape.stride + kx);
          }
        }
        taps.emplace_back(std::move(v), Kind::Ciphertext);
      }
    }
  }
  return taps;
}

std::vector<SlotVector> conv_packed_forward(const std::vector<SlotVector>& taps,
                                            const FilterBank& filters,
                                            const ConvShape& shape,
                                            MeterContext& ctx) {
  const Eigen::Index n_taps = shape.kernel_k * shape.kernel_k * shape.c_in;
  if (static_cast<Eigen::Index>(taps.size()) != n_taps ||
      filters.c_in != shape.c_in || filters.k != shape.kernel_k ||
      filters.c_out != shape.c_out) {
    throw ShapeError("conv_packed_forward: filter/tap shape mismatch");
  }
  const Eigen::Index N = taps[0].n_slots();
  const Eigen::Index w = shape.d_out() * shape.d_out();

  std::vector<SlotVector> maps;
  maps.reserve(shape.c_out);
  for (Eigen::Index co = 0; co < shape.c_out; ++co) {
    SlotVector acc = zeros(N, Kind::Ciphertext);
    for (Eigen::Index t = 0; t < n_taps; ++t) {
      const Eigen::Index ci = t / (shape.kernel_k * shape.kernel_k);
      const Eigen::Index ky = (t / shape.kernel_k) % shape.kernel_k;
      const Eigen::Index kx = t % shape.kernel_k;
      // Scalar filter tap encoded over the used slots only, so anything a
      // server-side repack left beyond them is zeroed here.
      Eigen::VectorXd pt = Eigen::VectorXd::Zero(N);
      pt.head(w).setConstant(filters.at(co, ci, ky, kx));
      SlotVector prod = mul(SlotVector(std::move(pt), Kind::Plaintext),
                            taps[t], ctx);
      acc = t == 0 ? std::move(prod) : add(acc, prod, ctx);
    }
    Eigen::VectorXd bias_pt = Eigen::VectorXd::Zero(N);
    bias_pt.head(w).setConstant(filters.bias.size() ? filters.bias[co] : 0.0);
    maps.push_back(
        add(acc, SlotVector(std::move(bias_pt), Kind::Plaintext), ctx));
  }
  return maps;
}

SparseMat conv_to_matrix(const ConvShape& shape, const FilterBank& filters) {
  const Eigen::Index d_out = shape.d_out(), d_in = shape.d_in;
  const Eigen::Index m = d_out * d_out * shape.c_out;
  const Eigen::Index n = d_in * d_in * shape.c_in;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m * shape.kernel_k * shape.kernel_k * shape.c_in);
  for (Eigen::Index co = 0; co < shape.c_out; ++co) {
    for (Eigen::Index oy = 0; oy < d_out; ++oy) {
      for (Eigen::Index ox = 0; ox < d_out; ++ox) {
        const Eigen::Index r = (co * d_out + oy) * d_out + ox;
        for (Eigen::Index ci = 0; ci < shape.c_in; ++ci) {
          for (Eigen::Index ky = 0; ky < shape.kernel_k; ++ky) {
            for (Eigen::Index kx = 0; kx < shape.kernel_k; ++kx) {
              const Eigen::Index col = (ci * d_in + oy * shape.stride + ky) *
                                           d_in +
                                       ox * shape.stride + kx;
              trip.emplace_back(r, col, filters.at(co, ci, ky, kx));
            }
          }
        }
      }
    }
  }
  SparseMat A(m, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

Eigen::VectorXd conv_bias_vector(const ConvShape& shape,
                                 const FilterBank& filters) {
  const Eigen::Index w = shape.d_out() * shape.d_out();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(w * shape.c_out);
  for (Eigen::Index co = 0; co < shape.c_out; ++co) {
    b.segment(co * w, w).setConstant(filters.bias.size() ? filters.bias[co]
                                                         : 0.0);
  }
  return b;
}

SparseMat pool_to_matrix(Eigen::Index c, Eigen::Index d_in, Eigen::Index k,
                         Eigen::Index stride) {
  const Eigen::Index d_out = (d_in - k) / stride + 1;
  const Eigen::Index m = d_out * d_out * c, n = d_in * d_in * c;
  const double scale = 1.0 / static_cast<double>(k * k);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m * k * k);
  for (Eigen::Index ci = 0; ci < c; ++ci) {
    for (Eigen::Index oy = 0; oy < d_out; ++oy) {
      for (Eigen::Index ox = 0; ox < d_out; ++ox) {
        const Eigen::Index r = (ci * d_out + oy) * d_out + ox;
        for (Eigen::Index ky = 0; ky < k; ++ky) {
          for (Eigen::Index kx = 0; kx < k; ++kx) {
            const Eigen::Index col =
                (ci * d_in + oy * stride + ky) * d_in + ox * stride + kx;
            trip.emplace_back(r, col, scale);
          }
        }
      }
    }
  }
  SparseMat A(m, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SlotVector square_layer(const SlotVector& v, MeterContext& ctx) {
  return mul(v, v, ctx);
}

SlotVector merge_maps(const std::vector<SlotVector>& maps, Eigen::Index w,
                      MeterContext& ctx) {
  if (maps.empty()) throw ShapeError("merge_maps: no maps");
  const Eigen::Index N = maps[0].n_slots();
  const auto c = static_cast<Eigen::Index>(maps.size());
  if (c * w > N) {
    throw CapacityError("merge_maps: " + std::to_string(c) + " maps of " +
                        std::to_string(w) + " slots exceed " +
                        std::to_string(N) + " slots");
  }
  SlotVector out = maps[0];
  for (Eigen::Index j = 1; j < c; ++j) {
    out = add(out, rotate_right(maps[j], j * w, ctx), ctx);
  }
  return out;
}

}  // namespace hesim
