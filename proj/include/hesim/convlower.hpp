#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "hesim/refmodel.hpp"
#include "hesim/slotvec.hpp"

namespace hesim {

struct ConvShape {
  Eigen::Index d_in = 0, c_in = 0, kernel_k = 0, stride = 1, c_out = 0;

  Eigen::Index d_out() const { return (d_in - kernel_k) / stride + 1; }
};

using SparseMat = Eigen::SparseMatrix<double>;

/// Client-side convolution packing for the first layer: k^2 * c_in
/// ciphertexts where vector t = (ci*k + ky)*k + kx holds, in slot
/// oy*d_out + ox, the input pixel multiplied against filter tap (ky, kx)
/// of channel ci.  Packing is free.
std::vector<SlotVector> conv_pack(const Tensor3& image, const ConvShape& shape,
                                  Eigen::Index n_slots);

/// Produce the c_out output maps from packed taps: one masked plaintext
/// multiplication per (tap, output map) pair plus a bias add per map.
/// Meters exactly k^2*c_in*c_out Mul PC, (k^2*c_in - 1)*c_out Add CC and
/// c_out Add PC regardless of image size.
std::vector<SlotVector> conv_packed_forward(const std::vector<SlotVector>& taps,
                                            const FilterBank& filters,
                                            const ConvShape& shape,
                                            MeterContext& ctx);

/// Flatten a convolution into an m x n matrix (m = d_out^2*c_out,
/// n = d_in^2*c_in) so that A * flatten(image) equals the flattened
/// convolution output.  Flattening order is channel-major then row-major.
/// The replicated per-position bias vector is returned separately.
SparseMat conv_to_matrix(const ConvShape& shape, const FilterBank& filters);
Eigen::VectorXd conv_bias_vector(const ConvShape& shape,
                                 const FilterBank& filters);

/// Average pooling as a sparse matrix with 1/k^2 entries; rows sum to one.
SparseMat pool_to_matrix(Eigen::Index c, Eigen::Index d_in, Eigen::Index k,
                         Eigen::Index stride);

/// Element-wise square: one Mul CC.
SlotVector square_layer(const SlotVector& v, MeterContext& ctx);

/// Concatenate c maps of w used slots into one dense ciphertext: map j is
/// rotated right by j*w and summed, costing c-1 rotations and c-1 Add CC.
SlotVector merge_maps(const std::vector<SlotVector>& maps, Eigen::Index w,
                      MeterContext& ctx);

}  // namespace hesim
