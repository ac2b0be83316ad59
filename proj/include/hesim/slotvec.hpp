#pragma once

#include <Eigen/Dense>

#include "hesim/meter.hpp"

namespace hesim {

enum class Kind { Ciphertext, Plaintext };

/// An N-slot real vector standing in for one ciphertext or encoded
/// plaintext.  N is a power of two.  Values are plain doubles; no noise,
/// modulus or level tracking is modelled.
class SlotVector {
 public:
  SlotVector(Eigen::VectorXd slots, Kind kind);

  Eigen::Index n_slots() const { return slots_.size(); }
  Kind kind() const { return kind_; }
  const Eigen::VectorXd& slots() const { return slots_; }
  double operator[](Eigen::Index i) const { return slots_[i]; }

  bool is_zero() const { return slots_.isZero(0.0); }

  /// Zeroes every slot at index >= keep.  Value-level cleanup only, never
  /// metered; kernels use it where the operation accounting treats masking
  /// as absorbed into an adjacent plaintext.
  SlotVector masked_prefix(Eigen::Index keep) const;

 private:
  Eigen::VectorXd slots_;
  Kind kind_;
};

bool is_power_of_two(Eigen::Index x);

/// Encode a real sequence into the first len slots of an N-slot vector.
/// Encoding is free (no metering).
SlotVector pack(const Eigen::VectorXd& values, Eigen::Index n_slots, Kind kind);
SlotVector zeros(Eigen::Index n_slots, Kind kind);

/// Cyclic shift: output slot j holds v[(j - r) mod N].  Rotation by 0 is a
/// free no-op; every other rotation of a ciphertext meters one Rot.
SlotVector rotate_right(const SlotVector& v, Eigen::Index r, MeterContext& ctx);
SlotVector rotate_left(const SlotVector& v, Eigen::Index r, MeterContext& ctx);

/// Element-wise sum/product.  Metered CC when both operands are
/// ciphertexts, PC when exactly one is plaintext, free when both are
/// plaintexts (plaintext-plaintext work happens at encode time).  The
/// result is a ciphertext if either input is one.
SlotVector add(const SlotVector& a, const SlotVector& b, MeterContext& ctx);
SlotVector mul(const SlotVector& a, const SlotVector& b, MeterContext& ctx);

}  // namespace hesim
