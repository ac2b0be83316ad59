#include "hesim/slotvec.hpp"

#include <stdexcept>
#include <string>

#include "hesim/errors.hpp"

namespace hesim {

bool is_power_of_two(Eigen::Index x) { return x > 0 && (x & (x - 1)) == 0; }

SlotVector::SlotVector(Eigen::VectorXd slots, Kind kind)
    : slots_(std::move(slots)), kind_(kind) {
  if (!is_power_of_two(slots_.size())) {
    throw ShapeError("slot count must be a power of two, got " +
                     std::to_string(slots_.size()));
  }
}

SlotVector SlotVector::masked_prefix(Eigen::Index keep) const {
  Eigen::VectorXd out = slots_;
  if (keep < out.size()) out.tail(out.size() - keep).setZero();
  return SlotVector(std::move(out), kind_);
}

SlotVector pack(const Eigen::VectorXd& values, Eigen::Index n_slots,
                Kind kind) {
  if (values.size() > n_slots) {
    throw CapacityError("pack: " + std::to_string(values.size()) +
                        " values exceed " + std::to_string(n_slots) +
                        " slots");
  }
  Eigen::VectorXd slots = Eigen::VectorXd::Zero(n_slots);
  slots.head(values.size()) = values;
  return SlotVector(std::move(slots), kind);
}

SlotVector zeros(Eigen::Index n_slots, Kind kind) {
  return SlotVector(Eigen::VectorXd::Zero(n_slots), kind);
}

SlotVector rotate_right(const SlotVector& v, Eigen::Index r,
                        MeterContext& ctx) {
  const Eigen::Index n = v.n_slots();
  if (r < 0 || r >= n) {
    throw std::out_of_range("rotate: amount " + std::to_string(r) +
                            " outside [0, " + std::to_string(n) + ")");
  }
  if (r == 0) return v;
  // Plaintext alignment is prepared offline at encode time; only
  // ciphertext rotations are metered.
  if (v.kind() == Kind::Ciphertext) ctx.count_rot();
  Eigen::VectorXd out(n);
  out.head(r) = v.slots().tail(r);
  out.tail(n - r) = v.slots().head(n - r);
  return SlotVector(std::move(out), v.kind());
}

SlotVector rotate_left(const SlotVector& v, Eigen::Index r, MeterContext& ctx) {
  const Eigen::Index n = v.n_slots();
  if (r < 0 || r >= n) {
    throw std::out_of_range("rotate: amount " + std::to_string(r) +
                            " outside [0, " + std::to_string(n) + ")");
  }
  return rotate_right(v, r == 0 ? 0 : n - r, ctx);
}

namespace {

Kind result_kind(const SlotVector& a, const SlotVector& b) {
  return (a.kind() == Kind::Ciphertext || b.kind() == Kind::Ciphertext)
             ? Kind::Ciphertext
             : Kind::Plaintext;
}

void meter_binary(const SlotVector& a, const SlotVector& b, MeterContext& ctx,
                  void (MeterContext::*cc)(), void (MeterContext::*pc)()) {
  const int n_ct = (a.kind() == Kind::Ciphertext ? 1 : 0) +
                   (b.kind() == Kind::Ciphertext ? 1 : 0);
  if (n_ct == 2) {
    (ctx.*cc)();
  } else if (n_ct == 1) {
    (ctx.*pc)();
  }
  // plaintext-plaintext is free
}

void check_shapes(const SlotVector& a, const SlotVector& b) {
  if (a.n_slots() != b.n_slots()) {
    throw ShapeError("slot count mismatch: " + std::to_string(a.n_slots()) +
                     " vs " + std::to_string(b.n_slots()));
  }
}

}  // namespace

SlotVector add(const SlotVector& a, const SlotVector& b, MeterContext& ctx) {
  check_shapes(a, b);
  meter_binary(a, b, ctx, &MeterContext::count_add_cc,
               &MeterContext::count_add_pc);
  return SlotVector(a.slots() + b.slots(), result_kind(a, b));
}

SlotVector mul(const SlotVector& a, const SlotVector& b, MeterContext& ctx) {
  check_shapes(a, b);
  meter_binary(a, b, ctx, &MeterContext::count_mul_cc,
               &MeterContext::count_mul_pc);
  return SlotVector(a.slots().cwiseProduct(b.slots()), result_kind(a, b));
}

}  // namespace hesim
