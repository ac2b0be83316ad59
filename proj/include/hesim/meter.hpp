#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hesim {

/// Counters for the five metered homomorphic operation classes.
/// PC = plaintext-ciphertext, CC = ciphertext-ciphertext.
struct OpTally {
  std::int64_t add_pc = 0;
  std::int64_t add_cc = 0;
  std::int64_t mul_pc = 0;
  std::int64_t mul_cc = 0;
  std::int64_t rot = 0;

  std::int64_t total() const { return add_pc + add_cc + mul_pc + mul_cc + rot; }

  OpTally& operator+=(const OpTally& o) {
    add_pc += o.add_pc;
    add_cc += o.add_cc;
    mul_pc += o.mul_pc;
    mul_cc += o.mul_cc;
    rot += o.rot;
    return *this;
  }
  friend OpTally operator+(OpTally a, const OpTally& b) { return a += b; }
  friend bool operator==(const OpTally&, const OpTally&) = default;
};

/// Owns the running tally for one execution.  Ops are attributed to the
/// stage selected with begin_stage(); the per-stage rows always sum to
/// the global tally.  Single owner, not thread-safe.
class MeterContext {
 public:
  OpTally tally;

  void begin_stage(const std::string& label) {
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      if (stages_[i].first == label) {
        current_ = i;
        return;
      }
    }
    stages_.emplace_back(label, OpTally{});
    current_ = stages_.size() - 1;
  }

  void count_add_pc() { bump(&OpTally::add_pc); }
  void count_add_cc() { bump(&OpTally::add_cc); }
  void count_mul_pc() { bump(&OpTally::mul_pc); }
  void count_mul_cc() { bump(&OpTally::mul_cc); }
  void count_rot() { bump(&OpTally::rot); }

  const std::vector<std::pair<std::string, OpTally>>& stages() const {
    return stages_;
  }

 private:
  void bump(std::int64_t OpTally::* field) {
    tally.*field += 1;
    if (current_ != npos) stages_[current_].second.*field += 1;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::pair<std::string, OpTally>> stages_;
  std::size_t current_ = npos;
};

}  // namespace hesim
