#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hesim/slotvec.hpp"

namespace hesim {

/// Generalized-diagonal decomposition of an m x n matrix, ready for the
/// Halevi-Shoup kernel.  mask i holds A[(i + j) mod m_eff, j] in slot j for
/// j < n and zero elsewhere.  m_eff is m when no padding is needed, else m
/// rounded up to a power of two (with implicit all-zero rows appended).
struct GeneralizedDiagonals {
  Eigen::Index m_eff = 0;
  std::vector<SlotVector> masks;  // plaintexts, one per diagonal
};

struct MatvecCost {
  std::int64_t rotations = 0;
  std::int64_t multiplications = 0;
  std::int64_t additions = 0;
};

struct HsOptions {
  // All-zero diagonals cost nothing when skipped; the acceptance suite for
  // the padding branch disables this to observe the closed-form count.
  bool skip_zero_diagonals = true;
};

/// LoLa-stacked result: one ciphertext holding the m product entries in an
/// interleaved order; slot_of_row[i] gives the slot of entry i.
struct InterleavedResult {
  SlotVector ct;
  std::vector<Eigen::Index> slot_of_row;
};

Eigen::Index next_power_of_two(Eigen::Index x);

GeneralizedDiagonals extract_diagonals(const Eigen::MatrixXd& A,
                                       Eigen::Index n_slots);

/// Log-depth fold: left-rotate by block * 2^t and accumulate, so that slots
/// 0..block-1 end up holding the per-residue-class sums over slots < span.
SlotVector rotate_and_sum(const SlotVector& v, Eigen::Index span,
                          Eigen::Index block, MeterContext& ctx);

/// Halevi-Shoup matrix-vector product with padding fallback.  Input is a
/// dense ciphertext (values in slots 0..n-1); output holds (A v)_i in slot
/// i for i < m.
SlotVector hs_matvec(const Eigen::MatrixXd& A, const SlotVector& v,
                     MeterContext& ctx, const HsOptions& opts = {});

/// Row-major method: one masked row multiplication per row followed by a
/// rotate-and-sum, so slot 0 of output i holds (A v)_i.  The paper's sparse
/// representation would replicate that value into every slot; the
/// replication is unmetered there, so it is not performed here.
std::vector<SlotVector> lola_dense_matvec(const Eigen::MatrixXd& A,
                                          const SlotVector& v,
                                          MeterContext& ctx);

InterleavedResult lola_stacked_matvec(const Eigen::MatrixXd& A,
                                      const SlotVector& v, MeterContext& ctx);

MatvecCost predict_hs(Eigen::Index m, Eigen::Index n, Eigen::Index n_slots);
MatvecCost predict_lola_dense(Eigen::Index m, Eigen::Index n);
MatvecCost predict_lola_stacked(Eigen::Index m, Eigen::Index n,
                                Eigen::Index n_slots);

/// The m=64, n=4096, N=16384 fully-connected example: canonical formula
/// values next to the figures quoted in prose, which disagree for two of
/// the methods.
struct WorkedExample {
  Eigen::Index m = 64, n = 4096, n_slots = 16384;
  MatvecCost hs;            // formula: 70 rotations, 64 multiplications
  MatvecCost lola_dense;    // 768 rotations, 64 multiplications
  MatvecCost lola_stacked;  // formula: 255 rotations, 16 multiplications
  std::int64_t prose_hs_rotations = 77;
  std::int64_t prose_stacked_rotations = 1023;
  std::int64_t prose_stacked_multiplications = 64;
};
WorkedExample worked_example();

}  // namespace hesim
