#include "hesim/matvec.hpp"

#include <cmath>
#include <string>

#include "hesim/errors.hpp"

namespace hesim {

Eigen::Index next_power_of_two(Eigen::Index x) {
  Eigen::Index p = 1;
  while (p < x) p <<= 1;
  return p;
}

namespace {

Eigen::Index ceil_div(Eigen::Index a, Eigen::Index b) { return (a + b - 1) / b; }

Eigen::Index ceil_log2(Eigen::Index x) {
  Eigen::Index b = 0;
  while ((Eigen::Index{1} << b) < x) ++b;
  return b;
}

// The log-depth fold reads slots up to block * 2^B - 1, so the no-padding
// branch is usable only when that window fits without wrapping into the
// populated region.
bool plain_branch_fits(Eigen::Index m, Eigen::Index n, Eigen::Index n_slots) {
  if (n_slots < m + n - 1) return false;
  const Eigen::Index b = ceil_log2(ceil_div(m + n - 1, m));
  return m << b <= n_slots;
}

void check_dims(Eigen::Index m, Eigen::Index n, Eigen::Index n_slots) {
  if (m > n_slots || n > n_slots) {
    throw CapacityError("matrix " + std::to_string(m) + "x" +
                        std::to_string(n) + " exceeds " +
                        std::to_string(n_slots) + " slots");
  }
}

}  // namespace

GeneralizedDiagonals extract_diagonals(const Eigen::MatrixXd& A,
                                       Eigen::Index n_slots) {
  const Eigen::Index m = A.rows(), n = A.cols();
  check_dims(m, n, n_slots);
  GeneralizedDiagonals out;
  out.m_eff = plain_branch_fits(m, n, n_slots) ? m : next_power_of_two(m);
  if (out.m_eff > n_slots) {
    throw CapacityError("padded row count " + std::to_string(out.m_eff) +
                        " exceeds " + std::to_string(n_slots) + " slots");
  }
  out.masks.reserve(out.m_eff);
  for (Eigen::Index i = 0; i < out.m_eff; ++i) {
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(n_slots);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index row = (i + j) % out.m_eff;
      if (row < m) mask[j] = A(row, j);
    }
    out.masks.emplace_back(std::move(mask), Kind::Plaintext);
  }
  return out;
}

SlotVector rotate_and_sum(const SlotVector& v, Eigen::Index span,
                          Eigen::Index block, MeterContext& ctx) {
  if (block < 1 || block > v.n_slots()) {
    throw std::out_of_range("rotate_and_sum: block " + std::to_string(block) +
                            " outside [1, " + std::to_string(v.n_slots()) +
                            "]");
  }
  const Eigen::Index folds = ceil_log2(ceil_div(span, block));
  SlotVector s = v;
  for (Eigen::Index t = folds - 1; t >= 0; --t) {
    s = add(s, rotate_left(s, block << t, ctx), ctx);
  }
  return s;
}

SlotVector hs_matvec(const Eigen::MatrixXd& A, const SlotVector& v,
                     MeterContext& ctx, const HsOptions& opts) {
  const Eigen::Index m = A.rows(), n = A.cols(), N = v.n_slots();
  check_dims(m, n, N);

  const GeneralizedDiagonals diag = extract_diagonals(A, N);
  const Eigen::Index m_eff = diag.m_eff;
  const bool padded = m_eff != m || !plain_branch_fits(m, n, N);
  const Eigen::Index folds = padded ? ceil_log2(N / m_eff)
                                    : ceil_log2(ceil_div(m + n - 1, m));

  SlotVector s = zeros(N, Kind::Ciphertext);
  bool first = true;
  for (Eigen::Index i = 0; i < m_eff; ++i) {
    if (opts.skip_zero_diagonals && diag.masks[i].is_zero()) continue;
    SlotVector t = rotate_right(mul(diag.masks[i], v, ctx), i, ctx);
    s = first ? std::move(t) : add(s, t, ctx);
    first = false;
  }
  for (Eigen::Index t = folds - 1; t >= 0; --t) {
    s = add(s, rotate_left(s, m_eff << t, ctx), ctx);
  }
  return s;
}

std::vector<SlotVector> lola_dense_matvec(const Eigen::MatrixXd& A,
                                          const SlotVector& v,
                                          MeterContext& ctx) {
  const Eigen::Index m = A.rows(), n = A.cols(), N = v.n_slots();
  check_dims(m, n, N);
  const Eigen::Index delta = next_power_of_two(n);
  std::vector<SlotVector> out;
  out.reserve(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const SlotVector row = pack(A.row(i).transpose(), N, Kind::Plaintext);
    SlotVector p = rotate_and_sum(mul(row, v, ctx), delta, 1, ctx);
    // Only slot 0 is guaranteed by the contract; later slots hold fold
    // residue and are cleared at the value level.
    out.push_back(p.masked_prefix(1));
  }
  return out;
}

InterleavedResult lola_stacked_matvec(const Eigen::MatrixXd& A,
                                      const SlotVector& v, MeterContext& ctx) {
  const Eigen::Index m = A.rows(), n = A.cols(), N = v.n_slots();
  check_dims(m, n, N);
  const Eigen::Index delta = next_power_of_two(n);
  if (delta > N) {
    throw CapacityError("stacked: padded width " + std::to_string(delta) +
                        " exceeds " + std::to_string(N) + " slots");
  }
  const Eigen::Index k = N / delta;
  const Eigen::Index batches = ceil_div(m, k);
  const SlotVector vd = v.masked_prefix(n);

  InterleavedResult res{zeros(N, Kind::Ciphertext), {}};
  res.slot_of_row.resize(m);
  for (Eigen::Index b = 0; b < batches; ++b) {
    // The accounting re-stacks the input for every batch (k-1 rotations and
    // additions each time), so the simulation does too.
    SlotVector stacked = vd;
    for (Eigen::Index j = 1; j < k; ++j) {
      stacked = add(stacked, rotate_right(vd, j * delta, ctx), ctx);
    }
    Eigen::VectorXd rows_pt = Eigen::VectorXd::Zero(N);
    for (Eigen::Index j = 0; j < k && b * k + j < m; ++j) {
      rows_pt.segment(j * delta, n) = A.row(b * k + j).transpose();
    }
    SlotVector p = mul(SlotVector(std::move(rows_pt), Kind::Plaintext),
                       stacked, ctx);
    p = rotate_and_sum(p, delta, 1, ctx);
    // Keep the segment-start slots; the intermediate fold residue carries
    // no accounted cost in the stacked method, so clearing it is free.
    Eigen::VectorXd clean = Eigen::VectorXd::Zero(N);
    for (Eigen::Index j = 0; j < k && b * k + j < m; ++j) {
      clean[j * delta] = p[j * delta];
      res.slot_of_row[b * k + j] = j * delta + b;
    }
    SlotVector batch(std::move(clean), Kind::Ciphertext);
    res.ct = b == 0 ? std::move(batch)
                    : add(res.ct, rotate_right(batch, b, ctx), ctx);
  }
  return res;
}

MatvecCost predict_hs(Eigen::Index m, Eigen::Index n, Eigen::Index n_slots) {
  check_dims(m, n, n_slots);
  MatvecCost c;
  if (plain_branch_fits(m, n, n_slots)) {
    const Eigen::Index folds = ceil_log2(ceil_div(m + n - 1, m));
    c.rotations = m - 1 + folds;
    c.multiplications = m;
    c.additions = m - 1 + folds;
  } else {
    const Eigen::Index mp = next_power_of_two(m);
    if (mp > n_slots) {
      throw CapacityError("padded row count exceeds slot count");
    }
    const Eigen::Index folds = ceil_log2(n_slots / mp);
    c.rotations = mp - 1 + folds;  // upper bound: zero diagonals may be skipped
    c.multiplications = mp;
    c.additions = mp - 1 + folds;
  }
  return c;
}

MatvecCost predict_lola_dense(Eigen::Index m, Eigen::Index n) {
  MatvecCost c;
  c.rotations = m * ceil_log2(n);
  c.multiplications = m;
  c.additions = m * ceil_log2(n);
  return c;
}

MatvecCost predict_lola_stacked(Eigen::Index m, Eigen::Index n,
                                Eigen::Index n_slots) {
  const Eigen::Index delta = next_power_of_two(n);
  if (delta > n_slots) {
    throw CapacityError("stacked: padded width exceeds slot count");
  }
  const Eigen::Index k = n_slots / delta;
  const Eigen::Index batches = ceil_div(m, k);
  MatvecCost c;
  c.rotations = batches * (k + ceil_log2(n) - 1) + batches - 1;
  c.multiplications = batches;
  c.additions = batches * (k + ceil_log2(n) - 1) + batches - 1;
  return c;
}

WorkedExample worked_example() {
  WorkedExample w;
  w.hs = predict_hs(w.m, w.n, w.n_slots);
  w.lola_dense = predict_lola_dense(w.m, w.n);
  w.lola_stacked = predict_lola_stacked(w.m, w.n, w.n_slots);
  return w;
}

}  // namespace hesim
