#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hesim/slotvec.hpp"

using namespace hesim;

namespace {

SlotVector ct(std::initializer_list<double> vals, Eigen::Index n) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return SlotVector(v, Kind::Ciphertext);
}

SlotVector random_ct(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return SlotVector(v, Kind::Ciphertext);
}

}  // namespace

TEST_CASE("slot count must be a power of two") {
  CHECK_NOTHROW(SlotVector(Eigen::VectorXd::Zero(8), Kind::Ciphertext));
  CHECK_THROWS(SlotVector(Eigen::VectorXd::Zero(6), Kind::Ciphertext));
  CHECK_THROWS(SlotVector(Eigen::VectorXd::Zero(0), Kind::Plaintext));
}

TEST_CASE("rotate_right basics") {
  MeterContext ctx;
  const SlotVector v = ct({1, 2, 3, 4}, 4);

  SlotVector r0 = rotate_right(v, 0, ctx);
  CHECK(r0.slots() == v.slots());
  CHECK(ctx.tally.rot == 0);

  SlotVector r1 = rotate_right(v, 1, ctx);
  CHECK(r1[0] == 4);
  CHECK(r1[1] == 1);
  CHECK(r1[2] == 2);
  CHECK(r1[3] == 3);
  CHECK(ctx.tally.rot == 1);

  CHECK_THROWS_AS(rotate_right(v, 4, ctx), std::out_of_range);
  CHECK_THROWS_AS(rotate_right(v, -1, ctx), std::out_of_range);
}

TEST_CASE("rotate_left basics") {
  MeterContext ctx;
  const SlotVector v = ct({1, 2, 3, 4}, 4);
  SlotVector l1 = rotate_left(v, 1, ctx);
  CHECK(l1[0] == 2);
  CHECK(l1[3] == 1);
  CHECK(ctx.tally.rot == 1);

  SlotVector l0 = rotate_left(v, 0, ctx);
  CHECK(l0.slots() == v.slots());
  CHECK(ctx.tally.rot == 1);
}

TEST_CASE("rotations compose additively mod N") {
  std::mt19937_64 rng(7);
  for (Eigen::Index n : {4, 8, 16, 8192}) {
    for (int trial = 0; trial < 20; ++trial) {
      const SlotVector v = random_ct(n, rng);
      const Eigen::Index a = static_cast<Eigen::Index>(rng() % n);
      const Eigen::Index b = static_cast<Eigen::Index>(rng() % n);
      MeterContext ctx;
      const SlotVector lhs = rotate_right(rotate_right(v, a, ctx), b, ctx);
      const SlotVector rhs = rotate_right(v, (a + b) % n, ctx);
      CHECK(lhs.slots() == rhs.slots());

      const SlotVector inv = rotate_left(rotate_right(v, a, ctx), a, ctx);
      CHECK(inv.slots() == v.slots());
    }
  }
}

TEST_CASE("plaintext rotations are free") {
  MeterContext ctx;
  const SlotVector pt = pack(Eigen::VectorXd::Ones(4), 4, Kind::Plaintext);
  rotate_right(pt, 2, ctx);
  rotate_left(pt, 3, ctx);
  CHECK(ctx.tally.rot == 0);
}

TEST_CASE("add metering by operand kinds") {
  MeterContext ctx;
  const SlotVector a = ct({1, 2}, 2);
  const SlotVector b = ct({3, 4}, 2);
  SlotVector s = add(a, b, ctx);
  CHECK(s[0] == 4);
  CHECK(s[1] == 6);
  CHECK(ctx.tally.add_cc == 1);

  const SlotVector zero_pt = zeros(2, Kind::Plaintext);
  SlotVector s2 = add(a, zero_pt, ctx);
  CHECK(s2.slots() == a.slots());
  CHECK(s2.kind() == Kind::Ciphertext);
  CHECK(ctx.tally.add_pc == 1);

  add(zero_pt, zero_pt, ctx);  // plain-plain folds into encoding
  CHECK(ctx.tally.add_pc == 1);
  CHECK(ctx.tally.add_cc == 1);
}

TEST_CASE("left-fold sum of k ciphertexts meters k-1 adds") {
  std::mt19937_64 rng(11);
  for (int k = 1; k <= 16; ++k) {
    MeterContext ctx;
    SlotVector acc = random_ct(8, rng);
    for (int i = 1; i < k; ++i) acc = add(acc, random_ct(8, rng), ctx);
    CHECK(ctx.tally.add_cc == k - 1);
  }
}

TEST_CASE("mul metering and values") {
  MeterContext ctx;
  const SlotVector a = ct({2, 3}, 2);
  const SlotVector one_pt = pack(Eigen::VectorXd::Ones(2), 2, Kind::Plaintext);
  SlotVector p = mul(a, one_pt, ctx);
  CHECK(p.slots() == a.slots());
  CHECK(ctx.tally.mul_pc == 1);

  SlotVector sq = mul(a, a, ctx);
  CHECK(sq[0] == 4);
  CHECK(sq[1] == 9);
  CHECK(ctx.tally.mul_cc == 1);
}

TEST_CASE("mul distributes over add") {
  std::mt19937_64 rng(13);
  MeterContext ctx;
  for (int trial = 0; trial < 50; ++trial) {
    const SlotVector a = random_ct(16, rng);
    const SlotVector b = random_ct(16, rng);
    const SlotVector c = random_ct(16, rng);
    const SlotVector lhs = mul(a, add(b, c, ctx), ctx);
    const SlotVector rhs = add(mul(a, b, ctx), mul(a, c, ctx), ctx);
    CHECK((lhs.slots() - rhs.slots()).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("pack basics") {
  Eigen::VectorXd v(3);
  v << 1, 2, 3;
  const SlotVector p = pack(v, 4, Kind::Ciphertext);
  CHECK(p[0] == 1);
  CHECK(p[2] == 3);
  CHECK(p[3] == 0);

  const SlotVector empty = pack(Eigen::VectorXd(), 4, Kind::Ciphertext);
  CHECK(empty.is_zero());

  Eigen::VectorXd full(4);
  full << 4, 3, 2, 1;
  CHECK(pack(full, 4, Kind::Ciphertext).slots() == full);

  CHECK_THROWS(pack(full, 2, Kind::Ciphertext));
}

TEST_CASE("masked_prefix is free and zeroes the tail") {
  MeterContext ctx;
  const SlotVector v = ct({1, 2, 3, 4}, 4);
  const SlotVector m = v.masked_prefix(2);
  CHECK(m[0] == 1);
  CHECK(m[1] == 2);
  CHECK(m[2] == 0);
  CHECK(m[3] == 0);
  CHECK(ctx.tally.total() == 0);
}
