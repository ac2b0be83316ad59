#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hesim/refmodel.hpp"

using namespace hesim;

namespace {

Tensor3 random_image(Eigen::Index c, Eigen::Index d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor3 t(c, d, d);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data[i] = dist(rng);
  return t;
}

FilterBank ones_filter(Eigen::Index c_out, Eigen::Index c_in, Eigen::Index k) {
  return {c_out, c_in, k, Eigen::VectorXd::Ones(c_out * c_in * k * k),
          Eigen::VectorXd::Zero(c_out)};
}

}  // namespace

TEST_CASE("ref_conv 2x2 ones filter") {
  Tensor3 img(1, 2, 2);
  img.data << 1, 2, 3, 4;
  const Tensor3 out = ref_conv(img, ones_filter(1, 1, 2), 1);
  CHECK(out.c == 1);
  CHECK(out.h == 1);
  CHECK(out.data[0] == doctest::Approx(10));
}

TEST_CASE("ref_conv delta filter crops a shifted window") {
  std::mt19937_64 rng(3);
  const Tensor3 img = random_image(1, 5, rng);
  FilterBank f{1, 1, 3, Eigen::VectorXd::Zero(9), Eigen::VectorXd::Zero(1)};
  f.weights[1 * 3 + 2] = 1.0;  // tap (ky=1, kx=2)
  const Tensor3 out = ref_conv(img, f, 1);
  for (Eigen::Index oy = 0; oy < 3; ++oy) {
    for (Eigen::Index ox = 0; ox < 3; ++ox) {
      CHECK(out.at(0, oy, ox) == doctest::Approx(img.at(0, oy + 1, ox + 2)));
    }
  }
}

TEST_CASE("ref_conv bias is added per output channel") {
  Tensor3 img(1, 2, 2);
  img.data << 1, 1, 1, 1;
  FilterBank f = ones_filter(2, 1, 2);
  f.bias << 0.5, -1.0;
  const Tensor3 out = ref_conv(img, f, 1);
  CHECK(out.at(0, 0, 0) == doctest::Approx(4.5));
  CHECK(out.at(1, 0, 0) == doctest::Approx(3.0));
}

TEST_CASE("ref_avgpool arithmetic") {
  Tensor3 img(1, 2, 2);
  img.data << 1, 2, 3, 4;
  const Tensor3 out = ref_avgpool(img, 2, 2);
  CHECK(out.h == 1);
  CHECK(out.data[0] == doctest::Approx(2.5));
}

TEST_CASE("ref_avgpool stride window bookkeeping") {
  std::mt19937_64 rng(5);
  const Tensor3 img = random_image(2, 6, rng);
  const Tensor3 out = ref_avgpool(img, 3, 2);
  CHECK(out.h == 2);
  double want = 0;
  for (Eigen::Index ky = 0; ky < 3; ++ky)
    for (Eigen::Index kx = 0; kx < 3; ++kx) want += img.at(1, 2 + ky, 2 + kx);
  CHECK(out.at(1, 1, 1) == doctest::Approx(want / 9.0));
}

TEST_CASE("ref_square") {
  Tensor3 img(1, 1, 3);
  img.data << 2, -3, 0;
  const Tensor3 out = ref_square(img);
  CHECK(out.data[0] == 4);
  CHECK(out.data[1] == 9);
  CHECK(out.data[2] == 0);
  CHECK(ref_square(Tensor3(2, 3, 3)).data.isZero());
}

TEST_CASE("ref_dense identity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(5);
  for (Eigen::Index i = 0; i < 5; ++i) v[i] = dist(rng);
  const Eigen::VectorXd out =
      ref_dense(v, Eigen::MatrixXd::Identity(5, 5), Eigen::VectorXd::Zero(5));
  CHECK((out - v).lpNorm<Eigen::Infinity>() < 1e-15);
}
