#include <doctest.h>

#include <cmath>

#include "simplerec/encoder.hpp"
#include "simplerec/errors.hpp"

using namespace simplerec;

namespace {

AeParams zero_ae(int d, int dp) {
  AeParams p;
  p.w_encode = Eigen::MatrixXd::Zero(dp, d);
  p.b_encode = Eigen::MatrixXd::Zero(dp, 1);
  p.w_decode = Eigen::MatrixXd::Zero(d, dp);
  p.b_decode = Eigen::MatrixXd::Zero(d, 1);
  return p;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("zero weights and bias encode everything to zero") {
  const auto p = zero_ae(6, 3);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 4);
  CHECK(encode(x, p) == Eigen::MatrixXd::Zero(3, 4));
}

TEST_CASE("tanh(0) = 0 fixed point with identity-shaped weights") {
  AeParams p = zero_ae(3, 3); // square for this check only
  p.w_encode = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 2);
  CHECK(encode(x, p) == Eigen::MatrixXd::Zero(3, 2));
}

TEST_CASE("encode matches a hand-computed tanh(Wx+b) per column") {
  Rng rng(12);
  const auto p = init_ae_params(8, 5, rng);
  Eigen::MatrixXd x(8, 5);
  for (int c = 0; c < 5; ++c)
    for (int r = 0; r < 8; ++r) x(r, c) = rng.normal();
  const Eigen::MatrixXd z = encode(x, p);
  for (int c = 0; c < 5; ++c)
    for (int r = 0; r < 5; ++r) {
      double pre = p.b_encode(r, 0);
      for (int k = 0; k < 8; ++k) pre += p.w_encode(r, k) * x(k, c);
      CHECK(z(r, c) == doctest::Approx(std::tanh(pre)).epsilon(1e-12));
    }
}

TEST_CASE("decoding zero yields the decoder bias") {
  AeParams p = zero_ae(4, 2);
  p.b_decode << 1, 2, 3, 4;
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 3);
  const Eigen::MatrixXd out = decode(z, p);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 4; ++r) CHECK(out(r, c) == p.b_decode(r, 0));
}

TEST_CASE("decode matches hand-computed affine map") {
  Rng rng(13);
  const auto p = init_ae_params(7, 3, rng);
  Eigen::MatrixXd z(3, 4);
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 3; ++r) z(r, c) = rng.normal();
  const Eigen::MatrixXd out = decode(z, p);
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 7; ++r) {
      double expected = p.b_decode(r, 0);
      for (int k = 0; k < 3; ++k) expected += p.w_decode(r, k) * z(k, c);
      CHECK(out(r, c) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("small-signal linearization: decode(encode(x)) ~ tanh(x) for 1x1") {
  AeParams p = zero_ae(1, 1);
  // d = d' is rejected by init; construct directly for the algebraic check
  p.w_encode(0, 0) = 1.0;
  p.w_decode(0, 0) = 1.0;
  for (const double x : {1e-3, -2e-3, 5e-4}) {
    Eigen::MatrixXd in(1, 1);
    in << x;
    const double out = decode(encode(in, p), p)(0, 0);
    CHECK(out == doctest::Approx(std::tanh(x)));
    CHECK(out == doctest::Approx(x).epsilon(1e-5));
  }
}

TEST_CASE("perfect reconstruction means zero loss") {
  AeParams p = zero_ae(3, 2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 5);
  CHECK(ae_source_loss(x, p) == 0.0);
}

TEST_CASE("zero input against decoder bias gives mean(b^2)") {
  AeParams p = zero_ae(4, 2);
  p.b_decode << 1, 2, 3, 4;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 3);
  // each column reconstructs to b, so MSE = mean over entries of b_r^2
  CHECK(ae_source_loss(x, p) == doctest::Approx((1.0 + 4 + 9 + 16) / 4.0));
}

TEST_CASE("ae loss equals an independent scalar-loop sum") {
  Rng rng(14);
  const auto p = init_ae_params(6, 3, rng);
  Eigen::MatrixXd x(6, 7);
  for (int c = 0; c < 7; ++c)
    for (int r = 0; r < 6; ++r) x(r, c) = rng.normal();
  const Eigen::MatrixXd xhat = decode(encode(x, p), p);
  double expected = 0.0;
  for (int c = 0; c < 7; ++c)
    for (int r = 0; r < 6; ++r) expected += (x(r, c) - xhat(r, c)) * (x(r, c) - xhat(r, c));
  expected /= 6.0 * 7.0;
  CHECK(ae_source_loss(x, p) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(ae_source_loss(x, p) >= 0.0);
}

TEST_CASE("multi-source loss averages the per-source MSEs") {
  Rng rng(15);
  const auto p1 = init_ae_params(5, 2, rng);
  const auto p2 = init_ae_params(4, 2, rng);
  Eigen::MatrixXd x1 = Eigen::MatrixXd::Random(5, 3);
  Eigen::MatrixXd x2 = Eigen::MatrixXd::Random(4, 6);
  const double combined = ae_loss({{&x1, &p1}, {&x2, &p2}});
  CHECK(combined == doctest::Approx((ae_source_loss(x1, p1) + ae_source_loss(x2, p2)) / 2.0));
  CHECK_THROWS_AS(static_cast<void>(ae_loss({})), ConfigError);
}

TEST_CASE("encoding is permutation-equivariant over columns") {
  Rng rng(16);
  const auto p = init_ae_params(6, 3, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 5);
  const std::vector<int> perm = {3, 1, 4, 0, 2};
  Eigen::MatrixXd permuted(6, 5);
  for (int c = 0; c < 5; ++c) permuted.col(c) = x.col(perm[c]);
  const Eigen::MatrixXd z = encode(x, p);
  const Eigen::MatrixXd zp = encode(permuted, p);
  for (int c = 0; c < 5; ++c) CHECK(zp.col(c) == z.col(perm[c]));
}

TEST_CASE("dimension mismatches are rejected") {
  Rng rng(17);
  const auto p = init_ae_params(6, 3, rng);
  const Eigen::MatrixXd wrong = Eigen::MatrixXd::Zero(5, 2);
  CHECK_THROWS_AS(static_cast<void>(encode(wrong, p)), ConfigError);
  CHECK_THROWS_AS(static_cast<void>(decode(wrong, p)), ConfigError);
  CHECK_THROWS_AS(static_cast<void>(init_ae_params(3, 3, rng)), ConfigError);
}

}  // TEST_SUITE
