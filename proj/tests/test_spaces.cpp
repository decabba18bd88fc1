#include "oracles.hpp"
#include "proxsplit/errors.hpp"
#include "proxsplit/spaces.hpp"

#include <doctest.h>

using namespace proxsplit;

namespace {

Factorization factor_of(const Mat& m) {
  return factor_psd(Preconditioner(m, BlockLayout{m.rows()}));
}

}  // namespace

TEST_CASE("factor_psd: rank-one DRS preconditioner") {
  Mat m(2, 2);
  m << 1, -1, -1, 1;
  const auto f = factor_psd(Preconditioner(m, BlockLayout{1, 1}));
  REQUIRE(f.rank() == 1);
  const Mat c = f.c_matrix();
  CHECK((c * c.transpose() - m).norm() < 1e-12);
  CHECK(std::abs(c(0, 0) + c(1, 0)) < 1e-12);
}

TEST_CASE("factor_psd: identity and zero") {
  CHECK(factor_of(Mat::Identity(2, 2)).rank() == 2);
  const Mat c = factor_of(Mat::Identity(2, 2)).c_matrix();
  CHECK((c * c.transpose() - Mat::Identity(2, 2)).norm() < 1e-12);
  const auto z = factor_of(Mat::Zero(2, 2));
  CHECK(z.rank() == 0);
  CHECK(z.apply_cstar(BlockVector(BlockLayout{2}, Vec::Ones(2))).size() == 0);
}

TEST_CASE("Preconditioner rejects asymmetric and indefinite matrices") {
  Mat a(2, 2);
  a << 1, 2, 0, 1;
  CHECK_THROWS_AS(Preconditioner(a, BlockLayout{2}), Error);
  Mat b(2, 2);
  b << 1, 0, 0, -1;
  try {
    Preconditioner(b, BlockLayout{2});
    FAIL("expected NotPSD");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotPSD);
  }
  CHECK_THROWS_AS(Preconditioner(Mat::Identity(3, 3), BlockLayout{2}), Error);
}

TEST_CASE("factor_psd on rank-deficient random matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index d = 1 + trial % 8;
    const Index r = trial % (d + 1);
    const Mat m = r == 0 ? Mat::Zero(d, d) : oracle::random_psd(rng, d, r);
    const auto f = factor_of(m);
    const Mat c = f.c_matrix();
    CHECK(f.rank() == r);
    CHECK((c * c.transpose() - m).norm() <= 1e-10 * m.norm() + 1e-14);
    if (r > 0) {
      Eigen::FullPivLU<Mat> lu(c);
      CHECK(lu.rank() == r);
    }
    const BlockVector u(BlockLayout{d}, oracle::random_vec(rng, d));
    const double umu = u.data().dot(m * u.data());
    const double cu = f.apply_cstar(u).squaredNorm();
    CHECK(std::abs(cu - umu) <= 1e-10 * umu + 1e-14);
  }
}

TEST_CASE("apply_cstar on the DRS factor") {
  Mat c(2, 1);
  c << 1, -1;
  const auto f = Factorization::from_c(c, BlockLayout{1, 1});
  BlockVector u(BlockLayout{1, 1}, Eigen::Vector2d(3, 1));
  CHECK(f.apply_cstar(u)(0) == doctest::Approx(2.0));
  CHECK(f.apply_c(Vec::Zero(1)).norm() == 0.0);
  const auto id = Factorization::from_c(Mat::Identity(3, 3), BlockLayout{3});
  const Vec v(Eigen::Vector3d(1, 2, 3));
  CHECK((id.apply_cstar(BlockVector(BlockLayout{3}, v)) - v).norm() == 0.0);
}

TEST_CASE("lift and solve_c invert the factor on its range") {
  std::mt19937_64 rng(3);
  const Mat m = oracle::random_psd(rng, 6, 3);
  const auto f = factor_of(m);
  const Vec w = oracle::random_vec(rng, f.rank());
  CHECK((f.apply_cstar(f.lift(w)) - w).norm() < 1e-10);
  CHECK((f.solve_c(f.apply_c(w)) - w).norm() < 1e-10);
}

TEST_CASE("m_inner examples") {
  Mat m(2, 2);
  m << 1, -1, -1, 1;
  const Preconditioner p(m, BlockLayout{1, 1});
  const BlockVector u(BlockLayout{1, 1}, Eigen::Vector2d(1, 0));
  const BlockVector v(BlockLayout{1, 1}, Eigen::Vector2d(0, 1));
  CHECK(m_inner(p, u, v) == doctest::Approx(-1.0));
  CHECK(m_inner(p, BlockVector(BlockLayout{1, 1}, Vec::Zero(2)), v) == 0.0);
  const Preconditioner id(Mat::Identity(2, 2), BlockLayout{2});
  const BlockVector w(BlockLayout{2}, Eigen::Vector2d(3, 4));
  CHECK(m_inner(id, w, w) == doctest::Approx(25.0));
  CHECK(m_seminorm(id, w) == doctest::Approx(5.0));
}

TEST_CASE("m_inner is symmetric and bilinear") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 5;
    const Preconditioner p(oracle::random_psd(rng, d, 3), BlockLayout{2, 3});
    const auto rv = [&] { return BlockVector(BlockLayout{2, 3}, oracle::random_vec(rng, d)); };
    const auto u = rv();
    const auto v = rv();
    const auto z = rv();
    const double a = std::normal_distribution<double>()(rng);
    CHECK(m_inner(p, u, v) == doctest::Approx(m_inner(p, v, u)).epsilon(1e-12));
    CHECK(m_inner(p, a * u + z, v) ==
          doctest::Approx(a * m_inner(p, u, v) + m_inner(p, z, v)).epsilon(1e-10));
  }
}

TEST_CASE("parallelogram identity in the M-seminorm") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Preconditioner p(oracle::random_psd(rng, 6, 1 + trial % 6), BlockLayout{3, 3});
    const BlockVector u(BlockLayout{3, 3}, oracle::random_vec(rng, 6));
    const BlockVector v(BlockLayout{3, 3}, oracle::random_vec(rng, 6));
    const double a = unit(rng);
    const auto sq = [&](const BlockVector& x) { return m_inner(p, x, x); };
    const double lhs = sq(a * u + (1.0 - a) * v) + a * (1.0 - a) * sq(u - v);
    const double rhs = a * sq(u) + (1.0 - a) * sq(v);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (std::abs(rhs) + sq(u) + sq(v)));
  }
}

TEST_CASE("block vectors") {
  const BlockLayout layout{2, 3};
  CHECK(layout.total_dim() == 5);
  CHECK(layout.offset(1) == 2);
  BlockVector v = BlockVector::from_blocks({Vec::Ones(2), Vec::Zero(3)});
  CHECK(v.block(0).sum() == 2.0);
  BlockVector w(BlockLayout{5});
  CHECK_THROWS_AS(v += w, Error);
}
