#include "rct/embedding_fusion.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include <gtest/gtest.h>

#include "rct/rng.h"

namespace rct {
namespace {

// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues
// descending with matching eigenvector columns.
void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  values.resize(n);
  vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i) = a(order[i], order[i]);
    vectors.col(i) = v.col(order[i]);
  }
}

Eigen::MatrixXd random_data(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
  Rng rng(seed);
  Eigen::MatrixXd H(n, d);
  // Distinct column scales keep the spectrum well separated.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) H(i, j) = rng.normal() * (1.0 + 0.7 * j) + 0.3 * j;
  return H;
}

struct Shape {
  Eigen::Index n, d, k;
};

class PcaOracle : public ::testing::TestWithParam<Shape> {};

TEST_P(PcaOracle, MatchesJacobi) {
  const auto [n, d, k] = GetParam();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto H = random_data(seed, n, d);
    const auto model = fit_pca(H, k);
    const Eigen::RowVectorXd mean = H.colwise().mean();
    const Eigen::MatrixXd centered = H.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    jacobi_eigen(cov, values, vectors);
    ASSERT_EQ(model.output_dim(), static_cast<std::size_t>(k));
    EXPECT_LT((model.mean - mean.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index c = 0; c < k; ++c) {
      EXPECT_NEAR(model.explained_variance(c), values(c), 1e-8 * std::max(1.0, values(c)));
      // Eigenvectors agree up to sign.
      const Eigen::VectorXd got = model.components.row(c).transpose();
      const Eigen::VectorXd want = vectors.col(c);
      const double err = std::min((got - want).cwiseAbs().maxCoeff(), (got + want).cwiseAbs().maxCoeff());
      EXPECT_LT(err, 1e-8) << "seed " << seed << " component " << c;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, PcaOracle,
                         ::testing::Values(Shape{20, 8, 3}, Shape{40, 12, 5}, Shape{32, 16, 16}));

TEST(Pca, OrthonormalSortedAndSigned) {
  const auto H = random_data(7, 50, 10);
  const auto m = fit_pca(H, 6);
  const Eigen::MatrixXd gram = m.components * m.components.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index c = 1; c < 6; ++c) {
    EXPECT_GE(m.explained_variance(c - 1), m.explained_variance(c));
  }
  for (Eigen::Index c = 0; c < 6; ++c) {
    Eigen::Index arg;
    m.components.row(c).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(m.components(c, arg), 0.0);
  }
  EXPECT_FALSE(m.rank_deficient);
}

TEST(Pca, TransformIsCenteredWithComponentVariances) {
  const auto H = random_data(8, 60, 7);
  const auto m = fit_pca(H, 4);
  const Eigen::MatrixXd Z = transform(m, H);
  ASSERT_EQ(Z.rows(), 60);
  ASSERT_EQ(Z.cols(), 4);
  const Eigen::RowVectorXd mean = Z.colwise().mean();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index c = 0; c < 4; ++c) {
    EXPECT_NEAR(Z.col(c).squaredNorm() / 59.0, m.explained_variance(c), 1e-10);
  }
  const Eigen::VectorXd one = transform(m, Eigen::VectorXd(H.row(3).transpose()));
  EXPECT_LT((one.transpose() - Z.row(3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pca, FullRankIsIsometry) {
  const auto H = random_data(9, 30, 6);
  const auto m = fit_pca(H, 6);
  const Eigen::MatrixXd Z = transform(m, H);
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (Eigen::Index j = 0; j < 30; j += 7) {
      EXPECT_NEAR((Z.row(i) - Z.row(j)).norm(), (H.row(i) - H.row(j)).norm(), 1e-10);
    }
  }
  // Reconstruction from all components is exact.
  const Eigen::MatrixXd back = (Z * m.components).rowwise() + m.mean.transpose();
  EXPECT_LT((back - H).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pca, RankDeficientAndConstantInput) {
  Eigen::MatrixXd H = random_data(10, 20, 2);
  Eigen::MatrixXd wide(20, 5);
  wide << H, H.col(0) * 2.0, H.col(1) - H.col(0), Eigen::VectorXd::Constant(20, 3.0);
  const auto m = fit_pca(wide, 4);
  EXPECT_TRUE(m.rank_deficient);
  EXPECT_NEAR(m.explained_variance(2), 0.0, 1e-10);
  const Eigen::MatrixXd gram = m.components * m.components.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);

  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(10, 4, 1.5);
  const auto flat = fit_pca(same, 2);
  EXPECT_TRUE(flat.rank_deficient);
  EXPECT_LT(transform(flat, same).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pca, RejectsBadK) {
  const auto H = random_data(11, 10, 4);
  EXPECT_THROW(fit_pca(H, 5), std::invalid_argument);
  EXPECT_THROW(fit_pca(Eigen::MatrixXd(1, 4), 2), std::invalid_argument);
}

TEST(Pca, SerializeRoundTripIsExact) {
  const auto m = fit_pca(random_data(12, 25, 8), 3);
  const auto path = std::filesystem::temp_directory_path() / "rct_pca_test.txt";
  m.save(path);
  const auto back = PCAModel::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.mean, m.mean);
  EXPECT_EQ(back.components, m.components);
  EXPECT_EQ(back.explained_variance, m.explained_variance);
  EXPECT_EQ(back.serialize(), m.serialize());
}

TEST(Augment, ShapesAndSources) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(6, 3);
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Random(6, 2);
  const auto a = augment(X, Z, {"age", "bmi", "sex=F"});
  ASSERT_EQ(a.values.rows(), 6);
  ASSERT_EQ(a.values.cols(), 5);
  EXPECT_EQ(a.values.leftCols(3), X);
  EXPECT_EQ(a.values.rightCols(2), Z);
  EXPECT_EQ(a.names, (std::vector<std::string>{"age", "bmi", "sex=F", "embedding_pc1",
                                               "embedding_pc2"}));
  EXPECT_EQ(a.sources[2], ColumnSource::kTabular);
  EXPECT_EQ(a.sources[3], ColumnSource::kEmbedding);

  const auto back = AugmentedMatrix::columns_from(a.serialize_columns());
  EXPECT_EQ(back.names, a.names);
  EXPECT_EQ(back.sources, a.sources);
}

TEST(Augment, ZeroComponentsAndMismatch) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(4, 3);
  const auto a = augment(X, Eigen::MatrixXd(4, 0));
  EXPECT_EQ(a.values, X);
  EXPECT_EQ(a.sources.size(), 3u);
  EXPECT_THROW(augment(X, Eigen::MatrixXd::Zero(5, 2)), std::invalid_argument);
}

}  // namespace
}  // namespace rct
