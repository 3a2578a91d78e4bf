#include <gtest/gtest.h>

#include <numeric>

#include "knn_oracle.hpp"
#include "test_util.hpp"
#include "modelsearch/error.hpp"
#include "modelsearch/proxy.hpp"
#include "modelsearch/random.hpp"

using namespace modelsearch;

namespace {

EmbeddingMatrix blobs(int n, int d, double margin, std::uint64_t seed, Split split) {
  Rng rng(seed);
  EmbeddingMatrix m;
  m.model_id = "m";
  m.task_id = "t";
  m.split = split;
  m.n_classes = 2;
  m.features.resize(n, d);
  m.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    m.labels[i] = i % 2;
    for (int j = 0; j < d; ++j) m.features(i, j) = static_cast<float>(0.25 * rng.normal());
    m.features(i, 0) += static_cast<float>(m.labels[i] == 0 ? -margin : margin);
  }
  return m;
}

EmbeddingMatrix grid_matrix(int n, int d, int classes, Rng& rng) {
  EmbeddingMatrix m;
  m.model_id = "m";
  m.task_id = "t";
  m.n_classes = static_cast<std::uint32_t>(classes);
  m.features.resize(n, d);
  m.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    m.labels[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    for (int j = 0; j < d; ++j) m.features(i, j) = static_cast<float>(static_cast<int>(rng.below(5)) - 2);
  }
  return m;
}

// Straight-line softmax SGD in double, written independently of the library
// kernel: explicit loops over rows, classes and features.
struct ReferenceModel {
  std::vector<std::vector<double>> w;  // d x C
  std::vector<double> b;
};

ReferenceModel reference_sgd(const FeatureMatrix& x, const LabelVector& y, int classes, double lr, int steps,
                             int batch_size, std::uint64_t seed) {
  const int n = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
  const int batch = std::min(batch_size, n);
  ReferenceModel m{std::vector<std::vector<double>>(d, std::vector<double>(classes, 0.0)),
                   std::vector<double>(classes, 0.0)};
  Rng rng(seed);
  std::vector<Eigen::Index> perm(n);
  std::size_t cursor = perm.size();
  for (int s = 0; s < steps; ++s) {
    std::vector<int> rows;
    while (static_cast<int>(rows.size()) < batch) {
      if (cursor == perm.size()) {
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        rng.shuffle(std::span<Eigen::Index>(perm));
        cursor = 0;
      }
      rows.push_back(static_cast<int>(perm[cursor++]));
    }
    std::vector<std::vector<double>> gw(d, std::vector<double>(classes, 0.0));
    std::vector<double> gb(classes, 0.0);
    for (int r : rows) {
      std::vector<double> z(classes);
      double zmax = -1e300;
      for (int c = 0; c < classes; ++c) {
        z[c] = m.b[c];
        for (int j = 0; j < d; ++j) z[c] += x(r, j) * m.w[j][c];
        zmax = std::max(zmax, z[c]);
      }
      double total = 0;
      for (int c = 0; c < classes; ++c) total += std::exp(z[c] - zmax);
      for (int c = 0; c < classes; ++c) {
        const double g = std::exp(z[c] - zmax) / total - (c == y[r] ? 1.0 : 0.0);
        gb[c] += g;
        for (int j = 0; j < d; ++j) gw[j][c] += g * x(r, j);
      }
    }
    for (int c = 0; c < classes; ++c) {
      m.b[c] -= lr * gb[c] / batch;
      for (int j = 0; j < d; ++j) m.w[j][c] -= lr * gw[j][c] / batch;
    }
  }
  return m;
}

}  // namespace

TEST(Knn, MatchesBruteForceOnGridDataWithTies) {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    const int d = 1 + static_cast<int>(rng.below(6));
    const int classes = 2 + static_cast<int>(rng.below(3));
    const auto train = grid_matrix(n, d, classes, rng);
    const auto query = grid_matrix(15, d, classes, rng);
    for (int k : {1, 2, 3}) {
      if (k > n) continue;
      EXPECT_EQ(knn_predict(train.features, train.labels, classes, query.features, k),
                testutil::brute_force_knn(train.features, train.labels, classes, query.features, k))
          << "trial " << trial << " k " << k;
    }
  }
}

TEST(Knn, EqualDistanceGoesToLowestIndexAndVoteTieToSmallestLabel) {
  FeatureMatrix train(3, 1);
  train << -1, 1, 5;
  LabelVector labels(3);
  labels << 2, 0, 1;
  FeatureMatrix q(1, 1);
  q << 0;
  EXPECT_EQ(knn_predict(train, labels, 3, q, 1)[0], 2);  // rows 0 and 1 tie, row 0 wins
  EXPECT_EQ(knn_predict(train, labels, 3, q, 2)[0], 0);  // one vote each for 2 and 0
}

TEST(Knn, EvalScoresValidationAccuracy) {
  const auto train = blobs(40, 3, 3.0, 1, Split::Train);
  const auto val = blobs(20, 3, 3.0, 2, Split::Val);
  EXPECT_DOUBLE_EQ(knn_eval(train, val), 1.0);
  EXPECT_ERROR_CODE(knn_eval(train, val, KnnConfig{0}), ConfigError);
  auto wide = blobs(20, 4, 3.0, 2, Split::Val);
  EXPECT_ERROR_CODE(knn_eval(train, wide), DimensionMismatch);
  auto other = val;
  other.model_id = "x";
  EXPECT_ERROR_CODE(knn_eval(train, other), DimensionMismatch);
  EmbeddingMatrix empty = val;
  empty.features.resize(0, 3);
  empty.labels.resize(0);
  EXPECT_ERROR_CODE(knn_eval(train, empty), EmptySplit);
}

TEST(LinearProbe, SgdMatchesReferenceImplementation) {
  Rng rng(5);
  FeatureMatrix x(37, 4);
  LabelVector y(37);
  for (int i = 0; i < 37; ++i) {
    y[i] = i % 3;
    for (int j = 0; j < 4; ++j) x(i, j) = static_cast<float>(rng.normal() + (j == y[i] ? 1.5 : 0.0));
  }
  // batch 16 over 37 rows: batches straddle passes.
  const auto got = train_softmax_sgd<double>(x, y, 3, 0.1, 50, 16, 99);
  const auto want = reference_sgd(x, y, 3, 0.1, 50, 16, 99);
  for (int j = 0; j < 4; ++j) {
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(got.weights(j, c), want.w[j][c], 1e-12);
  }
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(got.bias(c), want.b[c], 1e-12);

  const auto got_f = train_softmax_sgd<float>(x, y, 3, 0.1, 50, 16, 99);
  for (int j = 0; j < 4; ++j) {
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(got_f.weights(j, c), want.w[j][c], 1e-4);
  }
}

TEST(LinearProbe, ZeroStepsPredictClassZero) {
  FeatureMatrix x(2, 2);
  x << 1, 2, 3, 4;
  SoftmaxRegression<float> model(2, 3);
  EXPECT_EQ(model.predict(x), (LabelVector(2) << 0, 0).finished());
}

TEST(LinearProbe, DivergenceIsNumericError) {
  FeatureMatrix x(4, 1);
  x << 1e30f, -1e30f, 1e30f, -1e30f;
  LabelVector y(4);
  y << 0, 1, 0, 1;
  EXPECT_ERROR_CODE(train_softmax_sgd<float>(x, y, 2, 1e10, 20, 4, 1), NumericError);
}

TEST(LinearProbe, SeparableBlobsAreLearnedDeterministically) {
  const auto train = blobs(200, 4, 1.0, 3, Split::Train);
  const auto val = blobs(100, 4, 1.0, 4, Split::Val);
  LinearEvalConfig cfg;
  cfg.steps = 300;
  cfg.repeats = 3;
  const double a = linear_eval(train, val, cfg);
  EXPECT_GE(a, 0.95);
  EXPECT_EQ(a, linear_eval(train, val, cfg));
}

TEST(LinearProbe, ConfigValidationAndDigests) {
  LinearEvalConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.learning_rates.clear();
  EXPECT_ERROR_CODE(bad.validate(), ConfigError);
  bad = cfg;
  bad.repeats = 0;
  EXPECT_ERROR_CODE(bad.validate(), ConfigError);

  EXPECT_EQ(config_digest(cfg), config_digest(LinearEvalConfig{}));
  auto other = cfg;
  other.seed = 1;
  EXPECT_NE(config_digest(cfg), config_digest(other));
  EXPECT_EQ(config_digest(cfg).rfind("linear-", 0), 0u);
  EXPECT_EQ(config_digest(KnnConfig{}).rfind("knn-", 0), 0u);
  EXPECT_NE(config_digest(KnnConfig{1}), config_digest(KnnConfig{3}));
}

namespace {

InMemoryEmbeddingSource source_for(const std::vector<std::string>& models, int n) {
  InMemoryEmbeddingSource src;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (auto split : {Split::Train, Split::Val}) {
      auto m = blobs(n, 3, 0.3 + 0.4 * static_cast<double>(i), 10 * i + (split == Split::Val), split);
      m.model_id = models[i];
      src.add(std::move(m));
    }
  }
  return src;
}

}  // namespace

TEST(ScorePool, UsesCacheAndIsIndependentOfJobCount) {
  const Pool pool{"All", {"a", "b", "c", "d", "e"}};
  const auto src = source_for(pool.members, 60);
  ProxySettings settings;
  settings.kind = ProxyKind::Linear;
  settings.linear.steps = 100;
  settings.linear.repeats = 2;

  ProxyScoreTable serial, parallel;
  const auto r1 = score_pool(pool, "t", settings, src, serial, 1);
  const auto r8 = score_pool(pool, "t", settings, src, parallel, 8);
  EXPECT_EQ(r1.computed, 5u);
  ASSERT_EQ(r1.scores.size(), r8.scores.size());
  for (std::size_t i = 0; i < r1.scores.size(); ++i) {
    EXPECT_EQ(r1.scores[i].model_id, pool.members[i]);
    EXPECT_EQ(r1.scores[i].score, r8.scores[i].score);
  }
  EXPECT_EQ(serial.entries().size(), 5u);

  const auto again = score_pool(pool, "t", settings, src, serial, 4);
  EXPECT_EQ(again.cached, 5u);
  EXPECT_EQ(again.computed, 0u);
}

TEST(ScorePool, ReportsEveryMissingEmbedding) {
  const Pool pool{"All", {"a", "ghost1", "ghost2"}};
  const auto src = source_for({"a"}, 10);
  ProxyScoreTable cache;
  try {
    score_pool(pool, "t", ProxySettings{}, src, cache, 2);
    FAIL() << "expected MissingEmbedding";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingEmbedding);
    EXPECT_NE(std::string(e.what()).find("ghost1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("ghost2"), std::string::npos);
  }
  EXPECT_EQ(cache.size(), 0u);
}
