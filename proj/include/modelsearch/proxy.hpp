#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "modelsearch/catalog.hpp"
#include "modelsearch/error.hpp"
#include "modelsearch/random.hpp"
#include "modelsearch/store.hpp"

namespace modelsearch {

struct KnnConfig {
  int k = 1;
};

struct LinearEvalConfig {
  std::vector<double> learning_rates{0.1, 0.01};
  int steps = 2500;
  int batch_size = 512;  // capped at the number of training rows
  int repeats = 5;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// Stable identifier of an evaluation config; stored next to every cached
/// proxy score so that scores from different configs never mix.
std::string config_digest(const KnnConfig& cfg);
std::string config_digest(const LinearEvalConfig& cfg);

/// Predicts one label per query row by majority vote over the k training rows
/// with the smallest squared Euclidean distance. Distances are accumulated in
/// double. Equal distances are ordered by training-row index; a tied vote goes
/// to the smallest label.
template <typename TrainDerived, typename QueryDerived>
LabelVector knn_predict(const Eigen::MatrixBase<TrainDerived>& train, const LabelVector& train_labels,
                        int n_classes, const Eigen::MatrixBase<QueryDerived>& queries, int k) {
  const Eigen::Index n = train.rows();
  if (k < 1 || k > n) fail(ErrorCode::ConfigError, "k must lie in [1, n_train]");
  if (train.cols() != queries.cols()) fail(ErrorCode::DimensionMismatch, "train and query dimensions differ");

  const Eigen::MatrixXd reference = train.template cast<double>();
  LabelVector predicted(queries.rows());
  Eigen::VectorXd dist(n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::vector<int> votes(static_cast<std::size_t>(n_classes));

  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const Eigen::RowVectorXd query = queries.row(q).template cast<double>();
    dist = (reference.rowwise() - query).rowwise().squaredNorm();

    if (k == 1) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < n; ++i) {
        if (dist[i] < dist[best]) best = i;
      }
      predicted[q] = train_labels[best];
      continue;
    }

    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    std::fill(votes.begin(), votes.end(), 0);
    for (int j = 0; j < k; ++j) ++votes[static_cast<std::size_t>(train_labels[order[static_cast<std::size_t>(j)]])];
    int winner = 0;
    for (int c = 1; c < n_classes; ++c) {
      if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(winner)]) winner = c;
    }
    predicted[q] = winner;
  }
  return predicted;
}

/// Multinomial logistic regression: weights d x C plus a bias per class.
template <typename Scalar>
struct SoftmaxRegression {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  Matrix weights;
  RowVector bias;

  SoftmaxRegression(Eigen::Index dim, Eigen::Index n_classes)
      : weights(Matrix::Zero(dim, n_classes)), bias(RowVector::Zero(n_classes)) {}

  template <typename Derived>
  Matrix logits(const Eigen::MatrixBase<Derived>& x) const {
    Matrix z = x.template cast<Scalar>() * weights;
    z.rowwise() += bias;
    return z;
  }

  /// Argmax of the logits; ties go to the smallest class index.
  template <typename Derived>
  LabelVector predict(const Eigen::MatrixBase<Derived>& x) const {
    const Matrix z = logits(x);
    LabelVector out(z.rows());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < z.cols(); ++c) {
        if (z(i, c) > z(i, best)) best = c;
      }
      out[i] = static_cast<int>(best);
    }
    return out;
  }
};

/// Yields training-row indices as a stream of shuffled passes over [0, n):
/// each pass is a fresh permutation, and a batch may straddle two passes so
/// that every batch has exactly the requested size.
class EpochSampler {
 public:
  EpochSampler(Eigen::Index n, std::uint64_t seed) : rng_(seed), order_(static_cast<std::size_t>(n)) { reshuffle(); }

  void next_batch(std::vector<Eigen::Index>& batch) {
    for (auto& idx : batch) {
      if (cursor_ == order_.size()) reshuffle();
      idx = order_[cursor_++];
    }
  }

 private:
  void reshuffle() {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<Eigen::Index>(i);
    rng_.shuffle(std::span<Eigen::Index>(order_));
    cursor_ = 0;
  }

  Rng rng_;
  std::vector<Eigen::Index> order_;
  std::size_t cursor_ = 0;
};

/// Plain mini-batch SGD on mean softmax cross-entropy: zero initialisation,
/// constant step, no momentum or regularisation. Throws NumericError as soon
/// as a batch loss is not finite.
template <typename Scalar, typename Derived>
SoftmaxRegression<Scalar> train_softmax_sgd(const Eigen::MatrixBase<Derived>& x, const LabelVector& labels,
                                            int n_classes, double learning_rate, int steps, int batch_size,
                                            std::uint64_t seed) {
  using Matrix = typename SoftmaxRegression<Scalar>::Matrix;
  const Eigen::Index n = x.rows();
  const Eigen::Index batch = std::min<Eigen::Index>(batch_size, n);

  SoftmaxRegression<Scalar> model(x.cols(), n_classes);
  EpochSampler sampler(n, seed);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(batch));
  const auto xs = x.template cast<Scalar>().eval();
  Matrix xb(batch, x.cols());
  Matrix p(batch, n_classes);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_max(batch), row_sum(batch);
  const Scalar step = static_cast<Scalar>(learning_rate) / static_cast<Scalar>(batch);

  for (int s = 0; s < steps; ++s) {
    sampler.next_batch(rows);
    xb = xs(rows, Eigen::all);

    p.noalias() = xb * model.weights;
    p.rowwise() += model.bias;
    row_max = p.rowwise().maxCoeff();
    p.colwise() -= row_max;
    Scalar loss = 0;
    for (Eigen::Index i = 0; i < batch; ++i) loss -= p(i, labels[rows[static_cast<std::size_t>(i)]]);
    p = p.array().exp().matrix();
    row_sum = p.rowwise().sum();
    loss += row_sum.array().log().sum();
    p.array().colwise() /= row_sum.array();
    for (Eigen::Index i = 0; i < batch; ++i) p(i, labels[rows[static_cast<std::size_t>(i)]]) -= Scalar(1);
    if (!std::isfinite(loss)) {
      fail(ErrorCode::NumericError, "softmax loss became non-finite at step " + std::to_string(s));
    }
    model.weights.noalias() -= step * (xb.transpose() * p);
    model.bias -= step * p.colwise().sum();
  }
  if (!model.weights.allFinite() || !model.bias.allFinite()) {
    fail(ErrorCode::NumericError, "softmax weights became non-finite");
  }
  return model;
}

/// Fraction of entries where `predicted` equals `truth`.
double accuracy(const LabelVector& predicted, const LabelVector& truth);

/// 1-NN (or k-NN) validation accuracy on frozen representations.
/// Throws DimensionMismatch, EmptySplit.
double knn_eval(const EmbeddingMatrix& train, const EmbeddingMatrix& val, const KnnConfig& cfg = {});

/// Linear-probe validation accuracy: for every repeat and learning rate, train
/// softmax regression with SGD and measure validation accuracy; keep the best
/// learning rate per repeat and return the median over repeats.
double linear_eval(const EmbeddingMatrix& train, const EmbeddingMatrix& val, const LinearEvalConfig& cfg = {});

struct ProxySettings {
  ProxyKind kind = ProxyKind::Knn;
  KnnConfig knn;
  LinearEvalConfig linear;

  std::string digest() const;
};

struct ScorePoolResult {
  std::vector<ProxyScore> scores;  // pool order
  std::size_t computed = 0;
  std::size_t cached = 0;
};

/// Scores every pool member on `task_id`, reusing cache entries whose digest
/// matches and writing new ones back. Up to `jobs` evaluations run
/// concurrently; results do not depend on `jobs`. Throws MissingEmbedding
/// listing every member without train/val embeddings.
ScorePoolResult score_pool(const Pool& pool, std::string_view task_id, const ProxySettings& settings,
                           const EmbeddingSource& embeddings, ProxyScoreTable& cache, int jobs = 1);

}  // namespace modelsearch
