#include "modelsearch/proxy.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <thread>

namespace modelsearch {

namespace {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_digest(std::string_view prefix, std::string_view canonical) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
  return std::string(prefix) + "-" + buf;
}

std::string shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void check_pair(const EmbeddingMatrix& train, const EmbeddingMatrix& val) {
  if (train.rows() == 0 || val.rows() == 0) fail(ErrorCode::EmptySplit, "train and val splits must be non-empty");
  if (train.dim() != val.dim()) {
    fail(ErrorCode::DimensionMismatch, "train d=" + std::to_string(train.dim()) + " but val d=" +
                                           std::to_string(val.dim()));
  }
  if (train.model_id != val.model_id || train.task_id != val.task_id) {
    fail(ErrorCode::DimensionMismatch, "train/val embeddings belong to different (model, task) pairs");
  }
  if (train.n_classes != val.n_classes) fail(ErrorCode::DimensionMismatch, "train/val disagree on n_classes");
}

}  // namespace

void LinearEvalConfig::validate() const {
  if (learning_rates.empty()) fail(ErrorCode::ConfigError, "at least one learning rate is required");
  for (double lr : learning_rates) {
    if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorCode::ConfigError, "learning rates must be positive");
  }
  if (steps < 1) fail(ErrorCode::ConfigError, "steps must be >= 1");
  if (batch_size < 1) fail(ErrorCode::ConfigError, "batch_size must be >= 1");
  if (repeats < 1) fail(ErrorCode::ConfigError, "repeats must be >= 1");
}

std::string config_digest(const KnnConfig& cfg) {
  return hex_digest("knn", "knn;metric=euclidean;k=" + std::to_string(cfg.k));
}

std::string config_digest(const LinearEvalConfig& cfg) {
  std::string canonical = "linear;lr=";
  for (std::size_t i = 0; i < cfg.learning_rates.size(); ++i) {
    canonical += (i ? ":" : "") + shortest(cfg.learning_rates[i]);
  }
  canonical += ";steps=" + std::to_string(cfg.steps) + ";batch=" + std::to_string(cfg.batch_size) +
               ";repeats=" + std::to_string(cfg.repeats) + ";seed=" + std::to_string(cfg.seed);
  return hex_digest("linear", canonical);
}

std::string ProxySettings::digest() const {
  return kind == ProxyKind::Knn ? config_digest(knn) : config_digest(linear);
}

double accuracy(const LabelVector& predicted, const LabelVector& truth) {
  if (predicted.size() != truth.size()) fail(ErrorCode::LengthMismatch, "prediction/label count mismatch");
  if (truth.size() == 0) fail(ErrorCode::EmptySplit, "no rows to score");
  return static_cast<double>((predicted.array() == truth.array()).count()) / static_cast<double>(truth.size());
}

double knn_eval(const EmbeddingMatrix& train, const EmbeddingMatrix& val, const KnnConfig& cfg) {
  check_pair(train, val);
  if (cfg.k < 1 || cfg.k > train.rows()) fail(ErrorCode::ConfigError, "k must lie in [1, n_train]");
  const auto predicted =
      knn_predict(train.features, train.labels, static_cast<int>(train.n_classes), val.features, cfg.k);
  return accuracy(predicted, val.labels);
}

double linear_eval(const EmbeddingMatrix& train, const EmbeddingMatrix& val, const LinearEvalConfig& cfg) {
  check_pair(train, val);
  cfg.validate();
  if (train.n_classes < 2) fail(ErrorCode::ConfigError, "linear evaluation needs n_classes >= 2");

  std::vector<double> per_repeat;
  per_repeat.reserve(static_cast<std::size_t>(cfg.repeats));
  for (int r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    double best = 0.0;
    for (double lr : cfg.learning_rates) {
      const auto model = train_softmax_sgd<float>(train.features, train.labels, static_cast<int>(train.n_classes),
                                                  lr, cfg.steps, cfg.batch_size, seed);
      best = std::max(best, accuracy(model.predict(val.features), val.labels));
    }
    per_repeat.push_back(best);
  }
  return median(std::move(per_repeat));
}

ScorePoolResult score_pool(const Pool& pool, std::string_view task_id, const ProxySettings& settings,
                           const EmbeddingSource& embeddings, ProxyScoreTable& cache, int jobs) {
  if (settings.kind == ProxyKind::Linear) settings.linear.validate();
  const std::string digest = settings.digest();
  const std::string task(task_id);

  ScorePoolResult result;
  result.scores.resize(pool.size());
  std::vector<std::size_t> pending;
  std::string missing;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& model = pool.members[i];
    result.scores[i] = {model, task, settings.kind, 0.0, digest};
    if (auto hit = cache.lookup(model, task, settings.kind, digest)) {
      result.scores[i].score = *hit;
      ++result.cached;
      continue;
    }
    if (!embeddings.has(model, task, Split::Train) || !embeddings.has(model, task, Split::Val)) {
      missing += (missing.empty() ? "" : ", ") + ("(" + model + ", " + task + ")");
    }
    pending.push_back(i);
  }
  if (!missing.empty()) fail(ErrorCode::MissingEmbedding, "missing train/val embeddings for " + missing);

  std::vector<double> values(pending.size());
  std::vector<std::exception_ptr> errors(pending.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < pending.size(); j = next++) {
      try {
        const auto& model = pool.members[pending[j]];
        const auto train = embeddings.load(model, task, Split::Train);
        const auto val = embeddings.load(model, task, Split::Val);
        values[j] = settings.kind == ProxyKind::Knn ? knn_eval(train, val, settings.knn)
                                                    : linear_eval(train, val, settings.linear);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), pending.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t j = 0; j < pending.size(); ++j) {
    auto& entry = result.scores[pending[j]];
    cache.put(entry.model_id, task, settings.kind, values[j], digest);
    entry.score = *cache.lookup(entry.model_id, task, settings.kind, digest);
    ++result.computed;
  }
  return result;
}

}  // namespace modelsearch
