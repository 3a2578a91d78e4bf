#include "modelsearch/strategy.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "modelsearch/csv.hpp"
#include "modelsearch/error.hpp"

namespace modelsearch {

namespace {

const std::vector<std::string> kSelectionHeader = {"strategy_id", "pool_id", "task_id", "budget", "rank", "model_id"};

void require_non_empty(const Pool& pool) {
  if (pool.members.empty()) fail(ErrorCode::EmptyPool, "pool " + pool.pool_id + " is empty");
}

std::string aware_id(ProxyKind kind) { return std::string(to_string(kind)); }

}  // namespace

Ranking rank_task_agnostic(const Pool& pool, const ModelCatalog& catalog) {
  require_non_empty(pool);
  std::vector<const ModelRecord*> models;
  for (const auto& id : pool.members) models.push_back(&catalog.at(id));

  auto better = [&](const ModelRecord* a, const ModelRecord* b) {
    if (a->imagenet_accuracy.has_value() != b->imagenet_accuracy.has_value()) return a->imagenet_accuracy.has_value();
    if (a->imagenet_accuracy && *a->imagenet_accuracy != *b->imagenet_accuracy) {
      return *a->imagenet_accuracy > *b->imagenet_accuracy;
    }
    if (!a->imagenet_accuracy) {
      if (a->upstream_dataset_size.has_value() != b->upstream_dataset_size.has_value()) {
        return a->upstream_dataset_size.has_value();
      }
      if (a->upstream_dataset_size && *a->upstream_dataset_size != *b->upstream_dataset_size) {
        return *a->upstream_dataset_size > *b->upstream_dataset_size;
      }
    }
    if (a->param_count != b->param_count) return a->param_count > b->param_count;
    return catalog.index_of(a->model_id) < catalog.index_of(b->model_id);
  };
  std::sort(models.begin(), models.end(), better);

  Ranking r{"task_agnostic", pool.pool_id, std::nullopt, {}};
  for (const auto* m : models) r.ordered_models.push_back(m->model_id);
  return r;
}

Ranking rank_task_aware(const Pool& pool, const ModelCatalog& catalog, std::string_view task_id,
                        const ProxyScoreTable& scores, ProxyKind kind) {
  const auto agnostic = rank_task_agnostic(pool, catalog);
  std::unordered_map<std::string, std::size_t> tie_rank;
  for (std::size_t i = 0; i < agnostic.ordered_models.size(); ++i) tie_rank[agnostic.ordered_models[i]] = i;

  std::unordered_map<std::string, double> score;
  for (const auto& id : pool.members) score[id] = scores.score(id, task_id, kind);

  Ranking r{aware_id(kind), pool.pool_id, std::string(task_id), pool.members};
  std::sort(r.ordered_models.begin(), r.ordered_models.end(), [&](const std::string& a, const std::string& b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return tie_rank[a] < tie_rank[b];
  });
  return r;
}

Ranking rank_hybrid(const Pool& pool, const ModelCatalog& catalog, std::string_view task_id,
                    const ProxyScoreTable& scores, ProxyKind kind) {
  const auto first = rank_task_agnostic(pool, catalog).ordered_models.front();
  const auto aware = rank_task_aware(pool, catalog, task_id, scores, kind);
  Ranking r{"hybrid_" + aware_id(kind), pool.pool_id, std::string(task_id), {first}};
  for (const auto& id : aware.ordered_models) {
    if (id != first) r.ordered_models.push_back(id);
  }
  return r;
}

Selection select_hybrid(const Pool& pool, const ModelCatalog& catalog, std::string_view task_id,
                        const ProxyScoreTable& scores, ProxyKind kind, int budget) {
  return select_top(rank_hybrid(pool, catalog, task_id, scores, kind), budget);
}

Ranking rank_oracle_task_agnostic(const Pool& pool, const AccuracyTable& accuracies,
                                  const std::vector<std::string>& task_ids) {
  require_non_empty(pool);
  if (task_ids.empty()) fail(ErrorCode::MissingAccuracy, "oracle ranking needs at least one task");
  std::vector<double> mean(pool.size(), 0.0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (const auto& t : task_ids) mean[i] += accuracies.aggregate(pool.members[i], t);
    mean[i] /= static_cast<double>(task_ids.size());
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mean[a] > mean[b]; });

  Ranking r{"oracle", pool.pool_id, std::nullopt, {}};
  for (auto i : order) r.ordered_models.push_back(pool.members[i]);
  return r;
}

Selection select_top(const Ranking& ranking, int budget) {
  if (budget < 1) fail(ErrorCode::RangeError, "budget must be >= 1");
  if (static_cast<std::size_t>(budget) > ranking.ordered_models.size()) {
    fail(ErrorCode::BudgetTooLarge, "budget " + std::to_string(budget) + " exceeds pool size " +
                                        std::to_string(ranking.ordered_models.size()));
  }
  return {ranking.strategy_id, ranking.pool_id, ranking.task_id.value_or(""), budget,
          {ranking.ordered_models.begin(), ranking.ordered_models.begin() + budget}};
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::TaskAgnostic: return "task_agnostic";
    case Strategy::Linear: return "linear";
    case Strategy::Knn: return "knn";
    case Strategy::HybridLinear: return "hybrid_linear";
    case Strategy::HybridKnn: return "hybrid_knn";
    case Strategy::Oracle: return "oracle";
  }
  return "task_agnostic";
}

std::vector<Strategy> all_strategies() {
  return {Strategy::TaskAgnostic, Strategy::Linear, Strategy::Knn, Strategy::HybridLinear, Strategy::HybridKnn,
          Strategy::Oracle};
}

Strategy parse_strategy(std::string_view text) {
  for (auto s : all_strategies()) {
    if (to_string(s) == text) return s;
  }
  fail(ErrorCode::ConfigError, "unknown strategy '" + std::string(text) + "'");
}

Ranking rank(Strategy strategy, const Pool& pool, std::string_view task_id, const StrategyContext& ctx) {
  auto need = [](const auto* p, const char* what) -> const auto& {
    if (!p) fail(ErrorCode::ConfigError, std::string("strategy needs ") + what);
    return *p;
  };
  Ranking r;
  switch (strategy) {
    case Strategy::TaskAgnostic: r = rank_task_agnostic(pool, need(ctx.catalog, "a catalog")); break;
    case Strategy::Linear:
    case Strategy::Knn:
      r = rank_task_aware(pool, need(ctx.catalog, "a catalog"), task_id, need(ctx.scores, "proxy scores"),
                          strategy == Strategy::Linear ? ProxyKind::Linear : ProxyKind::Knn);
      break;
    case Strategy::HybridLinear:
    case Strategy::HybridKnn:
      r = rank_hybrid(pool, need(ctx.catalog, "a catalog"), task_id, need(ctx.scores, "proxy scores"),
                      strategy == Strategy::HybridLinear ? ProxyKind::Linear : ProxyKind::Knn);
      break;
    case Strategy::Oracle:
      r = rank_oracle_task_agnostic(pool, need(ctx.accuracies, "fine-tune accuracies"), ctx.task_ids);
      break;
  }
  return r;
}

void save_selections(const std::vector<Selection>& selections, const std::filesystem::path& path) {
  std::vector<csv::Row> rows;
  for (const auto& s : selections) {
    for (std::size_t i = 0; i < s.models.size(); ++i) {
      rows.push_back({s.strategy_id, s.pool_id, s.task_id, std::to_string(s.budget), std::to_string(i + 1),
                      s.models[i]});
    }
  }
  csv::write(path, kSelectionHeader, rows);
}

std::vector<Selection> load_selections(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::require_header(table, kSelectionHeader);
  std::vector<Selection> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string ctx = path.string() + ":" + std::to_string(i + 2);
    const auto budget = static_cast<int>(csv::parse_int(r[3], ctx));
    const auto rank = csv::parse_int(r[4], ctx);
    if (rank == 1) out.push_back({r[0], r[1], r[2], budget, {}});
    if (out.empty() || out.back().strategy_id != r[0] || out.back().pool_id != r[1] || out.back().task_id != r[2] ||
        out.back().budget != budget || static_cast<std::int64_t>(out.back().models.size()) + 1 != rank) {
      fail(ErrorCode::FormatError, ctx + ": selection rows out of sequence");
    }
    out.back().models.push_back(r[5]);
  }
  for (const auto& s : out) {
    if (static_cast<int>(s.models.size()) != s.budget) {
      fail(ErrorCode::FormatError, path.string() + ": selection size does not match its budget");
    }
  }
  return out;
}

}  // namespace modelsearch
