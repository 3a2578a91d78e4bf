#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modelsearch/catalog.hpp"
#include "modelsearch/store.hpp"

namespace modelsearch {

/// A full ordering of a pool, best first. Selecting a budget B means taking
/// the first B entries.
struct Ranking {
  std::string strategy_id;
  std::string pool_id;
  std::optional<std::string> task_id;  // absent for task-agnostic rankings
  std::vector<std::string> ordered_models;
};

struct Selection {
  std::string strategy_id;
  std::string pool_id;
  std::string task_id;
  int budget = 1;
  std::vector<std::string> models;  // exactly `budget` distinct members
};

/// Metadata-only order: models with ImageNet accuracy first (descending),
/// then the rest by descending upstream dataset size (unknown size last).
/// Ties at any level: larger param_count first, then catalog order.
Ranking rank_task_agnostic(const Pool& pool, const ModelCatalog& catalog);

/// Descending proxy score; ties follow the task-agnostic order. Throws
/// MissingScore.
Ranking rank_task_aware(const Pool& pool, const ModelCatalog& catalog, std::string_view task_id,
                        const ProxyScoreTable& scores, ProxyKind kind);

/// The task-agnostic top-1 followed by the task-aware order with that model
/// removed. Its prefixes are exactly the hybrid selections.
Ranking rank_hybrid(const Pool& pool, const ModelCatalog& catalog, std::string_view task_id,
                    const ProxyScoreTable& scores, ProxyKind kind);

/// Top-1 task-agnostic model plus the best task-aware models not already
/// chosen, B models in total. Throws BudgetTooLarge / RangeError for B < 1.
Selection select_hybrid(const Pool& pool, const ModelCatalog& catalog, std::string_view task_id,
                        const ProxyScoreTable& scores, ProxyKind kind, int budget);

/// Ranks by mean aggregate fine-tune accuracy over `task_ids`; ties keep pool
/// (catalog) order. Uses the accuracies it is evaluated on, so it is a
/// reference point rather than a usable strategy. Throws MissingAccuracy.
Ranking rank_oracle_task_agnostic(const Pool& pool, const AccuracyTable& accuracies,
                                  const std::vector<std::string>& task_ids);

/// First `budget` entries of the ranking. Throws RangeError for budget < 1
/// and BudgetTooLarge beyond the pool size.
Selection select_top(const Ranking& ranking, int budget);

enum class Strategy { TaskAgnostic, Linear, Knn, HybridLinear, HybridKnn, Oracle };

std::string_view to_string(Strategy strategy);
/// "task_agnostic", "linear", "knn", "hybrid_linear", "hybrid_knn", "oracle".
Strategy parse_strategy(std::string_view text);
std::vector<Strategy> all_strategies();

/// Everything a strategy may consult. Pointers may be null when the
/// strategies in use do not need them.
struct StrategyContext {
  const ModelCatalog* catalog = nullptr;
  const ProxyScoreTable* scores = nullptr;
  const AccuracyTable* accuracies = nullptr;
  std::vector<std::string> task_ids;  // used by the oracle
};

Ranking rank(Strategy strategy, const Pool& pool, std::string_view task_id, const StrategyContext& ctx);

/// CSV `strategy_id,pool_id,task_id,budget,rank,model_id`, rank 1-based.
void save_selections(const std::vector<Selection>& selections, const std::filesystem::path& path);
std::vector<Selection> load_selections(const std::filesystem::path& path);

}  // namespace modelsearch
