#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "modelsearch/catalog.hpp"
#include "modelsearch/store.hpp"
#include "modelsearch/strategy.hpp"

namespace modelsearch {

// Regret of a selection S of models from a pool M on a task D:
//   oracle  = max_{m in M} t(m, D)
//   s(S)    = max_{m in S} t(m, D)
//   regret  = oracle - s(S)
// where t is the median-of-runs fine-tune accuracy.

/// Best aggregate fine-tune accuracy among the pool. Throws MissingAccuracy.
double oracle_value(const Pool& pool, std::string_view task_id, const AccuracyTable& table);

/// Best aggregate fine-tune accuracy among the selected models.
double achieved_value(const std::vector<std::string>& models, std::string_view task_id, const AccuracyTable& table);
inline double achieved_value(const Selection& selection, std::string_view task_id, const AccuracyTable& table) {
  return achieved_value(selection.models, task_id, table);
}

double absolute_regret(const Pool& pool, const Selection& selection, std::string_view task_id,
                       const AccuracyTable& table);

/// (s1 - s2) / (1 - min(s1, s2)); 0 when both are 1. Throws RangeError
/// outside [0,1].
double relative_delta(double s1, double s2);

double relative_regret(const Pool& pool, const Selection& selection, std::string_view task_id,
                       const AccuracyTable& table);

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// logit(s1) - logit(s2). Throws UndefinedValue when either value is 0 or 1
/// and RangeError outside [0,1].
double log_odds_delta(double s1, double s2);
std::optional<double> try_log_odds_delta(double s1, double s2);

/// ln((s1 - s2) / (1 - min(s1, s2))): the logarithm of the relative delta.
/// Only defined for s1 > s2 and min < 1; otherwise UndefinedValue. Kept for
/// comparison with log_odds_delta, which is what reports use.
double log_relative_delta(double s1, double s2);

/// Smallest B whose ranking prefix reaches the pool oracle.
int budget_to_zero_regret(const Ranking& ranking, const Pool& pool, std::string_view task_id,
                          const AccuracyTable& table);

struct BudgetCurve {
  std::string pool_id;
  std::string strategy_id;
  std::vector<double> fraction_optimal;  // entry B-1 for budget B = 1..|pool|
};

/// Fraction of tasks whose budget-to-zero-regret is <= B, for every B.
BudgetCurve budget_curve_from_min_budgets(std::string pool_id, std::string strategy_id,
                                          const std::vector<int>& min_budgets, std::size_t pool_size);

BudgetCurve budget_curve(Strategy strategy, const Pool& pool, const std::vector<std::string>& task_ids,
                         const AccuracyTable& table, const StrategyContext& ctx);

/// Sample Pearson correlation; nullopt when either sample is constant.
/// Throws LengthMismatch for unequal lengths or fewer than two points.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

/// Correlation between representation size and kNN score on one task, using
/// the best kNN score per distinct dimension. nullopt with fewer than two
/// distinct dimensions. Throws MissingScore.
std::optional<double> knn_dim_correlation(std::string_view task_id, const ModelCatalog& catalog,
                                          const ProxyScoreTable& scores);

struct RegretRow {
  std::string pool_id;
  std::string task_id;
  std::string task_group;
  std::string strategy_id;
  int budget = 1;
  double oracle = 0.0;
  double achieved = 0.0;
  double abs_regret = 0.0;
  double rel_regret = 0.0;
  std::optional<double> log_odds_regret;
};

struct MinBudgetRow {
  std::string task_id;
  std::string pool_id;
  std::string strategy_id;
  int min_budget = 1;
};

struct RegretReport {
  std::vector<RegretRow> rows;            // sorted by (pool, task, strategy, budget)
  std::vector<BudgetCurve> curves;        // one per (pool, strategy)
  std::vector<MinBudgetRow> min_budgets;  // one per (pool, task, strategy)
};

struct ReportRequest {
  std::vector<Pool> pools;
  std::vector<Strategy> strategies;
  std::vector<int> budgets{1, 2};
};

/// Evaluates every (pool, task, strategy, budget) combination. Budgets larger
/// than a pool are skipped for that pool. Sorting follows the request order
/// for pools and strategies, catalog order for tasks, ascending budget.
RegretReport build_report(const ReportRequest& request, const TaskCatalog& tasks, const AccuracyTable& table,
                          const StrategyContext& ctx);

void save_regret_rows(const std::vector<RegretRow>& rows, const std::filesystem::path& path);
void save_budget_curves(const std::vector<BudgetCurve>& curves, const std::filesystem::path& path);
void save_min_budgets(const std::vector<MinBudgetRow>& rows, const std::filesystem::path& path);

std::vector<RegretRow> load_regret_rows(const std::filesystem::path& path);
std::vector<BudgetCurve> load_budget_curves(const std::filesystem::path& path);
std::vector<MinBudgetRow> load_min_budgets(const std::filesystem::path& path);

/// Shows that correlation and regret disagree: on a pool whose models all
/// fine-tune to the same accuracy every strategy has zero regret while the
/// correlation between any attribute and accuracy is undefined; and with a
/// single outlier that the proxy ranks first, regret is zero although the
/// proxy/accuracy correlation stays weak.
struct CorrelationDemo {
  struct StrategyRegret {
    std::string strategy_id;
    double abs_regret = 0.0;
    double rel_regret = 0.0;
  };
  struct Scenario {
    std::string name;
    std::vector<StrategyRegret> regrets;  // B = 1
    std::optional<double> pearson_imagenet;
    std::optional<double> pearson_linear;
    std::optional<double> pearson_knn;
  };
  Scenario identical;
  Scenario outlier;
};

CorrelationDemo correlation_limit_demo();
std::string format_correlation_demo(const CorrelationDemo& demo);

}  // namespace modelsearch
