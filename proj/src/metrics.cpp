#include "modelsearch/metrics.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "modelsearch/csv.hpp"
#include "modelsearch/error.hpp"

namespace modelsearch {

namespace {

const std::vector<std::string> kRegretHeader = {"pool_id",  "task_id",  "task_group", "strategy_id", "budget",
                                                "oracle",   "achieved", "abs_regret", "rel_regret",  "log_odds_regret"};
const std::vector<std::string> kCurveHeader = {"pool_id", "strategy_id", "budget", "fraction_optimal"};
const std::vector<std::string> kMinBudgetHeader = {"task_id", "pool_id", "strategy_id", "min_budget"};

constexpr std::string_view kUndefined = "undefined";

void check_unit(double s, const char* name) {
  if (!(s >= 0.0 && s <= 1.0)) fail(ErrorCode::RangeError, std::string(name) + " outside [0,1]");
}

double best_of(const std::vector<std::string>& models, std::string_view task_id, const AccuracyTable& table) {
  if (models.empty()) fail(ErrorCode::EmptyPool, "cannot take the maximum over no models");
  double best = table.aggregate(models.front(), task_id);
  for (std::size_t i = 1; i < models.size(); ++i) best = std::max(best, table.aggregate(models[i], task_id));
  return best;
}

}  // namespace

double oracle_value(const Pool& pool, std::string_view task_id, const AccuracyTable& table) {
  return best_of(pool.members, task_id, table);
}

double achieved_value(const std::vector<std::string>& models, std::string_view task_id, const AccuracyTable& table) {
  return best_of(models, task_id, table);
}

double absolute_regret(const Pool& pool, const Selection& selection, std::string_view task_id,
                       const AccuracyTable& table) {
  return oracle_value(pool, task_id, table) - achieved_value(selection, task_id, table);
}

double relative_delta(double s1, double s2) {
  check_unit(s1, "s1");
  check_unit(s2, "s2");
  const double lo = std::min(s1, s2);
  if (lo == 1.0) return 0.0;
  return (s1 - s2) / (1.0 - lo);
}

double relative_regret(const Pool& pool, const Selection& selection, std::string_view task_id,
                       const AccuracyTable& table) {
  return relative_delta(oracle_value(pool, task_id, table), achieved_value(selection, task_id, table));
}

double log_odds_delta(double s1, double s2) {
  check_unit(s1, "s1");
  check_unit(s2, "s2");
  if (s1 == 0.0 || s1 == 1.0 || s2 == 0.0 || s2 == 1.0) {
    fail(ErrorCode::UndefinedValue, "log-odds are undefined at 0 and 1");
  }
  return logit(s1) - logit(s2);
}

std::optional<double> try_log_odds_delta(double s1, double s2) {
  check_unit(s1, "s1");
  check_unit(s2, "s2");
  if (s1 == 0.0 || s1 == 1.0 || s2 == 0.0 || s2 == 1.0) return std::nullopt;
  return logit(s1) - logit(s2);
}

double log_relative_delta(double s1, double s2) {
  check_unit(s1, "s1");
  check_unit(s2, "s2");
  if (!(s1 > s2) || std::min(s1, s2) == 1.0) {
    fail(ErrorCode::UndefinedValue, "log of the relative delta needs s1 > s2");
  }
  return std::log((s1 - s2) / (1.0 - std::min(s1, s2)));
}

int budget_to_zero_regret(const Ranking& ranking, const Pool& pool, std::string_view task_id,
                          const AccuracyTable& table) {
  const double oracle = oracle_value(pool, task_id, table);
  for (std::size_t i = 0; i < ranking.ordered_models.size(); ++i) {
    if (table.aggregate(ranking.ordered_models[i], task_id) == oracle) return static_cast<int>(i + 1);
  }
  fail(ErrorCode::MissingAccuracy, "ranking never reaches the pool optimum on " + std::string(task_id));
}

BudgetCurve budget_curve_from_min_budgets(std::string pool_id, std::string strategy_id,
                                          const std::vector<int>& min_budgets, std::size_t pool_size) {
  if (min_budgets.empty()) fail(ErrorCode::ConfigError, "budget curve needs at least one task");
  BudgetCurve curve{std::move(pool_id), std::move(strategy_id), {}};
  curve.fraction_optimal.reserve(pool_size);
  for (std::size_t b = 1; b <= pool_size; ++b) {
    const auto hits = std::count_if(min_budgets.begin(), min_budgets.end(),
                                    [b](int m) { return static_cast<std::size_t>(m) <= b; });
    curve.fraction_optimal.push_back(static_cast<double>(hits) / static_cast<double>(min_budgets.size()));
  }
  return curve;
}

BudgetCurve budget_curve(Strategy strategy, const Pool& pool, const std::vector<std::string>& task_ids,
                         const AccuracyTable& table, const StrategyContext& ctx) {
  std::vector<int> min_budgets;
  for (const auto& t : task_ids) {
    min_budgets.push_back(budget_to_zero_regret(rank(strategy, pool, t, ctx), pool, t, table));
  }
  return budget_curve_from_min_budgets(pool.pool_id, std::string(to_string(strategy)), min_budgets, pool.size());
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) fail(ErrorCode::LengthMismatch, "pearson needs samples of equal length");
  if (xs.size() < 2) fail(ErrorCode::LengthMismatch, "pearson needs at least two points");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(xs) || constant(ys)) return std::nullopt;

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> knn_dim_correlation(std::string_view task_id, const ModelCatalog& catalog,
                                          const ProxyScoreTable& scores) {
  std::map<std::int64_t, double> best_at_dim;
  for (const auto& m : catalog.models()) {
    const double s = scores.score(m.model_id, task_id, ProxyKind::Knn);
    auto [it, inserted] = best_at_dim.emplace(m.embedding_dim, s);
    if (!inserted) it->second = std::max(it->second, s);
  }
  if (best_at_dim.size() < 2) return std::nullopt;
  std::vector<double> dims, best;
  for (const auto& [d, s] : best_at_dim) {
    dims.push_back(static_cast<double>(d));
    best.push_back(s);
  }
  return pearson(dims, best);
}

RegretReport build_report(const ReportRequest& request, const TaskCatalog& tasks, const AccuracyTable& table,
                          const StrategyContext& ctx) {
  if (request.strategies.empty()) fail(ErrorCode::ConfigError, "no strategies requested");
  if (request.pools.empty()) fail(ErrorCode::ConfigError, "no pools requested");
  for (int b : request.budgets) {
    if (b < 1) fail(ErrorCode::ConfigError, "budgets must be >= 1");
  }
  std::vector<int> budgets = request.budgets;
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());

  StrategyContext context = ctx;
  if (context.task_ids.empty()) {
    for (const auto& t : tasks.tasks()) context.task_ids.push_back(t.task_id);
  }

  RegretReport report;
  for (const auto& pool : request.pools) {
    std::vector<std::vector<int>> min_budgets(request.strategies.size());
    for (const auto& task : tasks.tasks()) {
      const double oracle = oracle_value(pool, task.task_id, table);
      for (std::size_t s = 0; s < request.strategies.size(); ++s) {
        const auto strategy = request.strategies[s];
        const auto ranking = rank(strategy, pool, task.task_id, context);
        for (int b : budgets) {
          if (static_cast<std::size_t>(b) > pool.size()) continue;
          const auto selection = select_top(ranking, b);
          const double achieved = achieved_value(selection, task.task_id, table);
          report.rows.push_back({pool.pool_id, task.task_id, std::string(to_string(task.group)),
                                 std::string(to_string(strategy)), b, oracle, achieved, oracle - achieved,
                                 relative_delta(oracle, achieved), try_log_odds_delta(oracle, achieved)});
        }
        const int min_budget = budget_to_zero_regret(ranking, pool, task.task_id, table);
        min_budgets[s].push_back(min_budget);
        report.min_budgets.push_back({task.task_id, pool.pool_id, std::string(to_string(strategy)), min_budget});
      }
    }
    for (std::size_t s = 0; s < request.strategies.size(); ++s) {
      report.curves.push_back(budget_curve_from_min_budgets(
          pool.pool_id, std::string(to_string(request.strategies[s])), min_budgets[s], pool.size()));
    }
  }
  return report;
}

void save_regret_rows(const std::vector<RegretRow>& rows, const std::filesystem::path& path) {
  std::vector<csv::Row> out;
  for (const auto& r : rows) {
    out.push_back({r.pool_id, r.task_id, r.task_group, r.strategy_id, std::to_string(r.budget), csv::format6(r.oracle),
                   csv::format6(r.achieved), csv::format6(r.abs_regret), csv::format6(r.rel_regret),
                   r.log_odds_regret ? csv::format6(*r.log_odds_regret) : std::string(kUndefined)});
  }
  csv::write(path, kRegretHeader, out);
}

void save_budget_curves(const std::vector<BudgetCurve>& curves, const std::filesystem::path& path) {
  std::vector<csv::Row> out;
  for (const auto& c : curves) {
    for (std::size_t b = 0; b < c.fraction_optimal.size(); ++b) {
      out.push_back({c.pool_id, c.strategy_id, std::to_string(b + 1), csv::format6(c.fraction_optimal[b])});
    }
  }
  csv::write(path, kCurveHeader, out);
}

void save_min_budgets(const std::vector<MinBudgetRow>& rows, const std::filesystem::path& path) {
  std::vector<csv::Row> out;
  for (const auto& r : rows) out.push_back({r.task_id, r.pool_id, r.strategy_id, std::to_string(r.min_budget)});
  csv::write(path, kMinBudgetHeader, out);
}

std::vector<RegretRow> load_regret_rows(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::require_header(table, kRegretHeader);
  std::vector<RegretRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string ctx = path.string() + ":" + std::to_string(i + 2);
    RegretRow row{r[0], r[1], r[2], r[3], static_cast<int>(csv::parse_int(r[4], ctx)),
                  csv::parse_double(r[5], ctx), csv::parse_double(r[6], ctx), csv::parse_double(r[7], ctx),
                  csv::parse_double(r[8], ctx), std::nullopt};
    if (r[9] != kUndefined) row.log_odds_regret = csv::parse_double(r[9], ctx);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<BudgetCurve> load_budget_curves(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::require_header(table, kCurveHeader);
  std::vector<BudgetCurve> curves;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string ctx = path.string() + ":" + std::to_string(i + 2);
    const auto budget = csv::parse_int(r[2], ctx);
    if (budget == 1) curves.push_back({r[0], r[1], {}});
    if (curves.empty() || curves.back().pool_id != r[0] || curves.back().strategy_id != r[1] ||
        static_cast<std::int64_t>(curves.back().fraction_optimal.size()) + 1 != budget) {
      fail(ErrorCode::FormatError, ctx + ": budget curve rows out of sequence");
    }
    curves.back().fraction_optimal.push_back(csv::parse_double(r[3], ctx));
  }
  return curves;
}

std::vector<MinBudgetRow> load_min_budgets(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::require_header(table, kMinBudgetHeader);
  std::vector<MinBudgetRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string ctx = path.string() + ":" + std::to_string(i + 2);
    rows.push_back({r[0], r[1], r[2], static_cast<int>(csv::parse_int(r[3], ctx))});
  }
  return rows;
}

namespace {

// 20-model pool on a single task. Models 0, 4, 8, ... carry ImageNet
// accuracies; model 3 is the outlier in the second scenario and receives the
// highest proxy scores there.
constexpr std::size_t kDemoModels = 20;
constexpr std::size_t kDemoOutlier = 3;
constexpr double kDemoLinear[kDemoModels] = {0.78, 0.77, 0.79, 0.80, 0.78, 0.76, 0.79, 0.77, 0.78, 0.79,
                                             0.76, 0.77, 0.78, 0.79, 0.77, 0.78, 0.76, 0.79, 0.10, 0.05};
constexpr double kDemoKnn[kDemoModels] = {0.60, 0.58, 0.61, 0.62, 0.59, 0.57, 0.61, 0.60, 0.58, 0.61,
                                          0.59, 0.60, 0.58, 0.61, 0.57, 0.59, 0.60, 0.61, 0.05, 0.08};

CorrelationDemo::Scenario run_demo_scenario(std::string name, const std::vector<double>& finetune) {
  std::vector<ModelRecord> models;
  for (std::size_t i = 0; i < kDemoModels; ++i) {
    ModelRecord m;
    m.model_id = "demo" + std::to_string(i);
    m.display_name = m.model_id;
    m.embedding_dim = 128 << (i % 4);
    m.param_count = 1'000'000 + static_cast<std::int64_t>(i) * 250'000;
    if (i % 4 == 0) m.imagenet_accuracy = 0.70 + 0.01 * static_cast<double>(i / 4);
    m.upstream_dataset_name = "demo-upstream";
    m.upstream_dataset_size = 1'000'000;
    models.push_back(std::move(m));
  }
  const ModelCatalog catalog(std::move(models));
  const Pool pool = build_pool(catalog, PoolId::All);
  const std::string task = "demo_task";

  AccuracyTable table;
  ProxyScoreTable scores;
  for (std::size_t i = 0; i < kDemoModels; ++i) {
    const auto& id = catalog.models()[i].model_id;
    for (int run = 0; run < 5; ++run) table.add_run(id, task, run, finetune[i]);
    scores.put(id, task, ProxyKind::Linear, kDemoLinear[i], "demo");
    scores.put(id, task, ProxyKind::Knn, kDemoKnn[i], "demo");
  }

  StrategyContext ctx{&catalog, &scores, &table, {task}};
  CorrelationDemo::Scenario scenario;
  scenario.name = std::move(name);
  for (auto s : all_strategies()) {
    const auto selection = select_top(rank(s, pool, task, ctx), 1);
    scenario.regrets.push_back({std::string(to_string(s)), absolute_regret(pool, selection, task, table),
                                relative_regret(pool, selection, task, table)});
  }

  std::vector<double> acc, imagenet, acc_imagenet;
  for (const auto& m : catalog.models()) {
    acc.push_back(table.aggregate(m.model_id, task));
    if (m.imagenet_accuracy) {
      imagenet.push_back(*m.imagenet_accuracy);
      acc_imagenet.push_back(acc.back());
    }
  }
  scenario.pearson_imagenet = pearson(imagenet, acc_imagenet);
  scenario.pearson_linear = pearson(std::span<const double>(kDemoLinear), acc);
  scenario.pearson_knn = pearson(std::span<const double>(kDemoKnn), acc);
  return scenario;
}

std::string show(const std::optional<double>& r) { return r ? csv::format6(*r) : std::string(kUndefined); }

}  // namespace

CorrelationDemo correlation_limit_demo() {
  CorrelationDemo demo;
  demo.identical = run_demo_scenario("identical", std::vector<double>(kDemoModels, 0.5));
  std::vector<double> outlier(kDemoModels, 0.5);
  outlier[kDemoOutlier] = 0.9;
  demo.outlier = run_demo_scenario("outlier", outlier);
  return demo;
}

std::string format_correlation_demo(const CorrelationDemo& demo) {
  std::ostringstream out;
  for (const auto* s : {&demo.identical, &demo.outlier}) {
    out << "scenario " << s->name << "\n";
    for (const auto& r : s->regrets) {
      out << "  regret B=1 " << r.strategy_id << " abs=" << csv::format6(r.abs_regret)
          << " rel=" << csv::format6(r.rel_regret) << "\n";
    }
    out << "  pearson imagenet_accuracy~finetune " << show(s->pearson_imagenet) << "\n";
    out << "  pearson linear~finetune " << show(s->pearson_linear) << "\n";
    out << "  pearson knn~finetune " << show(s->pearson_knn) << "\n";
  }
  return out.str();
}

}  // namespace modelsearch
