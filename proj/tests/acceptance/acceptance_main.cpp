// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../knn_oracle.hpp"
#include "../test_util.hpp"
#include "modelsearch/csv.hpp"
#include "modelsearch/error.hpp"
#include "modelsearch/metrics.hpp"
#include "modelsearch/proxy.hpp"
#include "modelsearch/random.hpp"
#include "modelsearch/strategy.hpp"
#include "modelsearch/synth.hpp"

using namespace modelsearch;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (notes.size() < 8) notes.push_back(what);
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& title, const Outcome& o, const std::string& summary) {
  std::printf("%s criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), summary.c_str());
  for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run_guarded(int id, const std::string& title, const std::function<std::string(Outcome&)>& body) {
  Outcome o;
  std::string summary;
  try {
    summary = body(o);
  } catch (const Error& e) {
    o.check(false, std::string("ERROR ") + std::string(to_string(e.code())) + ": " + e.what());
  } catch (const std::exception& e) {
    o.check(false, std::string("exception: ") + e.what());
  }
  report(id, title, o, summary);
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// 1. kNN oracle equivalence.

EmbeddingMatrix random_split(int n, int d, int classes, bool grid, Split split, Rng& rng) {
  EmbeddingMatrix m;
  m.model_id = "m";
  m.task_id = "t";
  m.split = split;
  m.n_classes = static_cast<std::uint32_t>(classes);
  m.features.resize(n, d);
  m.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    m.labels[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    for (int j = 0; j < d; ++j) {
      m.features(i, j) = grid ? static_cast<float>(static_cast<int>(rng.below(4)) - 2)
                              : static_cast<float>(rng.normal());
    }
  }
  return m;
}

std::string criterion_knn(Outcome& o) {
  const auto t0 = Clock::now();
  Rng rng(101);
  int mismatches = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 1 + static_cast<int>(rng.below(50));
    const int d = 1 + static_cast<int>(rng.below(8));
    const int classes = 2 + static_cast<int>(rng.below(3));
    const bool grid = inst % 2 == 0;
    const auto train = random_split(n, d, classes, grid, Split::Train, rng);
    const auto val = random_split(1 + static_cast<int>(rng.below(50)), d, classes, grid, Split::Val, rng);

    const auto truth = testutil::brute_force_knn(train.features, train.labels, classes, val.features, 1);
    const double expected = static_cast<double>((truth.array() == val.labels.array()).count()) /
                            static_cast<double>(val.rows());
    const double got = knn_eval(train, val);
    if (got != expected) {
      ++mismatches;
      o.check(false, "instance " + std::to_string(inst) + ": knn_eval " + fmt(got, 6) + " vs " + fmt(expected, 6));
    }
  }
  const double secs = seconds_since(t0);
  o.check(secs < 10.0, "runtime " + fmt(secs) + "s exceeds 10s");
  return "200 instances, " + std::to_string(mismatches) + " mismatches, " + fmt(secs) + "s";
}

// ---------------------------------------------------------------------------
// 2. Linear-probe sanity.

// Two blobs with centers at -1.5 and +1.5 on the first axis and uniform
// noise in [-0.5, 0.5] on every axis: the gap between the classes is 2.
EmbeddingMatrix two_blobs(const std::string& model, int n, int d, Split split, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingMatrix m;
  m.model_id = model;
  m.task_id = "blobs";
  m.split = split;
  m.n_classes = 2;
  m.features.resize(n, d);
  m.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    m.labels[i] = i % 2;
    for (int j = 0; j < d; ++j) m.features(i, j) = static_cast<float>(rng.uniform(-0.5, 0.5));
    m.features(i, 0) += m.labels[i] == 0 ? -1.5f : 1.5f;
  }
  return m;
}

std::string criterion_linear(Outcome& o) {
  const auto t0 = Clock::now();
  const LinearEvalConfig defaults;
  const auto train = two_blobs("m", 800, 8, Split::Train, 1);
  const auto val = two_blobs("m", 200, 8, Split::Val, 2);
  const double a = linear_eval(train, val, defaults);
  const double b = linear_eval(train, val, defaults);
  o.check(a >= 0.95, "validation accuracy " + fmt(a, 6) + " < 0.95");
  o.check(a == b, "two runs differ: " + fmt(a, 6) + " vs " + fmt(b, 6));

  InMemoryEmbeddingSource source;
  Pool pool{"Custom", {}};
  for (int i = 0; i < 3; ++i) {
    const std::string id = "blob" + std::to_string(i);
    pool.members.push_back(id);
    source.add(two_blobs(id, 800, 8, Split::Train, 10 + 2 * i));
    source.add(two_blobs(id, 200, 8, Split::Val, 11 + 2 * i));
  }
  ProxySettings settings;
  settings.kind = ProxyKind::Linear;
  ProxyScoreTable one, eight;
  const auto r1 = score_pool(pool, "blobs", settings, source, one, 1);
  const auto r8 = score_pool(pool, "blobs", settings, source, eight, 8);
  double min_score = 1.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    o.check(r1.scores[i].score == r8.scores[i].score, pool.members[i] + ": --jobs 1 and --jobs 8 differ");
    min_score = std::min(min_score, r1.scores[i].score);
  }
  o.check(min_score >= 0.95, "pool minimum accuracy " + fmt(min_score, 6) + " < 0.95");
  return "accuracy " + fmt(a, 6) + ", pool min " + fmt(min_score, 6) + ", jobs 1 == jobs 8, " +
         fmt(seconds_since(t0)) + "s";
}

// ---------------------------------------------------------------------------
// 3. Metric identities.

std::string criterion_identities(Outcome& o) {
  Rng rng(303);
  constexpr int kConfigs = 1500;
  for (int c = 0; c < kConfigs; ++c) {
    const int n = 1 + static_cast<int>(rng.below(12));
    Pool pool{"All", {}};
    AccuracyTable table;
    for (int i = 0; i < n; ++i) {
      const std::string id = "m" + std::to_string(i);
      pool.members.push_back(id);
      // Coarse grid for frequent ties, including the endpoints 0 and 1.
      const double acc = rng.below(4) == 0 ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
      table.add_run(id, "t", 0, acc);
    }
    std::vector<std::string> order = pool.members;
    rng.shuffle(std::span<std::string>(order));
    const Ranking ranking{"random", "All", std::string("t"), order};

    double previous = 2.0;
    for (int b = 1; b <= n; ++b) {
      const auto sel = select_top(ranking, b);
      const double regret = absolute_regret(pool, sel, "t", table);
      o.check(regret >= 0.0, "negative regret in config " + std::to_string(c));
      o.check(regret <= previous, "regret increased along the prefix in config " + std::to_string(c));
      previous = regret;
      if (b == n) o.check(regret == 0.0, "non-zero regret at full budget in config " + std::to_string(c));
    }

    const double s1 = rng.uniform(), s2 = rng.below(10) == 0 ? s1 : rng.uniform();
    o.check(std::abs(relative_delta(s1, s2) + relative_delta(s2, s1)) <= 1e-12,
            "antisymmetry violated at (" + fmt(s1, 9) + ", " + fmt(s2, 9) + ")");
    if (s1 > 0.0 && s2 > 0.0) {
      const double r = relative_delta(s1, s2), l = log_odds_delta(s1, s2);
      o.check((r > 0) == (l > 0) && (r < 0) == (l < 0), "sign disagreement at (" + fmt(s1, 9) + ", " + fmt(s2, 9) + ")");
    }
    // Same checks on the aggregate values themselves, which include 0 and 1.
    const double a = table.aggregate(order.front(), "t"), z = table.aggregate(order.back(), "t");
    o.check(std::abs(relative_delta(a, z) + relative_delta(z, a)) <= 1e-12, "antisymmetry violated on aggregates");
    if (a > 0 && a < 1 && z > 0 && z < 1) {
      const double r = relative_delta(a, z), l = log_odds_delta(a, z);
      o.check((r > 0) == (l > 0) && (r < 0) == (l < 0), "sign disagreement on aggregates");
    }
  }
  return std::to_string(kConfigs) + " random configurations";
}

// ---------------------------------------------------------------------------
// 4 and 5. Synthetic expert scenario.

struct Suite {
  SynthData data;
  ProxyScoreTable scores;
  Pool pool;
  RegretReport report;
  double seconds = 0.0;
};

const Suite& expert_suite() {
  static const Suite suite = [] {
    const auto t0 = Clock::now();
    SynthConfig config;
    config.n_models = 12;
    config.n_tasks = 6;
    config.n_experts = 2;
    config.seed = 7;
    config.accuracy_noise_sd = 0.0;
    Suite s{generate(config), {}, {}, {}, 0.0};
    s.pool = build_pool(s.data.catalog, PoolId::All);
    for (auto kind : {ProxyKind::Knn, ProxyKind::Linear}) {
      ProxySettings settings;
      settings.kind = kind;
      for (const auto& t : s.data.tasks.tasks()) score_pool(s.pool, t.task_id, settings, s.data.embeddings, s.scores, 1);
    }
    StrategyContext ctx{&s.data.catalog, &s.scores, &s.data.accuracies, {}};
    ReportRequest request{{s.pool}, all_strategies(), {1, 2}};
    s.report = build_report(request, s.data.tasks, s.data.accuracies, ctx);
    s.seconds = seconds_since(t0);
    return s;
  }();
  return suite;
}

const RegretRow* find_row(const Suite& s, const std::string& task, const std::string& strategy, int budget) {
  for (const auto& r : s.report.rows) {
    if (r.task_id == task && r.strategy_id == strategy && r.budget == budget) return &r;
  }
  return nullptr;
}

std::string criterion_expert(Outcome& o) {
  const auto& s = expert_suite();
  std::string detail;
  int expert_tasks = 0;
  for (const auto& m : s.data.catalog.models()) {
    if (!m.has_tag("expert")) continue;
    const std::string task = m.display_name.substr(m.display_name.find(' ') + 1);
    ++expert_tasks;
    const auto* agnostic = find_row(s, task, "task_agnostic", 1);
    const auto* linear = find_row(s, task, "linear", 1);
    if (!agnostic || !linear) {
      o.check(false, "missing report rows for " + task);
      continue;
    }
    o.check(agnostic->rel_regret >= 0.2, task + ": task-agnostic relative regret " + fmt(agnostic->rel_regret, 6) +
                                             " < 0.2");
    o.check(linear->rel_regret == 0.0, task + ": linear relative regret " + fmt(linear->rel_regret, 6) + " != 0");
    detail += task + " agnostic=" + fmt(agnostic->rel_regret) + " linear=" + fmt(linear->rel_regret) + "; ";

    // The expert's proxy scores on its task exceed every non-expert's.
    for (auto kind : {ProxyKind::Knn, ProxyKind::Linear}) {
      const double mine = s.scores.score(m.model_id, task, kind);
      for (const auto& other : s.data.catalog.models()) {
        if (other.has_tag("expert")) continue;
        o.check(mine > s.scores.score(other.model_id, task, kind),
                task + ": " + std::string(to_string(kind)) + " score of expert does not exceed " + other.model_id);
      }
    }
  }
  o.check(expert_tasks == 2, "expected 2 expert-bound tasks, found " + std::to_string(expert_tasks));
  int zero = 0;
  for (const auto& t : s.data.tasks.tasks()) {
    const auto* h = find_row(s, t.task_id, "hybrid_linear", 2);
    o.check(h && h->abs_regret == 0.0, t.task_id + ": hybrid-linear B=2 regret is not zero");
    zero += h && h->abs_regret == 0.0;
  }
  return detail + "hybrid_linear B=2 zero on " + std::to_string(zero) + "/" + std::to_string(s.data.tasks.size()) +
         " tasks, suite built in " + fmt(s.seconds) + "s";
}

std::string criterion_budget_curves(Outcome& o) {
  const auto& s = expert_suite();
  std::map<std::string, const BudgetCurve*> curves;
  for (const auto& c : s.report.curves) curves[c.strategy_id] = &c;
  const auto* hybrid = curves["hybrid_linear"];
  const auto* agnostic = curves["task_agnostic"];
  const auto* linear = curves["linear"];
  if (!hybrid || !agnostic || !linear) {
    o.check(false, "missing budget curves");
    return "";
  }
  for (std::size_t b = 0; b < s.pool.size(); ++b) {
    const double best_other = std::max(agnostic->fraction_optimal[b], linear->fraction_optimal[b]);
    o.check(hybrid->fraction_optimal[b] >= best_other,
            "B=" + std::to_string(b + 1) + ": hybrid " + fmt(hybrid->fraction_optimal[b]) + " < " + fmt(best_other));
  }
  for (const auto& c : s.report.curves) {
    o.check(c.fraction_optimal.size() == s.pool.size(), c.strategy_id + ": curve length != pool size");
    for (std::size_t b = 1; b < c.fraction_optimal.size(); ++b) {
      o.check(c.fraction_optimal[b] >= c.fraction_optimal[b - 1], c.strategy_id + ": curve decreases");
    }
    o.check(c.fraction_optimal.back() == 1.0, c.strategy_id + ": curve does not reach 1.0 at B = pool size");
  }
  auto show = [](const BudgetCurve* c) { return fmt(c->fraction_optimal[0]) + "," + fmt(c->fraction_optimal[1]); };
  return "B=1,2 hybrid_linear " + show(hybrid) + " task_agnostic " + show(agnostic) + " linear " + show(linear);
}

// ---------------------------------------------------------------------------
// 6. Minimum-budget table.

std::string criterion_min_budget(Outcome& o) {
  Rng rng(606);
  int checked = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 2 + static_cast<int>(rng.below(10));
    const int n_tasks = 1 + static_cast<int>(rng.below(4));
    std::vector<ModelRecord> models;
    for (int i = 0; i < n; ++i) {
      ModelRecord m;
      m.model_id = "m" + std::to_string(i);
      m.display_name = m.model_id;
      m.embedding_dim = 16;
      m.param_count = 1 + static_cast<std::int64_t>(rng.below(100));
      if (rng.below(2)) m.imagenet_accuracy = csv::round6(rng.uniform(0.5, 0.9));
      m.upstream_dataset_name = "u";
      if (rng.below(2)) m.upstream_dataset_size = 1 + static_cast<std::int64_t>(rng.below(1000));
      models.push_back(m);
    }
    const ModelCatalog catalog(models);
    std::vector<TaskRecord> task_records;
    for (int t = 0; t < n_tasks; ++t) {
      task_records.push_back({"t" + std::to_string(t), static_cast<TaskGroup>(t % 3), 800, 200, 1, 2});
    }
    const TaskCatalog tasks(task_records);
    AccuracyTable acc;
    ProxyScoreTable scores;
    for (const auto& t : task_records) {
      for (const auto& m : models) {
        const int runs = 1 + static_cast<int>(rng.below(4));
        for (int r = 0; r < runs; ++r) acc.add_run(m.model_id, t.task_id, r, static_cast<double>(rng.below(6)) / 5.0);
        scores.put(m.model_id, t.task_id, ProxyKind::Linear, static_cast<double>(rng.below(5)) / 4.0, "l");
        scores.put(m.model_id, t.task_id, ProxyKind::Knn, rng.uniform(), "k");
      }
    }
    StrategyContext ctx{&catalog, &scores, &acc, {}};
    const auto pool = build_pool(catalog, PoolId::All);
    const auto report = build_report({{pool}, all_strategies(), {1}}, tasks, acc, ctx);

    auto ctx_all = ctx;
    for (const auto& t : task_records) ctx_all.task_ids.push_back(t.task_id);
    for (const auto& row : report.min_budgets) {
      // Exhaustive scan: smallest B whose prefix maximum equals the pool maximum.
      const auto ranking = rank(parse_strategy(row.strategy_id), pool, row.task_id, ctx_all);
      std::vector<double> values;
      for (const auto& id : ranking.ordered_models) {
        std::vector<double> runs;
        for (const auto& [r, a] : acc.runs(id, row.task_id)) runs.push_back(a);
        std::sort(runs.begin(), runs.end());
        const std::size_t k = runs.size();
        values.push_back(k % 2 ? runs[k / 2] : (runs[k / 2 - 1] + runs[k / 2]) / 2.0);
      }
      const double best = *std::max_element(values.begin(), values.end());
      int expected = -1;
      double running = -1.0;
      for (std::size_t b = 0; b < values.size() && expected < 0; ++b) {
        running = std::max(running, values[b]);
        if (best - running == 0.0) expected = static_cast<int>(b + 1);
      }
      o.check(row.min_budget == expected, "instance " + std::to_string(inst) + " " + row.task_id + " " +
                                              row.strategy_id + ": " + std::to_string(row.min_budget) + " vs " +
                                              std::to_string(expected));
      ++checked;
    }
  }
  return "50 instances, " + std::to_string(checked) + " (task, strategy) entries";
}

// ---------------------------------------------------------------------------
// 7. Correlation limitation.

std::string criterion_correlation(Outcome& o) {
  const auto demo = correlation_limit_demo();
  for (const auto& r : demo.identical.regrets) {
    o.check(r.abs_regret == 0.0 && r.rel_regret == 0.0, r.strategy_id + " has non-zero regret");
  }
  o.check(!demo.identical.pearson_imagenet, "ImageNet Pearson is defined");
  o.check(!demo.identical.pearson_linear, "linear Pearson is defined");
  o.check(!demo.identical.pearson_knn, "kNN Pearson is defined");
  const auto text = format_correlation_demo(demo);
  const auto identical = text.substr(0, text.find("scenario outlier"));
  o.check(identical.find("finetune 0.000000") == std::string::npos, "undefined Pearson printed as 0");
  o.check(identical.find("undefined") != std::string::npos, "undefined Pearson not reported");
  return std::to_string(demo.identical.regrets.size()) + " strategies at zero regret, Pearson undefined";
}

// ---------------------------------------------------------------------------
// 8. Format round-trips.

std::string random_id(Rng& rng) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789_-";
  std::string s(1 + rng.below(8), 'x');
  for (auto& c : s) c = alphabet[rng.below(alphabet.size())];
  return s;
}

std::string random_text(Rng& rng) {
  static const std::string alphabet = "ab ,\"'&;:xyz";
  std::string s(rng.below(10), 'x');
  for (auto& c : s) c = alphabet[rng.below(alphabet.size())];
  return s;
}

std::string criterion_roundtrip(Outcome& o, Clock::time_point suite_start) {
  testutil::TempDir dir;
  Rng rng(808);
  auto same = [&](const std::string& a, const std::string& b, const std::string& what) {
    o.check(testutil::read_bytes(dir / a) == testutil::read_bytes(dir / b), what + " not byte-identical");
  };

  for (int inst = 0; inst < 100; ++inst) {
    const std::string tag = std::to_string(inst);

    // EMB1
    EmbeddingMatrix m;
    const int n = 1 + static_cast<int>(rng.below(20)), d = 1 + static_cast<int>(rng.below(10));
    m.n_classes = 1 + static_cast<std::uint32_t>(rng.below(5));
    m.features.resize(n, d);
    m.labels.resize(n);
    for (int i = 0; i < n; ++i) {
      m.labels[i] = static_cast<int>(rng.below(m.n_classes));
      for (int j = 0; j < d; ++j) m.features(i, j) = static_cast<float>(rng.normal() * std::pow(10.0, rng.below(7) - 3.0));
    }
    save_embeddings(m, dir / ("e" + tag + "a.emb"));
    save_embeddings(load_embeddings(dir / ("e" + tag + "a.emb")), dir / ("e" + tag + "b.emb"));
    same("e" + tag + "a.emb", "e" + tag + "b.emb", "EMB1 instance " + tag);
    o.check(load_embeddings(dir / ("e" + tag + "a.emb")).features == m.features, "EMB1 values changed " + tag);

    // Model and task manifests.
    std::vector<ModelRecord> models;
    const int n_models = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n_models; ++i) {
      ModelRecord r;
      r.model_id = random_id(rng) + std::to_string(i);
      r.display_name = random_text(rng);
      r.embedding_dim = 1 + static_cast<std::int64_t>(rng.below(5000));
      r.param_count = 1 + static_cast<std::int64_t>(rng.below(100'000'000));
      if (rng.below(2)) r.imagenet_accuracy = rng.uniform();
      r.upstream_dataset_name = random_text(rng);
      if (rng.below(2)) r.upstream_dataset_size = 1 + static_cast<std::int64_t>(rng.below(1'000'000'000));
      const int n_tags = static_cast<int>(rng.below(3));
      for (int k = 0; k < n_tags; ++k) r.tags.push_back("tag" + std::to_string(k));
      models.push_back(r);
    }
    const ModelCatalog catalog(models);
    save_model_manifest(catalog, dir / ("m" + tag + "a.csv"));
    save_model_manifest(load_model_manifest(dir / ("m" + tag + "a.csv")), dir / ("m" + tag + "b.csv"));
    same("m" + tag + "a.csv", "m" + tag + "b.csv", "model manifest " + tag);

    std::vector<TaskRecord> task_records;
    const int n_tasks = 1 + static_cast<int>(rng.below(4));
    for (int t = 0; t < n_tasks; ++t) {
      task_records.push_back({random_id(rng) + std::to_string(t), static_cast<TaskGroup>(rng.below(3)),
                              1 + static_cast<std::int64_t>(rng.below(1000)), 1 + static_cast<std::int64_t>(rng.below(1000)),
                              1 + static_cast<std::int64_t>(rng.below(1000)), 2 + static_cast<std::int64_t>(rng.below(100))});
    }
    const TaskCatalog tasks(task_records);
    save_task_manifest(tasks, dir / ("t" + tag + "a.csv"));
    save_task_manifest(load_task_manifest(dir / ("t" + tag + "a.csv")), dir / ("t" + tag + "b.csv"));
    same("t" + tag + "a.csv", "t" + tag + "b.csv", "task manifest " + tag);

    // Accuracy and proxy tables.
    AccuracyTable acc;
    ProxyScoreTable scores;
    for (const auto& t : task_records) {
      for (const auto& mr : models) {
        const int runs = 1 + static_cast<int>(rng.below(3));
        for (int r = 0; r < runs; ++r) acc.add_run(mr.model_id, t.task_id, static_cast<std::int64_t>(rng.below(100)) * 3 + r, rng.uniform());
        scores.put(mr.model_id, t.task_id, ProxyKind::Knn, rng.uniform(), "knn-" + random_id(rng));
        scores.put(mr.model_id, t.task_id, ProxyKind::Linear, rng.uniform(), "linear-" + random_id(rng));
      }
    }
    save_accuracy_table(acc, dir / ("a" + tag + "a.csv"));
    save_accuracy_table(load_accuracy_table(dir / ("a" + tag + "a.csv")), dir / ("a" + tag + "b.csv"));
    same("a" + tag + "a.csv", "a" + tag + "b.csv", "accuracy CSV " + tag);
    save_proxy_scores(scores, dir / ("p" + tag + "a.csv"));
    save_proxy_scores(load_proxy_scores(dir / ("p" + tag + "a.csv")), dir / ("p" + tag + "b.csv"));
    same("p" + tag + "a.csv", "p" + tag + "b.csv", "proxy CSV " + tag);

    // Selections, regret rows, budget curves, minimum budgets.
    StrategyContext ctx{&catalog, &scores, &acc, {}};
    const auto pool = build_pool(catalog, PoolId::All);
    const auto report = build_report({{pool}, all_strategies(), {1, 2, 3}}, tasks, acc, ctx);
    std::vector<Selection> selections;
    auto ctx_all = ctx;
    for (const auto& t : task_records) ctx_all.task_ids.push_back(t.task_id);
    for (auto s : all_strategies()) {
      for (const auto& t : task_records) {
        const auto ranking = rank(s, pool, t.task_id, ctx_all);
        auto sel = select_top(ranking, 1 + static_cast<int>(rng.below(pool.size())));
        sel.task_id = t.task_id;
        selections.push_back(sel);
      }
    }
    save_selections(selections, dir / ("s" + tag + "a.csv"));
    save_selections(load_selections(dir / ("s" + tag + "a.csv")), dir / ("s" + tag + "b.csv"));
    same("s" + tag + "a.csv", "s" + tag + "b.csv", "selections CSV " + tag);
    save_regret_rows(report.rows, dir / ("r" + tag + "a.csv"));
    save_regret_rows(load_regret_rows(dir / ("r" + tag + "a.csv")), dir / ("r" + tag + "b.csv"));
    same("r" + tag + "a.csv", "r" + tag + "b.csv", "regret CSV " + tag);
    save_budget_curves(report.curves, dir / ("c" + tag + "a.csv"));
    save_budget_curves(load_budget_curves(dir / ("c" + tag + "a.csv")), dir / ("c" + tag + "b.csv"));
    same("c" + tag + "a.csv", "c" + tag + "b.csv", "budget curve CSV " + tag);
    save_min_budgets(report.min_budgets, dir / ("n" + tag + "a.csv"));
    save_min_budgets(load_min_budgets(dir / ("n" + tag + "a.csv")), dir / ("n" + tag + "b.csv"));
    same("n" + tag + "a.csv", "n" + tag + "b.csv", "min budget CSV " + tag);

    // Ground truth.
    std::vector<GroundTruthRow> gt;
    for (const auto& mr : models) gt.push_back({mr.model_id, task_records[0].task_id, rng.uniform(), rng.below(2) == 1});
    save_ground_truth(gt, dir / ("g" + tag + "a.csv"));
    save_ground_truth(load_ground_truth(dir / ("g" + tag + "a.csv")), dir / ("g" + tag + "b.csv"));
    same("g" + tag + "a.csv", "g" + tag + "b.csv", "ground truth CSV " + tag);
  }

  // Synthetic generation is byte-identical across two runs.
  SynthConfig config;
  config.seed = 7;
  testutil::TempDir first, second;
  write_data_tree(generate(config), first.path());
  write_data_tree(generate(config), second.path());
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(first.path())) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = std::filesystem::relative(e.path(), first.path());
    o.check(testutil::read_bytes(e.path()) == testutil::read_bytes(second.path() / rel),
            "synthetic file differs: " + rel.string());
  }
  o.check(files == 4 + 12 * 6 * 2, "unexpected synthetic file count " + std::to_string(files));

  const double total = seconds_since(suite_start);
  o.check(total < 300.0, "suite runtime " + fmt(total) + "s exceeds 5 minutes");
  return "100 instances x 10 formats, synthetic tree of " + std::to_string(files) + " files identical, suite " +
         fmt(total) + "s";
}

}  // namespace

int main() {
  const auto start = Clock::now();
  run_guarded(1, "kNN oracle equivalence", criterion_knn);
  run_guarded(2, "linear-probe sanity", criterion_linear);
  run_guarded(3, "metric identities", criterion_identities);
  run_guarded(4, "expert scenario", criterion_expert);
  run_guarded(5, "budget-curve dominance", criterion_budget_curves);
  run_guarded(6, "minimum-budget table", criterion_min_budget);
  run_guarded(7, "correlation limitation", criterion_correlation);
  run_guarded(8, "format round-trips", [&](Outcome& o) { return criterion_roundtrip(o, start); });
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
