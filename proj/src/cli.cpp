#include "modelsearch/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>

#include "modelsearch/csv.hpp"
#include "modelsearch/error.hpp"
#include "modelsearch/proxy.hpp"
#include "modelsearch/strategy.hpp"
#include "modelsearch/synth.hpp"

namespace modelsearch::cli {

namespace fs = std::filesystem;

namespace {

struct GlobalFlags {
  std::string data_dir = "data";
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 1;

  fs::path out_dir() const { return out.empty() ? fs::path(data_dir) : fs::path(out); }
};

struct SynthFlags {
  SynthConfig config;
};

struct ProxyFlags {
  std::string kind = "both";
  std::vector<std::string> pools{"All"};
  std::vector<std::string> members;
  int k = 1;
  int repeats = 5;
  int steps = 2500;
  int batch = 512;
  std::vector<double> learning_rates{0.1, 0.01};
};

struct SelectFlags {
  std::vector<std::string> pools{"All"};
  std::vector<std::string> members;
  std::string strategies = "task_agnostic,linear,knn,hybrid_linear,hybrid_knn,oracle";
  std::vector<int> budgets{1, 2};
  bool knn_dim_correlation = false;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<Strategy> parse_strategies(const std::string& text) {
  std::vector<Strategy> out;
  for (const auto& s : split_list(text)) out.push_back(parse_strategy(s));
  if (out.empty()) fail(ErrorCode::ConfigError, "strategy list is empty");
  return out;
}

std::vector<Pool> make_pools(const ModelCatalog& catalog, const std::vector<std::string>& names,
                             const std::vector<std::string>& members) {
  if (names.empty()) fail(ErrorCode::ConfigError, "pool list is empty");
  std::vector<Pool> pools;
  for (const auto& name : names) {
    const auto id = parse_pool_id(name);
    if (id == PoolId::Custom) {
      if (members.empty()) fail(ErrorCode::ConfigError, "the Custom pool needs --members");
      PoolSpec spec;
      spec.pool_id = PoolId::Custom;
      spec.explicit_members = members;
      pools.push_back(build_pool(catalog, spec));
    } else {
      pools.push_back(build_pool(catalog, id));
    }
  }
  return pools;
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::IoError, "missing input file " + path.string());
}

ModelCatalog load_models(const GlobalFlags& g) {
  require_file(fs::path(g.data_dir) / "models.csv");
  return load_model_manifest(fs::path(g.data_dir) / "models.csv");
}

TaskCatalog load_tasks(const GlobalFlags& g) {
  require_file(fs::path(g.data_dir) / "tasks.csv");
  return load_task_manifest(fs::path(g.data_dir) / "tasks.csv");
}

fs::path cache_path(const GlobalFlags& g) { return fs::path(g.data_dir) / "proxy_scores.csv"; }

ProxyScoreTable load_cache(const GlobalFlags& g) {
  return fs::exists(cache_path(g)) ? load_proxy_scores(cache_path(g)) : ProxyScoreTable{};
}

void cmd_synth(const GlobalFlags& g, SynthFlags f, std::ostream& out) {
  f.config.seed = g.seed;
  const auto data = generate(f.config);
  const auto root = g.out_dir();
  write_data_tree(data, root);
  out << "wrote " << data.catalog.size() << " models x " << data.tasks.size() << " tasks to " << root.string()
      << "\n";
}

void cmd_proxy(const GlobalFlags& g, const ProxyFlags& f, std::ostream& out) {
  const auto catalog = load_models(g);
  const auto tasks = load_tasks(g);
  const auto pools = make_pools(catalog, f.pools, f.members);

  std::vector<ProxySettings> settings;
  auto add = [&](ProxyKind kind) {
    ProxySettings s;
    s.kind = kind;
    s.knn.k = f.k;
    s.linear.learning_rates = f.learning_rates;
    s.linear.steps = f.steps;
    s.linear.batch_size = f.batch;
    s.linear.repeats = f.repeats;
    s.linear.seed = g.seed;
    if (kind == ProxyKind::Linear) s.linear.validate();
    settings.push_back(s);
  };
  if (f.kind == "both") {
    add(ProxyKind::Knn);
    add(ProxyKind::Linear);
  } else {
    add(parse_proxy_kind(f.kind));
  }

  // Entries produced under a different config for a requested kind are stale.
  ProxyScoreTable cache;
  std::size_t dropped = 0;
  for (const auto& e : load_cache(g).entries()) {
    const auto it = std::find_if(settings.begin(), settings.end(), [&](const auto& s) { return s.kind == e.kind; });
    if (it != settings.end() && it->digest() != e.config_digest) {
      ++dropped;
      continue;
    }
    cache.put(e.model_id, e.task_id, e.kind, e.score, e.config_digest);
  }

  std::size_t computed = 0, cached = 0;
  const DirectoryEmbeddingSource source(g.data_dir);
  for (const auto& s : settings) {
    for (const auto& pool : pools) {
      for (const auto& task : tasks.tasks()) {
        const auto r = score_pool(pool, task.task_id, s, source, cache, g.jobs);
        computed += r.computed;
        cached += r.cached;
      }
    }
  }
  save_proxy_scores(cache, cache_path(g));
  out << "computed " << computed << " cached " << cached;
  if (dropped) out << " dropped " << dropped;
  out << "\n";
}

StrategyContext make_context(const ModelCatalog& catalog, const ProxyScoreTable& scores,
                             const AccuracyTable* accuracies) {
  return {&catalog, &scores, accuracies, {}};
}

void cmd_rank(const GlobalFlags& g, const SelectFlags& f, std::ostream& out) {
  const auto catalog = load_models(g);
  const auto tasks = load_tasks(g);
  const auto strategies = parse_strategies(f.strategies);
  const auto pools = make_pools(catalog, f.pools, f.members);
  const auto scores = load_cache(g);
  std::optional<AccuracyTable> accuracies;
  if (std::find(strategies.begin(), strategies.end(), Strategy::Oracle) != strategies.end()) {
    require_file(fs::path(g.data_dir) / "accuracy.csv");
    accuracies = load_accuracy_table(fs::path(g.data_dir) / "accuracy.csv");
  }
  auto ctx = make_context(catalog, scores, accuracies ? &*accuracies : nullptr);
  for (const auto& t : tasks.tasks()) ctx.task_ids.push_back(t.task_id);

  std::vector<Selection> selections;
  for (const auto& pool : pools) {
    for (const auto& task : tasks.tasks()) {
      for (auto s : strategies) {
        const auto ranking = rank(s, pool, task.task_id, ctx);
        for (int b : f.budgets) {
          auto sel = select_top(ranking, b);
          sel.task_id = task.task_id;
          selections.push_back(std::move(sel));
        }
      }
    }
  }
  const auto path = g.out_dir() / "selections.csv";
  save_selections(selections, path);
  out << "wrote " << selections.size() << " selections to " << path.string() << "\n";
}

void cmd_report(const GlobalFlags& g, const SelectFlags& f, std::ostream& out) {
  const auto strategies = parse_strategies(f.strategies);
  const auto catalog = load_models(g);
  const auto tasks = load_tasks(g);
  require_file(fs::path(g.data_dir) / "accuracy.csv");
  const auto accuracies = load_accuracy_table(fs::path(g.data_dir) / "accuracy.csv");
  const auto scores = load_cache(g);
  const auto pools = make_pools(catalog, f.pools, f.members);

  ReportRequest request{pools, strategies, f.budgets};
  const auto report = build_report(request, tasks, accuracies, make_context(catalog, scores, &accuracies));

  const auto dir = g.out_dir();
  save_regret_rows(report.rows, dir / "regret_report.csv");
  save_budget_curves(report.curves, dir / "budget_curve.csv");
  save_min_budgets(report.min_budgets, dir / "min_budget.csv");

  std::vector<std::string> strategy_ids;
  for (auto s : strategies) strategy_ids.emplace_back(to_string(s));
  for (const auto& pool : pools) {
    std::vector<RegretRow> rows;
    std::copy_if(report.rows.begin(), report.rows.end(), std::back_inserter(rows),
                 [&](const RegretRow& r) { return r.pool_id == pool.pool_id; });
    const auto svg = render_regret_svg(pool.pool_id, strategy_ids, rows);
    const auto path = dir / ("regret_" + pool.pool_id + ".svg");
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    file << svg;
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
  }

  if (f.knn_dim_correlation) {
    std::vector<csv::Row> rows;
    for (const auto& t : tasks.tasks()) {
      const auto r = knn_dim_correlation(t.task_id, catalog, scores);
      rows.push_back({t.task_id, r ? csv::format6(*r) : "undefined"});
    }
    csv::write(dir / "knn_dim_correlation.csv", {"task_id", "pearson"}, rows);
  }
  out << "wrote " << report.rows.size() << " regret rows for " << pools.size() << " pool(s) to " << dir.string()
      << "\n";
}

void cmd_demo(const GlobalFlags& g, bool write_file, std::ostream& out) {
  const auto text = format_correlation_demo(correlation_limit_demo());
  out << text;
  if (write_file) {
    const auto path = g.out_dir() / "correlation_demo.txt";
    fs::create_directories(g.out_dir());
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    file << text;
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
  }
}

std::string fixed2(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, ptr);
}

std::string group_color(std::string_view group) {
  if (group == "natural") return "#4e79a7";
  if (group == "specialized") return "#59a14f";
  if (group == "structured") return "#e15759";
  return "#888888";
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_regret_svg(const std::string& pool_id, const std::vector<std::string>& strategy_ids,
                              const std::vector<RegretRow>& rows) {
  std::vector<std::pair<std::string, std::string>> tasks;  // (task_id, group) in first-seen order
  for (const auto& r : rows) {
    if (std::none_of(tasks.begin(), tasks.end(), [&](const auto& t) { return t.first == r.task_id; })) {
      tasks.emplace_back(r.task_id, r.task_group);
    }
  }
  std::map<std::tuple<std::string, std::string, int>, double> rel;
  for (const auto& r : rows) rel[{r.strategy_id, r.task_id, r.budget}] = r.rel_regret;

  const double left = 120.0, top = 40.0, row_h = 110.0, plot_h = 80.0, bar_w = 18.0, gap = 8.0;
  const double width = left + static_cast<double>(tasks.size()) * (bar_w + gap) + 20.0;
  const double height = top + static_cast<double>(strategy_ids.size()) * row_h + 30.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed2(width) << "\" height=\"" << fixed2(height)
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  svg << "<text x=\"10\" y=\"20\" font-size=\"14\">Relative regret, pool " << escape_xml(pool_id)
      << " (B=1 light, B=2 solid)</text>\n";
  for (std::size_t s = 0; s < strategy_ids.size(); ++s) {
    const double y0 = top + static_cast<double>(s) * row_h;
    const double base = y0 + plot_h;
    svg << "<g class=\"strategy-row\" data-strategy=\"" << escape_xml(strategy_ids[s]) << "\">\n";
    svg << "<text x=\"10\" y=\"" << fixed2(y0 + plot_h / 2) << "\">" << escape_xml(strategy_ids[s]) << "</text>\n";
    svg << "<line x1=\"" << fixed2(left) << "\" y1=\"" << fixed2(base) << "\" x2=\"" << fixed2(width - 10)
        << "\" y2=\"" << fixed2(base) << "\" stroke=\"#333\"/>\n";
    svg << "<line x1=\"" << fixed2(left) << "\" y1=\"" << fixed2(y0) << "\" x2=\"" << fixed2(left) << "\" y2=\""
        << fixed2(base) << "\" stroke=\"#333\"/>\n";
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const double x = left + 4.0 + static_cast<double>(t) * (bar_w + gap);
      const auto color = group_color(tasks[t].second);
      for (int b : {1, 2}) {
        const auto it = rel.find({strategy_ids[s], tasks[t].first, b});
        if (it == rel.end()) continue;
        const double h = std::clamp(it->second, 0.0, 1.0) * plot_h;
        const double inset = b == 1 ? 0.0 : 4.0;
        svg << "<rect class=\"bar b" << b << "\" x=\"" << fixed2(x + inset) << "\" y=\"" << fixed2(base - h)
            << "\" width=\"" << fixed2(bar_w - 2 * inset) << "\" height=\"" << fixed2(h) << "\" fill=\"" << color
            << "\" fill-opacity=\"" << (b == 1 ? "0.35" : "1") << "\"><title>" << escape_xml(tasks[t].first)
            << " B=" << b << " " << csv::format6(it->second) << "</title></rect>\n";
      }
      if (s + 1 == strategy_ids.size()) {
        svg << "<text x=\"" << fixed2(x) << "\" y=\"" << fixed2(base + 12) << "\">" << escape_xml(tasks[t].first)
            << "</text>\n";
      }
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Budgeted selection of pretrained models for transfer"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all");

  GlobalFlags g;
  app.add_option("--data-dir", g.data_dir, "Data directory (manifests, accuracies, embeddings, proxy cache)");
  app.add_option("--out", g.out, "Output directory (defaults to the data directory)");
  app.add_option("--seed", g.seed, "Seed for generation and linear probes");
  app.add_option("--jobs", g.jobs, "Worker threads for proxy evaluation")->check(CLI::PositiveNumber);

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark data tree");
  synth->add_option("--models", sf.config.n_models);
  synth->add_option("--tasks", sf.config.n_tasks);
  synth->add_option("--experts", sf.config.n_experts);
  synth->add_option("--classes", sf.config.n_classes);
  synth->add_option("--train", sf.config.n_train);
  synth->add_option("--val", sf.config.n_val);
  synth->add_option("--dims", sf.config.dims)->delimiter(',');
  synth->add_option("--q-lo", sf.config.q_lo);
  synth->add_option("--q-hi", sf.config.q_hi);
  synth->add_option("--expert-bonus", sf.config.expert_quality_bonus);
  synth->add_option("--noise", sf.config.accuracy_noise_sd);
  synth->add_option("--runs", sf.config.runs_per_cell);
  synth->add_option("--separation", sf.config.separation);

  ProxyFlags pf;
  auto* proxy = app.add_subcommand("proxy", "Compute kNN and/or linear-probe proxy scores");
  proxy->add_option("--kind", pf.kind, "knn, linear or both")->check(CLI::IsMember({"knn", "linear", "both"}));
  proxy->add_option("--pool", pf.pools)->delimiter(',');
  proxy->add_option("--members", pf.members, "Members of the Custom pool")->delimiter(',');
  proxy->add_option("--k", pf.k);
  proxy->add_option("--repeats", pf.repeats);
  proxy->add_option("--steps", pf.steps);
  proxy->add_option("--batch", pf.batch);
  proxy->add_option("--lr", pf.learning_rates)->delimiter(',');

  SelectFlags rf;
  auto* rank_cmd = app.add_subcommand("rank", "Write the selection of every strategy for every task");
  SelectFlags report_flags;
  auto* report = app.add_subcommand("report", "Regret tables, budget curves and charts");
  for (auto [cmd, flags] : {std::pair{rank_cmd, &rf}, std::pair{report, &report_flags}}) {
    cmd->add_option("--pool", flags->pools)->delimiter(',');
    cmd->add_option("--members", flags->members, "Members of the Custom pool")->delimiter(',');
    cmd->add_option("--strategies", flags->strategies, "Comma-separated strategy ids");
    cmd->add_option("--budget", flags->budgets)->delimiter(',');
  }
  report->add_flag("--knn-dim-correlation", report_flags.knn_dim_correlation,
                   "Also write the embedding-size / kNN score correlation per task");

  bool demo_write = false;
  auto* demo = app.add_subcommand("demo-correlation", "Show where correlation and regret disagree");
  demo->add_flag("--write", demo_write, "Also write correlation_demo.txt to the output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      fail(ErrorCode::ConfigError, e.what());
    }
    for (const auto* flags : {&rf, &report_flags}) {
      for (int b : flags->budgets) {
        if (b < 1) fail(ErrorCode::ConfigError, "budgets must be >= 1");
      }
    }
    if (*synth) cmd_synth(g, sf, out);
    else if (*proxy) cmd_proxy(g, pf, out);
    else if (*rank_cmd) cmd_rank(g, rf, out);
    else if (*report) cmd_report(g, report_flags, out);
    else if (*demo) cmd_demo(g, demo_write, out);
    return 0;
  } catch (const Error& e) {
    err << "ERROR " << to_string(e.code()) << ": " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "ERROR " << to_string(ErrorCode::IoError) << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "ERROR Error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace modelsearch::cli
