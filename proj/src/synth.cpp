#include "modelsearch/synth.hpp"

#include <algorithm>
#include <cmath>

#include "modelsearch/csv.hpp"
#include "modelsearch/error.hpp"
#include "modelsearch/random.hpp"

namespace modelsearch {

namespace {

const std::vector<std::string> kGroundTruthHeader = {"model_id", "task_id", "quality", "is_intended_argmax"};

// Sub-stream ids for derive_seed.
enum Stream : std::uint64_t { kCatalogStream = 1, kQualityStream = 2, kAccuracyStream = 3, kEmbeddingStream = 4 };

std::string padded_id(char prefix, int i, int count) {
  const auto width = std::to_string(std::max(count - 1, 1)).size();
  std::string digits = std::to_string(i);
  return std::string(1, prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

constexpr TaskGroup kGroupCycle[3] = {TaskGroup::Natural, TaskGroup::Specialized, TaskGroup::Structured};

// Class means for one (model, task): scaled standard basis vectors when the
// dimension allows it, random unit directions otherwise.
Eigen::MatrixXd class_means(int n_classes, int dim, double scale, Rng& rng) {
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(n_classes, dim);
  if (dim >= n_classes) {
    for (int c = 0; c < n_classes; ++c) means(c, c) = scale;
    return means;
  }
  for (int c = 0; c < n_classes; ++c) {
    for (int j = 0; j < dim; ++j) means(c, j) = rng.normal();
    const double norm = means.row(c).norm();
    if (norm > 0.0) means.row(c) *= scale / norm;
  }
  return means;
}

EmbeddingMatrix draw_split(const std::string& model_id, const std::string& task_id, Split split, int n,
                           int n_classes, const Eigen::MatrixXd& means, double signal, Rng& rng) {
  EmbeddingMatrix m;
  m.model_id = model_id;
  m.task_id = task_id;
  m.split = split;
  m.n_classes = static_cast<std::uint32_t>(n_classes);
  m.features.resize(n, means.cols());
  m.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int c = i % n_classes;
    m.labels[i] = c;
    for (Eigen::Index j = 0; j < means.cols(); ++j) {
      m.features(i, j) = static_cast<float>(signal * means(c, j) + rng.normal());
    }
  }
  return m;
}

}  // namespace

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::ConfigError, what); };
  if (n_models < 1) bad("n_models must be >= 1");
  if (n_tasks < 1) bad("n_tasks must be >= 1");
  if (n_classes < 2) bad("n_classes must be >= 2");
  if (n_train < 1 || n_val < 1) bad("n_train and n_val must be >= 1");
  if (dims.empty()) bad("at least one embedding dimension is required");
  for (int d : dims) {
    if (d < 1) bad("embedding dimensions must be >= 1");
  }
  if (n_experts < 0) bad("n_experts must be >= 0");
  if (n_experts > std::min(n_models, n_tasks)) {
    bad("n_experts (" + std::to_string(n_experts) + ") exceeds min(n_models, n_tasks) = " +
        std::to_string(std::min(n_models, n_tasks)));
  }
  if (!(q_lo >= 0.0 && q_lo <= q_hi && q_hi <= 1.0)) bad("quality range must satisfy 0 <= q_lo <= q_hi <= 1");
  if (!(expert_quality_bonus > 0.0)) bad("expert_quality_bonus must be positive");
  if (!(generalist_margin >= 0.0 && generalist_margin <= q_hi - q_lo)) {
    bad("generalist_margin must lie in [0, q_hi - q_lo]");
  }
  if (!(accuracy_noise_sd >= 0.0) || !std::isfinite(accuracy_noise_sd)) bad("accuracy_noise_sd must be >= 0");
  if (!(accuracy_base >= 0.0 && accuracy_gain >= 0.0 && accuracy_base + accuracy_gain <= 1.0)) {
    bad("accuracy_base and accuracy_gain must be >= 0 with a sum <= 1");
  }
  if (runs_per_cell < 1) bad("runs_per_cell must be >= 1");
  if (!(separation > 0.0) || !std::isfinite(separation)) bad("separation must be positive");
}

SynthData generate(const SynthConfig& config) {
  config.validate();
  const int first_expert = config.n_models - config.n_experts;
  const bool has_generalist = first_expert > 0;
  auto is_generalist = [&](int m) { return has_generalist && m == 0; };

  std::vector<TaskRecord> tasks;
  for (int t = 0; t < config.n_tasks; ++t) {
    tasks.push_back({padded_id('t', t, config.n_tasks), kGroupCycle[t % 3], config.n_train, config.n_val, 1,
                     config.n_classes});
  }

  Rng meta(derive_seed(config.seed, kCatalogStream));
  std::vector<ModelRecord> models;
  for (int m = 0; m < config.n_models; ++m) {
    ModelRecord r;
    r.model_id = padded_id('m', m, config.n_models);
    r.embedding_dim = config.dims[meta.below(config.dims.size())];
    r.param_count = 5'000'000 + static_cast<std::int64_t>(meta.below(20'000'000));
    if (m >= first_expert) {
      const auto& task = tasks[static_cast<std::size_t>(m - first_expert)].task_id;
      r.display_name = "expert " + task;
      r.upstream_dataset_name = "subset-" + task;
      r.upstream_dataset_size = 10'000 + static_cast<std::int64_t>(meta.below(90'000));
      r.tags = {"expert"};
    } else if (is_generalist(m)) {
      r.display_name = "generalist";
      r.imagenet_accuracy = 0.8;
      r.upstream_dataset_name = "imagenet-like";
      r.upstream_dataset_size = 1'281'167;
      r.tags = {"generalist"};
    } else if (m % 2 == 1) {
      r.display_name = "imagenet model " + std::to_string(m);
      r.imagenet_accuracy = csv::round6(meta.uniform(0.6, 0.78));
      r.upstream_dataset_name = "imagenet-like";
      r.upstream_dataset_size = 1'281'167;
    } else {
      r.display_name = "other model " + std::to_string(m);
      r.upstream_dataset_name = "web-" + std::to_string(m);
      r.upstream_dataset_size = 100'000 + static_cast<std::int64_t>(meta.below(5'000'000));
    }
    models.push_back(std::move(r));
  }

  // Fine-tune quality q(m, t).
  Rng qrng(derive_seed(config.seed, kQualityStream));
  const double ordinary_hi = config.q_hi - config.generalist_margin;
  std::vector<std::vector<double>> quality(config.n_models, std::vector<double>(config.n_tasks));
  for (int m = 0; m < config.n_models; ++m) {
    for (int t = 0; t < config.n_tasks; ++t) {
      const double draw = qrng.uniform(config.q_lo, ordinary_hi);
      double q = is_generalist(m) ? config.q_hi : draw;
      if (m >= first_expert && t == m - first_expert) q = std::min(1.0, draw + config.expert_quality_bonus);
      quality[m][t] = csv::round6(q);
    }
  }

  SynthData out;
  Rng arng(derive_seed(config.seed, kAccuracyStream));
  for (int t = 0; t < config.n_tasks; ++t) {
    for (int m = 0; m < config.n_models; ++m) {
      const double mean = config.accuracy_base + config.accuracy_gain * quality[m][t];
      for (int run = 0; run < config.runs_per_cell; ++run) {
        const double acc = std::clamp(mean + config.accuracy_noise_sd * arng.normal(), 0.0, 1.0);
        out.accuracies.add_run(models[m].model_id, tasks[t].task_id, run, csv::round6(acc));
      }
    }
    int argmax = 0;
    for (int m = 1; m < config.n_models; ++m) {
      if (quality[m][t] > quality[argmax][t]) argmax = m;
    }
    for (int m = 0; m < config.n_models; ++m) {
      out.ground_truth.push_back({models[m].model_id, tasks[t].task_id, quality[m][t], m == argmax});
    }
  }

  const std::uint64_t embed_seed = derive_seed(config.seed, kEmbeddingStream);
  for (int m = 0; m < config.n_models; ++m) {
    const int dim = static_cast<int>(models[m].embedding_dim);
    for (int t = 0; t < config.n_tasks; ++t) {
      Rng rng(derive_seed(embed_seed, static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(config.n_tasks) +
                                          static_cast<std::uint64_t>(t)));
      double signal = quality[m][t];
      if (is_generalist(m) && config.hide_generalist_on_structured && tasks[t].group == TaskGroup::Structured) {
        signal = 0.0;
      }
      const auto means = class_means(config.n_classes, dim, config.separation, rng);
      out.embeddings.add(draw_split(models[m].model_id, tasks[t].task_id, Split::Train, config.n_train,
                                    config.n_classes, means, signal, rng));
      out.embeddings.add(draw_split(models[m].model_id, tasks[t].task_id, Split::Val, config.n_val,
                                    config.n_classes, means, signal, rng));
    }
  }

  out.catalog = ModelCatalog(std::move(models));
  out.tasks = TaskCatalog(std::move(tasks));
  return out;
}

void save_ground_truth(const std::vector<GroundTruthRow>& rows, const std::filesystem::path& path) {
  std::vector<csv::Row> out;
  for (const auto& r : rows) {
    out.push_back({r.model_id, r.task_id, csv::format6(r.quality), r.is_intended_argmax ? "1" : "0"});
  }
  csv::write(path, kGroundTruthHeader, out);
}

std::vector<GroundTruthRow> load_ground_truth(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::require_header(table, kGroundTruthHeader);
  std::vector<GroundTruthRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string ctx = path.string() + ":" + std::to_string(i + 2);
    if (r[3] != "0" && r[3] != "1") fail(ErrorCode::FormatError, ctx + ": is_intended_argmax must be 0 or 1");
    rows.push_back({r[0], r[1], csv::parse_double(r[2], ctx), r[3] == "1"});
  }
  return rows;
}

void write_data_tree(const SynthData& data, const std::filesystem::path& root) {
  save_model_manifest(data.catalog, root / "models.csv");
  save_task_manifest(data.tasks, root / "tasks.csv");
  save_accuracy_table(data.accuracies, root / "accuracy.csv");
  save_ground_truth(data.ground_truth, root / "ground_truth.csv");
  for (const auto& m : data.embeddings.matrices()) {
    save_embeddings(m, embedding_path(root, m.model_id, m.task_id, m.split));
  }
}

}  // namespace modelsearch
