#include "modelsearch/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "modelsearch/csv.hpp"
#include "modelsearch/error.hpp"

namespace modelsearch {

namespace {

const std::vector<std::string> kModelHeader = {"model_id",     "display_name",          "embedding_dim",
                                               "param_count",  "imagenet_accuracy",     "upstream_dataset_name",
                                               "upstream_dataset_size", "tags"};
const std::vector<std::string> kTaskHeader = {"task_id", "group", "n_train", "n_val", "n_test", "n_classes"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

void validate(const ModelRecord& m) {
  if (m.model_id.empty()) fail(ErrorCode::FormatError, "model_id must not be empty");
  if (m.embedding_dim < 1) fail(ErrorCode::RangeError, m.model_id + ": embedding_dim must be >= 1");
  if (m.param_count < 1) fail(ErrorCode::RangeError, m.model_id + ": param_count must be >= 1");
  if (m.imagenet_accuracy && !(*m.imagenet_accuracy >= 0.0 && *m.imagenet_accuracy <= 1.0)) {
    fail(ErrorCode::RangeError, m.model_id + ": imagenet_accuracy outside [0,1]");
  }
  if (m.upstream_dataset_size && *m.upstream_dataset_size < 1) {
    fail(ErrorCode::RangeError, m.model_id + ": upstream_dataset_size must be positive");
  }
}

void validate(const TaskRecord& t) {
  if (t.task_id.empty()) fail(ErrorCode::FormatError, "task_id must not be empty");
  if (t.n_train < 1 || t.n_val < 1 || t.n_test < 1) {
    fail(ErrorCode::RangeError, t.task_id + ": split sizes must be >= 1");
  }
  if (t.n_classes < 2) fail(ErrorCode::RangeError, t.task_id + ": n_classes must be >= 2");
}

}  // namespace

bool ModelRecord::has_tag(std::string_view tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::string_view to_string(TaskGroup group) {
  switch (group) {
    case TaskGroup::Natural: return "natural";
    case TaskGroup::Specialized: return "specialized";
    case TaskGroup::Structured: return "structured";
  }
  return "natural";
}

TaskGroup parse_task_group(std::string_view text) {
  const auto s = lower(text);
  if (s == "natural") return TaskGroup::Natural;
  if (s == "specialized") return TaskGroup::Specialized;
  if (s == "structured") return TaskGroup::Structured;
  fail(ErrorCode::FormatError, "unknown task group '" + std::string(text) + "'");
}

ModelCatalog::ModelCatalog(std::vector<ModelRecord> models) : models_(std::move(models)) {
  for (std::size_t i = 0; i < models_.size(); ++i) {
    validate(models_[i]);
    if (!index_.emplace(models_[i].model_id, i).second) {
      fail(ErrorCode::DuplicateModel, "duplicate model_id '" + models_[i].model_id + "'");
    }
  }
}

bool ModelCatalog::contains(std::string_view model_id) const { return index_.count(std::string(model_id)) > 0; }

std::size_t ModelCatalog::index_of(std::string_view model_id) const {
  auto it = index_.find(std::string(model_id));
  if (it == index_.end()) fail(ErrorCode::UnknownModel, "unknown model '" + std::string(model_id) + "'");
  return it->second;
}

const ModelRecord& ModelCatalog::at(std::string_view model_id) const { return models_[index_of(model_id)]; }

TaskCatalog::TaskCatalog(std::vector<TaskRecord> tasks) : tasks_(std::move(tasks)) {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    validate(tasks_[i]);
    if (!index_.emplace(tasks_[i].task_id, i).second) {
      fail(ErrorCode::FormatError, "duplicate task_id '" + tasks_[i].task_id + "'");
    }
  }
}

bool TaskCatalog::contains(std::string_view task_id) const { return index_.count(std::string(task_id)) > 0; }

const TaskRecord& TaskCatalog::at(std::string_view task_id) const {
  auto it = index_.find(std::string(task_id));
  if (it == index_.end()) fail(ErrorCode::FormatError, "unknown task '" + std::string(task_id) + "'");
  return tasks_[it->second];
}

std::string_view to_string(PoolId id) {
  switch (id) {
    case PoolId::All: return "All";
    case PoolId::Dim2048: return "Dim2048";
    case PoolId::ResNet50Class: return "ResNet50Class";
    case PoolId::Expert: return "Expert";
    case PoolId::ImNetAccuracies: return "ImNetAccuracies";
    case PoolId::Custom: return "Custom";
  }
  return "Custom";
}

PoolId parse_pool_id(std::string_view text) {
  for (auto id : {PoolId::All, PoolId::Dim2048, PoolId::ResNet50Class, PoolId::Expert, PoolId::ImNetAccuracies,
                  PoolId::Custom}) {
    if (lower(to_string(id)) == lower(text)) return id;
  }
  fail(ErrorCode::ConfigError, "unknown pool '" + std::string(text) + "'");
}

PoolSpec PoolSpec::builtin(PoolId id) {
  PoolSpec spec;
  spec.pool_id = id;
  switch (id) {
    case PoolId::All: break;
    case PoolId::Dim2048: spec.max_embedding_dim = kDim2048MaxEmbeddingDim; break;
    case PoolId::ResNet50Class: spec.max_param_count = kResNet50ClassMaxParams; break;
    case PoolId::Expert: spec.require_tag = "expert"; break;
    case PoolId::ImNetAccuracies: spec.require_imagenet_accuracy = true; break;
    case PoolId::Custom: fail(ErrorCode::ConfigError, "Custom pools need explicit filters");
  }
  return spec;
}

void PoolSpec::validate() const {
  if (pool_id != PoolId::Custom) return;
  const bool any = max_param_count || max_embedding_dim || require_imagenet_accuracy || require_tag ||
                   explicit_members;
  if (!any) fail(ErrorCode::ConfigError, "Custom pool must set at least one filter or explicit members");
}

bool Pool::contains(std::string_view model_id) const {
  return std::find(members.begin(), members.end(), model_id) != members.end();
}

Pool build_pool(const ModelCatalog& catalog, const PoolSpec& spec) {
  spec.validate();
  if (catalog.empty()) fail(ErrorCode::EmptyPool, "catalog is empty");

  std::set<std::string, std::less<>> allowed;
  if (spec.explicit_members) {
    for (const auto& id : *spec.explicit_members) {
      if (!catalog.contains(id)) fail(ErrorCode::UnknownModel, "pool member '" + id + "' is not in the catalog");
      allowed.insert(id);
    }
  }

  Pool pool{std::string(to_string(spec.pool_id)), {}};
  for (const auto& m : catalog.models()) {
    if (spec.explicit_members && !allowed.count(m.model_id)) continue;
    if (spec.max_param_count && m.param_count > *spec.max_param_count) continue;
    if (spec.max_embedding_dim && m.embedding_dim > *spec.max_embedding_dim) continue;
    if (spec.require_imagenet_accuracy && !m.imagenet_accuracy) continue;
    if (spec.require_tag && !m.has_tag(*spec.require_tag)) continue;
    pool.members.push_back(m.model_id);
  }
  if (pool.members.empty()) fail(ErrorCode::EmptyPool, "no model passes the filters of pool " + pool.pool_id);
  return pool;
}

ModelCatalog load_model_manifest(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::require_header(table, kModelHeader);
  std::vector<ModelRecord> models;
  models.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string ctx = path.string() + ":" + std::to_string(i + 2);
    ModelRecord m;
    m.model_id = r[0];
    m.display_name = r[1];
    m.embedding_dim = csv::parse_int(r[2], ctx);
    m.param_count = csv::parse_int(r[3], ctx);
    m.imagenet_accuracy = csv::parse_optional_double(r[4], ctx);
    m.upstream_dataset_name = r[5];
    m.upstream_dataset_size = csv::parse_optional_int(r[6], ctx);
    std::string_view tags = r[7];
    while (!tags.empty()) {
      const auto cut = tags.find(';');
      const auto tag = tags.substr(0, cut);
      if (!tag.empty() && !m.has_tag(tag)) m.tags.emplace_back(tag);
      if (cut == std::string_view::npos) break;
      tags.remove_prefix(cut + 1);
    }
    models.push_back(std::move(m));
  }
  return ModelCatalog(std::move(models));
}

void save_model_manifest(const ModelCatalog& catalog, const std::filesystem::path& path) {
  std::vector<csv::Row> rows;
  for (const auto& m : catalog.models()) {
    std::string tags;
    for (const auto& t : m.tags) tags += (tags.empty() ? "" : ";") + t;
    rows.push_back({m.model_id, m.display_name, std::to_string(m.embedding_dim), std::to_string(m.param_count),
                    m.imagenet_accuracy ? csv::format6(*m.imagenet_accuracy) : "", m.upstream_dataset_name,
                    m.upstream_dataset_size ? std::to_string(*m.upstream_dataset_size) : "", tags});
  }
  csv::write(path, kModelHeader, rows);
}

TaskCatalog load_task_manifest(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::require_header(table, kTaskHeader);
  std::vector<TaskRecord> tasks;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string ctx = path.string() + ":" + std::to_string(i + 2);
    tasks.push_back({r[0], parse_task_group(r[1]), csv::parse_int(r[2], ctx), csv::parse_int(r[3], ctx),
                     csv::parse_int(r[4], ctx), csv::parse_int(r[5], ctx)});
  }
  return TaskCatalog(std::move(tasks));
}

void save_task_manifest(const TaskCatalog& tasks, const std::filesystem::path& path) {
  std::vector<csv::Row> rows;
  for (const auto& t : tasks.tasks()) {
    rows.push_back({t.task_id, std::string(to_string(t.group)), std::to_string(t.n_train), std::to_string(t.n_val),
                    std::to_string(t.n_test), std::to_string(t.n_classes)});
  }
  csv::write(path, kTaskHeader, rows);
}

}  // namespace modelsearch
