#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace modelsearch {

/// Metadata for one pretrained model, as listed in the model manifest.
struct ModelRecord {
  std::string model_id;
  std::string display_name;
  std::int64_t embedding_dim = 1;
  std::int64_t param_count = 1;
  std::optional<double> imagenet_accuracy;
  std::string upstream_dataset_name;
  std::optional<std::int64_t> upstream_dataset_size;
  std::vector<std::string> tags;  // file order, duplicate-free

  bool has_tag(std::string_view tag) const;
};

enum class TaskGroup { Natural, Specialized, Structured };

std::string_view to_string(TaskGroup group);
TaskGroup parse_task_group(std::string_view text);

struct TaskRecord {
  std::string task_id;
  TaskGroup group = TaskGroup::Natural;
  std::int64_t n_train = 800;
  std::int64_t n_val = 200;
  std::int64_t n_test = 1;
  std::int64_t n_classes = 2;
};

/// Ordered, immutable set of models. File order is the canonical order and
/// the last tie-breaker for every ranking in the toolkit.
class ModelCatalog {
 public:
  ModelCatalog() = default;
  explicit ModelCatalog(std::vector<ModelRecord> models);

  const std::vector<ModelRecord>& models() const noexcept { return models_; }
  std::size_t size() const noexcept { return models_.size(); }
  bool empty() const noexcept { return models_.empty(); }

  bool contains(std::string_view model_id) const;
  /// Position in catalog order; throws UnknownModel.
  std::size_t index_of(std::string_view model_id) const;
  const ModelRecord& at(std::string_view model_id) const;

 private:
  std::vector<ModelRecord> models_;
  std::unordered_map<std::string, std::size_t> index_;
};

class TaskCatalog {
 public:
  TaskCatalog() = default;
  explicit TaskCatalog(std::vector<TaskRecord> tasks);

  const std::vector<TaskRecord>& tasks() const noexcept { return tasks_; }
  std::size_t size() const noexcept { return tasks_.size(); }
  bool contains(std::string_view task_id) const;
  const TaskRecord& at(std::string_view task_id) const;

 private:
  std::vector<TaskRecord> tasks_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class PoolId { All, Dim2048, ResNet50Class, Expert, ImNetAccuracies, Custom };

std::string_view to_string(PoolId id);
/// Accepts the canonical names case-insensitively ("all", "dim2048",
/// "resnet50class", "expert", "imnetaccuracies", "custom").
PoolId parse_pool_id(std::string_view text);

/// Largest parameter count admitted to the ResNet50Class pool. This is the
/// size of the expert ResNet-50-V2 checkpoints, which must fall inside the pool.
inline constexpr std::int64_t kResNet50ClassMaxParams = 23'807'702;
inline constexpr std::int64_t kDim2048MaxEmbeddingDim = 2048;

struct PoolSpec {
  PoolId pool_id = PoolId::All;
  std::optional<std::int64_t> max_param_count;
  std::optional<std::int64_t> max_embedding_dim;
  bool require_imagenet_accuracy = false;
  std::optional<std::string> require_tag;
  std::optional<std::vector<std::string>> explicit_members;

  static PoolSpec builtin(PoolId id);
  /// Throws ConfigError for a Custom spec without any filter.
  void validate() const;
};

struct Pool {
  std::string pool_id;
  std::vector<std::string> members;  // catalog order

  std::size_t size() const noexcept { return members.size(); }
  bool contains(std::string_view model_id) const;
};

/// Models passing every active filter of `spec`, in catalog order.
/// Throws EmptyPool when nothing passes, UnknownModel for explicit members
/// missing from the catalog.
Pool build_pool(const ModelCatalog& catalog, const PoolSpec& spec);

inline Pool build_pool(const ModelCatalog& catalog, PoolId id) {
  return build_pool(catalog, PoolSpec::builtin(id));
}

ModelCatalog load_model_manifest(const std::filesystem::path& path);
void save_model_manifest(const ModelCatalog& catalog, const std::filesystem::path& path);
TaskCatalog load_task_manifest(const std::filesystem::path& path);
void save_task_manifest(const TaskCatalog& tasks, const std::filesystem::path& path);

}  // namespace modelsearch
