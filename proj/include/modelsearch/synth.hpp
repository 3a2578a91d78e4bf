#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "modelsearch/catalog.hpp"
#include "modelsearch/store.hpp"

namespace modelsearch {

// Synthetic benchmark layout:
//  - tasks cycle through the natural, specialized and structured groups;
//  - the last n_experts models are experts, expert i bound to task i;
//  - model 0 (when it is not an expert) is the generalist: the best ImageNet
//    accuracy and quality q_hi on every task. All other qualities are drawn
//    from [q_lo, q_hi - generalist_margin];
//  - an expert gains expert_quality_bonus on its bound task;
//  - with hide_generalist_on_structured, the generalist's frozen features carry
//    no class signal on structured tasks although it still fine-tunes best.
struct SynthConfig {
  int n_models = 12;
  int n_tasks = 6;
  int n_classes = 4;
  int n_train = 800;
  int n_val = 200;
  std::vector<int> dims{8, 16, 32};
  int n_experts = 2;
  double q_lo = 0.2;
  double q_hi = 0.6;
  double expert_quality_bonus = 0.6;
  double generalist_margin = 0.2;
  bool hide_generalist_on_structured = true;
  double accuracy_noise_sd = 0.0;
  double accuracy_base = 0.4;
  double accuracy_gain = 0.5;
  int runs_per_cell = 5;
  /// Norm of every class mean before scaling by the embedding quality.
  double separation = 3.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

struct GroundTruthRow {
  std::string model_id;
  std::string task_id;
  double quality = 0.0;
  bool is_intended_argmax = false;
};

struct SynthData {
  ModelCatalog catalog;
  TaskCatalog tasks;
  InMemoryEmbeddingSource embeddings;  // train and val for every (model, task)
  AccuracyTable accuracies;
  std::vector<GroundTruthRow> ground_truth;  // task-major, catalog order within a task
};

SynthData generate(const SynthConfig& config);

/// Writes models.csv, tasks.csv, accuracy.csv, ground_truth.csv and the
/// embeddings/ tree below `root`.
void write_data_tree(const SynthData& data, const std::filesystem::path& root);

/// CSV `model_id,task_id,quality,is_intended_argmax`.
void save_ground_truth(const std::vector<GroundTruthRow>& rows, const std::filesystem::path& path);
std::vector<GroundTruthRow> load_ground_truth(const std::filesystem::path& path);

}  // namespace modelsearch
