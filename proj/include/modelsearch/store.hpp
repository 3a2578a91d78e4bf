#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace modelsearch {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LabelVector = Eigen::VectorXi;

/// Frozen representations of one (model, task, split): n rows of d features
/// plus one class label per row. The identifiers are not stored in the EMB1
/// file itself; they come from where the file lives in the data tree.
struct EmbeddingMatrix {
  std::string model_id;
  std::string task_id;
  Split split = Split::Train;
  std::uint32_t n_classes = 2;
  FeatureMatrix features;
  LabelVector labels;

  Eigen::Index rows() const noexcept { return features.rows(); }
  Eigen::Index dim() const noexcept { return features.cols(); }

  /// Throws FormatError (empty / shape), RangeError (labels), NumericError (NaN/Inf).
  void validate() const;
};

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};

/// EMB1 layout: magic "EMB1"; little-endian u32 n, d, n_classes; n u32
/// labels; n*d IEEE-754 binary32 features in row-major order.
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& matrix);
EmbeddingMatrix decode_embeddings(const std::vector<std::uint8_t>& bytes, std::string_view source = "<memory>");

/// Canonical location of an embedding file below a data directory:
/// `<root>/embeddings/<model_id>/<task_id>_<split>.emb`.
std::filesystem::path embedding_path(const std::filesystem::path& root, std::string_view model_id,
                                     std::string_view task_id, Split split);

/// Loads the file at embedding_path() and fills in the identifiers.
/// A missing file is reported as MissingEmbedding.
EmbeddingMatrix load_embeddings(const std::filesystem::path& root, std::string_view model_id,
                                std::string_view task_id, Split split);

/// Where proxy evaluation reads embeddings from.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual bool has(std::string_view model_id, std::string_view task_id, Split split) const = 0;
  /// Throws MissingEmbedding when absent.
  virtual EmbeddingMatrix load(std::string_view model_id, std::string_view task_id, Split split) const = 0;
};

/// EMB1 files laid out by embedding_path() under a data directory.
class DirectoryEmbeddingSource final : public EmbeddingSource {
 public:
  explicit DirectoryEmbeddingSource(std::filesystem::path root) : root_(std::move(root)) {}
  bool has(std::string_view model_id, std::string_view task_id, Split split) const override;
  EmbeddingMatrix load(std::string_view model_id, std::string_view task_id, Split split) const override;

 private:
  std::filesystem::path root_;
};

class InMemoryEmbeddingSource final : public EmbeddingSource {
 public:
  /// Identifiers are taken from the matrix itself.
  void add(EmbeddingMatrix matrix);
  bool has(std::string_view model_id, std::string_view task_id, Split split) const override;
  EmbeddingMatrix load(std::string_view model_id, std::string_view task_id, Split split) const override;
  const std::vector<EmbeddingMatrix>& matrices() const noexcept { return matrices_; }

 private:
  const EmbeddingMatrix* find(std::string_view model_id, std::string_view task_id, Split split) const;
  std::vector<EmbeddingMatrix> matrices_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Median of a non-empty sample; the mean of the two central values for an
/// even count.
double median(std::vector<double> values);

/// Fine-tune test accuracies per (model, task), one value per run, and their
/// median aggregate t(m, D).
class AccuracyTable {
 public:
  /// Throws RangeError outside [0,1] and DuplicateRun for a repeated run index.
  void add_run(const std::string& model_id, const std::string& task_id, std::int64_t run_index, double accuracy);

  bool contains(std::string_view model_id, std::string_view task_id) const;
  /// Runs keyed by run_index. Throws MissingAccuracy.
  const std::map<std::int64_t, double>& runs(std::string_view model_id, std::string_view task_id) const;
  /// Median over runs. Throws MissingAccuracy.
  double aggregate(std::string_view model_id, std::string_view task_id) const;

  /// Populated cells in insertion order.
  std::vector<std::pair<std::string, std::string>> cells() const;

 private:
  struct Cell {
    std::string model_id;
    std::string task_id;
    std::map<std::int64_t, double> runs;
  };
  const Cell* find(std::string_view model_id, std::string_view task_id) const;

  std::vector<Cell> cells_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads CSV `model_id,task_id,run_index,accuracy`.
AccuracyTable load_accuracy_table(const std::filesystem::path& path);
void save_accuracy_table(const AccuracyTable& table, const std::filesystem::path& path);

enum class ProxyKind { Knn, Linear };

std::string_view to_string(ProxyKind kind);
ProxyKind parse_proxy_kind(std::string_view text);

struct ProxyScore {
  std::string model_id;
  std::string task_id;
  ProxyKind kind = ProxyKind::Knn;
  double score = 0.0;
  std::string config_digest;
};

/// Proxy scores keyed by (model, task, kind), each tagged with the digest of
/// the evaluation config that produced it. Concurrent readers are allowed;
/// writers are serialized. Replacing an entry with a different digest is a
/// ConflictingDigest error.
class ProxyScoreTable {
 public:
  ProxyScoreTable() = default;
  ProxyScoreTable(const ProxyScoreTable& other);
  ProxyScoreTable& operator=(const ProxyScoreTable& other);

  /// Stores round6(score). Throws RangeError outside [0,1], FormatError for
  /// an empty digest, ConflictingDigest as described above.
  void put(const std::string& model_id, const std::string& task_id, ProxyKind kind, double score,
           const std::string& config_digest);

  std::optional<ProxyScore> find(std::string_view model_id, std::string_view task_id, ProxyKind kind) const;
  /// Cache lookup: only returns a score produced under `config_digest`.
  std::optional<double> lookup(std::string_view model_id, std::string_view task_id, ProxyKind kind,
                               std::string_view config_digest) const;
  /// Throws MissingScore.
  double score(std::string_view model_id, std::string_view task_id, ProxyKind kind) const;

  std::vector<ProxyScore> entries() const;
  std::size_t size() const;

 private:
  static std::string key(std::string_view model_id, std::string_view task_id, ProxyKind kind);

  mutable std::shared_mutex mutex_;
  std::vector<ProxyScore> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads CSV `model_id,task_id,proxy_kind,score,config_digest`.
ProxyScoreTable load_proxy_scores(const std::filesystem::path& path);
void save_proxy_scores(const ProxyScoreTable& table, const std::filesystem::path& path);

}  // namespace modelsearch
