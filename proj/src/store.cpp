#include "modelsearch/store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>

#include "modelsearch/csv.hpp"
#include "modelsearch/error.hpp"

namespace modelsearch {

namespace {

const std::vector<std::string> kAccuracyHeader = {"model_id", "task_id", "run_index", "accuracy"};
const std::vector<std::string> kProxyHeader = {"model_id", "task_id", "proxy_kind", "score", "config_digest"};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string cell_key(std::string_view model_id, std::string_view task_id) {
  std::string k(model_id);
  k.push_back('\x1f');
  k += task_id;
  return k;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  fail(ErrorCode::FormatError, "unknown split '" + std::string(text) + "'");
}

void EmbeddingMatrix::validate() const {
  if (features.rows() == 0 || features.cols() == 0) {
    fail(ErrorCode::FormatError, "empty embedding matrix (n and d must be >= 1)");
  }
  if (labels.size() != features.rows()) {
    fail(ErrorCode::FormatError, "label count " + std::to_string(labels.size()) + " != row count " +
                                     std::to_string(features.rows()));
  }
  if (n_classes < 1) fail(ErrorCode::FormatError, "n_classes must be >= 1");
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::uint32_t>(labels[i]) >= n_classes) {
      fail(ErrorCode::RangeError, "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                      " outside [0, " + std::to_string(n_classes) + ")");
    }
  }
  if (!features.allFinite()) fail(ErrorCode::NumericError, "embedding contains NaN or Inf");
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& m) {
  m.validate();
  const auto n = static_cast<std::uint32_t>(m.rows());
  const auto d = static_cast<std::uint32_t>(m.dim());
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * static_cast<std::size_t>(n) * (1 + d));
  out.insert(out.end(), std::begin(kEmbeddingMagic), std::end(kEmbeddingMagic));
  put_u32(out, n);
  put_u32(out, d);
  put_u32(out, m.n_classes);
  for (Eigen::Index i = 0; i < m.labels.size(); ++i) put_u32(out, static_cast<std::uint32_t>(m.labels[i]));
  const float* data = m.features.data();
  for (std::size_t i = 0, total = static_cast<std::size_t>(n) * d; i < total; ++i) {
    put_u32(out, std::bit_cast<std::uint32_t>(data[i]));
  }
  return out;
}

EmbeddingMatrix decode_embeddings(const std::vector<std::uint8_t>& bytes, std::string_view source) {
  const std::string src(source);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) {
    fail(ErrorCode::FormatError, src + ": missing EMB1 magic");
  }
  const std::uint32_t n = get_u32(bytes.data() + 4);
  const std::uint32_t d = get_u32(bytes.data() + 8);
  const std::uint32_t n_classes = get_u32(bytes.data() + 12);
  if (n == 0 || d == 0) fail(ErrorCode::FormatError, src + ": empty matrix");
  const std::uint64_t expected = 16 + 4ULL * n + 4ULL * n * d;
  if (bytes.size() != expected) {
    fail(ErrorCode::FormatError, src + ": expected " + std::to_string(expected) + " bytes, found " +
                                     std::to_string(bytes.size()));
  }

  EmbeddingMatrix m;
  m.n_classes = n_classes;
  m.labels.resize(n);
  m.features.resize(n, d);
  const std::uint8_t* p = bytes.data() + 16;
  for (std::uint32_t i = 0; i < n; ++i, p += 4) {
    const std::uint32_t label = get_u32(p);
    if (label >= n_classes) {
      fail(ErrorCode::RangeError, src + ": label " + std::to_string(label) + " at row " + std::to_string(i) +
                                      " outside [0, " + std::to_string(n_classes) + ")");
    }
    m.labels[i] = static_cast<int>(label);
  }
  float* data = m.features.data();
  for (std::size_t i = 0, total = static_cast<std::size_t>(n) * d; i < total; ++i, p += 4) {
    data[i] = std::bit_cast<float>(get_u32(p));
  }
  if (!m.features.allFinite()) fail(ErrorCode::NumericError, src + ": embedding contains NaN or Inf");
  return m;
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  const auto bytes = encode_embeddings(matrix);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_embeddings(bytes, path.string());
}

std::filesystem::path embedding_path(const std::filesystem::path& root, std::string_view model_id,
                                     std::string_view task_id, Split split) {
  return root / "embeddings" / std::string(model_id) /
         (std::string(task_id) + "_" + std::string(to_string(split)) + ".emb");
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& root, std::string_view model_id,
                                std::string_view task_id, Split split) {
  const auto path = embedding_path(root, model_id, task_id, split);
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::MissingEmbedding, "no " + std::string(to_string(split)) + " embedding for (" +
                                          std::string(model_id) + ", " + std::string(task_id) + ") at " +
                                          path.string());
  }
  auto m = load_embeddings(path);
  m.model_id = model_id;
  m.task_id = task_id;
  m.split = split;
  return m;
}

bool DirectoryEmbeddingSource::has(std::string_view model_id, std::string_view task_id, Split split) const {
  return std::filesystem::exists(embedding_path(root_, model_id, task_id, split));
}

EmbeddingMatrix DirectoryEmbeddingSource::load(std::string_view model_id, std::string_view task_id,
                                               Split split) const {
  return load_embeddings(root_, model_id, task_id, split);
}

namespace {
std::string split_key(std::string_view model_id, std::string_view task_id, Split split) {
  auto k = cell_key(model_id, task_id);
  k.push_back('\x1f');
  k += to_string(split);
  return k;
}
}  // namespace

void InMemoryEmbeddingSource::add(EmbeddingMatrix matrix) {
  matrix.validate();
  const auto k = split_key(matrix.model_id, matrix.task_id, matrix.split);
  if (auto it = index_.find(k); it != index_.end()) {
    matrices_[it->second] = std::move(matrix);
    return;
  }
  index_.emplace(k, matrices_.size());
  matrices_.push_back(std::move(matrix));
}

const EmbeddingMatrix* InMemoryEmbeddingSource::find(std::string_view model_id, std::string_view task_id,
                                                     Split split) const {
  auto it = index_.find(split_key(model_id, task_id, split));
  return it == index_.end() ? nullptr : &matrices_[it->second];
}

bool InMemoryEmbeddingSource::has(std::string_view model_id, std::string_view task_id, Split split) const {
  return find(model_id, task_id, split) != nullptr;
}

EmbeddingMatrix InMemoryEmbeddingSource::load(std::string_view model_id, std::string_view task_id,
                                              Split split) const {
  const auto* m = find(model_id, task_id, split);
  if (!m) {
    fail(ErrorCode::MissingEmbedding, "no " + std::string(to_string(split)) + " embedding for (" +
                                          std::string(model_id) + ", " + std::string(task_id) + ")");
  }
  return *m;
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::MissingAccuracy, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

void AccuracyTable::add_run(const std::string& model_id, const std::string& task_id, std::int64_t run_index,
                            double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    fail(ErrorCode::RangeError, "accuracy for (" + model_id + ", " + task_id + ") outside [0,1]");
  }
  const auto key = cell_key(model_id, task_id);
  auto it = index_.find(key);
  if (it == index_.end()) {
    it = index_.emplace(key, cells_.size()).first;
    cells_.push_back({model_id, task_id, {}});
  }
  if (!cells_[it->second].runs.emplace(run_index, accuracy).second) {
    fail(ErrorCode::DuplicateRun, "duplicate run " + std::to_string(run_index) + " for (" + model_id + ", " +
                                      task_id + ")");
  }
}

const AccuracyTable::Cell* AccuracyTable::find(std::string_view model_id, std::string_view task_id) const {
  auto it = index_.find(cell_key(model_id, task_id));
  return it == index_.end() ? nullptr : &cells_[it->second];
}

bool AccuracyTable::contains(std::string_view model_id, std::string_view task_id) const {
  return find(model_id, task_id) != nullptr;
}

const std::map<std::int64_t, double>& AccuracyTable::runs(std::string_view model_id,
                                                          std::string_view task_id) const {
  const Cell* cell = find(model_id, task_id);
  if (!cell) {
    fail(ErrorCode::MissingAccuracy, "no fine-tune accuracy for (" + std::string(model_id) + ", " +
                                         std::string(task_id) + ")");
  }
  return cell->runs;
}

double AccuracyTable::aggregate(std::string_view model_id, std::string_view task_id) const {
  std::vector<double> values;
  for (const auto& [run, acc] : runs(model_id, task_id)) values.push_back(acc);
  return median(std::move(values));
}

std::vector<std::pair<std::string, std::string>> AccuracyTable::cells() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(cells_.size());
  for (const auto& c : cells_) out.emplace_back(c.model_id, c.task_id);
  return out;
}

AccuracyTable load_accuracy_table(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::require_header(table, kAccuracyHeader);
  AccuracyTable out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string ctx = path.string() + ":" + std::to_string(i + 2);
    out.add_run(r[0], r[1], csv::parse_int(r[2], ctx), csv::parse_double(r[3], ctx));
  }
  return out;
}

void save_accuracy_table(const AccuracyTable& table, const std::filesystem::path& path) {
  std::vector<csv::Row> rows;
  for (const auto& [model, task] : table.cells()) {
    for (const auto& [run, acc] : table.runs(model, task)) {
      rows.push_back({model, task, std::to_string(run), csv::format6(acc)});
    }
  }
  csv::write(path, kAccuracyHeader, rows);
}

std::string_view to_string(ProxyKind kind) { return kind == ProxyKind::Knn ? "knn" : "linear"; }

ProxyKind parse_proxy_kind(std::string_view text) {
  if (text == "knn") return ProxyKind::Knn;
  if (text == "linear") return ProxyKind::Linear;
  fail(ErrorCode::FormatError, "unknown proxy kind '" + std::string(text) + "'");
}

ProxyScoreTable::ProxyScoreTable(const ProxyScoreTable& other) {
  std::shared_lock lock(other.mutex_);
  entries_ = other.entries_;
  index_ = other.index_;
}

ProxyScoreTable& ProxyScoreTable::operator=(const ProxyScoreTable& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_);
  std::shared_lock other_lock(other.mutex_);
  entries_ = other.entries_;
  index_ = other.index_;
  return *this;
}

std::string ProxyScoreTable::key(std::string_view model_id, std::string_view task_id, ProxyKind kind) {
  auto k = cell_key(model_id, task_id);
  k.push_back('\x1f');
  k += to_string(kind);
  return k;
}

void ProxyScoreTable::put(const std::string& model_id, const std::string& task_id, ProxyKind kind, double score,
                          const std::string& config_digest) {
  if (!(score >= 0.0 && score <= 1.0)) {
    fail(ErrorCode::RangeError, "proxy score for (" + model_id + ", " + task_id + ") outside [0,1]");
  }
  if (config_digest.empty()) fail(ErrorCode::FormatError, "proxy score without config digest");
  ProxyScore entry{model_id, task_id, kind, csv::round6(score), config_digest};

  std::unique_lock lock(mutex_);
  const auto k = key(model_id, task_id, kind);
  if (auto it = index_.find(k); it != index_.end()) {
    auto& existing = entries_[it->second];
    if (existing.config_digest != config_digest) {
      fail(ErrorCode::ConflictingDigest, "(" + model_id + ", " + task_id + ", " + std::string(to_string(kind)) +
                                             ") already scored under digest " + existing.config_digest);
    }
    existing = std::move(entry);
    return;
  }
  index_.emplace(k, entries_.size());
  entries_.push_back(std::move(entry));
}

std::optional<ProxyScore> ProxyScoreTable::find(std::string_view model_id, std::string_view task_id,
                                                ProxyKind kind) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(key(model_id, task_id, kind));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second];
}

std::optional<double> ProxyScoreTable::lookup(std::string_view model_id, std::string_view task_id, ProxyKind kind,
                                              std::string_view config_digest) const {
  auto entry = find(model_id, task_id, kind);
  if (!entry || entry->config_digest != config_digest) return std::nullopt;
  return entry->score;
}

double ProxyScoreTable::score(std::string_view model_id, std::string_view task_id, ProxyKind kind) const {
  auto entry = find(model_id, task_id, kind);
  if (!entry) {
    fail(ErrorCode::MissingScore, "no " + std::string(to_string(kind)) + " score for (" + std::string(model_id) +
                                      ", " + std::string(task_id) + ")");
  }
  return entry->score;
}

std::vector<ProxyScore> ProxyScoreTable::entries() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

std::size_t ProxyScoreTable::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

ProxyScoreTable load_proxy_scores(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::require_header(table, kProxyHeader);
  ProxyScoreTable out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string ctx = path.string() + ":" + std::to_string(i + 2);
    out.put(r[0], r[1], parse_proxy_kind(r[2]), csv::parse_double(r[3], ctx), r[4]);
  }
  return out;
}

void save_proxy_scores(const ProxyScoreTable& table, const std::filesystem::path& path) {
  std::vector<csv::Row> rows;
  for (const auto& e : table.entries()) {
    rows.push_back({e.model_id, e.task_id, std::string(to_string(e.kind)), csv::format6(e.score), e.config_digest});
  }
  csv::write(path, kProxyHeader, rows);
}

}  // namespace modelsearch
