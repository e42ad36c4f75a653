#include "nids/model.hpp"

#include <zlib.h>

#include <bit>
#include <fstream>
#include <sstream>

#include "nids/error.hpp"
#include "nids/parallel.hpp"

namespace nids {

namespace {

constexpr std::string_view magic = "NIDSMODL";

class Writer {
public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void size(std::size_t v) { u64(static_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    size(s.size());
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }

  std::string& bytes() noexcept { return out_; }

private:
  std::string out_;
};

class Reader {
public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  // Element counts are bounded by what the remaining bytes could hold.
  std::size_t count(std::size_t min_element_bytes) {
    const auto v = u64();
    if (min_element_bytes > 0 && v > (in_.size() - pos_) / min_element_bytes) {
      throw ModelError("corrupt model file: implausible element count");
    }
    return static_cast<std::size_t>(v);
  }
  std::string str() {
    const auto n = count(1);
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const noexcept { return pos_ == in_.size(); }

private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ModelError("corrupt model file: truncated");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

void write_map(Writer& w, const CategoryMap& map) {
  w.size(map.tokens.size());
  for (const auto& t : map.tokens) w.str(t);
}

CategoryMap read_map(Reader& r) {
  CategoryMap map;
  const auto n = r.count(8);
  for (std::size_t i = 0; i < n; ++i) {
    const auto token = r.str();
    if (map.add(token) != static_cast<std::int32_t>(i)) {
      throw ModelError("corrupt model file: duplicate category token");
    }
  }
  return map;
}

void write_forest(Writer& w, const RandomForest& forest) {
  const auto& c = forest.config();
  w.size(c.n_estimators);
  w.size(c.min_samples_split);
  w.size(c.min_samples_leaf);
  w.u8(static_cast<std::uint8_t>(c.max_features));
  w.f64(c.min_impurity_decrease);
  w.u8(static_cast<std::uint8_t>(c.class_weight));
  w.u64(c.seed);
  w.size(forest.class_weights().size());
  for (double cw : forest.class_weights()) w.f64(cw);
  w.size(forest.trees().size());
  for (const auto& tree : forest.trees()) {
    w.size(tree.nodes().size());
    for (const auto& n : tree.nodes()) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.u32(n.left);
      w.u32(n.right);
      w.u32(n.leaf);
    }
    w.size(tree.leaf_table().size());
    for (double p : tree.leaf_table()) w.f64(p);
  }
}

RandomForest read_forest(Reader& r, std::size_t n_classes) {
  ForestConfig c;
  c.n_estimators = r.u64();
  c.min_samples_split = r.u64();
  c.min_samples_leaf = r.u64();
  const auto max_features = r.u8();
  c.min_impurity_decrease = r.f64();
  const auto class_weight = r.u8();
  c.seed = r.u64();
  if (max_features > 1 || class_weight > 1) throw ModelError("corrupt model file: forest config");
  c.max_features = static_cast<MaxFeatures>(max_features);
  c.class_weight = static_cast<ClassWeighting>(class_weight);

  std::vector<double> weights(r.count(8));
  for (auto& cw : weights) cw = r.f64();
  std::vector<DecisionTree> trees(r.count(16));
  for (auto& tree : trees) {
    std::vector<TreeNode> nodes(r.count(24));
    for (auto& n : nodes) {
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.u32();
      n.right = r.u32();
      n.leaf = r.u32();
    }
    std::vector<double> probs(r.count(8));
    for (auto& p : probs) p = r.f64();
    tree = DecisionTree::from_parts(n_classes, std::move(nodes), std::move(probs));
  }
  return RandomForest::from_parts(c, n_classes, std::move(weights), std::move(trees));
}

void write_knn(Writer& w, const KnnClassifier& knn) {
  w.size(knn.config().k);
  w.size(knn.config().leaf_size);
  w.f64(knn.config().p);
  w.size(knn.rows().size());
  for (const auto& row : knn.rows()) {
    for (double x : row) w.f64(x);
  }
  for (int label : knn.labels()) w.i32(label);
}

KnnClassifier read_knn(Reader& r, std::size_t n_classes) {
  KnnConfig c;
  c.k = r.u64();
  c.leaf_size = r.u64();
  c.p = r.f64();
  std::vector<FeatureVector> rows(r.count(feature_count * 8 + 4));
  for (auto& row : rows) {
    for (auto& x : row) x = r.f64();
  }
  std::vector<int> labels(rows.size());
  for (auto& l : labels) l = r.i32();
  try {
    return KnnClassifier::from_parts(c, n_classes, std::move(rows), std::move(labels));
  } catch (const ConfigError& e) {
    throw ModelError(std::string("corrupt model file: ") + e.what());
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  return kind == ModelKind::forest ? "random_forest" : "knn";
}

std::optional<ModelKind> parse_model_kind(std::string_view token) noexcept {
  if (token == "random_forest" || token == "forest" || token == "rf") return ModelKind::forest;
  if (token == "knn") return ModelKind::knn;
  return std::nullopt;
}

int TrainedModel::predict(const FeatureVector& x) const {
  return std::visit([&](const auto& e) { return e.predict(x); }, engine);
}

int TrainedModel::predict(std::span<const double> x) const {
  if (x.size() != feature_count) {
    throw ModelError("expected a " + std::to_string(feature_count) + "-component vector, got " +
                     std::to_string(x.size()));
  }
  FeatureVector v{};
  std::copy(x.begin(), x.end(), v.begin());
  return predict(v);
}

std::vector<int> TrainedModel::predict_all(std::span<const FeatureVector> rows,
                                           std::size_t threads) const {
  std::vector<int> out(rows.size());
  constexpr std::size_t chunk = 1024;
  const std::size_t chunks = (rows.size() + chunk - 1) / chunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(rows.size(), (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) out[i] = predict(rows[i]);
  });
  return out;
}

TrainedModel train_model(const Dataset& train, ModelKind kind, const TrainOptions& options) {
  TrainedModel model;
  model.kind = kind;
  model.scheme = train.scheme;
  model.classes = class_names(train.scheme);
  model.encoder = train.encoder;
  model.scaler = train.scaler;
  const auto n_classes = model.classes.size();
  if (kind == ModelKind::forest) {
    model.engine = RandomForest::fit(train, n_classes, options.forest, options.threads);
  } else {
    model.engine = KnnClassifier::fit(train, n_classes, options.knn, options.max_rows);
  }
  return model;
}

std::string serialize_model(const TrainedModel& model) {
  Writer w;
  w.raw(magic);
  w.u32(model_format_version);
  w.u8(static_cast<std::uint8_t>(model.kind));
  w.u8(static_cast<std::uint8_t>(model.scheme));
  w.size(model.classes.size());
  for (const auto& c : model.classes) w.str(c);
  write_map(w, model.encoder.src_ip);
  write_map(w, model.encoder.dst_ip);
  write_map(w, model.encoder.proto);
  write_map(w, model.encoder.flags);
  for (double v : model.scaler.min) w.f64(v);
  for (double v : model.scaler.max) w.f64(v);
  if (const auto* forest = std::get_if<RandomForest>(&model.engine)) {
    write_forest(w, *forest);
  } else {
    write_knn(w, std::get<KnnClassifier>(model.engine));
  }
  const auto crc = crc_of(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

TrainedModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < magic.size() + 4 || bytes.substr(0, magic.size()) != magic) {
    throw ModelError("corrupt model file: bad magic");
  }
  Reader header(bytes.substr(magic.size(), 4));
  const auto version = header.u32();
  if (version != model_format_version) {
    throw ModelError("unsupported model format version " + std::to_string(version) +
                     " (this build reads version " + std::to_string(model_format_version) + ")");
  }
  if (bytes.size() < magic.size() + 8) throw ModelError("corrupt model file: truncated");
  const auto body = bytes.substr(0, bytes.size() - 4);
  Reader trailer(bytes.substr(bytes.size() - 4));
  if (trailer.u32() != crc_of(body)) throw ModelError("corrupt model file: checksum mismatch");

  Reader r(body.substr(magic.size() + 4));
  TrainedModel model;
  const auto kind = r.u8();
  const auto scheme = r.u8();
  if (kind > 1 || scheme > 2) throw ModelError("corrupt model file: header fields");
  model.kind = static_cast<ModelKind>(kind);
  model.scheme = static_cast<TargetScheme>(scheme);
  model.classes.resize(r.count(8));
  for (auto& c : model.classes) c = r.str();
  if (model.classes != class_names(model.scheme)) {
    throw ModelError("corrupt model file: class list does not match target scheme");
  }
  model.encoder.src_ip = read_map(r);
  model.encoder.dst_ip = read_map(r);
  model.encoder.proto = read_map(r);
  model.encoder.flags = read_map(r);
  for (auto& v : model.scaler.min) v = r.f64();
  for (auto& v : model.scaler.max) v = r.f64();
  if (model.kind == ModelKind::forest) {
    model.engine = read_forest(r, model.classes.size());
  } else {
    model.engine = read_knn(r, model.classes.size());
  }
  if (!r.done()) throw ModelError("corrupt model file: trailing bytes");
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write model file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelError("failed writing model file: " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot read model file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace nids
