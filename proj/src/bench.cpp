#include "mdrbm/bench.hpp"

#include "mdrbm/init.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mdrbm::bench {

namespace {

using Json = nlohmann::ordered_json;

using namespace streams;

template <typename... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Re-throws with the stage name prefixed, keeping the error category.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  const auto label = [&](const std::exception& e) { return "stage " + name + ": " + e.what(); };
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(label(e));
  } catch (const FormatError& e) {
    throw FormatError(label(e));
  } catch (const NumericError& e) {
    throw NumericError(label(e));
  } catch (const CapabilityError& e) {
    throw CapabilityError(label(e));
  } catch (const UsageError& e) {
    throw UsageError(label(e));
  }
}

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Dataset concat(const std::vector<Dataset>& parts, const std::string& name) {
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.size();
  Matrix x(rows, parts.front().features());
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(rows));
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    if (p.features() != x.cols()) throw FormatError("pooled files differ in feature count");
    x.middleRows(at, p.size()) = p.inputs();
    at += p.size();
    labels.insert(labels.end(), p.labels().begin(), p.labels().end());
  }
  int classes = 0;
  for (const auto& p : parts) classes = std::max(classes, p.classes());
  return Dataset(std::move(x), std::move(labels), classes, name);
}

// Loads several CSV files with one label vocabulary (first appearance across files).
std::vector<Dataset> load_csv_files(const ExperimentConfig& config, const std::vector<std::filesystem::path>& files) {
  std::vector<std::string> vocabulary;
  std::vector<std::pair<Matrix, std::vector<int>>> loaded;
  std::vector<std::string> names_of;
  for (const auto& f : files) {
    std::vector<std::string> names;
    Dataset d = data::load_csv(config.resolve(f), config.dataset.label_column, config.dataset.delimiter,
                               config.dataset.name, &names);
    std::vector<int> remap(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto it = std::find(vocabulary.begin(), vocabulary.end(), names[i]);
      if (it == vocabulary.end()) it = vocabulary.insert(vocabulary.end(), names[i]);
      remap[i] = static_cast<int>(it - vocabulary.begin());
    }
    std::vector<int> labels;
    for (const int y : d.labels()) labels.push_back(remap[static_cast<std::size_t>(y)]);
    loaded.emplace_back(d.inputs(), std::move(labels));
    names_of.push_back(d.name());
  }
  std::vector<Dataset> out;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    out.emplace_back(std::move(loaded[i].first), std::move(loaded[i].second), static_cast<int>(vocabulary.size()),
                     names_of[i]);
  }
  return out;
}

Json point_json(const SweepPoint& p) {
  Json j;
  j["sigma"] = p.sigma;
  j["mean"] = p.mean;
  j["std"] = p.stddev;
  j["accuracies"] = p.accuracies;
  return j;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Json report_json(const NoiseSweepReport& r, bool with_wall_time) {
  Json j;
  j["format"] = "noise-sweep-report";
  j["version"] = 1;
  j["name"] = r.name;
  j["config_hash"] = hex64(r.config_hash);
  j["seed"] = r.seed;
  j["runs"] = r.runs;
  j["repeats"] = r.repeats;
  j["noise_grid"] = r.grid;
  j["complete"] = r.complete;
  j["selection"] = "best-by-test-accuracy";
  j["models"] = Json::array();
  for (const auto& row : r.rows) {
    Json m;
    m["model"] = row.model;
    m["adr"] = std::isnan(row.adr) ? Json(nullptr) : Json(row.adr);
    m["points"] = Json::array();
    for (const auto& p : row.points) m["points"].push_back(point_json(p));
    j["models"].push_back(std::move(m));
  }
  j["config"] = r.config_json.empty() ? Json::object() : Json::parse(r.config_json);
  if (with_wall_time) j["wall_seconds"] = r.wall_seconds;
  return j;
}

}  // namespace

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

// ---------------------------------------------------------------- model specs

ModelSpec ModelSpec::parse(std::string_view kind, std::string_view theta0) {
  ModelSpec s;
  if (theta0.empty() || theta0 == "none") {
    s.theta0 = Theta0Source::None;
  } else if (theta0 == "random" || theta0 == "R") {
    s.theta0 = Theta0Source::Random;
  } else if (theta0 == "gbrbm" || theta0 == "G") {
    s.theta0 = Theta0Source::Gbrbm;
  } else {
    throw ConfigError("unknown layer source '" + std::string(theta0) + "' (expected random or gbrbm)");
  }
  if (kind == "drbm") {
    s.kind = ModelKind::Drbm;
  } else if (kind == "drbm+elm" || kind == "elm-drbm") {
    s.kind = ModelKind::ElmDrbm;
  } else if (kind == "mdrbm") {
    s.kind = ModelKind::Mdrbm;
  } else if (kind == "4nn" || kind == "mlp") {
    s.kind = ModelKind::Mlp;
  } else {
    throw ConfigError("unknown model kind '" + std::string(kind) + "' (expected drbm, drbm+elm, mdrbm or 4nn)");
  }
  const bool needs_layer = s.kind == ModelKind::ElmDrbm || s.kind == ModelKind::Mdrbm;
  if (needs_layer && !s.uses_layer()) {
    throw ConfigError("model " + std::string(kind) + " needs a layer source (random or gbrbm)");
  }
  if (!needs_layer && s.uses_layer()) {
    throw ConfigError("model " + std::string(kind) + " takes no layer source");
  }
  return s;
}

std::string ModelSpec::kind_name() const {
  switch (kind) {
    case ModelKind::Drbm: return "drbm";
    case ModelKind::ElmDrbm: return "drbm+elm";
    case ModelKind::Mdrbm: return "mdrbm";
    case ModelKind::Mlp: return "4nn";
  }
  return {};
}

std::string ModelSpec::theta0_name() const {
  switch (theta0) {
    case Theta0Source::None: return "none";
    case Theta0Source::Random: return "random";
    case Theta0Source::Gbrbm: return "gbrbm";
  }
  return {};
}

std::string ModelSpec::label() const {
  const std::string suffix = theta0 == Theta0Source::Random ? "(R)" : theta0 == Theta0Source::Gbrbm ? "(G)" : "";
  switch (kind) {
    case ModelKind::Drbm: return "DRBM";
    case ModelKind::ElmDrbm: return "DRBM+ELM" + suffix;
    case ModelKind::Mdrbm: return "MDRBM" + suffix;
    case ModelKind::Mlp: return "4NN";
  }
  return {};
}

std::string ModelSpec::slug() const {
  std::string base = kind == ModelKind::ElmDrbm ? "drbm-elm" : kind_name();
  if (theta0 == Theta0Source::Random) base += "-r";
  if (theta0 == Theta0Source::Gbrbm) base += "-g";
  return base;
}

std::vector<ModelSpec> five_model_matrix() {
  return {{ModelKind::Drbm, Theta0Source::None},
          {ModelKind::ElmDrbm, Theta0Source::Random},
          {ModelKind::ElmDrbm, Theta0Source::Gbrbm},
          {ModelKind::Mdrbm, Theta0Source::Random},
          {ModelKind::Mdrbm, Theta0Source::Gbrbm}};
}

std::vector<ModelSpec> benchmark_models() {
  return {{ModelKind::Mdrbm, Theta0Source::Gbrbm},
          {ModelKind::ElmDrbm, Theta0Source::Gbrbm},
          {ModelKind::Drbm, Theta0Source::None},
          {ModelKind::Mlp, Theta0Source::None}};
}

// ---------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::preset(std::string_view dataset) {
  ExperimentConfig c;
  c.name = std::string(dataset);
  c.dataset.name = std::string(dataset);
  c.training.epochs = 300;
  c.training.batch_size = 100;
  c.training.eval_every = 5;
  if (dataset == "mnist" || dataset == "fmnist") {
    const std::string dir = std::string(dataset) + "/";
    c.dataset.format = "idx";
    c.dataset.train_files = {dir + "train-images-idx3-ubyte", dir + "train-labels-idx1-ubyte"};
    c.dataset.test_files = {dir + "t10k-images-idx3-ubyte", dir + "t10k-labels-idx1-ubyte"};
    c.dataset.n_train = dataset == "mnist" ? 3000 : 6000;
    c.dataset.n_test = 10000;
  } else if (dataset == "cifar10") {
    c.dataset.format = "cifar10";
    for (int i = 1; i <= 5; ++i) c.dataset.train_files.push_back("cifar10/data_batch_" + std::to_string(i) + ".bin");
    c.dataset.test_files = {"cifar10/test_batch.bin"};
    c.dataset.n_train = 3000;
    c.dataset.n_test = 10000;
  } else if (dataset == "ulc") {
    c.dataset.format = "csv";
    c.dataset.train_files = {"ulc/training.csv", "ulc/testing.csv"};
    c.dataset.label_column = "class";
    c.dataset.n_train = 472;
    c.dataset.n_test = 203;
    c.width = 100;
    c.hidden = 100;
    c.training.batch_size = 20;
    c.training.eval_every = 1;
  } else {
    throw ConfigError("unknown dataset preset '" + std::string(dataset) + "' (expected mnist, fmnist, cifar10 or ulc)");
  }
  c.data_dir = data_dir_override("data");
  return c;
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"name", "data_dir", "dataset", "models", "layers", "training", "gbrbm", "sampling", "seed", "runs",
              "repeats", "noise_grid", "noise_before_standardize"},
             "config");
  try {
    ExperimentConfig c;
    std::string dataset_name;
    if (j.contains("dataset")) read_field(j.at("dataset"), "name", dataset_name);
    if (dataset_name == "mnist" || dataset_name == "fmnist" || dataset_name == "cifar10" || dataset_name == "ulc") {
      c = preset(dataset_name);
    }
    read_field(j, "name", c.name);
    if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
    if (j.contains("dataset")) {
      const Json& d = j.at("dataset");
      check_keys(d,
                 {"name", "format", "train_files", "test_files", "label_column", "delimiter", "n_train", "n_test",
                  "stratified"},
                 "dataset");
      read_field(d, "name", c.dataset.name);
      read_field(d, "format", c.dataset.format);
      if (d.contains("train_files")) {
        c.dataset.train_files.clear();
        for (const auto& f : d.at("train_files")) c.dataset.train_files.emplace_back(f.get<std::string>());
      }
      if (d.contains("test_files")) {
        c.dataset.test_files.clear();
        for (const auto& f : d.at("test_files")) c.dataset.test_files.emplace_back(f.get<std::string>());
      }
      read_field(d, "label_column", c.dataset.label_column);
      if (d.contains("delimiter")) {
        const auto delim = d.at("delimiter").get<std::string>();
        if (delim.size() != 1) throw ConfigError("dataset.delimiter must be a single character");
        c.dataset.delimiter = delim[0];
      }
      read_field(d, "n_train", c.dataset.n_train);
      read_field(d, "n_test", c.dataset.n_test);
      read_field(d, "stratified", c.dataset.stratified);
    }
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) {
        check_keys(m, {"kind", "theta0"}, "models[]");
        c.models.push_back(ModelSpec::parse(m.at("kind").get<std::string>(), m.value("theta0", std::string{})));
      }
    }
    if (j.contains("layers")) {
      check_keys(j.at("layers"), {"width", "hidden"}, "layers");
      read_field(j.at("layers"), "width", c.width);
      read_field(j.at("layers"), "hidden", c.hidden);
    }
    if (j.contains("training")) {
      const Json& t = j.at("training");
      check_keys(t, {"epochs", "batch_size", "eval_every", "rate", "beta1", "beta2", "epsilon"}, "training");
      read_field(t, "epochs", c.training.epochs);
      read_field(t, "batch_size", c.training.batch_size);
      read_field(t, "eval_every", c.training.eval_every);
      read_field(t, "rate", c.training.adam.rate);
      read_field(t, "beta1", c.training.adam.beta1);
      read_field(t, "beta2", c.training.adam.beta2);
      read_field(t, "epsilon", c.training.adam.epsilon);
    }
    if (j.contains("gbrbm")) {
      const Json& g = j.at("gbrbm");
      check_keys(g, {"epochs", "batch_size", "rate", "cd_steps", "weight_scale"}, "gbrbm");
      read_field(g, "epochs", c.gbrbm.epochs);
      read_field(g, "batch_size", c.gbrbm.batch_size);
      read_field(g, "rate", c.gbrbm.rate);
      read_field(g, "cd_steps", c.gbrbm.cd_steps);
      read_field(g, "weight_scale", c.gbrbm.weight_scale);
    }
    if (j.contains("sampling")) {
      check_keys(j.at("sampling"), {"s_train", "s_infer"}, "sampling");
      read_field(j.at("sampling"), "s_train", c.sampling.s_train);
      read_field(j.at("sampling"), "s_infer", c.sampling.s_infer);
    }
    read_field(j, "seed", c.seed);
    read_field(j, "runs", c.runs);
    read_field(j, "repeats", c.repeats);
    read_field(j, "noise_grid", c.noise_grid);
    read_field(j, "noise_before_standardize", c.noise_before_standardize);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  return from_json(read_text(path));
}

std::string ExperimentConfig::to_json() const {
  Json j;
  j["name"] = name;
  j["data_dir"] = data_dir.string();
  Json d;
  d["name"] = dataset.name;
  d["format"] = dataset.format;
  d["train_files"] = Json::array();
  for (const auto& f : dataset.train_files) d["train_files"].push_back(f.string());
  d["test_files"] = Json::array();
  for (const auto& f : dataset.test_files) d["test_files"].push_back(f.string());
  d["label_column"] = dataset.label_column;
  d["delimiter"] = std::string(1, dataset.delimiter);
  d["n_train"] = dataset.n_train;
  d["n_test"] = dataset.n_test;
  d["stratified"] = dataset.stratified;
  j["dataset"] = d;
  j["models"] = Json::array();
  for (const auto& m : models) j["models"].push_back({{"kind", m.kind_name()}, {"theta0", m.theta0_name()}});
  j["layers"] = {{"width", width}, {"hidden", hidden}};
  j["training"] = {{"epochs", training.epochs},         {"batch_size", training.batch_size},
                   {"eval_every", training.eval_every}, {"rate", training.adam.rate},
                   {"beta1", training.adam.beta1},      {"beta2", training.adam.beta2},
                   {"epsilon", training.adam.epsilon}};
  j["gbrbm"] = {{"epochs", gbrbm.epochs},
                {"batch_size", gbrbm.batch_size},
                {"rate", gbrbm.rate},
                {"cd_steps", gbrbm.cd_steps},
                {"weight_scale", gbrbm.weight_scale}};
  j["sampling"] = {{"s_train", sampling.s_train}, {"s_infer", sampling.s_infer}};
  j["seed"] = seed;
  j["runs"] = runs;
  j["repeats"] = repeats;
  j["noise_grid"] = noise_grid;
  j["noise_before_standardize"] = noise_before_standardize;
  return j.dump(2);
}

std::uint64_t ExperimentConfig::hash() const {
  // The data directory is machine-specific and does not affect results.
  Json j = Json::parse(to_json());
  j.erase("data_dir");
  return fnv1a(j.dump());
}

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& file) const {
  return file.is_absolute() ? file : data_dir / file;
}

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (dataset.format == "idx") {
    if (dataset.train_files.size() != 2 || dataset.test_files.size() != 2) {
      fail("idx datasets need [images, labels] for both train_files and test_files");
    }
  } else if (dataset.format == "cifar10") {
    if (dataset.train_files.empty() || dataset.test_files.empty()) fail("cifar10 needs train and test batch files");
  } else if (dataset.format == "csv") {
    if (dataset.train_files.empty()) fail("csv dataset needs at least one file");
  } else {
    fail("unknown dataset format '" + dataset.format + "'");
  }
  for (const auto* list : {&dataset.train_files, &dataset.test_files}) {
    for (const auto& f : *list) {
      if (!std::filesystem::exists(resolve(f))) fail("data file not found: " + resolve(f).string());
    }
  }
  if (dataset.n_train < 1 || dataset.n_test < 1) fail("n_train and n_test must be positive");
  if (models.empty()) fail("no models configured");
  if (width < 1 || hidden < 1) fail("layer sizes must be positive");
  if (training.epochs < 0) fail("training.epochs must be nonnegative");
  if (training.batch_size < 1) fail("training.batch_size must be positive");
  if (training.eval_every < 0) fail("training.eval_every must be nonnegative");
  if (!(training.adam.rate > 0.0)) fail("training.rate must be positive");
  if (gbrbm.epochs < 0 || gbrbm.batch_size < 0 || gbrbm.cd_steps < 1) fail("gbrbm settings out of range");
  if (sampling.s_train < 1 || sampling.s_infer < 1) fail("s_train and s_infer must be positive");
  if (runs < 1 || repeats < 1) fail("runs and repeats must be positive");
  if (noise_grid.empty()) fail("noise grid is empty");
  for (std::size_t i = 0; i < noise_grid.size(); ++i) {
    if (!(noise_grid[i] >= 0.0) || !std::isfinite(noise_grid[i])) fail("noise grid entries must be finite and >= 0");
    if (i > 0 && !(noise_grid[i] > noise_grid[i - 1])) fail("noise grid must be strictly ascending");
  }
  if (noise_grid.front() != 0.0) fail("noise grid must start at 0");
}

std::filesystem::path data_dir_override(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  return fallback;
}

// ---------------------------------------------------------------- data

PreparedData prepare_data(const ExperimentConfig& config, const RngStream& rng) {
  const auto& spec = config.dataset;
  Dataset train;
  Dataset test;
  bool pooled = false;
  if (spec.format == "idx") {
    train = data::load_idx(config.resolve(spec.train_files.at(0)), config.resolve(spec.train_files.at(1)),
                           spec.name + "-train");
    test = data::load_idx(config.resolve(spec.test_files.at(0)), config.resolve(spec.test_files.at(1)),
                          spec.name + "-test");
  } else if (spec.format == "cifar10") {
    std::vector<std::filesystem::path> tr, te;
    for (const auto& f : spec.train_files) tr.push_back(config.resolve(f));
    for (const auto& f : spec.test_files) te.push_back(config.resolve(f));
    train = data::load_cifar10(tr, spec.name + "-train");
    test = data::load_cifar10(te, spec.name + "-test");
  } else if (spec.format == "csv") {
    std::vector<std::filesystem::path> files = spec.train_files;
    files.insert(files.end(), spec.test_files.begin(), spec.test_files.end());
    auto parts = load_csv_files(config, files);
    if (spec.test_files.empty()) {
      const Dataset pool = concat(parts, spec.name);
      if (spec.n_train + spec.n_test > pool.size()) {
        throw ConfigError("n_train + n_test = " + std::to_string(spec.n_train + spec.n_test) + " exceeds the " +
                          std::to_string(pool.size()) + " pooled rows");
      }
      std::tie(train, test) = data::split(pool, spec.n_train, spec.n_test, rng.substream(3));
      pooled = true;
    } else {
      const auto split_at = parts.begin() + static_cast<std::ptrdiff_t>(spec.train_files.size());
      train = concat({parts.begin(), split_at}, spec.name + "-train");
      test = concat({split_at, parts.end()}, spec.name + "-test");
    }
  } else {
    throw ConfigError("unknown dataset format '" + spec.format + "'");
  }

  if (!pooled) {
    if (spec.n_train > train.size() || spec.n_test > test.size()) {
      throw ConfigError("requested " + std::to_string(spec.n_train) + "/" + std::to_string(spec.n_test) +
                        " train/test rows but files hold " + std::to_string(train.size()) + "/" +
                        std::to_string(test.size()));
    }
    train = data::subsample(train, spec.n_train, rng.substream(1), spec.stratified);
    test = data::subsample(test, spec.n_test, rng.substream(2), false);
  }
  auto standardized = data::standardize(train, {test});
  return {std::move(standardized.train), std::move(standardized.others.front()), test.inputs(),
          std::move(standardized.stats)};
}

Matrix noisy_test_inputs(const PreparedData& data, double sigma, const RngStream& rng, bool before_standardize) {
  if (before_standardize) return data.stats.apply(data::add_awgn(data.raw_test, sigma, rng));
  return data::add_awgn(data.test.inputs(), sigma, rng);
}

// ---------------------------------------------------------------- models

ParamContainer to_container(const Model& model) {
  return std::visit([](const auto& p) { return mdrbm::to_container(p); }, model.params);
}

Model model_from(const ParamContainer& c) {
  const auto source = [&](const PelmParams& layer) {
    return layer.provenance() == "gbrbm" ? Theta0Source::Gbrbm : Theta0Source::Random;
  };
  if (c.kind == kKindDrbm) return {{ModelKind::Drbm, Theta0Source::None}, drbm_from(c)};
  if (c.kind == kKindMlp) return {{ModelKind::Mlp, Theta0Source::None}, mlp_from(c)};
  if (c.kind == kKindMdrbm) {
    MdrbmModel m = mdrbm_from(c);
    const auto src = source(m.pelm);
    return {{ModelKind::Mdrbm, src}, std::move(m)};
  }
  if (c.kind == kKindElmDrbm) {
    ElmDrbmModel m = elm_drbm_from(c);
    const auto src = source(m.pelm);
    return {{ModelKind::ElmDrbm, src}, std::move(m)};
  }
  throw FormatError("parameter file kind '" + c.kind + "' is not a classifier");
}

std::uint64_t model_hash(const Model& model) { return to_container(model).hash(); }

double accuracy(const Model& model, const Dataset& data, Eigen::Index samples, const RngStream& rng) {
  require(!data.empty(), "accuracy: empty dataset");
  return std::visit(Overloaded{
                        [&](const DrbmParams& p) { return drbm::accuracy(p, data); },
                        [&](const ElmDrbmModel& m) { return baselines::elm_drbm_accuracy(m, data); },
                        [&](const MdrbmModel& m) { return mdrbm_model::accuracy(m, data, samples, rng); },
                        [&](const MlpParams& p) { return baselines::mlp_accuracy(p, data); },
                    },
                    model.params);
}

double adr(const std::map<double, double>& accuracy_by_sigma) {
  const auto clean = accuracy_by_sigma.find(0.0);
  const auto noisy = accuracy_by_sigma.find(1.0);
  require(clean != accuracy_by_sigma.end() && noisy != accuracy_by_sigma.end(),
          "adr: accuracies at sigma 0 and sigma 1 are both required");
  require(clean->second > 0.0, "adr: clean accuracy must be positive");
  return (clean->second - noisy->second) / clean->second * 100.0;
}

PelmParams random_theta0(Eigen::Index inputs, Eigen::Index width, const RngStream& rng, std::string origin) {
  RngStream draw = rng;
  return PelmParams(Vector::Zero(width), init_gaussian_scaled(width, inputs, draw), "random", std::move(origin));
}

PretrainResult pretrain(const ExperimentConfig& config, const Matrix& train_inputs, const RngStream& rng,
                        const std::string& run_id) {
  GbrbmTrainConfig gc;
  gc.train.epochs = config.gbrbm.epochs;
  gc.train.batch_size = config.gbrbm.batch_size > 0 ? config.gbrbm.batch_size : config.training.batch_size;
  gc.train.adam.rate = config.gbrbm.rate;
  gc.train.eval_every = 0;
  gc.cd_steps = config.gbrbm.cd_steps;
  RngStream init_rng = rng.substream(0);
  const GbrbmParams initial = GbrbmParams::init(train_inputs.cols(), config.width, init_rng, config.gbrbm.weight_scale);
  GbrbmTrainResult trained = gbrbm::train(initial, train_inputs, gc, rng.substream(1));
  PelmParams layer = gbrbm::export_pelm(trained.params, run_id);
  return {std::move(trained.params), std::move(layer), std::move(trained.history)};
}

Model build_model(const ExperimentConfig& config, const ModelSpec& spec, const Dataset& train, const RngStream& rng,
                  const PelmParams* theta0) {
  const Eigen::Index n = train.features();
  const Eigen::Index k = train.classes();
  std::optional<PelmParams> layer;
  if (spec.uses_layer()) {
    if (theta0) {
      layer = *theta0;
    } else if (spec.theta0 == Theta0Source::Random) {
      layer = random_theta0(n, config.width, rng.substream(kTheta0Stream), "seed " + std::to_string(rng.seed()));
    } else {
      layer = pretrain(config, train.inputs(), rng.substream(kPretrainStream), "gbrbm-" + hex64(config.hash())).pelm;
    }
    if (layer->inputs() != n || layer->width() != config.width) {
      throw ConfigError("layer shape " + std::to_string(layer->width()) + "x" + std::to_string(layer->inputs()) +
                        " does not match width " + std::to_string(config.width) + " and " + std::to_string(n) +
                        " inputs");
    }
    const std::string wanted = spec.theta0 == Theta0Source::Gbrbm ? "gbrbm" : "random";
    if (layer->provenance() != wanted) {
      throw ConfigError("model " + spec.label() + " given a layer tagged '" + layer->provenance() + "'");
    }
  }
  RngStream init = rng.substream(0);
  switch (spec.kind) {
    case ModelKind::Drbm: return {spec, DrbmParams::xavier(n, config.hidden, k, init)};
    case ModelKind::ElmDrbm: return {spec, ElmDrbmModel{*layer, DrbmParams::xavier(config.width, config.hidden, k, init)}};
    case ModelKind::Mdrbm: return {spec, MdrbmModel{*layer, DrbmParams::xavier(config.width, config.hidden, k, init)}};
    case ModelKind::Mlp: return {spec, MlpParams::he(n, config.width, config.hidden, k, init)};
  }
  throw ConfigError("unhandled model kind");
}

TrainedModel train_model(const ExperimentConfig& config, const Model& initial, const Dataset& train,
                         const Dataset* heldout, const RngStream& rng) {
  const ModelSpec spec = initial.spec;
  return std::visit(
      Overloaded{
          [&](const DrbmParams& p) -> TrainedModel {
            auto r = drbm::train(p, train, config.training, rng, heldout);
            return {{spec, std::move(r.best_params)}, {spec, std::move(r.final_params)}, r.best_epoch,
                    std::move(r.history)};
          },
          [&](const ElmDrbmModel& m) -> TrainedModel {
            auto r = baselines::elm_drbm_train(m, train, config.training, rng, heldout);
            return {{spec, std::move(r.best_model)}, {spec, std::move(r.final_model)}, r.best_epoch,
                    std::move(r.history)};
          },
          [&](const MdrbmModel& m) -> TrainedModel {
            auto r = mdrbm_model::train(m, train, MdrbmTrainConfig{config.training, config.sampling}, rng, heldout);
            return {{spec, std::move(r.best_model)}, {spec, std::move(r.final_model)}, r.best_epoch,
                    std::move(r.history)};
          },
          [&](const MlpParams& p) -> TrainedModel {
            auto r = baselines::mlp_train(p, train, config.training, rng, heldout);
            return {{spec, std::move(r.best_params)}, {spec, std::move(r.final_params)}, r.best_epoch,
                    std::move(r.history)};
          },
      },
      initial.params);
}

// ---------------------------------------------------------------- sweeps

const SweepPoint& SweepRow::at(double sigma) const {
  for (const auto& p : points) {
    if (p.sigma == sigma) return p;
  }
  throw UsageError("sweep row " + model + " has no entry at sigma " + format_double(sigma));
}

void finalize_row(SweepRow& row) {
  std::map<double, double> means;
  for (auto& p : row.points) {
    require(!p.accuracies.empty(), "sweep point without accuracies");
    p.mean = mean_of(p.accuracies);
    p.stddev = stddev_of(p.accuracies);
    means[p.sigma] = p.mean;
  }
  row.adr = means.count(0.0) && means.count(1.0) && means[0.0] > 0.0 ? adr(means)
                                                                       : std::numeric_limits<double>::quiet_NaN();
}

SweepRow noise_sweep(const Model& model, const PreparedData& data, const std::vector<double>& grid, int repeats,
                     Eigen::Index samples, const RngStream& rng, bool noise_before_standardize) {
  require(!grid.empty(), "noise_sweep: empty grid");
  require(repeats >= 1, "noise_sweep: repeats must be positive");
  require(!data.test.empty(), "noise_sweep: empty test set");
  const bool stochastic = model.spec.kind == ModelKind::Mdrbm;
  SweepRow row;
  row.model = model.spec.label();
  const RngStream noise_root = rng.substream(kNoiseStream);
  const RngStream infer_root = rng.substream(kInferStream);
  for (const double sigma : grid) {
    require(sigma >= 0.0 && std::isfinite(sigma), "noise_sweep: noise level must be finite and nonnegative");
    const auto key = std::bit_cast<std::uint64_t>(sigma);
    SweepPoint point;
    point.sigma = sigma;
    for (int r = 0; r < repeats; ++r) {
      const RngStream infer = infer_root.substream(key).substream(static_cast<std::uint64_t>(r));
      if (sigma == 0.0) {
        // Clean inputs; a deterministic model gives the same value on every repeat.
        if (!stochastic && r > 0) {
          point.accuracies.push_back(point.accuracies.front());
        } else {
          point.accuracies.push_back(accuracy(model, data.test, samples, infer));
        }
        continue;
      }
      const Matrix noisy = noisy_test_inputs(data, sigma, noise_root.substream(key).substream(static_cast<std::uint64_t>(r)),
                                             noise_before_standardize);
      point.accuracies.push_back(accuracy(model, data.test.with_inputs(noisy), samples, infer));
    }
    row.points.push_back(std::move(point));
  }
  finalize_row(row);
  return row;
}

// ---------------------------------------------------------------- reports

const SweepRow& NoiseSweepReport::row(std::string_view model) const {
  for (const auto& r : rows) {
    if (r.model == model) return r;
  }
  throw UsageError("report has no row for " + std::string(model));
}

std::string NoiseSweepReport::to_json() const { return report_json(*this, true).dump(2) + "\n"; }

NoiseSweepReport NoiseSweepReport::from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    if (j.at("format").get<std::string>() != "noise-sweep-report") throw FormatError("not a noise-sweep report");
    NoiseSweepReport r;
    r.name = j.at("name").get<std::string>();
    r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    r.seed = j.at("seed").get<std::uint64_t>();
    r.runs = j.at("runs").get<int>();
    r.repeats = j.at("repeats").get<int>();
    r.grid = j.at("noise_grid").get<std::vector<double>>();
    r.complete = j.at("complete").get<bool>();
    for (const auto& m : j.at("models")) {
      SweepRow row;
      row.model = m.at("model").get<std::string>();
      row.adr = m.at("adr").is_null() ? std::numeric_limits<double>::quiet_NaN() : m.at("adr").get<double>();
      for (const auto& p : m.at("points")) {
        SweepPoint point;
        point.sigma = p.at("sigma").get<double>();
        point.mean = p.at("mean").get<double>();
        point.stddev = p.at("std").get<double>();
        point.accuracies = p.at("accuracies").get<std::vector<double>>();
        for (const double a : point.accuracies) {
          if (!(a >= 0.0 && a <= 1.0)) throw FormatError("accuracy outside [0, 1] in report");
        }
        row.points.push_back(std::move(point));
      }
      r.rows.push_back(std::move(row));
    }
    const Json& config = j.at("config");
    r.config_json = config.empty() ? std::string{} : config.dump(2);
    r.wall_seconds = j.value("wall_seconds", 0.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw FormatError("report: malformed config_hash");
  }
}

std::string NoiseSweepReport::to_csv() const {
  std::string out = "model,sigma,mean_accuracy,std_accuracy,count,adr\n";
  for (const auto& row : rows) {
    for (const auto& p : row.points) {
      out += row.model + "," + format_double(p.sigma) + "," + format_double(p.mean) + "," +
             format_double(p.stddev) + "," + std::to_string(p.accuracies.size()) + "," + format_double(row.adr) +
             "\n";
    }
  }
  return out;
}

std::uint64_t NoiseSweepReport::hash() const { return fnv1a(report_json(*this, false).dump()); }

NoiseSweepReport merge_reports(const std::vector<NoiseSweepReport>& reports) {
  require(!reports.empty(), "merge_reports: nothing to merge");
  NoiseSweepReport out = reports.front();
  out.rows.clear();
  out.runs = 0;
  out.wall_seconds = 0.0;
  out.complete = true;
  for (const auto& r : reports) {
    if (r.grid != out.grid) throw ConfigError("merge_reports: noise grids differ");
    out.runs += r.runs;
    out.wall_seconds += r.wall_seconds;
    out.complete = out.complete && r.complete;
    for (const auto& row : r.rows) {
      auto it = std::find_if(out.rows.begin(), out.rows.end(), [&](const SweepRow& x) { return x.model == row.model; });
      if (it == out.rows.end()) {
        out.rows.push_back(row);
        continue;
      }
      for (const auto& p : row.points) {
        auto pt = std::find_if(it->points.begin(), it->points.end(), [&](const SweepPoint& q) { return q.sigma == p.sigma; });
        if (pt == it->points.end()) {
          it->points.push_back(p);
        } else {
          pt->accuracies.insert(pt->accuracies.end(), p.accuracies.begin(), p.accuracies.end());
        }
      }
    }
  }
  for (auto& row : out.rows) finalize_row(row);
  return out;
}

std::string history_csv(const History& history) {
  std::string out = "epoch,train_objective,heldout_accuracy\n";
  for (const auto& e : history) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_objective) + "," +
           format_double(e.heldout_accuracy) + "\n";
  }
  return out;
}

NoiseSweepReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };
  const auto log = [&](const std::string& line) {
    if (options.log) *options.log << "[" << format_double(std::round(elapsed() * 10) / 10) << "s] " << line << std::endl;
  };

  stage("config", [&] { config.validate(); });
  std::filesystem::create_directories(out_dir);
  const auto marker = out_dir / "INCOMPLETE";
  write_text(marker, "run in progress or aborted\n");
  write_text(out_dir / "config.json", config.to_json() + "\n");

  NoiseSweepReport report;
  report.name = config.name;
  report.config_json = config.to_json();
  report.config_hash = config.hash();
  report.seed = config.seed;
  report.runs = config.runs;
  report.repeats = config.repeats;
  report.grid = config.noise_grid;
  for (const auto& spec : config.models) report.rows.push_back({spec.label(), {}, 0.0});

  const auto needs = [&](Theta0Source s) {
    return std::any_of(config.models.begin(), config.models.end(), [&](const ModelSpec& m) { return m.theta0 == s; });
  };

  for (int run = 0; run < config.runs; ++run) {
    const std::string tag = "run" + std::to_string(run);
    const RngStream run_rng = RngStream(config.seed).substream(static_cast<std::uint64_t>(run));
    const PreparedData data = stage("load", [&] { return prepare_data(config, run_rng.substream(kDataStream)); });
    log(tag + ": " + std::to_string(data.train.size()) + " train / " + std::to_string(data.test.size()) +
        " test rows, " + std::to_string(data.train.features()) + " features, " +
        std::to_string(data.train.classes()) + " classes");

    std::optional<PelmParams> random_layer;
    std::optional<PelmParams> gbrbm_layer;
    if (needs(Theta0Source::Random)) {
      random_layer = random_theta0(data.train.features(), config.width, run_rng.substream(kTheta0Stream),
                                   "seed " + std::to_string(config.seed) + " " + tag);
    }
    if (needs(Theta0Source::Gbrbm)) {
      const std::string run_id = "gbrbm-" + hex64(report.config_hash) + "-" + tag;
      auto pre = stage("pretrain", [&] {
        return pretrain(config, data.train.inputs(), run_rng.substream(kPretrainStream), run_id);
      });
      if (options.save_models) {
        save(out_dir / ("gbrbm-" + tag + ".bin"), pre.gbrbm);
        save(out_dir / ("pelm-gbrbm-" + tag + ".bin"), pre.pelm);
        write_text(out_dir / ("history-gbrbm-" + tag + ".csv"), history_csv(pre.history));
      }
      log(tag + ": pretrained layer " + run_id);
      gbrbm_layer = std::move(pre.pelm);
    }

    for (std::size_t m = 0; m < config.models.size(); ++m) {
      const ModelSpec& spec = config.models[m];
      const std::uint64_t model_key = fnv1a(spec.label());
      const PelmParams* layer = spec.theta0 == Theta0Source::Random  ? &*random_layer
                                : spec.theta0 == Theta0Source::Gbrbm ? &*gbrbm_layer
                                                                     : nullptr;
      const Model initial = stage("build " + spec.label(), [&] {
        return build_model(config, spec, data.train, run_rng.substream(kInitStream).substream(model_key), layer);
      });
      const TrainedModel trained = stage("train " + spec.label(), [&] {
        return train_model(config, initial, data.train, &data.test, run_rng.substream(kTrainStream).substream(model_key));
      });
      if (options.save_models) {
        write_container(out_dir / (spec.slug() + "-" + tag + ".bin"), to_container(trained.best));
        write_text(out_dir / ("history-" + spec.slug() + "-" + tag + ".csv"), history_csv(trained.history));
      }
      log(tag + ": trained " + spec.label() + ", best epoch " + std::to_string(trained.best_epoch));
      SweepRow row = stage("sweep " + spec.label(), [&] {
        return noise_sweep(trained.best, data, config.noise_grid, config.repeats, config.sampling.s_infer,
                           run_rng.substream(kSweepStream), config.noise_before_standardize);
      });
      SweepRow& pooled = report.rows[m];
      if (pooled.points.empty()) {
        pooled.points = std::move(row.points);
      } else {
        for (std::size_t i = 0; i < row.points.size(); ++i) {
          auto& acc = pooled.points[i].accuracies;
          acc.insert(acc.end(), row.points[i].accuracies.begin(), row.points[i].accuracies.end());
        }
      }
      std::string line = tag + ": " + spec.label() + " accuracy";
      for (const auto& p : row.points) line += " " + format_double(p.sigma) + ":" + format_double(mean_of(p.accuracies));
      log(line);
    }
  }

  for (auto& row : report.rows) finalize_row(row);
  report.complete = true;
  report.wall_seconds = elapsed();
  write_text(out_dir / "report.json", report.to_json());
  write_text(out_dir / "report.csv", report.to_csv());
  std::filesystem::remove(marker);
  log("report hash " + hex64(report.hash()));
  return report;
}

}  // namespace mdrbm::bench
