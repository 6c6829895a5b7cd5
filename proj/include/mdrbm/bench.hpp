#ifndef MDRBM_BENCH_HPP
#define MDRBM_BENCH_HPP

#include "mdrbm/baselines.hpp"
#include "mdrbm/data.hpp"
#include "mdrbm/gbrbm.hpp"
#include "mdrbm/mdrbm.hpp"
#include "mdrbm/serialize.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mdrbm::bench {

/// Environment variable that overrides the data directory of every config.
inline constexpr const char* kDataDirEnv = "MDRBM_DATA_DIR";

// Stream layout. Run r of a config uses RngStream(seed).substream(r); the ids below
// derive its children, so a stage run alone reproduces the pipeline's draws.
namespace streams {
inline constexpr std::uint64_t kDataStream = 1;
inline constexpr std::uint64_t kTheta0Stream = 2;
inline constexpr std::uint64_t kPretrainStream = 3;
inline constexpr std::uint64_t kInitStream = 4;
inline constexpr std::uint64_t kTrainStream = 5;
inline constexpr std::uint64_t kSweepStream = 6;
// Below the sweep stream.
inline constexpr std::uint64_t kNoiseStream = 1;
inline constexpr std::uint64_t kInferStream = 2;
}  // namespace streams

enum class ModelKind { Drbm, ElmDrbm, Mdrbm, Mlp };
enum class Theta0Source { None, Random, Gbrbm };

struct ModelSpec {
  ModelKind kind = ModelKind::Drbm;
  Theta0Source theta0 = Theta0Source::None;

  /// Throws ConfigError for combinations outside the model matrix (e.g. 4nn with a layer source).
  static ModelSpec parse(std::string_view kind, std::string_view theta0);
  /// Display label: "DRBM", "DRBM+ELM(G)", "MDRBM(R)", "4NN".
  std::string label() const;
  /// File-name form of the label: "drbm", "drbm-elm-g", "mdrbm-r", "4nn".
  std::string slug() const;
  std::string kind_name() const;
  std::string theta0_name() const;
  bool uses_layer() const { return theta0 != Theta0Source::None; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// DRBM, DRBM+ELM(R), DRBM+ELM(G), MDRBM(R), MDRBM(G).
std::vector<ModelSpec> five_model_matrix();
/// MDRBM(G), DRBM+ELM(G), DRBM, 4NN.
std::vector<ModelSpec> benchmark_models();

struct DatasetSpec {
  std::string name;
  /// "idx", "cifar10" or "csv".
  std::string format;
  /// Relative paths resolve against the data directory.
  std::vector<std::filesystem::path> train_files;
  /// Empty for pooled datasets, which are split into train and test by seeded shuffle.
  std::vector<std::filesystem::path> test_files;
  std::string label_column = "class";
  char delimiter = ',';
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  bool stratified = false;
};

struct GbrbmSettings {
  int epochs = 100;
  /// 0 follows the classifier batch size.
  Eigen::Index batch_size = 0;
  double rate = 1e-3;
  int cd_steps = 1;
  double weight_scale = 0.01;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path data_dir = "data";
  DatasetSpec dataset;
  std::vector<ModelSpec> models = benchmark_models();
  /// Width of the frozen layer (first hidden layer of the 4NN).
  Eigen::Index width = 500;
  /// Hidden units of the DRBM (second hidden layer of the 4NN).
  Eigen::Index hidden = 500;
  TrainConfig training;
  GbrbmSettings gbrbm;
  SampleConfig sampling;
  std::uint64_t seed = 1;
  /// Independent re-seeded pipeline runs.
  int runs = 1;
  /// Noise draws per grid level.
  int repeats = 5;
  std::vector<double> noise_grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  bool noise_before_standardize = false;

  /// Settings for "mnist", "fmnist", "cifar10" or "ulc"; ConfigError otherwise.
  static ExperimentConfig preset(std::string_view dataset);
  /// Parses a config document. A known dataset name starts from its preset.
  static ExperimentConfig from_json(std::string_view text);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  std::string to_json() const;
  std::uint64_t hash() const;

  std::filesystem::path resolve(const std::filesystem::path& file) const;
  /// Throws ConfigError when a path is missing, a size is not positive, or the grid is malformed.
  void validate() const;
};

/// $MDRBM_DATA_DIR when set, otherwise `fallback`.
std::filesystem::path data_dir_override(const std::filesystem::path& fallback);

struct PreparedData {
  Dataset train;
  Dataset test;
  /// Test inputs before standardization.
  Matrix raw_test;
  data::StandardizationStats stats;
};

/// load -> subsample -> standardize with training statistics.
PreparedData prepare_data(const ExperimentConfig& config, const RngStream& rng);

/// Standardized test inputs with noise of level `sigma`.
Matrix noisy_test_inputs(const PreparedData& data, double sigma, const RngStream& rng, bool before_standardize);

using ModelParams = std::variant<DrbmParams, ElmDrbmModel, MdrbmModel, MlpParams>;

struct Model {
  ModelSpec spec;
  ModelParams params;
};

ParamContainer to_container(const Model& model);
Model model_from(const ParamContainer& container);
std::uint64_t model_hash(const Model& model);

/// Fraction of correct argmax predictions. `samples` applies to the stochastic model only.
double accuracy(const Model& model, const Dataset& data, Eigen::Index samples, const RngStream& rng);

/// ([acc] at 0 - [acc] at 1) / [acc] at 0 * 100. Throws UsageError without both endpoints.
double adr(const std::map<double, double>& accuracy_by_sigma);

/// Zero biases and Gaussian weights with standard deviation 1/sqrt(n), tagged "random".
PelmParams random_theta0(Eigen::Index inputs, Eigen::Index width, const RngStream& rng, std::string origin);

struct PretrainResult {
  GbrbmParams gbrbm;
  PelmParams pelm;
  History history;
};

PretrainResult pretrain(const ExperimentConfig& config, const Matrix& train_inputs, const RngStream& rng,
                        const std::string& run_id);

/// Initial model. When `theta0` is null and the spec needs a layer, it is constructed here
/// (random draw or pretraining on `train`).
Model build_model(const ExperimentConfig& config, const ModelSpec& spec, const Dataset& train, const RngStream& rng,
                  const PelmParams* theta0 = nullptr);

struct TrainedModel {
  /// Highest held-out accuracy seen during training.
  Model best;
  Model final;
  int best_epoch = 0;
  History history;
};

TrainedModel train_model(const ExperimentConfig& config, const Model& initial, const Dataset& train,
                         const Dataset* heldout, const RngStream& rng);

struct SweepPoint {
  double sigma = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> accuracies;
};

struct SweepRow {
  std::string model;
  std::vector<SweepPoint> points;
  /// NaN when the grid lacks an endpoint.
  double adr = 0.0;

  const SweepPoint& at(double sigma) const;
};

/// Accuracy at each noise level over `repeats` draws. Noise and sampling streams depend only on
/// (sigma, repeat), so models swept with the same `rng` see the same noisy inputs.
SweepRow noise_sweep(const Model& model, const PreparedData& data, const std::vector<double>& grid, int repeats,
                     Eigen::Index samples, const RngStream& rng, bool noise_before_standardize = false);

struct NoiseSweepReport {
  std::string name;
  /// Canonical config document the report was produced from.
  std::string config_json;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int runs = 0;
  int repeats = 0;
  std::vector<double> grid;
  std::vector<SweepRow> rows;
  double wall_seconds = 0.0;
  bool complete = false;

  const SweepRow& row(std::string_view model) const;
  std::string to_json() const;
  static NoiseSweepReport from_json(std::string_view text);
  /// One line per (model, sigma).
  std::string to_csv() const;
  /// Hash of the JSON document without wall time.
  std::uint64_t hash() const;
};

/// Pools accuracies of rows with equal model labels and recomputes statistics.
NoiseSweepReport merge_reports(const std::vector<NoiseSweepReport>& reports);
void finalize_row(SweepRow& row);

struct RunOptions {
  std::ostream* log = nullptr;
  /// Write model files and histories next to the report.
  bool save_models = true;
};

/// End-to-end pipeline; writes config.json, report.json, report.csv and model files to `out_dir`.
/// An INCOMPLETE marker stays in `out_dir` if any stage fails.
NoiseSweepReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                const RunOptions& options = {});

std::string history_csv(const History& history);
std::string hex64(std::uint64_t value);

}  // namespace mdrbm::bench

#endif  // MDRBM_BENCH_HPP
