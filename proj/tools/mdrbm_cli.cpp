// Command-line front end: pretrain, train, eval, sweep, report and run.

#include "mdrbm/bench.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

using namespace mdrbm;
using namespace mdrbm::bench;

enum ExitCode { kOk = 0, kConfig = 2, kFormat = 3, kNumeric = 4 };

struct Options {
  std::string config;
  std::string dataset;
  std::string model;
  std::string theta0;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<Eigen::Index> batch_size;
  std::optional<Eigen::Index> s_train;
  std::optional<Eigen::Index> s_infer;
  std::vector<double> noise_grid;
  std::optional<int> repeats;
  std::string out = "out";
  bool noise_before_standardize = false;
  bool verbose = false;

  std::string model_file;
  std::string layer_file;
  std::vector<std::string> inputs;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)");
  cmd->add_option("--dataset", o.dataset, "Dataset preset: mnist, fmnist, cifar10, ulc");
  cmd->add_option("--model", o.model, "Model kind: drbm, drbm+elm, mdrbm, 4nn");
  cmd->add_option("--theta0", o.theta0, "Layer source: random or gbrbm");
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--batch-size", o.batch_size, "Mini-batch size");
  cmd->add_option("--s-train", o.s_train, "Layer samples per datum during training");
  cmd->add_option("--s-infer", o.s_infer, "Layer samples per datum during inference");
  cmd->add_option("--noise-grid", o.noise_grid, "Noise levels, comma separated")->delimiter(',');
  cmd->add_option("--repeats", o.repeats, "Noise draws per level");
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd->add_flag("--noise-before-standardize", o.noise_before_standardize,
                "Add noise to raw inputs and standardize afterwards");
  cmd->add_flag("-v,--verbose", o.verbose, "Per-epoch progress on stderr");
}

ExperimentConfig make_config(const Options& o) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    c = ExperimentConfig::from_file(o.config);
    if (!o.dataset.empty() && o.dataset != c.dataset.name) c.dataset = ExperimentConfig::preset(o.dataset).dataset;
  } else if (!o.dataset.empty()) {
    c = ExperimentConfig::preset(o.dataset);
  } else {
    throw ConfigError("either --config or --dataset is required");
  }
  c.data_dir = data_dir_override(c.data_dir);
  if (!o.model.empty()) c.models = {ModelSpec::parse(o.model, o.theta0)};
  else if (!o.theta0.empty()) throw ConfigError("--theta0 needs --model");
  if (o.seed) c.seed = *o.seed;
  if (o.epochs) c.training.epochs = *o.epochs;
  if (o.batch_size) c.training.batch_size = *o.batch_size;
  if (o.s_train) c.sampling.s_train = *o.s_train;
  if (o.s_infer) c.sampling.s_infer = *o.s_infer;
  if (!o.noise_grid.empty()) c.noise_grid = o.noise_grid;
  if (o.repeats) c.repeats = *o.repeats;
  if (o.noise_before_standardize) c.noise_before_standardize = true;
  c.training.verbose = o.verbose;
  c.validate();
  return c;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const ModelSpec& single_model(const ExperimentConfig& c) {
  if (c.models.size() != 1) throw ConfigError("select one model with --model (and --theta0 where needed)");
  return c.models.front();
}

void print_table(const NoiseSweepReport& report, std::ostream& os) {
  os << std::left << std::setw(14) << "model";
  for (const double s : report.grid) os << std::right << std::setw(14) << ("sigma=" + std::to_string(s).substr(0, 3));
  os << std::setw(8) << "ADR" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& row : report.rows) {
    os << std::left << std::setw(14) << row.model << std::right;
    for (const auto& p : row.points) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(2) << 100.0 * p.mean << "+-" << 100.0 * p.stddev;
      os << std::setw(14) << cell.str();
    }
    os << std::setw(8) << row.adr << '\n';
  }
  os.unsetf(std::ios::fixed);
}

RngStream run_root(const ExperimentConfig& c) { return RngStream(c.seed).substream(0); }

int cmd_pretrain(const Options& o) {
  ExperimentConfig c = make_config(o);
  const RngStream root = run_root(c);
  const PreparedData data = prepare_data(c, root.substream(streams::kDataStream));
  const std::string run_id = "gbrbm-" + hex64(c.hash()) + "-run0";
  c.gbrbm.epochs = o.epochs.value_or(c.gbrbm.epochs);
  const PretrainResult pre = pretrain(c, data.train.inputs(), root.substream(streams::kPretrainStream), run_id);
  std::filesystem::create_directories(o.out);
  save(std::filesystem::path(o.out) / "gbrbm.bin", pre.gbrbm);
  save(std::filesystem::path(o.out) / "pelm.bin", pre.pelm);
  write_file(std::filesystem::path(o.out) / "history-gbrbm.csv", history_csv(pre.history));
  std::cout << "pretrained " << run_id << " (" << pre.gbrbm.width() << " x " << pre.gbrbm.inputs() << ") -> " << o.out
            << '\n';
  return kOk;
}

int cmd_train(const Options& o) {
  const ExperimentConfig c = make_config(o);
  const ModelSpec& spec = single_model(c);
  const RngStream root = run_root(c);
  const PreparedData data = prepare_data(c, root.substream(streams::kDataStream));
  std::optional<PelmParams> layer;
  if (!o.layer_file.empty()) {
    layer = pelm_from(read_container(o.layer_file));
  } else if (spec.theta0 == Theta0Source::Random) {
    layer = random_theta0(data.train.features(), c.width, root.substream(streams::kTheta0Stream),
                          "seed " + std::to_string(c.seed) + " run0");
  } else if (spec.theta0 == Theta0Source::Gbrbm) {
    layer = pretrain(c, data.train.inputs(), root.substream(streams::kPretrainStream),
                     "gbrbm-" + hex64(c.hash()) + "-run0")
                .pelm;
  }
  const std::uint64_t key = fnv1a(spec.label());
  const Model initial = build_model(c, spec, data.train, root.substream(streams::kInitStream).substream(key),
                                    layer ? &*layer : nullptr);
  const TrainedModel trained =
      train_model(c, initial, data.train, &data.test, root.substream(streams::kTrainStream).substream(key));
  std::filesystem::create_directories(o.out);
  const auto path = std::filesystem::path(o.out) / (spec.slug() + ".bin");
  write_container(path, to_container(trained.best));
  write_file(std::filesystem::path(o.out) / ("history-" + spec.slug() + ".csv"), history_csv(trained.history));
  double best = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : trained.history) {
    if (e.epoch == trained.best_epoch) best = e.heldout_accuracy;
  }
  std::cout << spec.label() << ": best epoch " << trained.best_epoch << ", test accuracy " << best << " -> "
            << path.string() << '\n';
  return kOk;
}

Model load_model(const Options& o) {
  if (o.model_file.empty()) throw ConfigError("--model-file is required");
  return model_from(read_container(o.model_file));
}

int cmd_eval(const Options& o) {
  const Model model = load_model(o);
  const ExperimentConfig c = make_config(o);
  const RngStream root = run_root(c);
  const PreparedData data = prepare_data(c, root.substream(streams::kDataStream));
  const double acc = accuracy(model, data.test, c.sampling.s_infer,
                              root.substream(streams::kSweepStream).substream(streams::kInferStream));
  std::cout << model.spec.label() << " clean test accuracy " << acc << " (" << data.test.size() << " rows)\n";
  return kOk;
}

int cmd_sweep(const Options& o) {
  const Model model = load_model(o);
  const ExperimentConfig c = make_config(o);
  const RngStream root = run_root(c);
  const PreparedData data = prepare_data(c, root.substream(streams::kDataStream));
  NoiseSweepReport report;
  report.name = c.name;
  report.config_json = c.to_json();
  report.config_hash = c.hash();
  report.seed = c.seed;
  report.runs = 1;
  report.repeats = c.repeats;
  report.grid = c.noise_grid;
  report.rows.push_back(noise_sweep(model, data, c.noise_grid, c.repeats, c.sampling.s_infer,
                                    root.substream(streams::kSweepStream), c.noise_before_standardize));
  report.complete = true;
  std::filesystem::create_directories(o.out);
  write_file(std::filesystem::path(o.out) / "report.json", report.to_json());
  write_file(std::filesystem::path(o.out) / "report.csv", report.to_csv());
  print_table(report, std::cout);
  return kOk;
}

int cmd_report(const Options& o) {
  if (o.inputs.empty()) throw ConfigError("report needs at least one report.json");
  std::vector<NoiseSweepReport> reports;
  for (const auto& f : o.inputs) reports.push_back(NoiseSweepReport::from_json(read_file(f)));
  const NoiseSweepReport merged = reports.size() == 1 ? reports.front() : merge_reports(reports);
  print_table(merged, std::cout);
  std::cout << "report hash " << hex64(merged.hash()) << (merged.complete ? "" : " (incomplete)") << '\n';
  if (reports.size() > 1) {
    std::filesystem::create_directories(o.out);
    write_file(std::filesystem::path(o.out) / "report.json", merged.to_json());
    write_file(std::filesystem::path(o.out) / "report.csv", merged.to_csv());
  }
  return kOk;
}

int cmd_run(const Options& o) {
  const ExperimentConfig c = make_config(o);
  RunOptions options;
  options.log = &std::cerr;
  const NoiseSweepReport report = run_experiment(c, o.out, options);
  print_table(report, std::cout);
  std::cout << "report hash " << hex64(report.hash()) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-robust DRBM classifiers with a frozen stochastic input layer"};
  app.require_subcommand(1);
  Options o;

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Fit the Gaussian-Bernoulli RBM and export the frozen layer");
  auto* train_cmd = app.add_subcommand("train", "Train one model and save its best parameters");
  auto* eval_cmd = app.add_subcommand("eval", "Clean test accuracy of a saved model");
  auto* sweep_cmd = app.add_subcommand("sweep", "Noise sweep of a saved model");
  auto* report_cmd = app.add_subcommand("report", "Print or merge sweep reports");
  auto* run_cmd = app.add_subcommand("run", "Full pipeline: load, pretrain, train every model, sweep, report");
  for (auto* cmd : {pretrain_cmd, train_cmd, eval_cmd, sweep_cmd, run_cmd}) add_common(cmd, o);
  train_cmd->add_option("--layer", o.layer_file, "Frozen layer file from 'pretrain'")->check(CLI::ExistingFile);
  for (auto* cmd : {eval_cmd, sweep_cmd}) {
    cmd->add_option("--model-file", o.model_file, "Saved model")->required()->check(CLI::ExistingFile);
  }
  report_cmd->add_option("reports", o.inputs, "report.json files")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", o.out, "Directory for the merged report")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*pretrain_cmd) return cmd_pretrain(o);
    if (*train_cmd) return cmd_train(o);
    if (*eval_cmd) return cmd_eval(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*report_cmd) return cmd_report(o);
    if (*run_cmd) return cmd_run(o);
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const CapabilityError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const UsageError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  }
  return kOk;
}
