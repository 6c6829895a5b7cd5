#include "mdrbm/data.hpp"

#include "mdrbm/training.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace mdrbm::data {

namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;
constexpr std::size_t kCifarRecord = 3073;
constexpr std::size_t kCifarPlane = 1024;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::string& field,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw FormatError(path.string() + ": truncated header (" + field + ")");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delimiter)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

}  // namespace

double bt601_luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, const std::string& name) {
  const auto img = read_bytes(images);
  const auto lab = read_bytes(labels);

  const std::uint32_t img_magic = read_be32(img, 0, "magic", images);
  if (img_magic != kIdxImages) {
    std::ostringstream msg;
    msg << images.string() << ": bad magic 0x" << std::hex << img_magic << " (expected 0x803 for images)";
    throw FormatError(msg.str());
  }
  const std::uint32_t count = read_be32(img, 4, "image count", images);
  const std::uint32_t rows = read_be32(img, 8, "row count", images);
  const std::uint32_t cols = read_be32(img, 12, "column count", images);
  const std::size_t pixels = std::size_t{rows} * cols;
  if (img.size() != 16 + std::size_t{count} * pixels) {
    throw FormatError(images.string() + ": payload holds " + std::to_string(img.size() - 16) + " bytes, header implies " +
                      std::to_string(std::size_t{count} * pixels));
  }

  const std::uint32_t lab_magic = read_be32(lab, 0, "magic", labels);
  if (lab_magic != kIdxLabels) {
    std::ostringstream msg;
    msg << labels.string() << ": bad magic 0x" << std::hex << lab_magic << " (expected 0x801 for labels)";
    throw FormatError(msg.str());
  }
  const std::uint32_t label_count = read_be32(lab, 4, "label count", labels);
  if (lab.size() != 8 + std::size_t{label_count}) {
    throw FormatError(labels.string() + ": payload holds " + std::to_string(lab.size() - 8) +
                      " bytes, header implies " + std::to_string(label_count));
  }
  if (label_count != count) {
    throw FormatError("image count " + std::to_string(count) + " does not match label count " +
                      std::to_string(label_count));
  }

  Matrix x(count, static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < std::size_t{count} * pixels; ++i) x.data()[i] = img[16 + i] / 255.0;
  std::vector<int> y(count);
  int classes = 0;
  for (std::size_t i = 0; i < count; ++i) {
    y[i] = lab[8 + i];
    classes = std::max(classes, y[i] + 1);
  }
  return Dataset(std::move(x), std::move(y), std::max(classes, 10), name);
}

Dataset load_cifar10(const std::vector<std::filesystem::path>& batches, const std::string& name) {
  std::vector<std::vector<std::uint8_t>> raw;
  std::size_t records = 0;
  for (const auto& path : batches) {
    raw.push_back(read_bytes(path));
    if (raw.back().empty() || raw.back().size() % kCifarRecord != 0) {
      throw FormatError(path.string() + ": size " + std::to_string(raw.back().size()) +
                        " is not a multiple of the 3073-byte record");
    }
    records += raw.back().size() / kCifarRecord;
  }
  Matrix x(static_cast<Eigen::Index>(records), static_cast<Eigen::Index>(kCifarPlane));
  std::vector<int> y;
  y.reserve(records);
  Eigen::Index row = 0;
  for (std::size_t f = 0; f < raw.size(); ++f) {
    const auto& bytes = raw[f];
    for (std::size_t off = 0; off < bytes.size(); off += kCifarRecord, ++row) {
      if (bytes[off] > 9) throw FormatError(batches[f].string() + ": label byte out of range");
      y.push_back(bytes[off]);
      const std::uint8_t* red = &bytes[off + 1];
      const std::uint8_t* green = red + kCifarPlane;
      const std::uint8_t* blue = green + kCifarPlane;
      for (std::size_t p = 0; p < kCifarPlane; ++p) {
        x(row, static_cast<Eigen::Index>(p)) = bt601_luma(red[p], green[p], blue[p]);
      }
    }
  }
  return Dataset(std::move(x), std::move(y), 10, name);
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column, char delimiter,
                 const std::string& name, std::vector<std::string>* class_names) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header row");
  const auto header = split_line(line, delimiter);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw ConfigError(path.string() + ": label column '" + label_column + "' not found in header");
  }
  const auto label_index = static_cast<std::size_t>(label_it - header.begin());

  std::map<std::string, int> label_ids;
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line, delimiter);
    if (cells.size() != header.size()) {
      throw FormatError(path.string() + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(header.size()));
    }
    std::vector<double> features;
    features.reserve(header.size() - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_index) continue;
      double v = 0.0;
      const auto& cell = cells[c];
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw FormatError(path.string() + ": row " + std::to_string(line_no) + ", column '" + header[c] +
                          "': non-numeric value '" + cell + "'");
      }
      features.push_back(v);
    }
    const auto [it, inserted] = label_ids.try_emplace(cells[label_index], static_cast<int>(names.size()));
    if (inserted) names.push_back(cells[label_index]);
    labels.push_back(it->second);
    rows.push_back(std::move(features));
  }
  if (rows.empty()) throw FormatError(path.string() + ": no data rows");

  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size() - 1));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  if (class_names) *class_names = names;
  return Dataset(std::move(x), std::move(labels), static_cast<int>(names.size()), name);
}

StandardizationStats StandardizationStats::fit(const Matrix& inputs) {
  require(inputs.rows() >= 1, "standardize: empty training set");
  StandardizationStats s;
  s.mean = inputs.colwise().mean().transpose();
  const Matrix centered = inputs.rowwise() - s.mean.transpose();
  s.std = (centered.array().square().colwise().sum() / static_cast<double>(inputs.rows())).sqrt().transpose();
  for (Eigen::Index i = 0; i < s.std.size(); ++i) {
    if (!(s.std(i) >= kMinStd)) s.std(i) = 1.0;
  }
  return s;
}

Matrix StandardizationStats::apply(const Matrix& inputs) const {
  require(inputs.cols() == mean.size(), "standardize: feature count mismatch");
  Matrix out = inputs.rowwise() - mean.transpose();
  out.array().rowwise() /= std.transpose().array();
  return out;
}

Standardized standardize(const Dataset& train, const std::vector<Dataset>& others) {
  Standardized out{StandardizationStats::fit(train.inputs()), {}, {}};
  out.train = train.with_inputs(out.stats.apply(train.inputs()));
  for (const auto& d : others) out.others.push_back(d.with_inputs(out.stats.apply(d.inputs())));
  return out;
}

Dataset subsample(const Dataset& data, Eigen::Index count, const RngStream& rng, bool stratified) {
  require(count >= 0 && count <= data.size(), "subsample: requested " + std::to_string(count) + " of " +
                                                  std::to_string(data.size()) + " rows");
  std::vector<Eigen::Index> picked;
  if (!stratified) {
    auto order = shuffled_rows(data.size(), rng);
    picked.assign(order.begin(), order.begin() + count);
  } else {
    std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(data.classes()));
    for (const Eigen::Index r : shuffled_rows(data.size(), rng)) {
      by_class[static_cast<std::size_t>(data.labels()[static_cast<std::size_t>(r)])].push_back(r);
    }
    const Eigen::Index per_class = count / data.classes();
    const Eigen::Index remainder = count % data.classes();
    for (int k = 0; k < data.classes(); ++k) {
      const Eigen::Index want = per_class + (k < remainder ? 1 : 0);
      const auto& pool = by_class[static_cast<std::size_t>(k)];
      require(static_cast<Eigen::Index>(pool.size()) >= want,
              "subsample: class " + std::to_string(k) + " has only " + std::to_string(pool.size()) + " rows");
      picked.insert(picked.end(), pool.begin(), pool.begin() + want);
    }
    const auto mix = shuffled_rows(static_cast<Eigen::Index>(picked.size()), rng.substream(1));
    std::vector<Eigen::Index> mixed;
    mixed.reserve(picked.size());
    for (const Eigen::Index i : mix) mixed.push_back(picked[static_cast<std::size_t>(i)]);
    picked = std::move(mixed);
  }
  return data.select(picked);
}

std::pair<Dataset, Dataset> split(const Dataset& pool, Eigen::Index train_count, Eigen::Index test_count,
                                  const RngStream& rng) {
  require(train_count >= 1 && test_count >= 1 && train_count + test_count <= pool.size(),
          "split: requested " + std::to_string(train_count) + " + " + std::to_string(test_count) + " of " +
              std::to_string(pool.size()) + " rows");
  const auto order = shuffled_rows(pool.size(), rng);
  const std::span<const Eigen::Index> all(order);
  return {pool.select(all.first(static_cast<std::size_t>(train_count)), pool.name() + "-train"),
          pool.select(all.subspan(static_cast<std::size_t>(train_count), static_cast<std::size_t>(test_count)),
                      pool.name() + "-test")};
}

Matrix add_awgn(const Matrix& inputs, double sigma, const RngStream& rng) {
  require(sigma >= 0.0 && std::isfinite(sigma), "add_awgn: sigma must be finite and nonnegative");
  Matrix out = inputs;
  if (sigma == 0.0) return out;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(r));
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) += sigma * stream.normal();
  }
  return out;
}

}  // namespace mdrbm::data
