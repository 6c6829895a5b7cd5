#include "mdrbm/serialize.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mdrbm {

namespace {

constexpr std::string_view kMagic = "MDRBMPAR";

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get_le(std::string_view in, std::size_t offset) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void expect_kind(const ParamContainer& c, std::string_view kind) {
  if (c.kind != kind) {
    throw FormatError("parameter file holds kind '" + c.kind + "', expected '" + std::string(kind) + "'");
  }
}

void add_pelm(ParamContainer& c, const PelmParams& layer, const std::string& prefix) {
  c.add_vector(prefix + "b0", layer.b0());
  c.add(prefix + "w0", layer.w0());
  c.tags[prefix + "provenance"] = layer.provenance();
  c.tags[prefix + "origin"] = layer.origin();
}

PelmParams read_pelm(const ParamContainer& c, const std::string& prefix) {
  try {
    return PelmParams(c.vector_block(prefix + "b0"), c.block(prefix + "w0"), c.tag(prefix + "provenance"),
                      c.tag(prefix + "origin"));
  } catch (const UsageError& e) {
    throw FormatError(std::string("layer block: ") + e.what());
  }
}

void add_drbm(ParamContainer& c, const DrbmParams& p, const std::string& prefix) {
  c.add_vector(prefix + "b1", p.b1);
  c.add_vector(prefix + "b2", p.b2);
  c.add(prefix + "w1", p.w1);
  c.add(prefix + "w2", p.w2);
}

DrbmParams read_drbm(const ParamContainer& c, const std::string& prefix) {
  DrbmParams p{c.vector_block(prefix + "b1"), c.vector_block(prefix + "b2"), c.block(prefix + "w1"),
               c.block(prefix + "w2")};
  try {
    p.validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("drbm block: ") + e.what());
  }
  return p;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) {
  for (const char ch : bytes) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

void ParamContainer::add(std::string name, const Eigen::Ref<const Matrix>& values) {
  blocks.push_back({std::move(name), values});
}

void ParamContainer::add_vector(std::string name, const Eigen::Ref<const Vector>& values) {
  blocks.push_back({std::move(name), Matrix(values)});
}

const Matrix& ParamContainer::block(std::string_view name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b.values;
  }
  throw FormatError("parameter file has no block '" + std::string(name) + "'");
}

Vector ParamContainer::vector_block(std::string_view name) const {
  const Matrix& m = block(name);
  if (m.cols() != 1) throw FormatError("block '" + std::string(name) + "' is not a column vector");
  return m.col(0);
}

const std::string& ParamContainer::tag(const std::string& key) const {
  const auto it = tags.find(key);
  if (it == tags.end()) throw FormatError("parameter file has no tag '" + key + "'");
  return it->second;
}

std::string ParamContainer::encode() const {
  nlohmann::ordered_json header;
  header["kind"] = kind;
  header["tags"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : tags) header["tags"][k] = v;
  header["blocks"] = nlohmann::ordered_json::array();
  for (const auto& b : blocks) header["blocks"].push_back({{"name", b.name}, {"rows", b.values.rows()}, {"cols", b.values.cols()}});
  const std::string text = header.dump();

  std::string out(kMagic);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& b : blocks) {
    for (Eigen::Index i = 0; i < b.values.size(); ++i) put_le<double>(out, b.values.data()[i]);
  }
  return out;
}

ParamContainer ParamContainer::decode(std::string_view bytes) {
  constexpr std::size_t kPreamble = 8 + 4 + 8;
  if (bytes.size() < kPreamble || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not a parameter container (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kVersion) throw FormatError("unsupported container version " + std::to_string(version));
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  if (header_len > bytes.size() - kPreamble) throw FormatError("truncated container header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPreamble, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container header: ") + e.what());
  }

  ParamContainer c;
  std::size_t offset = kPreamble + header_len;
  try {
    c.kind = header.at("kind").get<std::string>();
    for (const auto& [k, v] : header.at("tags").items()) c.tags[k] = v.get<std::string>();
    for (const auto& entry : header.at("blocks")) {
      const auto rows = entry.at("rows").get<std::int64_t>();
      const auto cols = entry.at("cols").get<std::int64_t>();
      if (rows < 0 || cols < 0) throw FormatError("negative block shape");
      const auto count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
      if (count > (bytes.size() - offset) / 8) {
        throw FormatError("payload truncated in block '" + entry.at("name").get<std::string>() + "'");
      }
      Matrix m(rows, cols);
      for (std::size_t i = 0; i < count; ++i, offset += 8) m.data()[i] = get_le<double>(bytes, offset);
      c.blocks.push_back({entry.at("name").get<std::string>(), std::move(m)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container header: ") + e.what());
  }
  if (offset != bytes.size()) throw FormatError("trailing bytes after container payload");
  return c;
}

std::uint64_t ParamContainer::hash() const { return fnv1a(encode()); }

void write_container(const std::filesystem::path& path, const ParamContainer& container) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  const std::string bytes = container.encode();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed for " + path.string());
}

ParamContainer read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return ParamContainer::decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ParamContainer to_container(const DrbmParams& params) {
  ParamContainer c;
  c.kind = kKindDrbm;
  add_drbm(c, params, "");
  return c;
}

ParamContainer to_container(const PelmParams& layer) {
  ParamContainer c;
  c.kind = kKindPelm;
  add_pelm(c, layer, "");
  return c;
}

ParamContainer to_container(const GbrbmParams& params) {
  ParamContainer c;
  c.kind = kKindGbrbm;
  c.add_vector("b0", params.b0);
  c.add("w0", params.w0);
  c.add_vector("c", params.c);
  c.add_vector("s", params.s);
  return c;
}

ParamContainer to_container(const MdrbmModel& model) {
  ParamContainer c;
  c.kind = kKindMdrbm;
  add_pelm(c, model.pelm, "pelm.");
  add_drbm(c, model.drbm, "drbm.");
  return c;
}

ParamContainer to_container(const ElmDrbmModel& model) {
  ParamContainer c;
  c.kind = kKindElmDrbm;
  add_pelm(c, model.pelm, "pelm.");
  add_drbm(c, model.drbm, "drbm.");
  return c;
}

ParamContainer to_container(const MlpParams& params) {
  ParamContainer c;
  c.kind = kKindMlp;
  c.add("w1", params.w1);
  c.add_vector("b1", params.b1);
  c.add("w2", params.w2);
  c.add_vector("b2", params.b2);
  c.add("w3", params.w3);
  c.add_vector("b3", params.b3);
  return c;
}

DrbmParams drbm_from(const ParamContainer& c) {
  expect_kind(c, kKindDrbm);
  return read_drbm(c, "");
}

PelmParams pelm_from(const ParamContainer& c) {
  expect_kind(c, kKindPelm);
  return read_pelm(c, "");
}

GbrbmParams gbrbm_from(const ParamContainer& c) {
  expect_kind(c, kKindGbrbm);
  GbrbmParams p{c.vector_block("b0"), c.block("w0"), c.vector_block("c"), c.vector_block("s")};
  try {
    p.validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("gbrbm file: ") + e.what());
  }
  return p;
}

MdrbmModel mdrbm_from(const ParamContainer& c) {
  expect_kind(c, kKindMdrbm);
  MdrbmModel m{read_pelm(c, "pelm."), read_drbm(c, "drbm.")};
  try {
    m.validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("mdrbm file: ") + e.what());
  }
  return m;
}

ElmDrbmModel elm_drbm_from(const ParamContainer& c) {
  expect_kind(c, kKindElmDrbm);
  ElmDrbmModel m{read_pelm(c, "pelm."), read_drbm(c, "drbm.")};
  try {
    m.validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("drbm+elm file: ") + e.what());
  }
  return m;
}

MlpParams mlp_from(const ParamContainer& c) {
  expect_kind(c, kKindMlp);
  MlpParams p{c.block("w1"), c.vector_block("b1"), c.block("w2"),
              c.vector_block("b2"), c.block("w3"), c.vector_block("b3")};
  try {
    p.validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("4nn file: ") + e.what());
  }
  return p;
}

}  // namespace mdrbm
