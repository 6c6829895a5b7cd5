#ifndef MDRBM_SERIALIZE_HPP
#define MDRBM_SERIALIZE_HPP

#include "mdrbm/baselines.hpp"
#include "mdrbm/gbrbm.hpp"
#include "mdrbm/mdrbm.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mdrbm {

/// FNV-1a, 64-bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ull);

/// Parameter container file:
///
///   8 bytes   magic "MDRBMPAR"
///   u32 LE    format version
///   u64 LE    header length L
///   L bytes   JSON header {"kind", "tags", "blocks": [{"name", "rows", "cols"}]}
///   payload   each block as rows*cols little-endian f64, row-major, in header order
struct ParamBlock {
  std::string name;
  Matrix values;
};

struct ParamContainer {
  static constexpr std::uint32_t kVersion = 1;

  std::string kind;
  std::map<std::string, std::string> tags;
  std::vector<ParamBlock> blocks;

  void add(std::string name, const Eigen::Ref<const Matrix>& values);
  void add_vector(std::string name, const Eigen::Ref<const Vector>& values);
  /// Throws FormatError when the block is absent.
  const Matrix& block(std::string_view name) const;
  Vector vector_block(std::string_view name) const;
  const std::string& tag(const std::string& key) const;

  std::string encode() const;
  static ParamContainer decode(std::string_view bytes);
  /// Hash of the encoded bytes.
  std::uint64_t hash() const;
};

void write_container(const std::filesystem::path& path, const ParamContainer& container);
ParamContainer read_container(const std::filesystem::path& path);

// Model kinds stored in the "kind" field.
inline constexpr std::string_view kKindDrbm = "drbm";
inline constexpr std::string_view kKindPelm = "pelm";
inline constexpr std::string_view kKindGbrbm = "gbrbm";
inline constexpr std::string_view kKindMdrbm = "mdrbm";
inline constexpr std::string_view kKindElmDrbm = "drbm+elm";
inline constexpr std::string_view kKindMlp = "4nn";

ParamContainer to_container(const DrbmParams& params);
ParamContainer to_container(const PelmParams& layer);
ParamContainer to_container(const GbrbmParams& params);
ParamContainer to_container(const MdrbmModel& model);
ParamContainer to_container(const ElmDrbmModel& model);
ParamContainer to_container(const MlpParams& params);

DrbmParams drbm_from(const ParamContainer& c);
PelmParams pelm_from(const ParamContainer& c);
GbrbmParams gbrbm_from(const ParamContainer& c);
MdrbmModel mdrbm_from(const ParamContainer& c);
ElmDrbmModel elm_drbm_from(const ParamContainer& c);
MlpParams mlp_from(const ParamContainer& c);

template <typename Model>
void save(const std::filesystem::path& path, const Model& model) {
  write_container(path, to_container(model));
}

}  // namespace mdrbm

#endif  // MDRBM_SERIALIZE_HPP
