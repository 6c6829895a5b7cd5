#ifndef MDRBM_TESTS_FIXTURES_HPP
#define MDRBM_TESTS_FIXTURES_HPP

// Small on-disk datasets in the formats the loaders accept.

#include "mdrbm/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fixture {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<std::uint8_t> idx_images(const std::vector<std::vector<std::uint8_t>>& images, std::uint32_t rows,
                                            std::uint32_t cols) {
  std::vector<std::uint8_t> out;
  put_be32(out, 0x803);
  put_be32(out, static_cast<std::uint32_t>(images.size()));
  put_be32(out, rows);
  put_be32(out, cols);
  for (const auto& img : images) out.insert(out.end(), img.begin(), img.end());
  return out;
}

inline std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out;
  put_be32(out, 0x801);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

/// One CIFAR-10 record: label, then planar R, G, B planes of 1024 bytes each.
inline std::vector<std::uint8_t> cifar_record(std::uint8_t label, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  std::vector<std::uint8_t> out{label};
  out.insert(out.end(), 1024, r);
  out.insert(out.end(), 1024, g);
  out.insert(out.end(), 1024, b);
  return out;
}

/// Pooled CSV with `classes` Gaussian clusters in `features` dimensions and a "class" column.
inline void write_cluster_csv(const std::filesystem::path& path, int rows, int features, int classes,
                              std::uint64_t seed, double spread = 0.6) {
  mdrbm::RngStream rng(seed);
  std::ofstream out(path);
  for (int f = 0; f < features; ++f) out << "f" << f << ',';
  out << "class\n";
  for (int r = 0; r < rows; ++r) {
    const int label = r % classes;
    for (int f = 0; f < features; ++f) {
      const double centre = (f % classes == label) ? 2.0 : 0.0;
      out << centre + spread * rng.normal() << ',';
    }
    out << "c" << label << '\n';
  }
}

}  // namespace fixture

#endif  // MDRBM_TESTS_FIXTURES_HPP
