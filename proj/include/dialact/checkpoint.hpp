#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dialact {

// Named-array container shared by every model:
//
//   bytes 0..7   magic "DIALACT\0"
//   u32          format version
//   u64 + bytes  metadata (JSON text)
//   u64          array count
//   per array:   u32 name length, name, u32 rank, u64 dims[rank],
//                f64 values[prod(dims)] in row-major order
//
// All integers and doubles little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::vector<std::uint64_t> shape;
  std::vector<double> values;
};

struct ArrayArchive {
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  std::map<std::string, NamedArray> arrays;
};

void write_archive(const std::filesystem::path& path, const ArrayArchive& archive);
ArrayArchive read_archive(const std::filesystem::path& path);

std::string encode_archive(const ArrayArchive& archive);
ArrayArchive decode_archive(const std::string& bytes);

}  // namespace dialact
