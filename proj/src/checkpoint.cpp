#include "dialact/checkpoint.hpp"

#include "dialact/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dialact {

namespace {

constexpr char kMagic[8] = {'D', 'I', 'A', 'L', 'A', 'C', 'T', '\0'};

template <class T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    char buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
  }

  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::uint64_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint: truncated file");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_archive(const ArrayArchive& archive) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string meta = archive.meta.dump();
  put<std::uint64_t>(out, meta.size());
  out += meta;
  put<std::uint64_t>(out, archive.arrays.size());
  for (const auto& [name, arr] : archive.arrays) {
    std::uint64_t count = 1;
    for (auto d : arr.shape) count *= d;
    if (count != arr.values.size())
      throw ShapeError("checkpoint: array '" + name + "' shape does not match value count");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arr.shape.size()));
    for (auto d : arr.shape) put<std::uint64_t>(out, d);
    for (double v : arr.values) put<double>(out, v);
  }
  return out;
}

ArrayArchive decode_archive(const std::string& bytes) {
  Reader in(bytes);
  if (in.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw ParseError("checkpoint: bad magic");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  ArrayArchive archive;
  const auto meta_len = in.get<std::uint64_t>();
  try {
    archive.meta = nlohmann::ordered_json::parse(in.bytes(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  const auto n = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto name_len = in.get<std::uint32_t>();
    std::string name = in.bytes(name_len);
    const auto rank = in.get<std::uint32_t>();
    NamedArray arr;
    std::uint64_t count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      arr.shape.push_back(in.get<std::uint64_t>());
      if (arr.shape.back() != 0 && count > in.remaining() / arr.shape.back())
        throw ParseError("checkpoint: truncated file");
      count *= arr.shape.back();
    }
    if (count > in.remaining() / sizeof(double)) throw ParseError("checkpoint: truncated file");
    arr.values.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) arr.values.push_back(in.get<double>());
    archive.arrays.emplace(std::move(name), std::move(arr));
  }
  if (!in.done()) throw ParseError("checkpoint: trailing bytes");
  return archive;
}

void write_archive(const std::filesystem::path& path, const ArrayArchive& archive) {
  const std::string bytes = encode_archive(archive);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

ArrayArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_archive(ss.str());
}

}  // namespace dialact
