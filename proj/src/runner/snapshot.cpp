#include "ofe/runner/snapshot.hpp"

#include "ofe/errors.hpp"

#include <array>
#include <cstdint>
#include <fstream>

namespace ofe {
namespace {

constexpr std::array<char, 8> kMagic = {'O', 'F', 'E', 'S', 'N', 'A', 'P', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("snapshot " + path.string() + ": truncated");
  return v;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write snapshot " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(out, arrays.size());
  for (const auto& a : arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(a.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(a.value.cols()));
    out.write(reinterpret_cast<const char*>(a.value.data()),
              static_cast<std::streamsize>(a.value.size() * sizeof(double)));
  }
  if (!out) throw ConfigError("failed writing snapshot " + path.string());
}

std::vector<NamedArray> read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read snapshot " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ConfigError("snapshot " + path.string() + ": bad magic");
  const auto count = get<std::uint64_t>(in, path);
  std::vector<NamedArray> arrays;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in, path);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get<std::uint64_t>(in, path);
    const auto cols = get<std::uint64_t>(in, path);
    Matrix value(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(value.data()),
            static_cast<std::streamsize>(value.size() * sizeof(double)));
    if (!in) throw ConfigError("snapshot " + path.string() + ": truncated");
    arrays.push_back({std::move(name), std::move(value)});
  }
  return arrays;
}

}  // namespace ofe
