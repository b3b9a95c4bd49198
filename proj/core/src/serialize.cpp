#include "dynkt/serialize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

namespace dynkt {

namespace {

constexpr std::array<char, 8> kMagic{'D', 'K', 'T', 'P', 'A', 'R', 'A', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("parameter container truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_param_container(std::ostream& out, std::span<const NamedArray> arrays) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    if (shape_numel(a.shape) != a.values.size()) {
      throw FormatError("array '" + a.name + "' has shape " + shape_to_string(a.shape) + " but " +
                        std::to_string(a.values.size()) + " values");
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (std::size_t d : a.shape) put_le<std::uint64_t>(out, d);
    for (double v : a.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw FormatError("failed writing parameter container");
}

std::vector<NamedArray> read_param_container(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("not a parameter container (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVersion) throw FormatError("unsupported parameter container version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(in);
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const auto name_len = get_le<std::uint32_t>(in);
    a.name.resize(name_len);
    in.read(a.name.data(), name_len);
    if (!in) throw FormatError("parameter container truncated in a name");
    const auto rank = get_le<std::uint32_t>(in);
    for (std::uint32_t d = 0; d < rank; ++d) a.shape.push_back(static_cast<std::size_t>(get_le<std::uint64_t>(in)));
    a.values.resize(shape_numel(a.shape));
    for (double& v : a.values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    arrays.push_back(std::move(a));
  }
  return arrays;
}

}  // namespace dynkt
