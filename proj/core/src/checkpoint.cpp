#include "fran/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "fran/errors.hpp"

namespace fran {

namespace le {

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw ShapeError("checkpoint: unexpected end of stream");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void put_u8(std::ostream& out, std::uint8_t v) { put(out, v); }
void put_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
void put_f64(std::ostream& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }
std::uint8_t get_u8(std::istream& in) { return get<std::uint8_t>(in); }
std::uint32_t get_u32(std::istream& in) { return get<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get<std::uint64_t>(in); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get<std::uint64_t>(in)); }

}  // namespace le

namespace {
constexpr std::array<char, 4> kMagic{'F', 'R', 'N', 'N'};
}

void write_checkpoint(std::ostream& out, const FlatWeights& weights) {
  out.write(kMagic.data(), kMagic.size());
  le::put_u32(out, kCheckpointVersion);
  le::put_u32(out, static_cast<std::uint32_t>(weights.layout.size()));
  for (const LayoutEntry& e : weights.layout) {
    le::put_u64(out, e.rows);
    le::put_u64(out, e.cols);
    le::put_u64(out, e.offset);
    le::put_u8(out, static_cast<std::uint8_t>(e.activation));
  }
  le::put_u64(out, weights.values.size());
  for (double v : weights.values) le::put_f64(out, v);
  if (!out) throw Error("checkpoint: write failed");
}

FlatWeights read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ShapeError("checkpoint: bad magic");
  const std::uint32_t version = le::get_u32(in);
  if (version != kCheckpointVersion)
    throw ShapeError("checkpoint: unsupported version " + std::to_string(version));
  FlatWeights w;
  const std::uint32_t layers = le::get_u32(in);
  w.layout.resize(layers);
  for (LayoutEntry& e : w.layout) {
    e.rows = le::get_u64(in);
    e.cols = le::get_u64(in);
    e.offset = le::get_u64(in);
    const std::uint8_t act = le::get_u8(in);
    if (act > static_cast<std::uint8_t>(Activation::sigmoid))
      throw ShapeError("checkpoint: unknown activation code");
    e.activation = static_cast<Activation>(act);
  }
  const std::uint64_t count = le::get_u64(in);
  std::size_t expected = 0;
  for (const LayoutEntry& e : w.layout) expected += e.size();
  if (count != expected) throw ShapeError("checkpoint: value count disagrees with layout");
  w.values.resize(count);
  for (double& v : w.values) v = le::get_f64(in);
  return w;
}

void save_checkpoint(const std::filesystem::path& path, const FlatWeights& weights) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("checkpoint: cannot open " + path.string());
  write_checkpoint(out, weights);
}

FlatWeights load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace fran
