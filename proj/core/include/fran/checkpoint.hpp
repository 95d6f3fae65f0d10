#pragma once

// Binary weight checkpoint. All integers and floats little-endian:
//
//   char[4]  magic "FRNN"
//   u32      format version (1)
//   u32      layer count L
//   L x { u64 rows, u64 cols, u64 offset, u8 activation }
//   u64      value count V
//   V x f64  values

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "fran/nn.hpp"

namespace fran {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const FlatWeights& weights);
/// Throws ShapeError on a malformed or truncated stream.
FlatWeights read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const FlatWeights& weights);
FlatWeights load_checkpoint(const std::filesystem::path& path);

namespace le {
void put_u8(std::ostream& out, std::uint8_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
std::uint8_t get_u8(std::istream& in);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
}  // namespace le

}  // namespace fran
