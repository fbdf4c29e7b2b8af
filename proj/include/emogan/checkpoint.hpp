#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "json.hpp"

#include "emogan/mlp.hpp"

namespace emogan {

// Network container layout (all integers and doubles little-endian):
//   "EMGN"            4-byte magic
//   version           1 byte (kCheckpointVersion)
//   header_size       uint32
//   header            UTF-8 JSON: layer dims, activation tags, has_momentum,
//                     plus caller metadata (seed, config) under "meta"
//   per layer         weight (in*out doubles, row-major), bias (out doubles),
//                     then the same two blocks for momentum when present
inline constexpr std::uint8_t kCheckpointVersion = 1;

void write_network(std::ostream& out, const Mlp& net,
                   const nlohmann::json& meta = nlohmann::json::object());
Mlp read_network(std::istream& in, nlohmann::json* meta = nullptr);

void save_network(const std::filesystem::path& path, const Mlp& net,
                  const nlohmann::json& meta = nlohmann::json::object());
Mlp load_network(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

namespace detail {
void write_u32(std::ostream& out, std::uint32_t v);
std::uint32_t read_u32(std::istream& in);
void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);
void write_header(std::ostream& out, const char (&magic)[5], const nlohmann::json& header);
nlohmann::json read_header(std::istream& in, const char (&magic)[5]);
}  // namespace detail

}  // namespace emogan
