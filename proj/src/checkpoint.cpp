#include "emogan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "emogan/errors.hpp"

namespace emogan {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace detail {

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("checkpoint: truncated");
  return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("checkpoint: truncated");
  return v;
}

void write_header(std::ostream& out, const char (&magic)[5], const nlohmann::json& header) {
  out.write(magic, 4);
  out.put(static_cast<char>(kCheckpointVersion));
  const std::string text = header.dump();
  write_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

nlohmann::json read_header(std::istream& in, const char (&magic)[5]) {
  char got[4] = {};
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw ParseError(std::string("checkpoint: bad magic, expected ") + magic);
  }
  const int version = in.get();
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t size = read_u32(in);
  std::string text(size, '\0');
  if (!in.read(text.data(), size)) throw ParseError("checkpoint: truncated header");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: malformed header: ") + e.what());
  }
}

}  // namespace detail

namespace {

template <typename Block>
void write_block(std::ostream& out, const Block& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

template <typename Block>
void read_block(std::istream& in, Block& m) {
  if (!in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())))) {
    throw ParseError("checkpoint: truncated parameter block");
  }
}

}  // namespace

void write_network(std::ostream& out, const Mlp& net, const nlohmann::json& meta) {
  nlohmann::json header;
  header["layers"] = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    header["layers"].push_back({{"in", l.input_dim()},
                                {"out", l.output_dim()},
                                {"activation", std::string(to_string(l.activation))}});
  }
  header["has_momentum"] = true;
  header["meta"] = meta;
  detail::write_header(out, "EMGN", header);
  for (const auto& l : net.layers()) {
    write_block(out, l.weight);
    write_block(out, l.bias);
    write_block(out, l.weight_velocity);
    write_block(out, l.bias_velocity);
  }
  if (!out) throw Error("checkpoint: write failed");
}

Mlp read_network(std::istream& in, nlohmann::json* meta) {
  const nlohmann::json header = detail::read_header(in, "EMGN");
  std::vector<Layer> layers;
  const bool has_momentum = header.value("has_momentum", false);
  try {
    for (const auto& spec : header.at("layers")) {
      const int rows = spec.at("in").get<int>();
      const int cols = spec.at("out").get<int>();
      if (rows <= 0 || cols <= 0) throw ParseError("checkpoint: non-positive layer size");
      Layer l;
      l.activation = activation_from_string(spec.at("activation").get<std::string>());
      l.weight = Matrix(rows, cols);
      l.bias = RowVector(cols);
      l.weight_velocity = Matrix::Zero(rows, cols);
      l.bias_velocity = RowVector::Zero(cols);
      read_block(in, l.weight);
      read_block(in, l.bias);
      if (has_momentum) {
        read_block(in, l.weight_velocity);
        read_block(in, l.bias_velocity);
      }
      layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: malformed layer table: ") + e.what());
  }
  if (meta != nullptr) *meta = header.value("meta", nlohmann::json::object());
  return Mlp::from_layers(std::move(layers));
}

void save_network(const std::filesystem::path& path, const Mlp& net, const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot open " + path.string() + " for writing");
  write_network(out, net, meta);
}

Mlp load_network(const std::filesystem::path& path, nlohmann::json* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("checkpoint: cannot open " + path.string());
  return read_network(in, meta);
}

}  // namespace emogan
