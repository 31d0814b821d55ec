#include "ddlab/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ddlab/errors.hpp"

namespace ddlab {

namespace {

constexpr std::string_view kMagic = "ddlab-params";

std::uint64_t to_little_endian(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) {
      r = (r << 8) | ((x >> (8 * i)) & 0xFF);
    }
    return r;
  } else {
    return x;
  }
}

std::string field(const std::string& token, std::string_view key) {
  if (token.rfind(std::string(key) + "=", 0) != 0) {
    throw UsageError("checkpoint header: expected '" + std::string(key) + "=' but got '" + token + "'");
  }
  return token.substr(key.size() + 1);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params) {
  const Architecture arch = params.architecture();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  std::string widths = arch.label();
  for (char& c : widths) {
    if (c == '-') c = ',';
  }
  out << kMagic << " v1 input=" << arch.input_dim << " hidden=" << widths
      << " actions=" << arch.action_dim << " count=" << params.size() << '\n';
  for (auto block : params.blocks()) {
    for (double x : block) {
      const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(x));
      char bytes[8];
      std::memcpy(bytes, &bits, sizeof bits);
      out.write(bytes, sizeof bytes);
    }
  }
  if (!out) {
    throw std::runtime_error("failed writing checkpoint " + path.string());
  }
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint " + path.string());
  }
  std::string header;
  std::getline(in, header);
  std::istringstream tokens(header);
  std::string magic, version, input, hidden, actions, count;
  tokens >> magic >> version >> input >> hidden >> actions >> count;
  if (magic != kMagic || version != "v1") {
    throw UsageError("not a ddlab parameter checkpoint: " + path.string());
  }
  Architecture arch;
  arch.input_dim = std::stoi(field(input, "input"));
  arch.hidden_widths = parse_widths(field(hidden, "hidden"));
  arch.action_dim = std::stoi(field(actions, "actions"));
  NetworkParams params = NetworkParams::zeros(arch);
  if (std::stoull(field(count, "count")) != params.size()) {
    throw UsageError("checkpoint value count does not match its architecture");
  }
  for (auto block : params.blocks()) {
    for (double& x : block) {
      char bytes[8];
      if (!in.read(bytes, sizeof bytes)) {
        throw UsageError("checkpoint truncated: " + path.string());
      }
      std::uint64_t bits = 0;
      std::memcpy(&bits, bytes, sizeof bits);
      x = std::bit_cast<double>(to_little_endian(bits));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw UsageError("checkpoint has trailing bytes: " + path.string());
  }
  return params;
}

}  // namespace ddlab
