#include "dialogctl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dialogctl {

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'L', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  std::uint64_t raw;
  if constexpr (std::is_same_v<T, double>)
    raw = std::bit_cast<std::uint64_t>(value);
  else
    raw = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<char>((raw >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("checkpoint truncated");
  std::uint64_t raw = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    raw |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>)
    return std::bit_cast<double>(raw);
  else
    return static_cast<T>(raw);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& p) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.kind));
  put_le<std::uint64_t>(out, p.input_dim);
  put_le<std::uint64_t>(out, p.hidden_dim);
  put_le<std::uint64_t>(out, p.n_actions);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensors.size()));
  for (const auto& t : p.tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_le<std::uint64_t>(out, d);
    for (double v : t.values) put_le<double>(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

ModelParams read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not a checkpoint (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  const auto kind_raw = get_le<std::uint32_t>(in);
  if (kind_raw > 2) throw std::runtime_error("checkpoint has unknown model kind");
  const auto kind = static_cast<ModelKind>(kind_raw);
  const auto D = get_le<std::uint64_t>(in);
  const auto H = get_le<std::uint64_t>(in);
  const auto A = get_le<std::uint64_t>(in);
  constexpr std::uint64_t kMaxModelDim = 1 << 20;
  if (D == 0 || H == 0 || A == 0 || D > kMaxModelDim || H > kMaxModelDim ||
      A > kMaxModelDim)
    throw std::runtime_error("checkpoint header has implausible dimensions");

  // Build the expected layout and fill it, so a file can never produce a
  // model whose tensors disagree with its header.
  ModelParams p = zeros_like(init_model(kind, D, H, A, 0));
  const auto count = get_le<std::uint32_t>(in);
  if (count != p.tensors.size())
    throw std::runtime_error("checkpoint tensor count does not match model kind");
  for (auto& t : p.tensors) {
    const auto name_len = get_le<std::uint32_t>(in);
    if (name_len > 256) throw std::runtime_error("checkpoint tensor name too long");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in || name != t.name)
      throw std::runtime_error("checkpoint tensor '" + name + "' where '" + t.name +
                               "' was expected");
    const auto rank = get_le<std::uint32_t>(in);
    if (rank != t.shape.size())
      throw std::runtime_error("checkpoint tensor " + name + " has wrong rank");
    for (auto expected : t.shape) {
      const auto d = get_le<std::uint64_t>(in);
      if (d != expected || d >= kMaxDim)
        throw std::runtime_error("checkpoint tensor " + name + " has wrong shape");
    }
    for (double& v : t.values) v = get_le<double>(in);
  }
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, params);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

std::string checkpoint_bytes(const ModelParams& params) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, params);
  return out.str();
}

}  // namespace dialogctl
