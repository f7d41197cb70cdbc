#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sga/corpus_io.hpp"
#include "sga/optim.hpp"

namespace sga {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout: "SGAW", u32 version, u32 parameter count, then per parameter:
// u16 name length, name, u32 rank, u64 dims[rank], f32 payload (little-endian).
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ckpt_detail {
template <class U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}
template <class U>
U get(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw CheckpointError("checkpoint: truncated");
  U v;
  std::memcpy(&v, in.data() + pos, sizeof(U));
  pos += sizeof(U);
  return v;
}
}  // namespace ckpt_detail

inline std::string serialize_checkpoint(const ad::ParamSet<float>& params) {
  using ckpt_detail::put;
  std::string out = "SGAW";
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    put(out, static_cast<std::uint16_t>(p.name.size()));
    out += p.name;
    put(out, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) put(out, static_cast<std::uint64_t>(d));
    out.append(reinterpret_cast<const char*>(p.value.data()), p.value.size() * sizeof(float));
  }
  return out;
}

/// Load values into an already-constructed parameter set; names, order and
/// shapes must match.
inline void deserialize_checkpoint(std::string_view bytes, ad::ParamSet<float>& params) {
  using ckpt_detail::get;
  if (bytes.size() < 4 || bytes.substr(0, 4) != "SGAW") throw CheckpointError("checkpoint: bad magic");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = get<std::uint32_t>(bytes, pos);
  if (count != params.size())
    throw CheckpointError("checkpoint: holds " + std::to_string(count) + " parameters, model has " +
                          std::to_string(params.size()));
  std::vector<Tensor<float>> values;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint16_t>(bytes, pos);
    if (pos + len > bytes.size()) throw CheckpointError("checkpoint: truncated");
    const std::string name(bytes.substr(pos, len));
    pos += len;
    if (name != params[i].name)
      throw CheckpointError("checkpoint: parameter " + std::to_string(i) + " is '" + name + "', model expects '" +
                            params[i].name + "'");
    const auto rank = get<std::uint32_t>(bytes, pos);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::size_t>(get<std::uint64_t>(bytes, pos)));
    if (shape != params[i].value.shape())
      throw CheckpointError("checkpoint: '" + name + "' has shape " + shape_str(shape) + ", model expects " +
                            shape_str(params[i].value.shape()));
    const std::size_t n = shape_size(shape);
    if (pos + n * sizeof(float) > bytes.size()) throw CheckpointError("checkpoint: truncated payload for '" + name + "'");
    std::vector<float> v(n);
    std::memcpy(v.data(), bytes.data() + pos, n * sizeof(float));
    pos += n * sizeof(float);
    values.emplace_back(shape, std::move(v));
  }
  if (pos != bytes.size()) throw CheckpointError("checkpoint: trailing bytes");
  params.restore(values);
}

inline void save_checkpoint(const std::filesystem::path& path, const ad::ParamSet<float>& params) {
  write_file_atomic(path, serialize_checkpoint(params));
}

inline void load_checkpoint(const std::filesystem::path& path, ad::ParamSet<float>& params) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const CorpusError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  deserialize_checkpoint(bytes, params);
}

/// Sidecar holding the full resolved config next to a checkpoint.
inline std::filesystem::path config_sidecar(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".config";
  return p;
}

}  // namespace sga
