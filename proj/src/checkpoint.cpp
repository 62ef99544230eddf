#include "qtl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace qtl {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'L', 'C'};

void put_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t take_u32(const unsigned char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

}  // namespace

const TensorF& LoadedCheckpoint::get(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.tensor;
  throw CheckpointError("checkpoint is missing tensor '" + name + "'");
}

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, const TensorF*>>& tensors) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& [name, tensor] : tensors) {
    records.push_back(
        {{"name", name}, {"shape", tensor->shape}, {"dtype", "f32"}});
  }
  const std::string header = nlohmann::json{{"meta", meta}, {"tensors", records}}.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, tensor] : tensors) {
    out.write(reinterpret_cast<const char*>(tensor->values.data()),
              static_cast<std::streamsize>(tensor->values.size() * sizeof(float)));
  }
  if (!out) throw CheckpointError("short write while saving checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw CheckpointError("corrupt checkpoint (truncated header): " + path);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CheckpointError("corrupt checkpoint (bad magic): " + path);
  const uint32_t version = take_u32(bytes.data() + 4);
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint format version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) +
                          ")");
  const uint32_t header_len = take_u32(bytes.data() + 8);
  if (bytes.size() < 12 + static_cast<size_t>(header_len))
    throw CheckpointError("corrupt checkpoint (header overruns file): " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint (header is not JSON): ") + e.what());
  }

  LoadedCheckpoint ckpt;
  try {
    ckpt.meta = header.at("meta");
    size_t offset = 12 + header_len;
    size_t expected_bytes = 0;
    for (const auto& rec : header.at("tensors")) {
      const Shape shape = rec.at("shape").get<Shape>();
      int64_t count = 1;
      for (int64_t d : shape) {
        if (d <= 0 || d > (int64_t(1) << 32) || count > (int64_t(1) << 40))
          throw CheckpointError("corrupt checkpoint (implausible tensor shape)");
        count *= d;
      }
      expected_bytes += static_cast<size_t>(count) * sizeof(float);
    }
    if (bytes.size() - offset != expected_bytes)
      throw CheckpointError("corrupt checkpoint (tensor bytes " +
                            std::to_string(bytes.size() - offset) + " != header total " +
                            std::to_string(expected_bytes) + ")");
    for (const auto& rec : header.at("tensors")) {
      if (rec.at("dtype").get<std::string>() != "f32")
        throw CheckpointError("unsupported tensor dtype in checkpoint");
      NamedTensor nt;
      nt.name = rec.at("name").get<std::string>();
      const Shape shape = rec.at("shape").get<Shape>();
      nt.tensor = TensorF(shape);
      std::memcpy(nt.tensor.values.data(), bytes.data() + offset,
                  nt.tensor.values.size() * sizeof(float));
      offset += nt.tensor.values.size() * sizeof(float);
      ckpt.tensors.push_back(std::move(nt));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint (malformed header): ") + e.what());
  } catch (const DimensionError& e) {
    throw CheckpointError(std::string("corrupt checkpoint (bad tensor shape): ") + e.what());
  }
  return ckpt;
}

}  // namespace qtl
