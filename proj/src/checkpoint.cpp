#include "probe/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace probe {
namespace {

constexpr char kMagic[8] = {'P', 'R', 'O', 'B', 'E', 'C', 'K', 'P'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  std::uint64_t u64() { return read(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("checkpoint is truncated");
  }
  std::uint64_t read(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  const std::string manifest = ckpt.manifest.to_string();
  put_u64(out, manifest.size());
  out += manifest;
  put_u32(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& [name, values] : ckpt.arrays) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u64(out, values.size());
    for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw std::runtime_error("not a checkpoint file");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.manifest = KvDocument::parse(r.str(r.u64()));
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = r.str(r.u32());
    const std::uint64_t count = r.u64();
    if (count > bytes.size() / 8) throw std::runtime_error("checkpoint array size is corrupt");
    std::vector<double> values(count);
    for (auto& v : values) v = std::bit_cast<double>(r.u64());
    ckpt.arrays.emplace(name, std::move(values));
  }
  if (!r.done()) throw std::runtime_error("trailing bytes after checkpoint");
  return ckpt;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  // Write-then-rename so an interrupted run never leaves a torn checkpoint.
  const std::string tmp = path + ".tmp";
  if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    const std::string bytes = serialize_checkpoint(ckpt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

Checkpoint model_checkpoint(const MindModel& model) {
  Checkpoint ckpt;
  ckpt.manifest = model.config().to_kv();
  ckpt.manifest.set("format_version", static_cast<long long>(kCheckpointVersion));
  for (const auto& p : model.params().all()) ckpt.arrays[p.name] = p.value;
  return ckpt;
}

MindModel load_model(const Checkpoint& ckpt) {
  KvDocument cfg;
  for (const auto& [k, v] : ckpt.manifest.entries()) {
    if (ModelConfig{}.to_kv().contains(k)) cfg.set(k, v);
  }
  MindModel model(ModelConfig::from_kv(cfg), 0);
  restore_blocks(model, ckpt, {Block::Tracker, Block::Demo, Block::Learner, Block::Value});
  return model;
}

void restore_blocks(MindModel& model, const Checkpoint& ckpt, const std::vector<Block>& blocks) {
  for (auto& p : model.params().all()) {
    if (std::find(blocks.begin(), blocks.end(), p.block) == blocks.end()) continue;
    const auto it = ckpt.arrays.find(p.name);
    if (it == ckpt.arrays.end()) throw std::runtime_error("checkpoint lacks parameter " + p.name);
    if (it->second.size() != p.value.size()) {
      throw std::runtime_error("checkpoint parameter " + p.name + " has the wrong size");
    }
    p.value = it->second;
  }
}

}  // namespace probe
