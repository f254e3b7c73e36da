#include "grec/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace grec {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buffer_.insert(buffer_.end(), p, p + n);
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void text(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::vector<char>& buffer() const { return buffer_; }

 private:
  std::vector<char> buffer_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> data) : data_(std::move(data)) {}

  void bytes(void* out, std::size_t n) {
    if (n > data_.size() - pos_) throw CheckpointError("checkpoint is truncated or corrupt");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string text() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Model<float>& model, const std::string& path) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.text(model.config().to_text());
  w.u32(static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    w.text(p.name);
    w.u32(static_cast<std::uint32_t>(p.tensor.rank()));
    for (auto extent : p.tensor.shape()) w.u64(extent);
    w.bytes(p.tensor.data().data(), p.tensor.size() * sizeof(float));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw CheckpointError("failed writing checkpoint: " + path);
}

Model<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

  char magic[sizeof kCheckpointMagic];
  r.bytes(magic, sizeof magic);
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kCheckpointMagic))) {
    throw CheckpointError(path + " is not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig config;
  try {
    config = ModelConfig::from_text(r.text());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  Model<float> model(config, 0);

  const std::uint32_t count = r.u32();
  if (count != model.params().size()) {
    throw CheckpointError("checkpoint has " + std::to_string(count) + " tensors, config implies " +
                          std::to_string(model.params().size()));
  }
  for (auto& p : model.params()) {
    const std::string name = r.text();
    if (name != p.name) throw CheckpointError("checkpoint tensor '" + name + "' where '" + p.name + "' was expected");
    const std::uint32_t rank = r.u32();
    if (rank != p.tensor.rank()) throw CheckpointError("rank mismatch for " + name);
    Shape shape(rank);
    for (auto& extent : shape) extent = r.u64();
    if (shape != p.tensor.shape()) {
      throw CheckpointError("shape mismatch for " + name + ": file " + shape_string(shape) +
                            ", config " + shape_string(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    r.bytes(dst.data(), dst.size() * sizeof(float));
  }
  if (!r.at_end()) throw CheckpointError("trailing bytes after the last checkpoint record");
  return model;
}

}  // namespace grec
