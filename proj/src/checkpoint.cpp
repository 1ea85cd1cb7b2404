// SPDX-License-Identifier: Apache-2.0
#include "dpl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>

namespace dpl::inline DPL_PRECISION_NS {
namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<unsigned char> take() { return std::move(out_); }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error(std::string("checkpoint truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_checkpoint(const NamedTensors& bundle) {
  Writer w;
  w.bytes("DPLC", 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(bundle.size()));
  // std::map iterates in lexicographic (byte-wise) key order.
  for (const auto& [name, tensor] : bundle) {
    if (name.empty()) throw std::invalid_argument("checkpoint: tensor names must be non-empty");
    if (name.size() > std::numeric_limits<std::uint16_t>::max())
      throw std::invalid_argument("checkpoint: tensor name too long: " + name.substr(0, 64) + "...");
    if (!tensor.defined()) throw std::invalid_argument("checkpoint: tensor '" + name + "' is undefined");
    if (tensor.rank() > std::numeric_limits<std::uint8_t>::max())
      throw std::invalid_argument("checkpoint: tensor '" + name + "' has too many dimensions");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(static_cast<std::uint8_t>(tensor.rank()));
    for (auto d : tensor.shape()) {
      if (d > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("checkpoint: dimension of '" + name + "' exceeds u32");
      w.u32(static_cast<std::uint32_t>(d));
    }
    for (real v : tensor.data()) w.f32(static_cast<float>(v));
  }
  return w.take();
}

NamedTensors decode_checkpoint(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != "DPLC") throw std::runtime_error("checkpoint: bad magic");
  const auto version = r.u32("version");
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  const auto count = r.u32("tensor count");
  NamedTensors bundle;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.u16("name length");
    auto name = r.str(len, "name");
    if (name.empty()) throw std::runtime_error("checkpoint: empty tensor name");
    if (bundle.contains(name)) throw std::runtime_error("checkpoint: duplicate tensor name '" + name + "'");
    const auto rank = r.u8("rank");
    Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = r.u32("dimension");
      if (d == 0) throw std::runtime_error("checkpoint: tensor '" + name + "' has a zero dimension");
      numel *= d;
    }
    r.need(numel * 4, "payload");
    std::vector<real> values(numel);
    for (auto& v : values) v = static_cast<real>(r.f32("payload"));
    bundle.emplace(std::move(name), Tensor::from_data(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) throw std::runtime_error("checkpoint: trailing bytes after last tensor");
  return bundle;
}

void save_checkpoint(const NamedTensors& bundle, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path.string() + "'");
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace dpl::inline DPL_PRECISION_NS
