#include "sgm/param_store.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace sgm::ad {

namespace {

constexpr char kMagic[4] = {'N', 'S', 'I', 'M'};
constexpr uint32_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(std::string buf) : buf_(std::move(buf)) {}
  uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
  uint16_t u16() {
    const char* p = take(2);
    return static_cast<uint16_t>(static_cast<uint8_t>(p[0]) |
                                 (static_cast<uint8_t>(p[1]) << 8));
  }
  uint32_t u32() {
    const char* p = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(p[i])) << (8 * i);
    return v;
  }
  uint64_t u64() {
    const char* p = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(p[i])) << (8 * i);
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string str(size_t n) { return std::string(take(n), n); }
  bool done() const { return pos_ == buf_.size(); }

 private:
  const char* take(size_t n) {
    require(pos_ + n <= buf_.size(), "checkpoint: truncated file");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string buf_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(store.size()));
  for (const auto& [name, e] : store) {
    require(name.size() <= 0xffff, "checkpoint: name too long");
    put_u16(out, static_cast<uint16_t>(name.size()));
    out.append(name);
    out.push_back(static_cast<char>(e.value.rank));
    if (e.value.rank >= 1) put_u64(out, static_cast<uint64_t>(e.value.d0));
    if (e.value.rank == 2) put_u64(out, static_cast<uint64_t>(e.value.d1));
    for (float f : e.value.data) put_f32(out, f);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), "checkpoint: cannot open for write: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(f.good(), "checkpoint: write failed: " + path);
}

void load_checkpoint(ParamStore& store, const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "checkpoint: cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(std::move(buf));
  require(r.str(4) == std::string(kMagic, 4), "checkpoint: bad magic");
  require(r.u32() == kVersion, "checkpoint: unsupported version");
  uint32_t count = r.u32();
  for (uint32_t k = 0; k < count; ++k) {
    uint16_t len = r.u16();
    std::string name = r.str(len);
    uint8_t rank = r.u8();
    require(rank <= 2, "checkpoint: bad rank for " + name);
    Tensor t;
    if (rank == 0) {
      t = Tensor::scalar(0.0f);
    } else if (rank == 1) {
      t = Tensor::vec(static_cast<int>(r.u64()));
    } else {
      uint64_t d0 = r.u64(), d1 = r.u64();
      t = Tensor::mat(static_cast<int>(d0), static_cast<int>(d1));
    }
    for (auto& v : t.data) v = r.f32();
    if (store.has(name)) {
      auto& e = store.at(name);
      require(e.value.same_shape(t), "checkpoint: shape mismatch for " + name);
      e.value = std::move(t);
    } else {
      store.create(name, std::move(t));
    }
  }
  require(r.done(), "checkpoint: trailing bytes");
}

}  // namespace sgm::ad
