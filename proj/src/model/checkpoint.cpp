#include "finclass/model/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "finclass/error.hpp"

namespace finclass::model {

namespace {

constexpr char kMagic[4] = {'F', 'N', 'E', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t end)
      : bytes_(bytes), end_(end) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw CorruptionError("checkpoint payload truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 8;
};

}  // namespace

std::vector<std::uint8_t> serialize(const Network& network) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  const std::string arch = network.architecture().render();
  put_u32(out, static_cast<std::uint32_t>(arch.size()));
  out.insert(out.end(), arch.begin(), arch.end());

  const auto params = network.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* t : params) {
    put_u32(out, static_cast<std::uint32_t>(t->rank()));
    for (auto d : t->shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t->data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  put_u32(out, crc32_of(out.data(), out.size()));
  return out;
}

Network deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a checkpoint: bad magic");
  }
  if (bytes.size() < 16) throw CorruptionError("checkpoint truncated");
  const std::uint32_t version = bytes[4] | (bytes[5] << 8) | (bytes[6] << 16) |
                                (static_cast<std::uint32_t>(bytes[7]) << 24);
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  if (stored != crc32_of(bytes.data(), body)) {
    throw CorruptionError("checkpoint CRC mismatch");
  }

  Reader in(bytes, body);
  const auto arch_len = in.u32();
  Network net = [&] {
    try {
      return Network(parse_architecture(in.text(arch_len)));
    } catch (const InvalidShape& e) {
      throw FormatError(std::string("checkpoint architecture invalid: ") + e.what());
    }
  }();
  auto params = net.parameters();
  if (in.u32() != params.size()) {
    throw CorruptionError("checkpoint tensor count does not match architecture");
  }
  for (auto* t : params) {
    const auto rank = in.u32();
    nn::Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(in.u32());
    if (shape != t->shape()) {
      throw CorruptionError("checkpoint tensor shape " + nn::to_string(shape) +
                            " does not match expected " + nn::to_string(t->shape()));
    }
    for (auto& v : t->data()) v = std::bit_cast<float>(in.u32());
  }
  if (!in.done()) throw CorruptionError("checkpoint has trailing bytes");
  return net;
}

void save_checkpoint(const Network& network, const std::filesystem::path& path) {
  const auto bytes = serialize(network);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return deserialize(bytes);
}

}  // namespace finclass::model
