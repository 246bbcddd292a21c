#include "xgen/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "xgen/error.hpp"

namespace xgen {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text) {
  return fnv1a64(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string fingerprint(const nlohmann::json& j) { return hex64(fnv1a64(j.dump())); }

const Blob& Checkpoint::blob(std::string_view name) const {
  for (const auto& b : blobs)
    if (b.name == name) return b;
  throw IntegrityError("checkpoint: missing parameter blob '" + std::string(name) + "'");
}

bool Checkpoint::has_blob(std::string_view name) const {
  return std::any_of(blobs.begin(), blobs.end(), [&](const Blob& b) { return b.name == name; });
}

namespace {

constexpr char kMagic[8] = {'X', 'G', 'E', 'N', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf.insert(buf.end(), p, p + n);
  }
  std::vector<std::uint8_t> buf;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : data(b) {}
  template <typename T>
  T pod() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, data.data() + pos, n);
    pos += n;
  }
  void need(std::size_t n) const {
    if (pos + n > data.size()) throw IntegrityError("checkpoint: truncated file");
  }
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.pod<std::uint32_t>(Checkpoint::kFormatVersion);
  const std::string header = ckpt.header.dump();
  w.pod<std::uint64_t>(header.size());
  w.bytes(header.data(), header.size());
  w.pod<std::uint64_t>(ckpt.blobs.size());
  for (const auto& b : ckpt.blobs) {
    if (shape_numel(b.shape) != b.values.size())
      throw ContractError("checkpoint: blob '" + b.name + "' shape does not match its values");
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(b.name.size()));
    w.bytes(b.name.data(), b.name.size());
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(b.shape.size()));
    for (auto d : b.shape) w.pod<std::uint64_t>(d);
    w.pod<std::uint64_t>(b.values.size());
    w.bytes(b.values.data(), b.values.size() * sizeof(double));
  }
  w.pod<std::uint64_t>(fnv1a64(w.buf));
  return std::move(w.buf);
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw IntegrityError("checkpoint: bad magic");
  const auto body = bytes.first(bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  Reader r(body);
  r.pos = sizeof(kMagic);
  const auto version = r.pod<std::uint32_t>();
  if (version != Checkpoint::kFormatVersion)
    throw IntegrityError("checkpoint: unsupported format_version " + std::to_string(version));
  if (fnv1a64(body) != stored) throw IntegrityError("checkpoint: checksum mismatch (file corrupt)");
  Checkpoint ckpt;
  const auto header_len = r.pod<std::uint64_t>();
  std::string header(header_len, '\0');
  r.bytes(header.data(), header_len);
  try {
    ckpt.header = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint: bad header: ") + e.what());
  }
  const auto count = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    Blob b;
    const auto name_len = r.pod<std::uint32_t>();
    b.name.resize(name_len);
    r.bytes(b.name.data(), name_len);
    const auto ndim = r.pod<std::uint32_t>();
    for (std::uint32_t d = 0; d < ndim; ++d) b.shape.push_back(r.pod<std::uint64_t>());
    const auto n = r.pod<std::uint64_t>();
    if (shape_numel(b.shape) != n) throw IntegrityError("checkpoint: blob '" + b.name + "' has inconsistent shape");
    b.values.resize(n);
    r.bytes(b.values.data(), n * sizeof(double));
    ckpt.blobs.push_back(std::move(b));
  }
  if (r.pos != body.size()) throw IntegrityError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Checkpoint ckpt = deserialize_checkpoint(bytes);
  if (expected_fingerprint) {
    const auto got = ckpt.header.value("fingerprint", std::string{});
    if (got != *expected_fingerprint)
      throw IntegrityError("checkpoint " + path.string() + ": fingerprint " + got + " does not match expected " +
                           *expected_fingerprint);
  }
  return ckpt;
}

void add_params(Checkpoint& ckpt, const NamedParams& params) {
  for (const auto& [name, t] : params) ckpt.blobs.push_back({name, t.shape(), {t.data().begin(), t.data().end()}});
}

void restore_params(const Checkpoint& ckpt, const NamedParams& params) {
  for (const auto& [name, t] : params) {
    const Blob& b = ckpt.blob(name);
    if (b.shape != t.shape())
      throw IntegrityError("checkpoint: blob '" + name + "' has shape " + shape_str(b.shape) + ", model expects " +
                           shape_str(t.shape()));
    Tensor dst = t;
    std::copy(b.values.begin(), b.values.end(), dst.mutable_data().begin());
  }
}

}  // namespace xgen
