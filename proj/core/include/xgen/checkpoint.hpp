#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/layers.hpp"

namespace xgen {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t v);

/// Stable fingerprint of a JSON document (hex FNV-1a of its compact dump;
/// object keys are sorted by nlohmann::json).
std::string fingerprint(const nlohmann::json& j);

struct Blob {
  std::string name;
  Shape shape;
  std::vector<double> values;

  bool operator==(const Blob&) const = default;
};

/// On-disk layout (little-endian):
///
///   "XGENCKPT" | u32 format_version | u64 header_len | header JSON
///   u64 blob_count | { u32 name_len | name | u32 ndim | u64 dims[ndim] |
///                      u64 count | f64 values[count] }*
///   u64 FNV-1a checksum of every preceding byte
///
/// The header carries at least "fingerprint" and "seed".
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  nlohmann::json header;
  std::vector<Blob> blobs;

  const Blob& blob(std::string_view name) const;
  bool has_blob(std::string_view name) const;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws IntegrityError on bad magic, version, checksum or fingerprint mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_fingerprint = std::nullopt);

/// Copies parameter values into blobs under their names.
void add_params(Checkpoint& ckpt, const NamedParams& params);
/// Restores values in place; shapes must match exactly.
void restore_params(const Checkpoint& ckpt, const NamedParams& params);

}  // namespace xgen
