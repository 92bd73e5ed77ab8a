#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "advtex/classifier.hpp"
#include "advtex/digest.hpp"
#include "advtex/errors.hpp"

namespace advtex {

// Layout, all little-endian:
//   magic "ADVTEXW1" | sha256(spec.canonical()) | u32 n_classes | u32 weight count
//   | f32 weights... | sha256 of every preceding byte
inline constexpr std::array<std::uint8_t, 8> kWeightMagic{'A', 'D', 'V', 'T', 'E', 'X', 'W', '1'};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_weights(const ClassifierModel<float>& model) {
  std::vector<std::uint8_t> out(kWeightMagic.begin(), kWeightMagic.end());
  const Digest spec_hash = sha256(model.spec().canonical());
  out.insert(out.end(), spec_hash.begin(), spec_hash.end());
  detail::put_u32(out, static_cast<std::uint32_t>(model.n_classes()));
  detail::put_u32(out, static_cast<std::uint32_t>(model.weights().size()));
  for (float w : model.weights()) detail::put_u32(out, std::bit_cast<std::uint32_t>(w));
  const Digest checksum = sha256(out);
  out.insert(out.end(), checksum.begin(), checksum.end());
  return out;
}

/// Decodes a weight file for the standard architecture with the stored class
/// count, or for `expected` when given.
inline ClassifierModel<float> decode_weights(const std::vector<std::uint8_t>& bytes,
                                             const ClassifierSpec* expected = nullptr) {
  constexpr std::size_t header = 8 + 32 + 4 + 4;
  if (bytes.size() < header + 32 ||
      !std::equal(kWeightMagic.begin(), kWeightMagic.end(), bytes.begin())) {
    fail(ErrorCode::ChecksumMismatch, "not an advtex weight file");
  }
  const std::size_t body = bytes.size() - 32;
  const Digest actual = sha256(std::span(bytes.data(), body));
  if (!std::equal(actual.begin(), actual.end(), bytes.begin() + body)) {
    fail(ErrorCode::ChecksumMismatch, "weight file checksum mismatch");
  }
  const std::uint32_t n_classes = detail::get_u32(bytes.data() + 40);
  const std::uint32_t count = detail::get_u32(bytes.data() + 44);
  if (body != header + static_cast<std::size_t>(count) * 4) {
    fail(ErrorCode::ChecksumMismatch, "weight file length disagrees with its header");
  }
  ClassifierSpec spec = expected ? *expected : ClassifierSpec::standard(static_cast<int>(n_classes));
  const Digest spec_hash = sha256(spec.canonical());
  if (!std::equal(spec_hash.begin(), spec_hash.end(), bytes.begin() + 8) ||
      static_cast<int>(n_classes) != spec.n_classes) {
    fail(ErrorCode::SpecMismatch, "weight file was written for a different architecture");
  }
  ClassifierModel<float> model(spec);
  if (model.weights().size() != count) {
    fail(ErrorCode::SpecMismatch, "weight count does not match the architecture");
  }
  auto w = model.weights();
  for (std::size_t i = 0; i < count; ++i) {
    w[i] = std::bit_cast<float>(detail::get_u32(bytes.data() + header + 4 * i));
  }
  return model;
}

inline void save_weights(const ClassifierModel<float>& model, const std::filesystem::path& path) {
  const auto bytes = encode_weights(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write weights: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write: " + path.string());
}

inline ClassifierModel<float> load_weights(const std::filesystem::path& path,
                                           const ClassifierSpec* expected = nullptr) {
  return decode_weights(read_file_bytes(path), expected);
}

/// Short identifier derived from the weight checksum.
inline std::string classifier_id(const ClassifierModel<float>& model) {
  const auto bytes = encode_weights(model);
  return "clf-" + to_hex(std::span(bytes.data() + bytes.size() - 32, 4));
}

}  // namespace advtex
