// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "attnpool/error.hpp"

namespace attnpool {

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::byte>((v >> shift) & 0xffu));
  }
}

std::uint32_t get_u32(std::span<const std::byte> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace

RepresentationMatrix RepresentationMatrix::from_matrix(const Matrix& m, SourceTag tag) {
  RepresentationMatrix out;
  out.frames = static_cast<std::uint32_t>(m.rows());
  out.width = static_cast<std::uint32_t>(m.cols());
  out.values.reserve(m.size());
  for (double v : m.values()) out.values.push_back(static_cast<float>(v));
  out.tag = std::move(tag);
  return out;
}

Matrix RepresentationMatrix::to_matrix() const {
  std::vector<double> promoted(values.begin(), values.end());
  return Matrix(frames, width, std::move(promoted));
}

std::vector<std::byte> encode_features(const RepresentationMatrix& m) {
  const std::size_t count = static_cast<std::size_t>(m.frames) * m.width;
  if (m.values.size() != count) {
    throw ShapeError("encode_features: header " + std::to_string(m.frames) + "x" +
                     std::to_string(m.width) + " but " + std::to_string(m.values.size()) +
                     " values");
  }
  std::vector<std::byte> out;
  out.reserve(kFeatureHeaderBytes + 4 * count);
  for (char c : kFeatureMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, m.frames);
  put_u32(out, m.width);
  for (std::size_t i = 0; i < count; ++i) {
    const float v = m.values[i];
    if (!std::isfinite(v)) {
      throw ValueError("encode_features: non-finite value at frame " +
                       std::to_string(i / std::max<std::uint32_t>(m.width, 1)) + ", column " +
                       std::to_string(i % std::max<std::uint32_t>(m.width, 1)));
    }
    put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

RepresentationMatrix decode_features(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
    throw FormatError("features: bad magic (expected FEA1)");
  }
  if (bytes.size() < kFeatureHeaderBytes) {
    throw LengthError("features: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  }
  RepresentationMatrix m;
  m.frames = get_u32(bytes, 4);
  m.width = get_u32(bytes, 8);
  const std::uint64_t count = static_cast<std::uint64_t>(m.frames) * m.width;
  const std::uint64_t expected = kFeatureHeaderBytes + 4 * count;
  if (bytes.size() != expected) {
    throw LengthError("features: header declares " + std::to_string(m.frames) + "x" +
                      std::to_string(m.width) + " (" + std::to_string(expected) +
                      " bytes) but file has " + std::to_string(bytes.size()) + " bytes");
  }
  m.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    m.values[i] = std::bit_cast<float>(get_u32(bytes, kFeatureHeaderBytes + 4 * i));
  }
  return m;
}

void write_features(const RepresentationMatrix& m, const std::filesystem::path& path) {
  const auto bytes = encode_features(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

RepresentationMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_features(std::as_bytes(std::span<const char>(raw)));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const LengthError& e) {
    throw LengthError(path.string() + ": " + e.what());
  }
}

}  // namespace attnpool
