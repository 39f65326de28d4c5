// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "attnpool/matrix.hpp"

namespace attnpool {

/// Where a representation came from. Not persisted in the file itself; the
/// manifest carries this information.
struct SourceTag {
  std::string model_size;  // "tiny", "small", or empty for synthetic data
  int layer = 0;
  std::string utterance_id;
};

/// Frames x width encoder output for one utterance, stored in single
/// precision exactly as it sits on disk.
struct RepresentationMatrix {
  std::uint32_t frames = 0;
  std::uint32_t width = 0;
  std::vector<float> values;  // frame-major
  SourceTag tag;

  /// Rounds each entry to float.
  static RepresentationMatrix from_matrix(const Matrix& m, SourceTag tag = {});
  /// Promotes to double.
  Matrix to_matrix() const;

  friend bool operator==(const RepresentationMatrix& a, const RepresentationMatrix& b) {
    return a.frames == b.frames && a.width == b.width && a.values == b.values;
  }
};

// FEA1 layout (little-endian):
//   bytes 0..3   magic "FEA1"
//   bytes 4..7   uint32 frames
//   bytes 8..11  uint32 width
//   then frames*width IEEE-754 binary32 values, frame-major. No padding or footer.
inline constexpr char kFeatureMagic[4] = {'F', 'E', 'A', '1'};
inline constexpr std::size_t kFeatureHeaderBytes = 12;

/// Throws ValueError on non-finite entries, ShapeError when values.size() !=
/// frames*width.
std::vector<std::byte> encode_features(const RepresentationMatrix& m);
/// Throws FormatError on a bad magic and LengthError when the payload length
/// does not match the header.
RepresentationMatrix decode_features(std::span<const std::byte> bytes);

void write_features(const RepresentationMatrix& m, const std::filesystem::path& path);
RepresentationMatrix read_features(const std::filesystem::path& path);

}  // namespace attnpool
