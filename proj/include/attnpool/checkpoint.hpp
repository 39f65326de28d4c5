// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "attnpool/model.hpp"

namespace attnpool {

// A checkpoint is a directory holding `model.txt` (config plus one line per
// parameter: name, rows, cols, file) and one FEA1 file per parameter matrix.
// Values are stored in single precision, so save(load(save(m))) reproduces
// the same bytes and load(save(m)) equals m rounded to float.

void save_checkpoint(const HeadModel& model, const std::filesystem::path& dir);
/// Throws FormatError on a malformed config and ShapeError when a stored
/// matrix disagrees with the config.
HeadModel load_checkpoint(const std::filesystem::path& dir);

}  // namespace attnpool
