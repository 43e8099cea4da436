// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "arrivalnet/model.hpp"

namespace arrivalnet {

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
};

/// Binary format: magic "ARRIVALNET/1", u32-LE config JSON length + JSON, then
/// one block per named parameter (u32 name length, name bytes, u32 ndim, u32
/// dims, f32-LE payload), then CRC32 of all payload bytes.
void save_checkpoint(const ModelConfig& cfg, const ModelParams& params, const std::string& path);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace arrivalnet
