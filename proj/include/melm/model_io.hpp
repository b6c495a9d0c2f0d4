#pragma once

#include <filesystem>
#include <string>

#include "melm/elm.hpp"
#include "melm/ensemble.hpp"

namespace melm {

// Model container, format version 1:
//   magic "ELM1" | u32 LE header length | JSON header | binary blocks.
// Blocks are little-endian float64 in this order: input weights
// (input_dim x units, column per unit), biases (units), connectivity mask
// (one bit per (unit, input) pair, unit-major, LSB first), output weights
// (units x classes, column-major), then RBF centers and widths when the
// header says they exist.
//
// Ensemble container: magic "ELME" | u32 LE header length | JSON header
// (member count, base seed, per-member byte sizes as the index table) |
// concatenated model containers.

std::string serialize_model(const ElmModel& model);
ElmModel deserialize_model(const std::string& bytes);

void save_model(const ElmModel& model, const std::filesystem::path& path);
ElmModel load_model(const std::filesystem::path& path);

std::string serialize_ensemble(const Ensemble& ensemble);
Ensemble deserialize_ensemble(const std::string& bytes);

void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& path);
Ensemble load_ensemble(const std::filesystem::path& path);

// Human-readable header dump for either container kind.
std::string describe_model_file(const std::filesystem::path& path);

}  // namespace melm
