#pragma once

#include <filesystem>
#include <iosfwd>

#include "csgnn/trainer.hpp"

namespace csgnn {

/// Text checkpoint:
///   CSGNN-CKPT v1
///   config <key> <value>        one line per TrainConfig field
///   <name> <rows> <cols>        then rows lines of cols values (%.17g)
/// Tensors: transform.weight, transform.bias, gnn.layer<l>.weight,
/// gnn.layer<l>.bias, cost.C, and 1x1 sampler.p / sampler.terminated /
/// sampler.frozen_p / train.epoch. Training history is not stored.
void write_checkpoint(std::ostream& out, const TrainState& state);
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);

/// Throws ParseError on malformed input and ShapeError on inconsistent
/// tensor shapes.
TrainState read_checkpoint(std::istream& in, const std::string& source = "<stream>");
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace csgnn
