#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "evacmap/geometry.hpp"
#include "json.hpp"

namespace evacmap {

enum class SyntheticKind { Grid, TwoBlocks, Ring };

std::optional<SyntheticKind> parse_synthetic_kind(const std::string& name);

struct SyntheticParams {
  int rows = 5;          // grid
  int cols = 5;          // grid
  int block_size = 5;    // two-blocks: nodes per complete block
  int ring_nodes = 8;    // ring
  double spacing = 100.0; // m between neighbouring nodes
  std::int64_t pop_day = 100;
  std::int64_t pop_night = 50;
  int lanes = 1;
};

// Network and building collections plus a box enclosing them with margin.
struct SyntheticData {
  nlohmann::json network;
  nlohmann::json buildings;
  BBox bbox;
};

// Two-way roads throughout; one building per node carrying the uniform
// populations. Throws ConfigError on invalid parameters.
SyntheticData gen_synthetic(SyntheticKind kind, const SyntheticParams& params);

} // namespace evacmap
