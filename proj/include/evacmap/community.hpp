#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "evacmap/road_graph.hpp"
#include "evacmap/traffic_flow.hpp"

namespace evacmap {

using Color = int;

struct ColonyConfig {
  int num_colors = 8;
  int ants_per_color = 4;
  double evaporation_rate = 0.05;
  double deposit = 1.0;            // pheromone per traversal
  double pheromone_exponent = 1.0; // weight of (tau + floor)
  double force_exponent = 2.0;     // weight of (1 + F)
  double pheromone_floor = 0.1;
  // Chance, per step, that an ant standing on a vertex dominated by another
  // colour relocates to a random vertex of its own colour. Zero leaves colonies
  // interacting only through the vertex argmax.
  double relocation_probability = 0.5;
  std::uint64_t seed = 1;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

// Pheromone per (arc, colour), row-major by arc.
class PheromoneField {
public:
  PheromoneField() = default;
  PheromoneField(std::size_t arcs, int colors) : colors_(colors), tau_(arcs * static_cast<std::size_t>(colors), 0.0) {}

  int colors() const { return colors_; }
  std::size_t arcs() const { return colors_ == 0 ? 0 : tau_.size() / static_cast<std::size_t>(colors_); }

  double at(ArcId a, Color c) const { return tau_[slot(a, c)]; }
  void set(ArcId a, Color c, double v) { tau_[slot(a, c)] = v; }
  void add(ArcId a, Color c, double v) { tau_[slot(a, c)] += v; }
  std::span<const double> row(ArcId a) const {
    return std::span<const double>(tau_).subspan(index(a) * static_cast<std::size_t>(colors_),
                                                 static_cast<std::size_t>(colors_));
  }
  std::span<double> values() { return tau_; }
  std::span<const double> values() const { return tau_; }
  double total() const;

  friend bool operator==(const PheromoneField&, const PheromoneField&) = default;

private:
  std::size_t slot(ArcId a, Color c) const { return index(a) * static_cast<std::size_t>(colors_) + static_cast<std::size_t>(c); }

  int colors_ = 0;
  std::vector<double> tau_;
};

struct Ant {
  Color color = 0;
  NodeId current{};
  std::optional<NodeId> previous;

  friend bool operator==(const Ant&, const Ant&) = default;
};

// F(a) = N(a) / C(a), indexed by ArcId.
using AttractionWeights = std::vector<double>;

double attraction(const Arc& arc, const FlowState& state);
AttractionWeights attraction_weights(const RoadGraph& graph, const FlowState& state);

// 64-bit Mersenne Twister with distribution code kept local so sequences are
// identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n);

private:
  std::mt19937_64 engine_;
};

struct Candidate {
  ArcId arc;
  double probability;
};

// Arc-choice distribution of `ant` at its current node; empty on an isolated node.
std::vector<Candidate> transition_probabilities(const Ant& ant, const RoadGraph& graph, const PheromoneField& tau,
                                                std::span<const double> force, const ColonyConfig& cfg);

struct AntMove {
  std::optional<ArcId> arc; // nullopt when the ant was re-seeded
  bool reseeded = false;
};

AntMove ant_step(Ant& ant, const RoadGraph& graph, PheromoneField& tau, std::span<const double> force,
                 const ColonyConfig& cfg, Rng& rng);

void evaporate(PheromoneField& tau, double rho);

// Argmax of incident pheromone sums; ties go to the lowest colour.
Color vertex_color(NodeId node, const RoadGraph& graph, const PheromoneField& tau);

struct CommunityPartition {
  std::vector<Color> color_of;              // per node
  std::vector<std::vector<NodeId>> communities; // sorted members, ordered by smallest member
  std::vector<std::size_t> community_of;    // per node, index into communities
};

CommunityPartition extract_partition(const RoadGraph& graph, const PheromoneField& tau);

// Internal / external simple undirected degree of `node` relative to the
// community flagged in `member`.
struct DegreeSplit {
  int internal = 0;
  int external = 0;
};

DegreeSplit degree_split(NodeId node, const RoadGraph& graph, const std::vector<bool>& member);
bool strong_check(std::span<const NodeId> community, const RoadGraph& graph);
bool weak_check(std::span<const NodeId> community, const RoadGraph& graph);

struct EpochStats {
  std::size_t reseeds = 0;
  std::size_t relocations = 0;
};

// Evaporation followed by one step of every ant in index order.
EpochStats epoch(const RoadGraph& graph, PheromoneField& tau, std::vector<Ant>& ants, std::span<const double> force,
                 const ColonyConfig& cfg, Rng& rng);

// Owns the pheromone field, ants and generator of one detection run.
class Colony {
public:
  Colony(const RoadGraph& graph, ColonyConfig cfg);

  EpochStats run_epoch(std::span<const double> force);

  const PheromoneField& pheromones() const { return tau_; }
  const std::vector<Ant>& ants() const { return ants_; }
  const ColonyConfig& config() const { return cfg_; }
  std::size_t total_reseeds() const { return reseeds_; }
  std::size_t epochs() const { return epochs_; }

private:
  const RoadGraph* graph_;
  ColonyConfig cfg_;
  PheromoneField tau_;
  std::vector<Ant> ants_;
  Rng rng_;
  std::size_t reseeds_ = 0;
  std::size_t epochs_ = 0;
};

} // namespace evacmap
