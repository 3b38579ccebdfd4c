#include "evacmap/community.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evacmap/errors.hpp"

namespace evacmap {

void ColonyConfig::validate() const {
  if (num_colors < 2) throw ConfigError("num_colors must be >= 2");
  if (ants_per_color < 1) throw ConfigError("ants_per_color must be >= 1");
  if (!(evaporation_rate > 0.0 && evaporation_rate < 1.0)) throw ConfigError("evaporation_rate must be in (0, 1)");
  if (!(deposit > 0.0) || !std::isfinite(deposit)) throw ConfigError("deposit must be > 0");
  if (!(pheromone_exponent >= 0.0) || !std::isfinite(pheromone_exponent))
    throw ConfigError("pheromone_exponent must be >= 0");
  if (!(force_exponent >= 0.0) || !std::isfinite(force_exponent)) throw ConfigError("force_exponent must be >= 0");
  if (!(pheromone_floor >= 0.0) || !std::isfinite(pheromone_floor)) throw ConfigError("pheromone_floor must be >= 0");
  if (!(relocation_probability >= 0.0 && relocation_probability <= 1.0))
    throw ConfigError("relocation_probability must be in [0, 1]");
}

double PheromoneField::total() const {
  double t = 0.0;
  for (double v : tau_) t += v;
  return t;
}

double attraction(const Arc& arc, const FlowState& state) {
  return state.load[index(arc.id)] / static_cast<double>(arc.capacity);
}

AttractionWeights attraction_weights(const RoadGraph& graph, const FlowState& state) {
  AttractionWeights f(graph.arc_count());
  for (const Arc& a : graph.arcs()) f[index(a.id)] = attraction(a, state);
  return f;
}

std::size_t Rng::below(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return static_cast<std::size_t>(draw % bound);
}

std::vector<Candidate> transition_probabilities(const Ant& ant, const RoadGraph& graph, const PheromoneField& tau,
                                                std::span<const double> force, const ColonyConfig& cfg) {
  std::vector<Candidate> out;
  const auto incident = graph.incident_arcs(ant.current);
  if (incident.empty()) return out;

  bool has_forward = false;
  for (ArcId a : incident) {
    if (!ant.previous || graph.opposite(a, ant.current) != *ant.previous) has_forward = true;
  }
  double total = 0.0;
  for (ArcId a : incident) {
    if (has_forward && ant.previous && graph.opposite(a, ant.current) == *ant.previous) continue;
    const double w = std::pow(tau.at(a, ant.color) + cfg.pheromone_floor, cfg.pheromone_exponent) *
                     std::pow(1.0 + force[index(a)], cfg.force_exponent);
    out.push_back({a, w});
    total += w;
  }
  const double uniform = 1.0 / static_cast<double>(out.size());
  for (Candidate& c : out) c.probability = total > 0.0 ? c.probability / total : uniform;
  return out;
}

AntMove ant_step(Ant& ant, const RoadGraph& graph, PheromoneField& tau, std::span<const double> force,
                 const ColonyConfig& cfg, Rng& rng) {
  const auto candidates = transition_probabilities(ant, graph, tau, force, cfg);
  if (candidates.empty()) {
    ant.current = node_id(rng.below(graph.node_count()));
    ant.previous.reset();
    return {std::nullopt, true};
  }
  ArcId chosen = candidates.back().arc;
  if (candidates.size() > 1) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (const Candidate& c : candidates) {
      cumulative += c.probability;
      if (u < cumulative) {
        chosen = c.arc;
        break;
      }
    }
  }
  ant.previous = ant.current;
  ant.current = graph.opposite(chosen, ant.current);
  tau.add(chosen, ant.color, cfg.deposit);
  return {chosen, false};
}

void evaporate(PheromoneField& tau, double rho) {
  const double keep = 1.0 - rho;
  for (double& v : tau.values()) v *= keep;
}

Color vertex_color(NodeId node, const RoadGraph& graph, const PheromoneField& tau) {
  const int k = tau.colors();
  std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
  for (ArcId a : graph.incident_arcs(node)) {
    const auto row = tau.row(a);
    for (int c = 0; c < k; ++c) sums[static_cast<std::size_t>(c)] += row[static_cast<std::size_t>(c)];
  }
  Color best = 0;
  for (int c = 1; c < k; ++c) {
    if (sums[static_cast<std::size_t>(c)] > sums[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

CommunityPartition extract_partition(const RoadGraph& graph, const PheromoneField& tau) {
  const std::size_t n = graph.node_count();
  CommunityPartition p;
  p.color_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.color_of[i] = vertex_color(node_id(i), graph, tau);

  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  p.community_of.assign(n, unset);
  std::vector<NodeId> stack;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (p.community_of[seed] != unset) continue;
    const std::size_t cid = p.communities.size();
    std::vector<NodeId> members;
    p.community_of[seed] = cid;
    stack.push_back(node_id(seed));
    while (!stack.empty()) {
      const NodeId cur = stack.back();
      stack.pop_back();
      members.push_back(cur);
      for (NodeId nb : graph.neighbors(cur)) {
        if (p.community_of[index(nb)] != unset || p.color_of[index(nb)] != p.color_of[seed]) continue;
        p.community_of[index(nb)] = cid;
        stack.push_back(nb);
      }
    }
    std::sort(members.begin(), members.end());
    p.communities.push_back(std::move(members));
  }
  return p;
}

DegreeSplit degree_split(NodeId node, const RoadGraph& graph, const std::vector<bool>& member) {
  DegreeSplit s;
  for (NodeId nb : graph.neighbors(node)) {
    if (member[index(nb)]) {
      ++s.internal;
    } else {
      ++s.external;
    }
  }
  return s;
}

namespace {

std::vector<bool> membership(std::span<const NodeId> community, const RoadGraph& graph) {
  std::vector<bool> member(graph.node_count(), false);
  for (NodeId n : community) member[index(n)] = true;
  return member;
}

} // namespace

bool strong_check(std::span<const NodeId> community, const RoadGraph& graph) {
  if (community.empty()) return false;
  const auto member = membership(community, graph);
  return std::all_of(community.begin(), community.end(), [&](NodeId n) {
    const DegreeSplit s = degree_split(n, graph, member);
    return s.internal > s.external;
  });
}

bool weak_check(std::span<const NodeId> community, const RoadGraph& graph) {
  if (community.empty()) return false;
  const auto member = membership(community, graph);
  long internal = 0;
  long external = 0;
  for (NodeId n : community) {
    const DegreeSplit s = degree_split(n, graph, member);
    internal += s.internal;
    external += s.external;
  }
  return internal > external;
}

EpochStats epoch(const RoadGraph& graph, PheromoneField& tau, std::vector<Ant>& ants, std::span<const double> force,
                 const ColonyConfig& cfg, Rng& rng) {
  EpochStats stats;
  evaporate(tau, cfg.evaporation_rate);
  if (ants.empty()) return stats;

  // Colour snapshot taken after evaporation; relocation targets come from it.
  std::vector<Color> colors;
  std::vector<std::vector<NodeId>> by_color;
  if (cfg.relocation_probability > 0.0) {
    colors.resize(graph.node_count());
    by_color.resize(static_cast<std::size_t>(tau.colors()));
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
      colors[i] = vertex_color(node_id(i), graph, tau);
      by_color[static_cast<std::size_t>(colors[i])].push_back(node_id(i));
    }
  }
  for (Ant& ant : ants) {
    const AntMove move = ant_step(ant, graph, tau, force, cfg, rng);
    if (move.reseeded) ++stats.reseeds;
    if (cfg.relocation_probability > 0.0 && colors[index(ant.current)] != ant.color) {
      const auto& home = by_color[static_cast<std::size_t>(ant.color)];
      if (!home.empty() && rng.uniform() < cfg.relocation_probability) {
        ant.current = home[rng.below(home.size())];
        ant.previous.reset();
        ++stats.relocations;
      }
    }
  }
  return stats;
}

Colony::Colony(const RoadGraph& graph, ColonyConfig cfg)
    : graph_(&graph), cfg_(cfg), tau_(graph.arc_count(), cfg.num_colors), rng_(cfg.seed) {
  cfg_.validate();
  if (graph.node_count() == 0) throw DomainError("colony needs a non-empty graph");
  for (Color c = 0; c < cfg_.num_colors; ++c) {
    for (int j = 0; j < cfg_.ants_per_color; ++j) ants_.push_back({c, node_id(rng_.below(graph.node_count())), {}});
  }
}

EpochStats Colony::run_epoch(std::span<const double> force) {
  if (force.size() != graph_->arc_count()) throw DomainError("attraction vector does not match the graph");
  const EpochStats stats = epoch(*graph_, tau_, ants_, force, cfg_, rng_);
  reseeds_ += stats.reseeds;
  ++epochs_;
  return stats;
}

} // namespace evacmap
