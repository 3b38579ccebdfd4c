#pragma once

#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "evacmap/road_graph.hpp"

namespace evacmap {

// Volume-delay parameters: t = t0 * (1 + alpha * (load / capacity)^beta).
struct DelayParams {
  double alpha = 0.15;
  double beta = 4.0;
};

// Throws DomainError when load is outside [0, capacity].
double travel_time(const Arc& arc, double load, const DelayParams& params = {});

struct FlowState {
  double time = 0.0;        // s
  std::vector<double> load; // vehicles per arc, indexed by ArcId
  std::vector<bool> closed; // per arc

  static FlowState empty_for(const RoadGraph& graph);
};

double total_vehicles(const FlowState& state);

// Per-node split of outgoing flow over its out-arcs. Fractions for closed
// arcs are ignored and the rest renormalized when a step runs.
class RoutingFractions {
public:
  using Split = std::vector<std::pair<ArcId, double>>;

  RoutingFractions() = default;
  explicit RoutingFractions(std::size_t node_count) : splits_(node_count) {}

  void set(NodeId node, Split split);
  const Split* find(NodeId node) const;
  std::size_t node_count() const { return splits_.size(); }

private:
  std::vector<std::optional<Split>> splits_;
};

// Fractions proportional to each open out-arc's residual capacity; uniform over
// the open out-arcs when all of them are full; empty when none is open.
RoutingFractions residual_capacity_routing(const RoadGraph& graph, const FlowState& state);

// One sending/receiving update. Throws DomainError for dt <= 0 or a state that
// does not match the graph, RoutingError when a node with outflow has no split.
FlowState step(const RoadGraph& graph, const FlowState& state, const RoutingFractions& routing, double dt,
               const DelayParams& params = {});

struct DemandEvent {
  enum class Kind { Inject, CloseArc, OpenArc };

  double at_time = 0.0;
  Kind kind = Kind::Inject;
  std::variant<NodeId, ArcId> target;
  double vehicles = 0.0;
};

struct EventOutcome {
  FlowState state;
  double placed = 0.0;
  double overflow = 0.0;
};

// Throws UnknownIdError when the target does not exist in `graph`.
EventOutcome apply_event(const RoadGraph& graph, const FlowState& state, const DemandEvent& event);

std::vector<FeatureIssue> check_events(const nlohmann::json& doc, const RoadGraph* graph);
// Events sorted by time (stable). Throws ParseError / UnknownIdError.
std::vector<DemandEvent> load_events(const nlohmann::json& doc, const RoadGraph& graph);

} // namespace evacmap
