#include "evacmap/traffic_flow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "evacmap/errors.hpp"

namespace evacmap {

using nlohmann::json;

double travel_time(const Arc& arc, double load, const DelayParams& params) {
  const auto capacity = static_cast<double>(arc.capacity);
  if (!(load >= 0.0) || load > capacity)
    throw DomainError("load " + std::to_string(load) + " outside [0, capacity] on arc '" + arc.name + "'");
  const double t0 = arc.free_flow_time();
  if (load == 0.0) return t0;
  return t0 * (1.0 + params.alpha * std::pow(load / capacity, params.beta));
}

FlowState FlowState::empty_for(const RoadGraph& graph) {
  FlowState s;
  s.load.assign(graph.arc_count(), 0.0);
  s.closed.assign(graph.arc_count(), false);
  return s;
}

double total_vehicles(const FlowState& state) {
  double total = 0.0;
  for (double v : state.load) total += v;
  return total;
}

void RoutingFractions::set(NodeId node, Split split) {
  if (index(node) >= splits_.size()) splits_.resize(index(node) + 1);
  double sum = 0.0;
  for (const auto& [arc, f] : split) {
    if (!(f >= 0.0) || f > 1.0) throw DomainError("routing fraction outside [0, 1] at node " + std::to_string(index(node)));
    sum += f;
  }
  if (!split.empty() && std::abs(sum - 1.0) > 1e-9)
    throw DomainError("routing fractions at node " + std::to_string(index(node)) + " do not sum to 1");
  splits_[index(node)] = std::move(split);
}

const RoutingFractions::Split* RoutingFractions::find(NodeId node) const {
  if (index(node) >= splits_.size() || !splits_[index(node)]) return nullptr;
  return &*splits_[index(node)];
}

RoutingFractions residual_capacity_routing(const RoadGraph& graph, const FlowState& state) {
  RoutingFractions routing(graph.node_count());
  for (const Node& n : graph.nodes()) {
    RoutingFractions::Split split;
    double total = 0.0;
    for (ArcId a : graph.out_arcs(n.id)) {
      if (state.closed[index(a)]) continue;
      const double residual = std::max(0.0, static_cast<double>(graph.arc(a).capacity) - state.load[index(a)]);
      split.emplace_back(a, residual);
      total += residual;
    }
    if (!split.empty()) {
      const double uniform = 1.0 / static_cast<double>(split.size());
      for (auto& entry : split) entry.second = total > 0.0 ? entry.second / total : uniform;
      // Absorb rounding so the split passes the sum check.
      double sum = 0.0;
      for (const auto& entry : split) sum += entry.second;
      if (std::abs(sum - 1.0) > 1e-12) {
        for (auto& entry : split) entry.second /= sum;
      }
    }
    routing.set(n.id, std::move(split));
  }
  return routing;
}

namespace {

void check_state(const RoadGraph& graph, const FlowState& state) {
  if (state.load.size() != graph.arc_count() || state.closed.size() != graph.arc_count())
    throw DomainError("flow state does not match the graph");
}

struct Transfer {
  ArcId from;
  ArcId to;
  double demand;
};

} // namespace

FlowState step(const RoadGraph& graph, const FlowState& state, const RoutingFractions& routing, double dt,
               const DelayParams& params) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  check_state(graph, state);
  const std::size_t n = graph.arc_count();

  std::vector<double> demand(n, 0.0);
  std::vector<Transfer> transfers;
  for (const Arc& arc : graph.arcs()) {
    const std::size_t ai = index(arc.id);
    const double load = state.load[ai];
    if (state.closed[ai] || load <= 0.0) continue;
    const double sending = std::min(load, dt * load / travel_time(arc, load, params));
    if (sending <= 0.0) continue;

    const NodeId head = arc.to;
    bool any_open = false;
    for (ArcId b : graph.out_arcs(head)) any_open = any_open || !state.closed[index(b)];
    if (!any_open) continue;
    const RoutingFractions::Split* split = routing.find(head);
    if (split == nullptr) throw RoutingError("no routing fractions for node " + std::to_string(index(head)));

    double open_sum = 0.0;
    for (const auto& [b, f] : *split) {
      if (index(b) >= n || graph.arc(b).from != head)
        throw RoutingError("routing at node " + std::to_string(index(head)) + " names an arc that does not leave it");
      if (!state.closed[index(b)]) open_sum += f;
    }
    if (open_sum <= 0.0) continue;
    for (const auto& [b, f] : *split) {
      if (state.closed[index(b)] || f <= 0.0) continue;
      const double d = f == open_sum ? sending : sending * f / open_sum;
      transfers.push_back({arc.id, b, d});
      demand[index(b)] += d;
    }
  }

  std::vector<double> sent(n, 0.0);
  std::vector<double> received(n, 0.0);
  for (const Transfer& t : transfers) {
    const std::size_t bi = index(t.to);
    const double residual = std::max(0.0, static_cast<double>(graph.arc(t.to).capacity) - state.load[bi]);
    const double accepted = demand[bi] <= residual ? t.demand : (t.demand * residual) / demand[bi];
    sent[index(t.from)] += accepted;
    received[bi] += accepted;
  }

  FlowState next = state;
  next.time = state.time + dt;
  for (std::size_t i = 0; i < n; ++i) {
    const double cap = static_cast<double>(graph.arcs()[i].capacity);
    next.load[i] = std::clamp(state.load[i] - sent[i] + received[i], 0.0, cap);
  }
  return next;
}

EventOutcome apply_event(const RoadGraph& graph, const FlowState& state, const DemandEvent& event) {
  check_state(graph, state);
  EventOutcome out{state, 0.0, 0.0};
  if (event.kind == DemandEvent::Kind::Inject) {
    const auto* node = std::get_if<NodeId>(&event.target);
    if (node == nullptr || index(*node) >= graph.node_count())
      throw UnknownIdError("inject event targets an unknown node");
    if (!(event.vehicles > 0.0) || !std::isfinite(event.vehicles))
      throw DomainError("inject event needs a positive vehicle count");
    double residual_total = 0.0;
    for (ArcId a : graph.out_arcs(*node)) {
      if (state.closed[index(a)]) continue;
      residual_total += std::max(0.0, static_cast<double>(graph.arc(a).capacity) - state.load[index(a)]);
    }
    for (ArcId a : graph.out_arcs(*node)) {
      const std::size_t ai = index(a);
      if (state.closed[ai]) continue;
      const double cap = static_cast<double>(graph.arc(a).capacity);
      const double residual = std::max(0.0, cap - state.load[ai]);
      const double share = event.vehicles >= residual_total ? residual : event.vehicles * residual / residual_total;
      out.state.load[ai] = std::min(cap, state.load[ai] + share);
      out.placed += out.state.load[ai] - state.load[ai];
    }
    out.overflow = std::max(0.0, event.vehicles - out.placed);
    return out;
  }
  const auto* arc = std::get_if<ArcId>(&event.target);
  if (arc == nullptr || index(*arc) >= graph.arc_count()) throw UnknownIdError("arc event targets an unknown arc");
  out.state.closed[index(*arc)] = event.kind == DemandEvent::Kind::CloseArc;
  return out;
}

namespace {

std::optional<std::size_t> parse_node_ref(const json& v) {
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))
    return static_cast<std::size_t>(v.get<std::uint64_t>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t out = 0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (!s.empty() && s[0] == 'n') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec == std::errc() && ptr == end && begin != end) return out;
  }
  return std::nullopt;
}

// Empty string when the event is well formed.
std::string event_problem(const json& e, const RoadGraph* graph) {
  if (!e.is_object()) return "event is not an object";
  if (!e.contains("t") || !e["t"].is_number() || !(e["t"].get<double>() >= 0.0) ||
      !std::isfinite(e["t"].get<double>()))
    return "'t' must be a number >= 0";
  const std::string kind = e.value("kind", "");
  if (kind != "inject" && kind != "close_arc" && kind != "open_arc")
    return "'kind' must be inject, close_arc or open_arc";
  if (!e.contains("target")) return "missing 'target'";
  if (kind == "inject") {
    const auto node = parse_node_ref(e["target"]);
    if (!node) return "inject 'target' must be a node id";
    if (graph != nullptr && *node >= graph->node_count()) return "unknown node " + std::to_string(*node);
    if (!e.contains("vehicles") || !e["vehicles"].is_number() || !(e["vehicles"].get<double>() > 0.0) ||
        !std::isfinite(e["vehicles"].get<double>()))
      return "'vehicles' must be a positive number";
  } else {
    if (!e["target"].is_string()) return "arc 'target' must be an arc id string";
    if (graph != nullptr && !graph->find_arc(e["target"].get<std::string>()))
      return "unknown arc '" + e["target"].get<std::string>() + "'";
  }
  return {};
}

} // namespace

std::vector<FeatureIssue> check_events(const json& doc, const RoadGraph* graph) {
  std::vector<FeatureIssue> issues;
  if (!doc.is_array()) {
    issues.push_back({ParseError::npos, {}, "events file must be a JSON array"});
    return issues;
  }
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (auto problem = event_problem(doc[i], graph); !problem.empty()) issues.push_back({i, {}, problem});
  }
  return issues;
}

std::vector<DemandEvent> load_events(const json& doc, const RoadGraph& graph) {
  const auto issues = check_events(doc, &graph);
  if (!issues.empty()) {
    const auto& first = issues.front();
    const std::string where = first.feature_index == ParseError::npos ? std::string("events")
                                                                       : "event " + std::to_string(first.feature_index);
    if (first.message.rfind("unknown", 0) == 0) throw UnknownIdError(where + ": " + first.message);
    throw ParseError(where + ": " + first.message, first.feature_index);
  }
  std::vector<DemandEvent> events;
  for (const json& e : doc) {
    DemandEvent ev;
    ev.at_time = e["t"].get<double>();
    const std::string kind = e["kind"].get<std::string>();
    if (kind == "inject") {
      ev.kind = DemandEvent::Kind::Inject;
      ev.target = node_id(*parse_node_ref(e["target"]));
      ev.vehicles = e["vehicles"].get<double>();
    } else {
      ev.kind = kind == "close_arc" ? DemandEvent::Kind::CloseArc : DemandEvent::Kind::OpenArc;
      ev.target = *graph.find_arc(e["target"].get<std::string>());
    }
    events.push_back(ev);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const DemandEvent& a, const DemandEvent& b) { return a.at_time < b.at_time; });
  return events;
}

} // namespace evacmap
