#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "evacmap/community.hpp"
#include "evacmap/errors.hpp"
#include "fixtures.hpp"

using namespace evacmap;
using fixtures::make_graph;
using fixtures::undirected_graph;

namespace {

using Edge = std::pair<std::size_t, std::size_t>;

// Bridged triangles {0,1,2} and {3,4,5} joined by 2-3.
const std::vector<Edge> kBridgedTriangles{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}};

// Per-node internal/external degree counted straight from an edge list.
std::vector<std::pair<int, int>> enumerate_degrees(const std::vector<Edge>& edges, const std::set<std::size_t>& members,
                                                   std::size_t n) {
  std::set<Edge> simple;
  for (auto [u, v] : edges)
    if (u != v) simple.insert({std::min(u, v), std::max(u, v)});
  std::vector<std::pair<int, int>> deg(n, {0, 0});
  for (auto [u, v] : simple) {
    for (auto [x, y] : {Edge{u, v}, Edge{v, u}}) {
      if (members.count(y)) ++deg[x].first;
      else ++deg[x].second;
    }
  }
  return deg;
}

std::vector<NodeId> ids(std::initializer_list<std::size_t> list) {
  std::vector<NodeId> out;
  for (std::size_t i : list) out.push_back(node_id(i));
  return out;
}

ColonyConfig literal_config() {
  ColonyConfig cfg;
  cfg.pheromone_floor = 0.0;
  cfg.relocation_probability = 0.0;
  return cfg;
}

} // namespace

TEST_CASE("attraction is the load to capacity ratio") {
  const RoadGraph g = make_graph({{0, 0}, {1, 0}}, {{0, 1, 100.0, 100, 10.0}});
  FlowState s = FlowState::empty_for(g);
  CHECK(attraction(g.arc(arc_id(0)), s) == 0.0);
  s.load[0] = 50.0;
  CHECK(attraction(g.arc(arc_id(0)), s) == 0.5);
  s.load[0] = 100.0;
  CHECK(attraction_weights(g, s) == AttractionWeights{1.0});
}

TEST_CASE("transition probabilities") {
  const RoadGraph g = make_graph({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{0, 1}, {0, 2}, {3, 0}});
  PheromoneField tau(3, 2);
  const std::vector<double> zero(3, 0.0);

  SUBCASE("pheromone-proportional choice") {
    const RoadGraph two = make_graph({{0, 0}, {1, 0}, {0, 1}}, {{0, 1}, {0, 2}});
    PheromoneField t(2, 2);
    t.set(arc_id(0), 0, 3.0);
    t.set(arc_id(1), 0, 1.0);
    ColonyConfig cfg = literal_config();
    cfg.pheromone_exponent = 1.0;
    cfg.force_exponent = 2.0;
    const auto p = transition_probabilities({0, node_id(0), {}}, two, t, std::vector<double>(2, 0.0), cfg);
    REQUIRE(p.size() == 2);
    CHECK(p[0].probability == doctest::Approx(0.75));
    CHECK(p[1].probability == doctest::Approx(0.25));
  }
  SUBCASE("empty field gives a uniform choice") {
    ColonyConfig cfg;
    const auto p = transition_probabilities({1, node_id(0), {}}, g, tau, zero, cfg);
    REQUIRE(p.size() == 3);
    for (const auto& c : p) CHECK(c.probability == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("arcs back to the previous node are skipped unless nothing else is left") {
    ColonyConfig cfg;
    const auto p = transition_probabilities({0, node_id(0), node_id(1)}, g, tau, zero, cfg);
    REQUIRE(p.size() == 2);
    CHECK(p[0].arc == arc_id(1));
    CHECK(p[1].arc == arc_id(2));
    const auto back = transition_probabilities({0, node_id(1), node_id(0)}, g, tau, zero, cfg);
    REQUIRE(back.size() == 1);
    CHECK(back[0].probability == 1.0);
  }
  SUBCASE("attraction raises the weight of loaded arcs") {
    ColonyConfig cfg;
    const std::vector<double> force{1.0, 0.0, 0.0};
    const auto p = transition_probabilities({0, node_id(0), {}}, g, tau, force, cfg);
    CHECK(p[0].probability == doctest::Approx(4.0 / 6.0));
  }
}

TEST_CASE("forced move deposits exactly q") {
  const RoadGraph g = make_graph({{0, 0}, {1, 0}}, {{0, 1}});
  PheromoneField tau(1, 3);
  tau.set(arc_id(0), 2, 0.25);
  ColonyConfig cfg;
  cfg.deposit = 0.5;
  Rng rng(1);
  Ant ant{2, node_id(0), {}};
  const auto move = ant_step(ant, g, tau, std::vector<double>{0.0}, cfg, rng);
  CHECK(move.arc == arc_id(0));
  CHECK_FALSE(move.reseeded);
  CHECK(ant.current == node_id(1));
  CHECK(ant.previous == node_id(0));
  CHECK(tau.at(arc_id(0), 2) == 0.75);
  CHECK(tau.at(arc_id(0), 0) == 0.0);
}

TEST_CASE("ant on an isolated node is re-seeded") {
  const RoadGraph g = make_graph({{0, 0}, {1, 0}, {5, 5}}, {{0, 1}});
  PheromoneField tau(1, 2);
  ColonyConfig cfg;
  Rng rng(4);
  Ant ant{0, node_id(2), node_id(0)};
  const auto move = ant_step(ant, g, tau, std::vector<double>{0.0}, cfg, rng);
  CHECK(move.reseeded);
  CHECK_FALSE(move.arc.has_value());
  CHECK_FALSE(ant.previous.has_value());
  CHECK(tau.total() == 0.0);
}

TEST_CASE("evaporation") {
  PheromoneField tau(2, 2);
  tau.set(arc_id(0), 1, 10.0);
  evaporate(tau, 0.1);
  CHECK(tau.at(arc_id(0), 1) == doctest::Approx(9.0));
  PheromoneField zero(3, 2);
  evaporate(zero, 0.3);
  CHECK(zero == PheromoneField(3, 2));
  PheromoneField one(1, 2);
  one.set(arc_id(0), 0, 1.0);
  for (int i = 0; i < 100; ++i) evaporate(one, 0.05);
  CHECK(one.at(arc_id(0), 0) == doctest::Approx(std::pow(0.95, 100)));
  CHECK(one.at(arc_id(0), 0) == doctest::Approx(0.005921).epsilon(1e-3));
}

TEST_CASE("vertex colour is the argmax of incident sums") {
  const RoadGraph g = make_graph({{0, 0}, {1, 0}, {0, 1}}, {{0, 1}, {2, 0}});
  PheromoneField tau(2, 3);
  CHECK(vertex_color(node_id(0), g, tau) == 0);
  tau.set(arc_id(0), 1, 0.7);
  tau.set(arc_id(1), 2, 0.3);
  CHECK(vertex_color(node_id(0), g, tau) == 1);
  PheromoneField t2(2, 3);
  t2.set(arc_id(0), 0, 1.0);
  t2.set(arc_id(1), 1, 1.0);
  CHECK(vertex_color(node_id(0), g, t2) == 0);
  t2.set(arc_id(0), 2, 1.5);
  t2.set(arc_id(1), 2, 0.5);
  CHECK(vertex_color(node_id(0), g, t2) == 2);
}

TEST_CASE("partitions are connected monochromatic components") {
  SUBCASE("one colour on a connected graph") {
    const RoadGraph g = undirected_graph(4, {{0, 1}, {1, 2}, {2, 3}});
    PheromoneField tau(g.arc_count(), 2);
    const auto p = extract_partition(g, tau);
    CHECK(p.communities.size() == 1);
    CHECK(p.communities[0].size() == 4);
  }
  SUBCASE("path red red blue") {
    const RoadGraph g = undirected_graph(3, {{0, 1}, {1, 2}});
    PheromoneField tau(g.arc_count(), 2);
    for (std::size_t a = 0; a < 2; ++a) tau.set(arc_id(a), 0, 2.0);
    for (std::size_t a = 2; a < 4; ++a) tau.set(arc_id(a), 1, 1.5);
    const auto p = extract_partition(g, tau);
    REQUIRE(p.color_of == std::vector<Color>{0, 0, 1});
    REQUIRE(p.communities.size() == 2);
    CHECK(p.communities[0] == ids({0, 1}));
    CHECK(p.communities[1] == ids({2}));
    CHECK(p.community_of == std::vector<std::size_t>{0, 0, 1});
  }
  SUBCASE("red class split into two pairs") {
    // 0-1 red, 2 blue, 3-4 red along a path.
    const RoadGraph g = undirected_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    PheromoneField tau(g.arc_count(), 2);
    auto paint = [&](std::size_t edge, Color c, double v) {
      tau.set(arc_id(2 * edge), c, v);
      tau.set(arc_id(2 * edge + 1), c, v);
    };
    paint(0, 0, 3.0);
    paint(3, 0, 3.0);
    paint(1, 1, 1.0);
    paint(2, 1, 1.0);
    const auto p = extract_partition(g, tau);
    REQUIRE(p.color_of == std::vector<Color>{0, 0, 1, 0, 0});
    REQUIRE(p.communities.size() == 3);
    CHECK(p.communities[0] == ids({0, 1}));
    CHECK(p.communities[1] == ids({2}));
    CHECK(p.communities[2] == ids({3, 4}));
  }
}

TEST_CASE("strong and weak community checks") {
  const RoadGraph g = undirected_graph(6, kBridgedTriangles);
  for (const auto& tri : {ids({0, 1, 2}), ids({3, 4, 5})}) {
    std::set<std::size_t> members;
    for (NodeId n : tri) members.insert(index(n));
    const auto deg = enumerate_degrees(kBridgedTriangles, members, 6);
    int in = 0, out = 0;
    bool strong = true;
    std::vector<bool> flag(6, false);
    for (std::size_t m : members) flag[m] = true;
    for (std::size_t m : members) {
      const DegreeSplit s = degree_split(node_id(m), g, flag);
      CHECK(s.internal == deg[m].first);
      CHECK(s.external == deg[m].second);
      strong = strong && deg[m].first > deg[m].second;
      in += deg[m].first;
      out += deg[m].second;
    }
    CHECK(in == 6);
    CHECK(out == 1);
    CHECK(strong_check(tri, g) == strong);
    CHECK(strong_check(tri, g));
    CHECK(weak_check(tri, g));
  }
  CHECK_FALSE(strong_check(ids({2}), g));
  CHECK_FALSE(weak_check(ids({2}), g));
  const auto all = ids({0, 1, 2, 3, 4, 5});
  CHECK(strong_check(all, g));
  CHECK(weak_check(all, g));
  CHECK_FALSE(strong_check(std::vector<NodeId>{}, g));

  // Parallel arcs do not inflate degrees.
  const RoadGraph multi = make_graph({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {0, 1}, {1, 0}, {1, 2}});
  std::vector<bool> flag{true, true, false};
  CHECK(degree_split(node_id(1), multi, flag).internal == 1);
  CHECK(degree_split(node_id(1), multi, flag).external == 1);
}

TEST_CASE("strong implies weak on random small graphs") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 8;
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v)
        if (rng() % 3 == 0) edges.push_back({u, v});
    if (edges.empty()) continue;
    const RoadGraph g = undirected_graph(n, edges);
    std::vector<NodeId> comm;
    for (std::size_t i = 0; i < n; ++i)
      if (rng() % 2) comm.push_back(node_id(i));
    if (strong_check(comm, g)) CHECK(weak_check(comm, g));
  }
}

TEST_CASE("epoch composition") {
  const RoadGraph g = make_graph({{0, 0}, {1, 0}}, {{0, 1}});
  ColonyConfig cfg;
  cfg.evaporation_rate = 0.2;
  cfg.deposit = 1.0;
  Rng rng(1);

  PheromoneField tau(1, 2);
  tau.set(arc_id(0), 0, 5.0);
  tau.set(arc_id(0), 1, 2.0);
  std::vector<Ant> none;
  epoch(g, tau, none, std::vector<double>{0.0}, cfg, rng);
  CHECK(tau.at(arc_id(0), 0) == doctest::Approx(4.0));
  CHECK(tau.at(arc_id(0), 1) == doctest::Approx(1.6));

  std::vector<Ant> one{{0, node_id(0), {}}};
  epoch(g, tau, one, std::vector<double>{0.0}, cfg, rng);
  CHECK(tau.at(arc_id(0), 0) == doctest::Approx(4.0 * 0.8 + 1.0));
  CHECK(tau.at(arc_id(0), 1) == doctest::Approx(1.6 * 0.8));
  CHECK(one[0].current == node_id(1));
}

TEST_CASE("colony runs are deterministic and bounded") {
  const RoadGraph g = undirected_graph(6, kBridgedTriangles);
  ColonyConfig cfg;
  cfg.num_colors = 3;
  cfg.seed = 99;
  Colony a(g, cfg), b(g, cfg);
  CHECK(a.ants() == b.ants());
  CHECK(a.ants().size() == 12);
  const std::vector<double> force(g.arc_count(), 0.25);
  const double bound = static_cast<double>(a.ants().size()) * cfg.deposit / cfg.evaporation_rate;
  for (int e = 0; e < 300; ++e) {
    a.run_epoch(force);
    b.run_epoch(force);
    REQUIRE(a.pheromones() == b.pheromones());
    REQUIRE(a.pheromones().total() <= bound);
  }
  CHECK(a.epochs() == 300);
  cfg.seed = 100;
  Colony c(g, cfg);
  for (int e = 0; e < 300; ++e) c.run_epoch(force);
  CHECK_FALSE(c.pheromones() == a.pheromones());
  CHECK_THROWS_AS(a.run_epoch(std::vector<double>(1, 0.0)), DomainError);
}

TEST_CASE("colony configuration is validated") {
  const RoadGraph g = undirected_graph(2, {{0, 1}});
  auto with = [](auto mutate) {
    ColonyConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(Colony(g, with([](ColonyConfig& c) { c.num_colors = 1; })), ConfigError);
  CHECK_THROWS_AS(Colony(g, with([](ColonyConfig& c) { c.ants_per_color = 0; })), ConfigError);
  CHECK_THROWS_AS(Colony(g, with([](ColonyConfig& c) { c.evaporation_rate = 1.0; })), ConfigError);
  CHECK_THROWS_AS(Colony(g, with([](ColonyConfig& c) { c.deposit = 0.0; })), ConfigError);
  CHECK_THROWS_AS(Colony(g, with([](ColonyConfig& c) { c.relocation_probability = 1.5; })), ConfigError);
  CHECK_NOTHROW(Colony(g, ColonyConfig{}));
}

TEST_CASE("scaling the field leaves vertex colours unchanged") {
  std::mt19937_64 rng(5);
  const RoadGraph g = undirected_graph(8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 0}, {0, 4}});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    PheromoneField tau(g.arc_count(), 4);
    for (double& v : tau.values()) v = u(rng);
    const auto base = extract_partition(g, tau).color_of;
    for (double lambda : {1e-6, 1e6}) {
      PheromoneField scaled = tau;
      for (double& v : scaled.values()) v *= lambda;
      CHECK(extract_partition(g, scaled).color_of == base);
    }
  }
}

TEST_CASE("rng helpers stay in range") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(rng.below(7) < 7);
  }
  CHECK(rng.below(1) == 0);
  Rng a(3), b(3);
  for (int i = 0; i < 10; ++i) CHECK(a.below(1000) == b.below(1000));
}
