#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "evacmap/errors.hpp"
#include "evacmap/scenario.hpp"
#include "fixtures.hpp"

using namespace evacmap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("evacmap_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path path;
};

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

const char* kMinimal = "network_path = network.geojson\ntotal_steps = 10\nsnapshot_every = 5\ndt = 1\n";

} // namespace

TEST_CASE("config parsing") {
  const auto parsed = parse_config(std::string(kMinimal) +
                                       "# comment line\nbuildings_path = b.geojson  # trailing\nperiod = night\n"
                                       "num_colors = 3\nrng_seed = 18446744073709551615\nbbox = 0, 0, 10, 20\n",
                                   "/data/run");
  CHECK(parsed.diagnostics.empty());
  const ScenarioConfig& c = parsed.config;
  CHECK(c.network_path == fs::path("/data/run/network.geojson"));
  CHECK(c.buildings_path == fs::path("/data/run/b.geojson"));
  CHECK(c.events_path.empty());
  CHECK(c.out_dir == fs::path("/data/run/out"));
  CHECK(c.total_steps == 10);
  CHECK(c.period == Period::Night);
  CHECK(c.colony.num_colors == 3);
  CHECK(c.colony.seed == 18446744073709551615ull);
  REQUIRE(c.bbox.has_value());
  CHECK(c.bbox->max_y == 20.0);
  CHECK(c.epochs_per_step == 10);
  CHECK(c.occupancy == 2.5);
}

TEST_CASE("config diagnostics") {
  auto fields = [](const std::string& text) {
    std::vector<std::string> out;
    for (const auto& d : parse_config(text, "/x").diagnostics) out.push_back(d.field);
    return out;
  };
  CHECK(fields("network_path = n\ntotal_steps = 10\nsnapshot_every = 5\ndt = 0\n") == std::vector<std::string>{"dt"});
  CHECK(fields("") == std::vector<std::string>{"network_path", "total_steps", "snapshot_every", "dt"});
  CHECK(fields(std::string(kMinimal) + "colour = red\n") == std::vector<std::string>{"colour"});
  CHECK(fields(std::string(kMinimal) + "dt = 2\n") == std::vector<std::string>{"dt"});
  CHECK(fields(std::string(kMinimal) + "just words\n") == std::vector<std::string>{"line 5"});
  CHECK(fields(std::string(kMinimal) + "evaporation_rate = 1.5\nperiod = dusk\n") ==
        std::vector<std::string>{"period", "evaporation_rate"});
  CHECK(fields("network_path = n\ntotal_steps = 0\nsnapshot_every = x\ndt = 1\nbbox = 1,2,3\n") ==
        std::vector<std::string>{"total_steps", "snapshot_every", "bbox"});
}

TEST_CASE("config hash covers settings but not the output directory") {
  const auto a = parse_config(kMinimal, "/x").config;
  auto b = a;
  b.out_dir = "/elsewhere";
  CHECK(a.hash() == b.hash());
  b.colony.seed = 2;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().rfind("fnv1a64:", 0) == 0);
  CHECK(a.hash().size() == 8 + 16);
}

TEST_CASE("synthetic fixtures") {
  SUBCASE("3 x 3 grid") {
    SyntheticParams p;
    p.rows = 3;
    p.cols = 3;
    const auto data = gen_synthetic(SyntheticKind::Grid, p);
    const auto net = load_network(data.network);
    CHECK(net.graph.node_count() == 9);
    CHECK(net.graph.arc_count() == 24);
    CHECK(data.buildings["features"].size() == 9);
  }
  SUBCASE("two K5 blocks and a bridge") {
    SyntheticParams p;
    p.block_size = 5;
    const auto data = gen_synthetic(SyntheticKind::TwoBlocks, p);
    const auto net = load_network(data.network);
    const RoadGraph& g = net.graph;
    REQUIRE(g.node_count() == 10);
    CHECK(g.arc_count() == 2 * 20 + 2);
    std::vector<ArcId> bridge{*g.find_arc("bridge:f"), *g.find_arc("bridge:r")};
    std::set<std::size_t> block_of_node[2];
    const NodeId a0 = g.arc(bridge[0]).from, b0 = g.arc(bridge[0]).to;
    // Without the bridge, each side is a complete graph on 5 nodes.
    for (NodeId side : {a0, b0}) {
      std::set<std::size_t> comp{index(side)};
      for (NodeId nb : g.neighbors(side))
        if (nb != (side == a0 ? b0 : a0)) comp.insert(index(nb));
      REQUIRE(comp.size() == 5);
      for (std::size_t u : comp) {
        std::size_t inside = 0;
        for (NodeId nb : g.neighbors(node_id(u))) inside += comp.count(index(nb));
        CHECK(inside == 4);
      }
    }
  }
  SUBCASE("ring") {
    SyntheticParams p;
    p.ring_nodes = 6;
    const auto net = load_network(gen_synthetic(SyntheticKind::Ring, p).network);
    CHECK(net.graph.node_count() == 6);
    CHECK(net.graph.arc_count() == 12);
  }
  SUBCASE("deterministic and validated") {
    SyntheticParams p;
    CHECK(gen_synthetic(SyntheticKind::Grid, p).network.dump() == gen_synthetic(SyntheticKind::Grid, p).network.dump());
    p.rows = 0;
    CHECK_THROWS_AS(gen_synthetic(SyntheticKind::Grid, p), ConfigError);
    SyntheticParams q;
    q.block_size = 1;
    CHECK_THROWS_AS(gen_synthetic(SyntheticKind::TwoBlocks, q), ConfigError);
    SyntheticParams r;
    r.spacing = -1;
    CHECK_THROWS_AS(gen_synthetic(SyntheticKind::Ring, r), ConfigError);
    CHECK(parse_synthetic_kind("two-blocks") == SyntheticKind::TwoBlocks);
    CHECK_FALSE(parse_synthetic_kind("star").has_value());
  }
}

TEST_CASE("validate reports config and data problems") {
  TempDir dir("validate");
  SyntheticParams p;
  p.rows = 2;
  p.cols = 2;
  write_synthetic(SyntheticKind::Grid, p, dir.path);
  CHECK(validate(dir.path / "scenario.cfg").empty());
  CHECK(slurp(dir.path / "network.geojson").size() > 0);

  write_file(dir.path / "dt0.cfg", "network_path = network.geojson\ntotal_steps = 10\nsnapshot_every = 5\ndt = 0\n");
  const auto dt0 = validate(dir.path / "dt0.cfg");
  REQUIRE(dt0.size() == 1);
  CHECK(dt0[0].field == "dt");
  CHECK_FALSE(dt0[0].data);

  json bad = fixtures::collection({fixtures::road("ok", {{0, 0}, {100, 0}}),
                                   fixtures::road("l", {{0, 0}, {0, 100}}, true, {{"lanes", 1.5}}),
                                   fixtures::road("ok", {{100, 0}, {100, 100}}),
                                   fixtures::road("s", {{0, 100}, {100, 100}}, true, {{"speed", "fast"}})});
  write_file(dir.path / "bad.geojson", bad.dump());
  write_file(dir.path / "bad.cfg", "network_path = bad.geojson\ntotal_steps = 10\nsnapshot_every = 5\ndt = 1\n");
  const auto three = validate(dir.path / "bad.cfg");
  REQUIRE(three.size() == 3);
  for (const auto& d : three) {
    CHECK(d.data);
    CHECK(d.field == "network_path");
    CHECK(d.feature.has_value());
  }
  CHECK(*three[0].feature == 1);
  CHECK(*three[2].feature == 3);
  const json j = diagnostics_json(three);
  CHECK(j[1]["feature"] == 2);
  CHECK(j[1]["kind"] == "input");

  write_file(dir.path / "events.json", R"([{"t": 0, "kind": "inject", "target": 99, "vehicles": 5}])");
  write_file(dir.path / "ev.cfg", std::string(kMinimal) + "events_path = events.json\nbbox = 0,0,1,1\n");
  const auto ev = validate(dir.path / "ev.cfg");
  std::set<std::string> f;
  for (const auto& d : ev) f.insert(d.field);
  CHECK(f.count("events_path") == 1);
  CHECK(f.count("bbox") == 1);

  const auto missing = validate(dir.path / "nope.cfg");
  REQUIRE(missing.size() == 1);
  CHECK(missing[0].field == "config");
  CHECK_THROWS_AS(load_config(dir.path / "dt0.cfg"), ConfigError);
}

TEST_CASE("run writes the requested snapshots") {
  TempDir dir("run_count");
  SyntheticParams p;
  p.rows = 3;
  p.cols = 3;
  write_synthetic(SyntheticKind::Grid, p, dir.path);
  write_file(dir.path / "events.json",
             R"([{"t": 0, "kind": "inject", "target": "n0", "vehicles": 30},
                 {"t": 3, "kind": "inject", "target": 4, "vehicles": 1000},
                 {"t": 6, "kind": "close_arc", "target": "h1_0:f"}])");
  std::ifstream in(dir.path / "scenario.cfg");
  std::string cfg_text((std::istreambuf_iterator<char>(in)), {});
  const auto replace = [&](const std::string& from, const std::string& to) {
    cfg_text.replace(cfg_text.find(from), from.size(), to);
  };
  replace("total_steps = 100", "total_steps = 10");
  replace("snapshot_every = 10", "snapshot_every = 5");
  cfg_text += "events_path = events.json\ndiagnostics = true\n";
  write_file(dir.path / "run.cfg", cfg_text);

  const ScenarioConfig cfg = load_config(dir.path / "run.cfg");
  const RunReport report = run(cfg);
  CHECK(report.snapshots == 2);
  CHECK(report.events_applied == 3);
  CHECK(report.injected == 1030.0);
  CHECK(report.placed + report.overflow == doctest::Approx(1030.0));
  CHECK(report.overflow > 0.0);
  CHECK(report.residual == doctest::Approx(0.0).epsilon(1e-9));

  const auto files = directory_bytes(cfg.out_dir / "snapshots");
  CHECK(files.size() == 3);
  CHECK(files.count("index.json") == 1);
  CHECK(files.count("snapshot_000005.geojson") == 1);
  CHECK(files.count("snapshot_000010.geojson") == 1);
  const json index = json::parse(files.at("index.json"));
  CHECK(index["snapshots"].size() == 2);
  CHECK(index["config_hash"] == cfg.hash());

  // Audit recomputed from the last snapshot.
  const json last = json::parse(files.at("snapshot_000010.geojson"));
  double on_network = 0.0;
  bool closed_seen = false;
  for (const auto& feat : last["features"]) {
    if (feat["properties"]["kind"] != "arc") continue;
    on_network += feat["properties"]["load"].get<double>();
    if (feat["properties"]["arc_id"] == "h1_0:f") closed_seen = feat["properties"]["closed"].get<bool>();
  }
  CHECK(closed_seen);
  CHECK(on_network == doctest::Approx(report.on_network_end).epsilon(1e-12));
  CHECK(report.placed - on_network == doctest::Approx(0.0).epsilon(1e-9));

  std::size_t lines = 0;
  std::ifstream diag(cfg.out_dir / "diagnostics.jsonl");
  for (std::string line; std::getline(diag, line);) ++lines;
  CHECK(lines == 100);
  const json run_json = json::parse(slurp(cfg.out_dir / "run_report.json"));
  CHECK(run_json["snapshots"] == 2);
  CHECK(fs::exists(cfg.out_dir / "ingestion_report.json"));

  // A second run with fewer snapshots leaves no stale files behind.
  ScenarioConfig shorter = cfg;
  shorter.total_steps = 5;
  run(shorter);
  CHECK(directory_bytes(cfg.out_dir / "snapshots").size() == 2);
}

TEST_CASE("identical runs produce identical snapshot directories") {
  TempDir dir("run_det");
  SyntheticParams p;
  p.rows = 3;
  p.cols = 4;
  write_synthetic(SyntheticKind::Grid, p, dir.path);
  write_file(dir.path / "events.json", R"([{"t": 0, "kind": "inject", "target": 0, "vehicles": 200}])");
  ScenarioConfig cfg = load_config(dir.path / "scenario.cfg");
  cfg.total_steps = 20;
  cfg.events_path = dir.path / "events.json";
  cfg.out_dir = dir.path / "a";
  run(cfg);
  cfg.out_dir = dir.path / "b";
  run(cfg);
  const auto a = directory_bytes(dir.path / "a" / "snapshots");
  const auto b = directory_bytes(dir.path / "b" / "snapshots");
  CHECK(a.size() == 3);
  CHECK(a == b);
  cfg.colony.seed = 77;
  cfg.out_dir = dir.path / "c";
  run(cfg);
  CHECK(directory_bytes(dir.path / "c" / "snapshots") != a);
}

TEST_CASE("degenerate scenarios complete") {
  TempDir dir("degenerate");
  SUBCASE("no buildings and no events") {
    SyntheticParams p;
    p.ring_nodes = 4;
    write_synthetic(SyntheticKind::Ring, p, dir.path);
    write_file(dir.path / "s.cfg", "network_path = network.geojson\ntotal_steps = 4\nsnapshot_every = 2\ndt = 0.5\n");
    const RunReport r = run(load_config(dir.path / "s.cfg"));
    CHECK(r.snapshots == 2);
    CHECK(r.on_network_end == 0.0);
    const json snap = json::parse(slurp(dir.path / "out" / "snapshots" / "snapshot_000004.geojson"));
    CHECK(snap["time"] == 2.0);
    for (const auto& f : snap["features"])
      if (f["properties"]["kind"] == "community") {
        CHECK(f["properties"]["vehicles_to_evacuate"] == 0.0);
        if (!f["properties"]["exit_arcs"].empty()) CHECK(f["properties"]["clearance_s"] == 0.0);
      }
  }
  SUBCASE("single node network") {
    json net = fixtures::collection({fixtures::road("loop", {{0, 0}, {50, 0}, {50, 50}, {0, 0}}, false)});
    write_file(dir.path / "one.geojson", net.dump());
    write_file(dir.path / "b.geojson", fixtures::collection({fixtures::building("h", 10, 10, 5, 5)}).dump());
    write_file(dir.path / "e.json", R"([{"t": 0, "kind": "inject", "target": 0, "vehicles": 3}])");
    write_file(dir.path / "s.cfg",
               "network_path = one.geojson\nbuildings_path = b.geojson\nevents_path = e.json\n"
               "total_steps = 3\nsnapshot_every = 1\ndt = 1\n");
    const RunReport r = run(load_config(dir.path / "s.cfg"));
    CHECK(r.snapshots == 3);
    CHECK(r.placed == 3.0);
    const json snap = json::parse(slurp(dir.path / "out" / "snapshots" / "snapshot_000003.geojson"));
    REQUIRE(snap["features"].size() == 2);
    CHECK(snap["features"][0]["properties"]["population_day"] == 5);
    CHECK(snap["features"][0]["properties"]["clearance_s"].is_null());
    CHECK(snap["features"][0]["properties"]["category"] == 5);
  }
}

TEST_CASE("run surfaces module errors") {
  TempDir dir("errors");
  write_file(dir.path / "net.geojson", "[]");
  write_file(dir.path / "s.cfg", "network_path = net.geojson\ntotal_steps = 1\nsnapshot_every = 1\ndt = 1\n");
  CHECK_THROWS_AS(run(load_config(dir.path / "s.cfg")), ParseError);
  write_file(dir.path / "net.geojson", fixtures::collection({fixtures::road("a", {{0, 0}, {10, 0}})}).dump());
  write_file(dir.path / "s.cfg",
             "network_path = net.geojson\ntotal_steps = 1\nsnapshot_every = 1\ndt = 1\nbbox = 100,100,200,200\n");
  CHECK_THROWS_AS(run(load_config(dir.path / "s.cfg")), OutsideBoundsError);
  ScenarioConfig bad = parse_config(kMinimal, dir.path).config;
  bad.dt = -1;
  CHECK_THROWS_AS(run(bad), ConfigError);
}
