#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evacmap/evacmap.h"

namespace {

int report_failure(evacmap_status status) {
  std::cerr << evacmap_last_error() << "\n";
  return static_cast<int>(status);
}

void print_owned(char* text) {
  if (text == nullptr) return;
  std::cout << text << "\n";
  evacmap_free_string(text);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evacuation vulnerability mapping on road networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(evacmap_version()));

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  auto* run = app.add_subcommand("run", "Run a scenario and write snapshots");
  run->add_option("--config", config_path, "Scenario config file")->required();
  run->add_option("--seed", seed, "Override the RNG seed");
  run->add_option("--out", out_dir, "Override the output directory");

  auto* validate = app.add_subcommand("validate", "Check a config and its input files");
  validate->add_option("--config", config_path, "Scenario config file")->required();

  std::string kind;
  std::string gen_out;
  nlohmann::json params = nlohmann::json::object();
  std::optional<int> rows, cols, block_size, nodes, lanes;
  std::optional<double> spacing;
  std::optional<std::int64_t> pop_day, pop_night;
  auto* gen = app.add_subcommand("gen", "Write a synthetic network, buildings and config");
  gen->add_option("kind", kind, "grid | two-blocks | ring")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--rows", rows, "Grid rows");
  gen->add_option("--cols", cols, "Grid columns");
  gen->add_option("--block-size", block_size, "Nodes per block");
  gen->add_option("--nodes", nodes, "Ring nodes");
  gen->add_option("--spacing", spacing, "Node spacing in metres");
  gen->add_option("--pop-day", pop_day, "Day population per building");
  gen->add_option("--pop-night", pop_night, "Night population per building");
  gen->add_option("--lanes", lanes, "Lanes per road");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return EVACMAP_CONFIG_ERROR;
  }

  if (run->parsed()) {
    const std::uint64_t seed_value = seed.value_or(0);
    char* report = nullptr;
    const evacmap_status status =
        evacmap_run(config_path.c_str(), seed ? &seed_value : nullptr, out_dir ? out_dir->c_str() : nullptr, &report);
    if (status != EVACMAP_OK) return report_failure(status);
    print_owned(report);
    return 0;
  }

  if (validate->parsed()) {
    char* diags = nullptr;
    const evacmap_status status = evacmap_validate(config_path.c_str(), &diags);
    print_owned(diags);
    if (status != EVACMAP_OK && diags == nullptr) return report_failure(status);
    return static_cast<int>(status);
  }

  if (rows) params["rows"] = *rows;
  if (cols) params["cols"] = *cols;
  if (block_size) params["block_size"] = *block_size;
  if (nodes) params["nodes"] = *nodes;
  if (spacing) params["spacing"] = *spacing;
  if (pop_day) params["pop_day"] = *pop_day;
  if (pop_night) params["pop_night"] = *pop_night;
  if (lanes) params["lanes"] = *lanes;
  const std::string params_text = params.dump();
  const evacmap_status status = evacmap_generate(kind.c_str(), params_text.c_str(), gen_out.c_str());
  if (status != EVACMAP_OK) return report_failure(status);
  return 0;
}
