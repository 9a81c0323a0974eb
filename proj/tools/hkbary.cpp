// Command-line frontend: parses a JSON experiment description, runs the
// requested pipeline, and writes CSV outputs for external plotting.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hkbary/config.hpp"
#include "hkbary/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"particle barycenters of unbalanced measures with certified gaps"};
  app.require_subcommand(1);

  struct Common {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    double f_threshold_scale = -1.0;  // <0 means: leave the config's value
  };
  Common common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON experiment description")
        ->required();
    sub->add_option("--out", common.out_dir, "output directory (overrides config)");
    sub->add_option("--seed", common.seed, "sampling seed (overrides config)");
    sub->add_option("--f-threshold-scale", common.f_threshold_scale,
                    "near-active display threshold: F >= 1 - exp(-scale)/kappa");
  };

  add_common(app.add_subcommand("solve", "independent solve at each length scale"));
  add_common(app.add_subcommand("sweep", "warm-started solve along the length scales"));
  add_common(app.add_subcommand("certify", "solve, then print certificate summaries"));
  add_common(app.add_subcommand("oracle", "fixed-grid reference solve (discrete inputs)"));
  add_common(app.add_subcommand("sample", "draw the input point cloud and write it"));
  add_common(app.add_subcommand("dendrogram", "single-linkage hierarchy of the input"));

  CLI11_PARSE(app, argc, argv);

  const CLI::App* picked = app.get_subcommands().front();
  const auto sub = hkbary::parse_subcommand(picked->get_name());
  if (!sub) {
    std::cerr << "unknown subcommand\n";
    return 2;
  }

  try {
    hkbary::ConfigOverrides overrides;
    if (!common.out_dir.empty()) overrides.output_dir = common.out_dir;
    overrides.seed = common.seed;
    hkbary::ExperimentConfig cfg = hkbary::load_config_file(common.config_path, overrides);
    if (common.f_threshold_scale >= 0.0) cfg.f_threshold_scale = common.f_threshold_scale;
    return hkbary::run(cfg, *sub, std::cout);
  } catch (const hkbary::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
