// f4nls: run a fourth-order NLS experiment from a JSON config.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "f4nls/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fourth-order NLS experiments: evolve, decay, picard, selfsim, eps-limit, radial, norms"};
  std::string config_path, out_dir;
  bool dry_run = false;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides out_dir)");
  app.add_flag("--dry-run", dry_run, "validate and print the resolved config, compute nothing");
  app.add_option("--threads", threads, "worker threads for sweeps (overrides threads)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for random initial data (overrides seed)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : f4nls::exit_config;
  }

  f4nls::RunConfig rc;
  try {
    rc = f4nls::parse_config(config_path, seed);
  } catch (const f4nls::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return f4nls::exit_config;
  }
  if (threads > 0) {
    rc.threads = threads;
    rc.resolved["threads"] = threads;
  }
  if (!out_dir.empty()) {
    rc.out_dir = out_dir;
    rc.resolved["out_dir"] = out_dir;
  }
  if (dry_run) {
    std::cout << rc.resolved.dump(2) << '\n';
    return f4nls::exit_pass;
  }
  return f4nls::run(rc, rc.out_dir);
}
