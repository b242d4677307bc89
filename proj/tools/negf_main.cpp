// Command-line front-end: solve | bench | partition, each driven by a JSON
// config.  Exit codes: 0 success, 2 configuration error, 3 numerical failure.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "negf/config.hpp"
#include "negf/errors.hpp"
#include "negf/run.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Green's function device solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::uint64_t seed = 0;

  for (const char* name : {"solve", "bench", "partition"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "energy-point worker threads");
    sub->add_option("--seed", seed, "random seed override");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();

  try {
    negf::RunConfig cfg = negf::load_run_config(config_path);
    if (sub->count("--out") > 0) cfg.out_dir = out_dir;
    if (sub->count("--threads") > 0) {
      cfg.threads = threads;
    } else if (const char* env = std::getenv("NEGF_THREADS")) {
      cfg.threads = std::atoi(env);
    }
    if (cfg.threads < 1)
      throw negf::ConfigError("thread count must be at least 1");
    if (sub->count("--seed") > 0) {
      cfg.seed = seed;
      cfg.synthetic.seed = seed;
    }

    if (sub->get_name() == "solve")
      negf::cmd_solve(cfg);
    else if (sub->get_name() == "bench")
      negf::cmd_bench(cfg);
    else
      negf::cmd_partition(cfg);
    return 0;
  } catch (const negf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const negf::PartitionViolation& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const negf::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
