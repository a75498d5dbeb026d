#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "snl/commands.hpp"

namespace {

constexpr int kValidationExit = 2;
constexpr int kRuntimeExit = 1;

snl::GridBounds parse_bounds(const std::vector<double>& values) {
  if (values.size() != 4) throw snl::ConfigError("--bounds takes four numbers: lo0 hi0 lo1 hi1");
  return {values[0], values[1], values[2], values[3]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-based model training with the self-normalised log-likelihood"};
  app.require_subcommand(1);

  snl::GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "write train/validation/test splits of a dataset");
  generate->add_option("--dataset", gen.dataset, "dataset name")->required();
  generate->add_option("--seed", gen.seed, "generation seed");
  generate->add_option("--size", gen.size, "total rows (0 = dataset default)");
  generate->add_option("--out", gen.out_dir, "output directory");

  std::string config_path;
  std::string out_override;
  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("config", config_path, "flat JSON config")->required();
  train->add_option("--out", out_override, "override output.directory");

  snl::EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "estimate l_IS and l_SNL for a checkpoint");
  eval->add_option("checkpoint", ev.checkpoint, "checkpoint file")->required();
  eval->add_option("--data", ev.data_dir, "dataset directory (default: regenerate from the checkpoint)");
  eval->add_option("--samples,-M", ev.samples, "proposal samples");
  eval->add_option("--seeds", ev.seeds, "evaluation seeds")->delimiter(',');
  eval->add_option("--splits", ev.splits, "splits to evaluate")->delimiter(',');
  eval->add_option("--out", ev.out, "report file");

  snl::GridOptions grid_opts;
  std::vector<double> bounds = {-4.0, 4.0, -4.0, 4.0};
  auto* grid = app.add_subcommand("grid", "export energies on a regular grid");
  grid->add_option("checkpoint", grid_opts.checkpoint, "checkpoint file")->required();
  grid->add_option("--bounds", bounds, "lo0 hi0 lo1 hi1")->expected(4)->delimiter(',');
  grid->add_option("--resolution", grid_opts.resolution, "nodes per axis");
  grid->add_option("--out", grid_opts.out, "grid file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationExit;
  }

  try {
    if (*generate) {
      const auto s = snl::cmd_generate(gen);
      fmt::print("train {} validation {} test {}\n", s.rows[0], s.rows[1], s.rows[2]);
    } else if (*train) {
      snl::RunConfig config = snl::load_run_config(config_path);
      if (!out_override.empty()) config.output_directory = out_override;
      const auto s = snl::cmd_train(config);
      fmt::print("epochs {} best epoch {} final train_snl {:.6f} val_snl {:.6f}\nwrote {}\n", s.epochs, s.best_epoch,
                 s.last.train_snl, s.last.val_snl, s.run_dir);
    } else if (*eval) {
      const auto s = snl::cmd_eval(ev);
      fmt::print("{}", snl::format_eval_table(s));
    } else if (*grid) {
      grid_opts.bounds = parse_bounds(bounds);
      const auto rows = snl::cmd_grid(grid_opts);
      fmt::print("wrote {} rows to {}\n", rows, grid_opts.out);
    }
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kValidationExit;
  } catch (const snl::UnsupportedError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kValidationExit;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeExit;
  }
  return 0;
}
