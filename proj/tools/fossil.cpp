#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "fossil/commands.hpp"
#include "fossil/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"FOSSIL sample weighting: data, curriculum, training, regret"};
  app.set_version_flag("--version", fossil::kVersion);
  app.require_subcommand(1);

  fossil::CliOptions opts;
  app.add_option("--config", opts.config_path, "Experiment config JSON file");
  app.add_option("--seed-list", opts.seed_list,
                 "Comma-separated seeds overriding the config");
  app.add_flag("--force", opts.force, "Overwrite existing output files");
  app.add_option("--workers", opts.workers,
                 "Worker threads for fold x seed units (default from config)");
  app.add_option("--out", opts.out_dir,
                 "Output directory (overrides config output.dir and FOSSIL_OUT)");

  std::string probs_path, checkpoint_path, report_a, report_b;
  auto* c_gen = app.add_subcommand("generate", "Write the synthetic dataset");
  auto* c_diff = app.add_subcommand(
      "difficulty", "Score difficulty and build the curriculum partition");
  c_diff->add_option("--probs", probs_path,
                     "Probability CSV (sample_id,label,p_0,...)");
  auto* c_train =
      app.add_subcommand("train", "Run seeded stratified CV training");
  auto* c_regret = app.add_subcommand(
      "regret", "Simulate weighted projected OGD against the regret bound");
  auto* c_stats = app.add_subcommand(
      "stats", "Paired statistical comparison of two training reports");
  c_stats->add_option("report_a", report_a, "First training report JSON")
      ->required();
  c_stats->add_option("report_b", report_b, "Second training report JSON")
      ->required();
  auto* c_perturb = app.add_subcommand(
      "perturb", "Robustness table for a trained checkpoint");
  c_perturb->add_option("--checkpoint", checkpoint_path,
                        "Checkpoint JSON written by train")
      ->required();

  // Let global flags appear after the subcommand too.
  for (auto* sc : {c_gen, c_diff, c_train, c_regret, c_stats, c_perturb})
    sc->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_stats->parsed()) {
      fossil::Workspace ws(fossil::resolve_out_dir(opts.out_dir, ""),
                           opts.force);
      return fossil::cmd_stats(ws, report_a, report_b);
    }
    const fossil::ExperimentConfig cfg = fossil::load_config(opts);
    fossil::Workspace ws(
        fossil::resolve_out_dir(opts.out_dir, cfg.output_dir), opts.force);
    ws.read_input(opts.config_path);  // manifest lists the config too
    if (c_gen->parsed()) return fossil::cmd_generate(cfg, ws);
    if (c_diff->parsed()) return fossil::cmd_difficulty(cfg, ws, probs_path);
    if (c_train->parsed()) return fossil::cmd_train(cfg, ws);
    if (c_regret->parsed()) return fossil::cmd_regret(cfg, ws);
    if (c_perturb->parsed()) return fossil::cmd_perturb(cfg, ws, checkpoint_path);
    std::fprintf(stderr, "error: no subcommand selected\n");
    return 1;
  } catch (const fossil::RefusalError& e) {
    std::fprintf(stderr, "refused: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
