// gft_router: distances, routing, training, simulation and ablation from the command line.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gft/pipeline.hpp"

namespace {

struct Flags {
  std::optional<std::string> config, data, format, target, strategy, out, eps1;
  std::optional<double> tau, epsilon, label_scale;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> kappa_cap;
  bool explain = false;
};

void add_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON config file");
  cmd.add_option("--data", f.data, "data file");
  cmd.add_option("--format", f.format, "data format")->check(CLI::IsMember({"csv", "jsonl"}));
  cmd.add_option("--target", f.target, "target domain id");
  cmd.add_option("--strategy", f.strategy, "routing strategy")
      ->check(CLI::IsMember({"nn", "sp", "mst", "tgft", "all"}));
  cmd.add_option("--tau", f.tau, "edge pruning threshold");
  cmd.add_option("--epsilon", f.epsilon, "Sinkhorn regularization");
  cmd.add_option("--label-scale", f.label_scale, "label coordinate scale in the joint embedding");
  cmd.add_option("--seed", f.seed, "run seed");
  cmd.add_option("--kappa-cap", f.kappa_cap, "maximum path length for tgft");
  cmd.add_option("--out", f.out, "output directory");
  cmd.add_flag("--explain", f.explain, "write every candidate's bound breakdown");
  cmd.add_option("--eps1", f.eps1, "first-stage loss term")->check(CLI::IsMember({"trained", "zero"}));
}

gft::RunConfig resolve(const Flags& f) {
  gft::RunConfig cfg;
  if (f.config) gft::load_config_file(cfg, *f.config);
  if (f.data) cfg.data = *f.data;
  if (f.format) cfg.format = gft::parse_data_format(*f.format);
  if (f.target) cfg.target = *f.target;
  if (f.strategy) cfg.strategy = *f.strategy;
  if (f.tau) cfg.tau = *f.tau;
  if (f.epsilon) cfg.sinkhorn.epsilon = *f.epsilon;
  if (f.label_scale) cfg.sinkhorn.label_scale = *f.label_scale;
  if (f.seed) cfg.seed = *f.seed;
  if (f.kappa_cap) cfg.kappa_cap = *f.kappa_cap;
  if (f.out) cfg.out = *f.out;
  if (f.explain) cfg.explain = true;
  if (f.eps1) cfg.eps1_mode = *f.eps1 == "zero" ? gft::Eps1Mode::zero : gft::Eps1Mode::trained;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradual fine-tuning router"};
  app.require_subcommand(1);
  Flags flags;
  for (const char* name : {"distances", "route", "train", "simulate", "ablate"}) add_flags(*app.add_subcommand(name), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = resolve(flags);
    if (cmd == "distances") gft::cmd_distances(cfg);
    else if (cmd == "route") gft::cmd_route(cfg);
    else if (cmd == "train") gft::cmd_train(cfg);
    else if (cmd == "simulate") gft::cmd_simulate(cfg);
    else gft::cmd_ablate(cfg);
    return 0;
  } catch (const gft::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gft::RoutingError& e) {
    std::cerr << "routing infeasible: " << e.what() << "\n";
    return 3;
  } catch (const gft::EvaluationError& e) {
    std::cerr << "evaluation impossible: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
