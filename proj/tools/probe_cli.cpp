#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "probe/demonstrators.hpp"
#include "probe/experiment.hpp"

using namespace probe;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_root;
  std::vector<std::uint64_t> seeds;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("-c,--config", o.config_path, "key=value config file");
  app->add_option("-s,--set", o.overrides, "override a config key (key=value), repeatable");
  app->add_option("-o,--out", o.out_root, std::string("output root (default: config output_root, $") + kRunsRootEnv +
                                              ", then runs)");
  app->add_option("--seed", o.seeds, "run seeds (overrides seed and seeds)");
}

ExperimentConfig load_config(const CommonOptions& o) {
  KvDocument doc = o.config_path.empty() ? KvDocument() : KvDocument::load(o.config_path);
  apply_overrides(doc, o.overrides);
  if (!o.seeds.empty()) {
    std::string list;
    for (std::size_t i = 0; i < o.seeds.size(); ++i) list += (i ? "," : "") + std::to_string(o.seeds[i]);
    doc.set("seed", static_cast<long long>(o.seeds.front()));
    doc.set("seeds", list);
  }
  return parse_experiment_config(doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning to model a demonstrator by probing it"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string checkpoint;
  std::string tables;

  auto* train = app.add_subcommand("train", "train the tracker, π_d and the probing learner");
  add_common(train, common);

  auto* eval = app.add_subcommand("eval", "action-prediction accuracy on an evaluation suite");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  eval->add_option("--tables", tables, "directory for the tables (default: the checkpoint's run)");

  auto* distill = app.add_subcommand("distill", "goal success of π_d acting in the demonstrator's place");
  add_common(distill, common);
  distill->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  distill->add_option("--tables", tables, "directory for the tables (default: the checkpoint's run)");

  auto* collab = app.add_subcommand("collab", "retrain the learner to help the demonstrator (construction)");
  add_common(collab, common);
  collab->add_option("--checkpoint", checkpoint, "pretrained construction model; trained first when absent");

  auto* compete = app.add_subcommand("compete", "retrain the learner to hinder the demonstrator (construction)");
  add_common(compete, common);
  compete->add_option("--checkpoint", checkpoint, "pretrained construction model; trained first when absent");

  auto* ablate = app.add_subcommand("ablate", "latent size x reward mode x seed grid with a shared suite");
  add_common(ablate, common);

  auto* replay = app.add_subcommand("replay", "ASCII trace of one episode");
  std::uint64_t replay_seed = 0;
  std::string replay_mode = "train";
  std::string replay_out;
  std::string planner_task;
  bool no_learner = false;
  replay->add_option("--checkpoint", checkpoint, "model checkpoint");
  replay->add_option("--seed", replay_seed, "episode seed");
  replay->add_option("--mode", replay_mode, "train or test layout")->check(CLI::IsMember({"train", "test"}));
  replay->add_flag("--no-learner", no_learner, "remove the learner from the episode");
  replay->add_option("--planner-trace", planner_task, "print the rule-based demonstrator's own trace for a task");
  replay->add_option("--output", replay_out, "write the trace here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    std::string text;
    if (replay->parsed()) {
      const Mode mode = replay_mode == "train" ? Mode::Train : Mode::Test;
      if (!planner_task.empty()) {
        const TaskId task = [&] {
          try {
            return parse_task(planner_task);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
          }
        }();
        text = is_grid_task(task) ? demonstrator_trace(reset_grid(task, mode, replay_seed))
                                  : demonstrator_trace(reset_sort(mode, replay_seed));
      } else {
        if (checkpoint.empty()) throw ConfigError("replay needs --checkpoint or --planner-trace");
        const MindModel model = load_model(read_checkpoint(checkpoint));
        text = replay_trace(model, {replay_seed, mode, !no_learner});
      }
      if (replay_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(replay_out, std::ios::binary);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + replay_out);
      }
      return kExitOk;
    }

    const ExperimentConfig config = load_config(common);
    CommandContext ctx;
    ctx.root = resolve_output_root(common.out_root, config);
    if (train->parsed()) return cmd_train(config, ctx);
    if (eval->parsed()) return cmd_eval(checkpoint, config, tables, ctx);
    if (distill->parsed()) return cmd_distill(checkpoint, config, tables, ctx);
    if (collab->parsed()) return cmd_transfer(TransferMode::Collaborate, checkpoint, config, ctx);
    if (compete->parsed()) return cmd_transfer(TransferMode::Compete, checkpoint, config, ctx);
    if (ablate->parsed()) return cmd_ablate(config, ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
