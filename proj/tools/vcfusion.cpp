#include "vcfusion/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char ** argv)
{
  CLI::App app{"Vision-cloud fusion pipeline: simulation, identification, prediction, closed loop"};
  app.require_subcommand(1);

  const std::map<std::string, std::string> about{
    {"simulate", "run the highway scenario and write trajectories, detections, twins and depth maps"},
    {"fuse-eval", "score fused and baseline identification on the synthetic corpus"},
    {"train", "label lane-change windows on the training seeds and fit the classifier"},
    {"predict-eval", "filter per-vehicle prediction traces and score them"},
    {"closed-loop", "paired guided/baseline runs with safety and comfort reports"},
  };

  vcfusion::CommandRequest req;
  for (const auto & name : vcfusion::command_names()) {
    auto * sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", req.config_path, "JSON run configuration")->required();
    sub->add_option("--out", req.out, "output directory (overrides output_dir)");
    sub->add_option("--seeds", req.seeds, "seed list override, e.g. 1,2,10-14");
    sub->callback([&req, name] { req.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return vcfusion::exit_config_error;
  }
  return vcfusion::run_command(req, std::cerr);
}
