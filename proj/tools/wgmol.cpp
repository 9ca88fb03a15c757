#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "wgmol/config.hpp"
#include "wgmol/tasks.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Waveguide-coupled artificial molecule toolkit"};
  std::string config_path, task, figure, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> workers;
  std::optional<double> tolerance;
  bool overwrite = false, print_config = false;

  app.add_option("--config", config_path, "JSON run configuration (frequencies in Hz)")->check(CLI::ExistingFile);
  app.add_option("--task", task, "eigen | dipoles | reflectance | fit | raman | bell | autler | shots");
  app.add_option("--figure", figure, "fig2 | fig3 | fig4 | figS2 | figS3 | figS5");
  app.add_option("--out", out_dir, std::string("output directory (default: $") + wgmol::kOutDirEnv + " or ./" +
                                       wgmol::kDefaultOutDir + ")");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--workers", workers, "worker threads for sweeps");
  app.add_option("--tolerance", tolerance, "relative tolerance of the master-equation integrator");
  app.add_flag("--overwrite", overwrite, "replace the files of a previous run in the output directory");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  app.get_option("--task")->excludes(app.get_option("--figure"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  wgmol::RunConfig cfg;
  if (!config_path.empty()) cfg = wgmol::load_config(config_path);
  if (!task.empty()) cfg.task = task;
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  if (tolerance) cfg.tolerance = *tolerance;
  wgmol::validate(cfg);

  if (print_config) {
    std::cout << wgmol::serialize(cfg);
    return 0;
  }
  if (config_path.empty() && task.empty() && figure.empty()) {
    std::cerr << "nothing to do: give --config, --task or --figure\n";
    return 2;
  }

  wgmol::OutputOptions out;
  out.dir = out_dir;
  out.overwrite = overwrite;
  const auto manifest = figure.empty() ? wgmol::run_task(cfg, out) : wgmol::reproduce_figure(figure, cfg, out);
  for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << manifest.files.size() + 1 << " files to " << manifest.directory.string() << " ("
            << manifest.task << ", " << wgmol::io::format_number(manifest.wall_seconds) << " s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const wgmol::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
