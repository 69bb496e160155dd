// ersim: run one experiment recipe from a config file or a named preset.
//
//   ersim echo --preset fig4e_echo --out runs/echo
//   ersim g2 --config my_g2.ini --seed 7
//   ersim presets [--write DIR] [--show NAME]
//
// Exit codes: 0 success, 2 invalid configuration, 3 fit did not converge,
// 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ersim/config.hpp"
#include "ersim/errors.hpp"
#include "ersim/experiments.hpp"
#include "ersim/presets.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitNoConvergence = 3;

struct RunArgs {
  std::string config_path;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int run_experiment(const std::string& experiment, const RunArgs& args) {
  using namespace ersim;
  config::Config cfg;
  if (!args.config_path.empty() && !args.preset.empty())
    throw ValidationError({"give either --config or --preset, not both"});
  if (!args.config_path.empty())
    cfg = config::load(args.config_path);
  else if (!args.preset.empty())
    cfg = presets::load(args.preset);

  if (cfg.experiment.empty())
    cfg.experiment = experiment;
  else if (cfg.experiment != experiment)
    throw ValidationError({"experiment: config is for '" + cfg.experiment + "', not '" + experiment + "'"});
  if (args.seed) cfg.seed = args.seed;

  std::filesystem::path out = !args.out.empty() ? args.out : !cfg.out.empty() ? cfg.out : "ersim_out/" + experiment;
  const auto report = run::run(cfg, out);

  std::printf("%s  digest %s  seed %llu\n", report.experiment.c_str(), report.config_digest.c_str(),
              static_cast<unsigned long long>(report.seed));
  for (const auto& [k, v] : report.summary) std::printf("  %-28s %.10g\n", k.c_str(), v);
  std::printf("  outputs in %s\n", out.string().c_str());
  if (!report.fit_converged) {
    std::fprintf(stderr, "ersim: fit did not converge: %s\n", report.fit_message.c_str());
    return kExitNoConvergence;
  }
  return kExitOk;
}

int presets_command(const std::string& write_dir, const std::string& show) {
  using namespace ersim;
  if (!show.empty()) {
    const auto* p = presets::find(show);
    if (!p) throw ValidationError({"preset: unknown preset '" + show + "'"});
    std::cout << p->text;
    return kExitOk;
  }
  if (!write_dir.empty()) std::filesystem::create_directories(write_dir);
  for (const auto& p : presets::all()) {
    std::printf("%-18s %.*s\n", std::string(p.name).c_str(), static_cast<int>(p.summary.size()), p.summary.data());
    if (!write_dir.empty()) {
      std::ofstream out(std::filesystem::path(write_dir) / (std::string(p.name) + ".ini"), std::ios::binary);
      out << p.text;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Er emitter simulation and estimation toolkit"};
  app.set_version_flag("--version", std::string(ERSIM_VERSION));
  app.require_subcommand(1);

  RunArgs args;
  std::uint64_t seed = 0;
  std::string selected;
  for (std::string_view name : ersim::run::kExperiments) {
    auto* sub = app.add_subcommand(std::string(name), "run the " + std::string(name) + " recipe");
    sub->add_option("--config", args.config_path, "config file")->check(CLI::ExistingFile);
    sub->add_option("--preset", args.preset, "named preset (see 'ersim presets')");
    sub->add_option("--out", args.out, "output directory (created if missing)");
    sub->add_option("--seed", seed, "64-bit seed, overrides the config");
    sub->callback([&selected, name] { selected = std::string(name); });
  }
  std::string write_dir, show;
  auto* pre = app.add_subcommand("presets", "list presets, print one, or write them as config files");
  pre->add_option("--write", write_dir, "directory to write NAME.ini files into");
  pre->add_option("--show", show, "print one preset");
  pre->callback([&selected] { selected = "presets"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (selected == "presets") return presets_command(write_dir, show);
    for (auto* sub : app.get_subcommands())
      if (sub->count("--seed") > 0) args.seed = seed;
    return run_experiment(selected, args);
  } catch (const ersim::ValidationError& e) {
    std::fprintf(stderr, "ersim: %s\n", e.what());
    return kExitInvalid;
  } catch (const ersim::ConfigError& e) {
    std::fprintf(stderr, "ersim: invalid configuration: %s\n", e.what());
    return kExitInvalid;
  } catch (const ersim::DomainError& e) {
    std::fprintf(stderr, "ersim: invalid configuration: %s\n", e.what());
    return kExitInvalid;
  } catch (const ersim::FormatError& e) {
    std::fprintf(stderr, "ersim: malformed input: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ersim: %s\n", e.what());
    return kExitError;
  }
}
