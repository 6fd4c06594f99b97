// Command-line front end. Talks to the library only through levikin.h.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "levikin.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Arguments {
  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = ".";
  bool oracle = false;
  std::string unit = "mbar";
  std::string input;
};

int exit_code_for(lvk_status status) {
  switch (status) {
    case LVK_OK: return kExitOk;
    case LVK_ERR_INVALID_ARGUMENT:
    case LVK_ERR_CONFIG:
    case LVK_ERR_IO: return kExitConfig;
    default: return kExitNumeric;
  }
}

int report(lvk_status status) {
  std::fprintf(stderr, "levikin: %s: %s\n", lvk_status_name(status), lvk_last_error_message());
  return exit_code_for(status);
}

int write_artifacts(const lvk_result* result, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    std::fprintf(stderr, "levikin: cannot create '%s': %s\n", dir.c_str(), ec.message().c_str());
    return kExitConfig;
  }
  for (std::size_t i = 0; i < lvk_result_count(result); ++i) {
    std::size_t size = 0;
    const void* data = lvk_result_data(result, i, &size);
    const std::filesystem::path path = std::filesystem::path(dir) / lvk_result_name(result, i);
    std::ofstream os(path, std::ios::binary);
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!os) {
      std::fprintf(stderr, "levikin: cannot write '%s'\n", path.string().c_str());
      return kExitConfig;
    }
    std::printf("%s\n", path.string().c_str());
  }
  return kExitOk;
}

int run(const std::string& command, const Arguments& args) {
  lvk_scenario* scenario = nullptr;
  lvk_status status = lvk_scenario_load(args.config.c_str(), &scenario);
  if (status != LVK_OK) return report(status);

  lvk_run_options options;
  lvk_run_options_init(&options);
  options.seed = args.seed;
  options.threads = args.threads;
  options.oracle = args.oracle ? 1 : 0;
  options.unit = args.unit == "Pa" ? LVK_UNIT_PA : LVK_UNIT_MBAR;
  options.input = args.input.empty() ? nullptr : args.input.c_str();

  lvk_result* result = nullptr;
  status = lvk_run(scenario, command.c_str(), &options, &result);
  lvk_scenario_destroy(scenario);
  if (status != LVK_OK) return report(status);
  const int code = write_artifacts(result, args.out);
  lvk_result_destroy(result);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Levitated-particle recoil heating and Langevin dynamics"};
  app.set_version_flag("--version", std::string(lvk_version()));
  app.require_subcommand(1);

  Arguments args;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"rates", "Photon recoil heating rates (closed form and quadrature)"},
      {"simulate", "Integrate the Langevin equation and report binned T_cm"},
      {"reheat", "Release-reheat protocol with feedback switched off"},
      {"sweep", "Reheat protocol over a pressure list plus a joint fit"},
      {"psd", "Position spectra and Lorentzian linewidth fits"},
      {"fit", "Refit reheat or sweep CSV output"},
  };
  std::string selected;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", args.config, "Scenario JSON file")->required();
    sub->add_option("--seed", args.seed, "Random seed");
    sub->add_option("--threads", args.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("-o,--out", args.out, "Output directory");
    sub->add_option("--unit", args.unit, "Pressure unit of sweep/fit output")
        ->check(CLI::IsMember({"mbar", "Pa"}));
    if (name == "rates") sub->add_flag("--oracle", args.oracle, "Also evaluate the refined grid");
    if (name == "fit") sub->add_option("--input", args.input, "CSV to fit");
    sub->callback([&selected, n = name] { selected = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  return run(selected, args);
}
