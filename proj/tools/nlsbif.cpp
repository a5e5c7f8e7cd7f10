#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "nlsbif/cli.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary states and symmetry-breaking bifurcations of the 1D NLS with a potential"};
  app.set_version_flag("--version", nlsbif::cli::kVersion);

  std::string scenario, config, out_flag;
  int workers = 1;
  bool allow_unverified = false;
  app.add_option("scenario", scenario, "trace | pitchfork | scaling | localized | reproduce_figure")->required();
  app.add_option("--config", config, "scenario configuration (.ini)")->required();
  app.add_option("--out", out_flag, "output directory (overrides [output] dir; default ./out)");
  app.add_option("--workers", workers, "threads for independent branches and samples")
      ->check(CLI::Range(1, static_cast<int>(std::max(1u, std::thread::hardware_concurrency()) * 4)));
  app.add_flag("--allow-unverified", allow_unverified, "emit states that miss the stationarity tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  using namespace nlsbif;
  try {
    const auto sc = cli::parse_scenario(scenario);
    const auto cf = ConfigFile::load(config);
    auto rc = cli::parse_run_config(cf, sc);
    const std::string out_dir = !out_flag.empty() ? out_flag : rc.out_dir.value_or("out");
    const auto res = cli::run(std::move(rc), config, out_dir, {workers, allow_unverified});
    for (const auto& line : res.summary) std::cout << line << '\n';
    std::cout << "wrote " << res.written.size() << " files to " << out_dir << " in " << res.wall_seconds << " s\n";
    return kOk;
  } catch (const cli::StageError& e) {
    std::cerr << "nlsbif: " << e.what() << '\n';
    return e.code() == Errc::ConfigError ? kConfigError : kNumericalFailure;
  } catch (const Error& e) {
    std::cerr << "nlsbif: " << e.what() << '\n';
    return e.code() == Errc::ConfigError ? kConfigError : kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "nlsbif: " << e.what() << '\n';
    return kNumericalFailure;
  }
}
