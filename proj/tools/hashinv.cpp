#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hashinv/errors.hpp"
#include "hashinv/harness.hpp"
#include "hashinv/kernels.hpp"

namespace {

const char* error_class(const std::exception& e) {
  using namespace hashinv;
  if (dynamic_cast<const config_error*>(&e)) return "config";
  if (dynamic_cast<const input_error*>(&e)) return "input";
  if (dynamic_cast<const parse_error*>(&e)) return "parse";
  if (dynamic_cast<const dimension_error*>(&e)) return "dimension";
  if (dynamic_cast<const io_error*>(&e)) return "io";
  if (dynamic_cast<const state_error*>(&e)) return "state";
  if (dynamic_cast<const internal_error*>(&e)) return "internal";
  return "unexpected";
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool out_required = true) {
  cmd->add_option("--config", o.config_path, "config json file (default: built-in defaults)");
  cmd->add_option("--set", o.overrides, "override, path.to.key=value (repeatable)")
      ->take_all();
  auto* out = cmd->add_option("-o,--out", o.out_dir, "run directory");
  if (out_required) out->required();
  cmd->add_option("--seed", o.seed, "override master_seed")
      ->each([&o](const std::string&) { o.seed_set = true; });
}

// Resolve the effective config: file (or dir/config.json fallback, or
// defaults), then --set overrides, then --seed.
hashinv::ExperimentConfig resolve_config(const CommonOpts& o, bool prefer_run_dir) {
  using nlohmann::json;
  json j;
  std::string path = o.config_path;
  if (path.empty() && prefer_run_dir &&
      std::filesystem::exists(o.out_dir + "/config.json"))
    path = o.out_dir + "/config.json";
  if (!path.empty()) {
    j = json::parse(hashinv::read_text(path), nullptr, false);
    if (j.is_discarded()) throw hashinv::parse_error("config " + path + ": invalid json");
  } else {
    j = hashinv::config_to_json(hashinv::default_config());
  }
  for (const auto& ov : o.overrides) hashinv::apply_override(j, ov);
  if (o.seed_set) j["master_seed"] = o.seed;
  return hashinv::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model-inversion experiments against a sign-hash oracle"};
  app.require_subcommand(0, 1);

  CommonOpts gen_o, est_o, atk_o, swp_o;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  std::vector<std::string> report_dirs;
  std::string report_out;
  bool print_simd = false;

  auto* gen = app.add_subcommand("gen", "generate world, code sets and ground-truth centers");
  add_common(gen, gen_o);
  auto* est = app.add_subcommand("estimate", "estimate hash centers from observed codes");
  add_common(est, est_o);
  auto* atk = app.add_subcommand("attack", "invert estimated centers through the oracle");
  add_common(atk, atk_o);
  auto* swp = app.add_subcommand("sweep", "rerun the pipeline across one parameter");
  add_common(swp, swp_o);
  swp->add_option("--param", sweep_param, "config path to vary, e.g. estimation.r")->required();
  swp->add_option("--values", sweep_values, "values to try (comma separated or repeated)")
      ->required()
      ->delimiter(',');
  auto* rep = app.add_subcommand("report", "merge reports from finished run directories");
  rep->add_option("dirs", report_dirs, "run directories")->required();
  rep->add_option("-o,--out", report_out, "output directory")->required();
  app.add_flag("--simd", print_simd, "print the active distance kernel and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (print_simd) {
      std::printf("%s\n", hashinv::kernels::active_name());
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::fprintf(stderr, "%s", app.help().c_str());
      return 1;
    }
    if (gen->parsed()) {
      hashinv::cmd_gen(resolve_config(gen_o, false), gen_o.out_dir);
      std::printf("gen: wrote %s\n", gen_o.out_dir.c_str());
    } else if (est->parsed()) {
      hashinv::cmd_estimate(resolve_config(est_o, true), est_o.out_dir);
      std::printf("estimate: wrote %s\n", est_o.out_dir.c_str());
    } else if (atk->parsed()) {
      hashinv::cmd_attack(resolve_config(atk_o, true), atk_o.out_dir);
      std::printf("attack: wrote %s\n", atk_o.out_dir.c_str());
    } else if (swp->parsed()) {
      hashinv::cmd_sweep(resolve_config(swp_o, false), sweep_param, sweep_values, swp_o.out_dir);
      std::printf("sweep: wrote %s\n", swp_o.out_dir.c_str());
    } else if (rep->parsed()) {
      hashinv::cmd_report(report_dirs, report_out);
      std::printf("report: wrote %s\n", report_out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s: %s\n", error_class(e), e.what());
    return hashinv::exit_code_for(e);
  }
  return 0;
}
