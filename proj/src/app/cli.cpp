// Command-line driver.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 fit failure,
// 4 I/O error, 1 anything else.

#include "divtherm/app/cli.hpp"

#include <CLI11.hpp>
#include <ostream>

#include "divtherm/app/commands.hpp"
#include "divtherm/errors.hpp"

namespace divtherm::app {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {

  CLI::App app{"Simulator and analysis toolkit for divacancy spin thermometry"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string format = "csv";
  bool no_noise = false;
  int shots = 0;
  std::string profile;
  std::string input;
  std::string model;

  std::vector<CLI::App*> subs;
  const std::vector<std::pair<std::string, std::string>> descriptions{
      {"saturation", "fluorescence vs laser power and saturation fit"},
      {"odmr", "ODMR spectrum and Lorentzian-pair fit"},
      {"dvst", "ODMR over a temperature grid and the D(T) calibration"},
      {"coherence", "time sweep of a pulse sequence and damped-cosine fit"},
      {"sensitivity", "shot-noise sensitivity and its Monte-Carlo check"},
      {"monitor", "temperature tracking over a profile"},
      {"fit", "fit an existing CSV without simulating"}};
  for (const auto& [name, desc] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON config merged over the defaults");
    sub->add_option("--seed", seed, "base seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "data table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--no-noise", no_noise, "disable bath and shot noise");
    sub->add_option("--shots", shots, "shots per point")->check(CLI::PositiveNumber);
    if (name == "monitor") sub->add_option("--profile", profile, "temperature profile CSV");
    if (name == "fit") {
      sub->add_option("--input", input, "CSV with x, y[, y_err] columns")->required();
      sub->add_option("--model", model, "fit model")
          ->required()
          ->check(CLI::IsMember(fit_model_names()));
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? load_config(nlohmann::json()) : load_config_file(config_path);
    Overrides o;
    for (CLI::App* sub : subs) {
      if (!sub->parsed()) continue;
      if (sub->count("--seed")) o.seed = seed;
      if (sub->count("--shots")) o.shots = shots;
      if (const CLI::Option* opt = sub->get_option_no_throw("--profile"); opt && opt->count())
        o.profile = profile;
    }
    o.no_noise = no_noise;
    CommandContext ctx;
    ctx.cfg = apply_overrides(cfg, o);
    ctx.out_dir = out_dir;
    ctx.format = output_format_from_string(format);
    ctx.log = &out;
    ctx.input = input;
    ctx.model = model;
    run_command(app.get_subcommands().front()->get_name(), ctx);
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    err << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    err << "out of range: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace divtherm::app
