#include "divtherm/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>

#include "divtherm/analysis.hpp"
#include "divtherm/errors.hpp"
#include "divtherm/units.hpp"

namespace divtherm::app {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"saturation",  "odmr",    "dvst", "coherence",
                                              "sensitivity", "monitor", "fit"};
  return names;
}

const std::vector<std::string>& fit_model_names() {
  static const std::vector<std::string> names{"damped-cosine", "lorentzian-pair", "linear",
                                              "saturation"};
  return names;
}

namespace {

OutputHeader header_for(const CommandContext& ctx, const std::string& command) {
  return {command, config_hash(ctx.cfg), ctx.cfg.seed, {}};
}

void add_meta(OutputHeader& h, const MeasurementRecord& rec) {
  for (const auto& [k, v] : rec.meta)
    if (k != "seed") h.meta.emplace_back(k, v);
}

template <class... Args>
void say(const CommandContext& ctx, const Args&... args) {
  if (std::ostream* os = ctx.log) {
    ((*os) << ... << args);
    *os << '\n';
  }
}

// Drives placed `detuning` above the transitions predicted by `cal` at its
// reference temperature.
MicrowaveConfig drive_from_calibration(const SpinParameters& spin, const Calibration& cal,
                                       double detuning) {
  const double zeeman = spin.gyro * spin.b_field;
  return {cal.d_ref - zeeman + detuning, cal.d_ref + zeeman + detuning};
}

Calibration calibration_from_spin(const RunConfig& cfg) {
  Calibration cal;
  cal.d_ref = cfg.spin.d_ref;
  cal.t_ref = cfg.spin.t_ref;
  cal.slope = cfg.spin.d_slope;
  cal.slope_err = 0.0;
  cal.valid_range = cfg.monitor.valid_range;
  return cal;
}

}  // namespace

std::vector<ProfileRow> synthetic_profile(const SyntheticProfile& p) {
  const double duration = p.hours * 3600.0;
  std::vector<ProfileRow> rows;
  for (int i = 0; i < p.rows; ++i) {
    const double t = p.rows > 1 ? duration * i / (p.rows - 1) : 0.0;
    rows.push_back({t, p.mean + p.amplitude * std::sin(units::kTwoPi * t / duration)});
  }
  return rows;
}

json cmd_saturation(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& powers = cfg.saturation.powers;
  const double window = cfg.saturation.integration;
  Engine rng = make_engine(derive_seed(cfg.seed, 0));

  Table t;
  t.columns = {"power_w", "counts_cps", "counts_err_cps"};
  t.data.assign(3, {});
  for (double p : powers) {
    const double rate = saturation_counts(cfg.readout, p);
    double value = rate;
    double err = 0.0;
    if (cfg.readout.shot_noise) {
      const double expected = rate * window;
      double n = 0.0;
      if (expected > 0.0) n = static_cast<double>(std::poisson_distribution<long long>(expected)(rng));
      value = n / window;
      err = std::sqrt(std::max(n, 1.0)) / window;
    }
    t.data[0].push_back(p);
    t.data[1].push_back(value);
    t.data[2].push_back(err);
  }
  OutputHeader h = header_for(ctx, "saturation");
  h.meta.emplace_back("integration_s", format_number(window));
  write_table(ctx.out_dir / "saturation", h, t, ctx.format);

  const FitResult fit = fit_saturation(t.data[0], t.data[1], t.data[2]);
  json report{{"fit", to_json(fit)},
              {"injected", {{"i_sat_cps", cfg.readout.i_sat}, {"p_sat_w", cfg.readout.p_sat}}}};
  write_report(ctx.out_dir / "saturation_fit.json", h, report);
  say(ctx, "saturation: I_s = ", fit.value("i_sat") / units::Mcps, " Mcps, P_0 = ",
      fit.value("p_sat") / units::mW, " mW");
  return report;
}

json cmd_odmr(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const MeasurementRecord rec = simulate_odmr(cfg.spin, cfg.odmr.temperature, cfg.odmr_settings(),
                                              cfg.readout, derive_seed(cfg.seed, 0));
  OutputHeader h = header_for(ctx, "odmr");
  add_meta(h, rec);
  write_table(ctx.out_dir / "odmr", h, table_from_record(rec, "counts"), ctx.format);

  const FitResult fit = fit_lorentzian_pair(rec);
  const TransitionPair truth = transition_frequencies(cfg.spin, cfg.odmr.temperature);
  json report{{"temperature_k", cfg.odmr.temperature},
              {"fit", to_json(fit)},
              {"injected",
               {{"center_minus_hz", truth.minus},
                {"center_plus_hz", truth.plus},
                {"d_hz", cfg.spin.zfs(cfg.odmr.temperature)}}}};
  write_report(ctx.out_dir / "odmr_fit.json", h, report);
  say(ctx, "odmr: D = ", std::setprecision(10), fit.value("d") / units::MHz, " MHz, zeeman = ",
      fit.value("zeeman") / units::MHz, " MHz");
  return report;
}

json cmd_dvst(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& temps = cfg.dvst.temperatures;
  Table t;
  t.columns = {"temperature_k", "d_hz", "d_err_hz", "zeeman_hz"};
  t.data.assign(4, {});
  for (std::size_t i = 0; i < temps.size(); ++i) {
    const MeasurementRecord rec = simulate_odmr(cfg.spin, temps[i], cfg.odmr_settings(),
                                                cfg.readout, derive_seed(cfg.seed, i));
    const FitResult fit = fit_lorentzian_pair(rec);
    t.data[0].push_back(temps[i]);
    t.data[1].push_back(fit.value("d"));
    t.data[2].push_back(fit.std_error("d"));
    t.data[3].push_back(fit.value("zeeman"));
  }
  OutputHeader h = header_for(ctx, "dvst");
  write_table(ctx.out_dir / "dvst", h, t, ctx.format);

  const Calibration cal = make_calibration(t.data[0], t.data[1], t.data[2], cfg.spin.t_ref);
  const FitResult line = fit_linear(t.data[0], t.data[1], t.data[2]);
  json report{{"calibration", to_json(cal)},
              {"fit", to_json(line)},
              {"injected_slope_hz_per_k", cfg.spin.d_slope}};
  write_report(ctx.out_dir / "calibration.json", h, report);
  say(ctx, "dvst: dD/dT = ", cal.slope / units::kHz, " +- ", cal.slope_err / units::kHz,
      " kHz/K over ", temps.size(), " temperatures");
  return report;
}

json cmd_coherence(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& co = cfg.coherence;
  std::vector<int> ns = co.n;
  if (co.family != "tcpmg") ns = {make_family(co.family).n};

  const SimulationSetup setup = cfg.setup_at(cfg.temperature);
  json fits = json::array();
  std::vector<double> nv;
  std::vector<double> td;
  std::vector<double> td_err;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const SequenceFamily fam = make_family(co.family, ns[k]);
    const MeasurementRecord rec = sweep(fam, co.times, setup, derive_seed(cfg.seed, k));
    OutputHeader h = header_for(ctx, "coherence");
    add_meta(h, rec);
    const std::string stem = "coherence_" + co.family + "_n" + std::to_string(fam.n);
    write_table(ctx.out_dir / stem, h, table_from_record(rec, "signal"), ctx.format);
    const FitResult fit = fit_damped_cosine(rec);
    fits.push_back({{"family", co.family}, {"n", fam.n}, {"fit", to_json(fit)}});
    nv.push_back(fam.n);
    td.push_back(fit.value("t_d"));
    td_err.push_back(fit.std_error("t_d"));
    say(ctx, "coherence: ", co.family, " n=", fam.n, " T_D = ", fit.value("t_d") / units::us,
        " +- ", fit.std_error("t_d") / units::us, " us, f = ", fit.value("f") / units::kHz,
        " kHz");
  }

  json report{{"family", co.family}, {"temperature_k", cfg.temperature}, {"fits", fits}};
  if (co.family == "tcpmg" && ns.size() >= 3) {
    const FitResult line = fit_linear(nv, td, td_err);
    bool monotone = true;
    for (std::size_t i = 1; i < td.size(); ++i)
      if (nv[i] > nv[i - 1] && td[i] < td[i - 1]) monotone = false;
    json table = json::array();
    for (std::size_t i = 0; i < nv.size(); ++i) {
      json row{{"n", static_cast<int>(nv[i])}, {"t_d_us", td[i] / units::us},
               {"t_d_err_us", td_err[i] / units::us}, {"reference_t_d_us", nullptr}};
      for (const auto& [rn, rt] : co.reference_td)
        if (rn == static_cast<int>(nv[i])) row["reference_t_d_us"] = rt / units::us;
      table.push_back(row);
    }
    report["scaling"] = {{"fit", to_json(line)},
                         {"monotone", monotone},
                         {"r_squared", line.value("r_squared")},
                         {"table", table}};
    say(ctx, "coherence: T_D vs N slope ", line.value("slope") / units::us, " us per block, R^2 = ",
        line.value("r_squared"), monotone ? ", monotone" : ", NOT monotone");
    if (std::ostream* os = ctx.log) {
      *os << "   N   T_D/us   reference/us\n";
      for (const auto& row : table) {
        *os << std::setw(4) << row["n"].get<int>() << std::setw(9) << std::fixed
            << std::setprecision(2) << row["t_d_us"].get<double>() << "   ";
        if (row["reference_t_d_us"].is_null())
          *os << "-";
        else
          *os << row["reference_t_d_us"].get<double>();
        *os << std::defaultfloat << '\n';
      }
    }
  }
  write_report(ctx.out_dir / "coherence_fit.json", header_for(ctx, "coherence"), report);
  return report;
}

json cmd_sensitivity(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const double t0 = cfg.temperature;
  const int n_blocks = cfg.sensitivity.n;
  SimulationSetup setup = cfg.setup_at(t0);

  // Coherence of the chosen sequence from a full time sweep.
  const SequenceFamily fam = make_family("tcpmg", n_blocks);
  const MeasurementRecord rec = sweep(fam, cfg.coherence.times, setup, derive_seed(cfg.seed, 0));
  const FitResult coh = fit_damped_cosine(rec);

  SensitivityInput in;
  in.p0 = cfg.readout.p0();
  in.p1 = cfg.readout.p1();
  in.dddt = cfg.spin.d_slope;
  in.t_d = coh.value("t_d");
  in.n = coh.value("n");
  in.t = optimal_interrogation_time(in.t_d, in.n);
  const double eta = sensitivity(in);

  // Monte-Carlo: repeated single-point count measurements at t, with the
  // detuning moved to a quarter fringe so the response is locally linear.
  const double delta_d = cfg.spin.zfs(t0) - cfg.spin.d_ref;
  const double offset = cfg.microwave_detuning - delta_d;
  const double det = delta_d + (std::round(offset * in.t) + 0.25) / in.t;
  setup.mw = drive_with_detuning(cfg.spin, det);
  setup.readout.mode = ReadoutMode::counts;
  // One bath realisation per shot; reusing realisations across shots would
  // add correlated bath noise that a real repetition does not have.
  if (setup.noise.active()) setup.noise.trajectories = cfg.readout.shots;
  const PulseSequence seq = fam.make(in.t);

  SimulationSetup quiet = setup;
  quiet.readout.shot_noise = false;
  const std::uint64_t bath_seed = derive_seed(cfg.seed, 1);
  const double h = cfg.sensitivity.temperature_step;
  auto mean_at = [&](double temp) {
    SimulationSetup s = quiet;
    s.env = environment_at(cfg.spin, temp, cfg.field_offset);
    return run_point(seq, s, bath_seed).mean;
  };
  const double mu0 = mean_at(t0);
  const double slope = (mean_at(t0 + h) - mean_at(t0 - h)) / (2.0 * h);

  const std::uint64_t rep_seed = derive_seed(cfg.seed, 2);
  const int repeats = cfg.sensitivity.repeats;
  double mean = 0.0;
  double m2 = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const double mu = run_point(seq, setup, derive_seed(rep_seed, static_cast<std::uint64_t>(r))).mean;
    const double est = t0 + (mu - mu0) / slope;
    const double d = est - mean;
    mean += d / (r + 1);
    m2 += d * (est - mean);
  }
  const double std_t = std::sqrt(m2 / (repeats - 1));
  const double total_time = static_cast<double>(cfg.readout.shots) * in.t;
  const double eta_mc = std_t * std::sqrt(total_time);

  json report{
      {"eta_k_per_sqrt_hz", eta},
      {"t_opt_s", in.t},
      {"inputs",
       {{"p0_counts", in.p0},
        {"p1_counts", in.p1},
        {"dddt_hz_per_k", in.dddt},
        {"t_d_s", in.t_d},
        {"n", in.n},
        {"t_s", in.t}}},
      {"provenance",
       {{"sequence", "tcpmg"},
        {"blocks", n_blocks},
        {"temperature_k", t0},
        {"i_sat_cps", cfg.readout.i_sat},
        {"p_sat_w", cfg.readout.p_sat},
        {"laser_power_w", cfg.readout.laser_power},
        {"shot_window_s", cfg.readout.shot_window},
        {"readout_contrast", cfg.readout.contrast},
        {"coherence_fit", to_json(coh)}}},
      {"monte_carlo",
       {{"repeats", repeats},
        {"shots", cfg.readout.shots},
        {"bath_realisations", setup.noise.active() ? setup.noise.trajectories : 0},
        {"detuning_hz", det},
        {"response_counts_per_k", slope},
        {"temperature_std_k", std_t},
        {"mean_estimate_k", mean},
        {"eta_k_per_sqrt_hz", eta_mc},
        {"ratio", eta_mc / eta}}}};
  write_report(ctx.out_dir / "sensitivity.json", header_for(ctx, "sensitivity"), report);
  say(ctx, "sensitivity: eta = ", eta * 1e3, " mK/sqrt(Hz) at t = ", in.t / units::us,
      " us (T_D = ", in.t_d / units::us, " us, n = ", in.n, "); Monte-Carlo ", eta_mc * 1e3,
      " mK/sqrt(Hz), ratio ", eta_mc / eta);
  return report;
}

json cmd_monitor(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto rows = cfg.monitor.profile_path.empty() ? synthetic_profile(cfg.monitor.synthetic)
                                                     : read_profile(cfg.monitor.profile_path);
  Calibration cal = calibration_from_spin(cfg);
  if (!cfg.monitor.calibration_path.empty()) {
    std::ifstream in(cfg.monitor.calibration_path);
    if (!in) throw IoError("cannot read calibration '" + cfg.monitor.calibration_path + "'");
    try {
      json j = json::parse(in);
      cal = calibration_from_json(j.contains("calibration") ? j["calibration"] : j);
    } catch (const json::exception& e) {
      throw ConfigError("calibration '" + cfg.monitor.calibration_path + "': " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("calibration '" + cfg.monitor.calibration_path + "': " + e.what());
    }
  }
  try {
    check_detuning_convention(cfg.microwave_detuning, cal);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("microwave.detuning_mhz: ") + e.what());
  }

  const SequenceFamily fam = make_family("tcpmg", cfg.monitor.n);
  Table t;
  t.columns = {"time_s", "f_fit_hz", "f_err_hz", "t_estimate_k", "t_err_k", "t_profile_k"};
  t.data.assign(6, {});
  double sq = 0.0;
  double err_sum = 0.0;
  int extrapolated = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SimulationSetup setup = cfg.setup_at(rows[i].temperature);
    setup.mw = drive_from_calibration(cfg.spin, cal, cfg.microwave_detuning);
    const MeasurementRecord rec = sweep(fam, cfg.monitor.times, setup, derive_seed(cfg.seed, i));
    const FitResult fit = fit_damped_cosine(rec);
    const TemperatureEstimate est = frequency_to_temperature(
        fit.value("f"), fit.std_error("f"), -cfg.microwave_detuning, cal);
    if (est.extrapolated) ++extrapolated;
    t.data[0].push_back(rows[i].time);
    t.data[1].push_back(fit.value("f"));
    t.data[2].push_back(fit.std_error("f"));
    t.data[3].push_back(est.temperature);
    t.data[4].push_back(est.std_error);
    t.data[5].push_back(rows[i].temperature);
    const double d = est.temperature - rows[i].temperature;
    sq += d * d;
    err_sum += est.std_error;
  }
  OutputHeader h = header_for(ctx, "monitor");
  h.meta.emplace_back("profile", cfg.monitor.profile_path.empty() ? "synthetic"
                                                                   : cfg.monitor.profile_path);
  write_table(ctx.out_dir / "monitor", h, t, ctx.format);

  const double nrows = static_cast<double>(rows.size());
  const double rms = std::sqrt(sq / nrows);
  const double mean_err = err_sum / nrows;
  json report{{"rows", rows.size()},
              {"rms_error_k", rms},
              {"mean_stderr_k", mean_err},
              {"extrapolated_rows", extrapolated},
              {"calibration", to_json(cal)},
              {"sequence", {{"family", "tcpmg"}, {"n", cfg.monitor.n}}}};
  write_report(ctx.out_dir / "monitor_summary.json", h, report);
  say(ctx, "monitor: ", rows.size(), " rows, RMS error ", rms * 1e3, " mK, mean stderr ",
      mean_err * 1e3, " mK");
  if (extrapolated > 0)
    say(ctx, "monitor: warning: ", extrapolated, " estimate(s) outside the calibrated range");
  return report;
}

json cmd_fit(const CommandContext& ctx) {
  if (ctx.input.empty()) throw ConfigError("fit: --input is required");
  const Table table = read_table_csv(ctx.input);
  const MeasurementRecord rec = record_from_table(table);
  FitResult fit;
  if (ctx.model == "damped-cosine") {
    fit = fit_damped_cosine(rec);
  } else if (ctx.model == "lorentzian-pair") {
    fit = fit_lorentzian_pair(rec);
  } else if (ctx.model == "linear") {
    fit = fit_linear(rec.x, rec.y, rec.y_err);
  } else if (ctx.model == "saturation") {
    fit = fit_saturation(rec.x, rec.y, rec.y_err);
  } else {
    std::string valid;
    for (const auto& m : fit_model_names()) valid += (valid.empty() ? "" : ", ") + m;
    throw ConfigError("fit: unknown model '" + ctx.model + "' (valid: " + valid + ")");
  }
  json report{{"input", fs::path(ctx.input).filename().string()},
              {"points", rec.size()},
              {"fit", to_json(fit)}};
  write_report(ctx.out_dir / "fit.json", header_for(ctx, "fit"), report);
  if (std::ostream* os = ctx.log) {
    *os << "fit (" << ctx.model << "): " << fit.message << ", " << fit.iterations << " iterations\n";
    for (const auto& p : fit.params) *os << "  " << p.name << " = " << p.value << " +- " << p.std_error << '\n';
    for (const auto& p : fit.derived) *os << "  " << p.name << " = " << p.value << " +- " << p.std_error << '\n';
  }
  return report;
}

json run_command(const std::string& name, const CommandContext& ctx) {
  if (name == "saturation") return cmd_saturation(ctx);
  if (name == "odmr") return cmd_odmr(ctx);
  if (name == "dvst") return cmd_dvst(ctx);
  if (name == "coherence") return cmd_coherence(ctx);
  if (name == "sensitivity") return cmd_sensitivity(ctx);
  if (name == "monitor") return cmd_monitor(ctx);
  if (name == "fit") return cmd_fit(ctx);
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace divtherm::app
