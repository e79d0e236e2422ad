#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "cspi/error.hpp"
#include "cspi/io.hpp"
#include "cspi/presets.hpp"
#include "cspi/reconstruction.hpp"

using namespace cspi;
namespace fs = std::filesystem;

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

struct Options {
  std::string out;
  std::string input;
  std::string preset;
  std::optional<double> shots;
  std::uint64_t seed = 0;
  std::optional<double> grid_span;
  std::optional<std::size_t> grid_count;
  std::optional<double> tr, tr1, tr2;
  std::string tr_list, tr1_list, tr2_list;
  double tr_sum = 0.0;
  std::optional<std::string> alpha, gamma, eta;
  std::string signal, state, reference;
};

// "abs" or "abs@phase", phase in radians.
complex parse_amplitude(const std::string &text, const std::string &flag) {
  const auto at = text.find('@');
  try {
    std::size_t used = 0;
    const double abs = std::stod(text.substr(0, at), &used);
    require(used == text.substr(0, at).size(), ErrorKind::parse, "");
    double phase = 0.0;
    if (at != std::string::npos) {
      phase = std::stod(text.substr(at + 1), &used);
      require(used == text.size() - at - 1, ErrorKind::parse, "");
    }
    require(std::isfinite(abs) && std::isfinite(phase) && abs >= 0.0, ErrorKind::parse, "");
    return std::polar(abs, phase);
  } catch (const std::exception &) {
    fail(ErrorKind::parse, flag + ": expected a non-negative magnitude, optionally followed by @phase, got '" + text + "'");
  }
}

// "a,b,c" or "start:stop:count".
std::vector<double> parse_times(const std::string &text, const std::string &flag) {
  std::vector<double> out;
  try {
    if (text.find(':') != std::string::npos) {
      const auto p1 = text.find(':'), p2 = text.find(':', p1 + 1);
      require(p2 != std::string::npos, ErrorKind::parse, "");
      const double a = std::stod(text.substr(0, p1)), b = std::stod(text.substr(p1 + 1, p2 - p1 - 1));
      const int n = std::stoi(text.substr(p2 + 1));
      require(n >= 2, ErrorKind::parse, "");
      for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
    } else {
      std::size_t start = 0;
      while (start <= text.size()) {
        const auto comma = text.find(',', start);
        out.push_back(std::stod(text.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
  } catch (const std::exception &) {
    fail(ErrorKind::parse, flag + ": expected 'a,b,c' or 'start:stop:count', got '" + text + "'");
  }
  return out;
}

std::uint64_t shot_count(const Options &o) {
  const double s = *o.shots;
  require(std::isfinite(s) && s > 0.0 && s == std::floor(s), ErrorKind::parse, "--shots must be a positive integer");
  return static_cast<std::uint64_t>(s);
}

fs::path sibling(const fs::path &out, const std::string &suffix, const std::string &ext) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + suffix + ext);
  return p;
}

ReferencePulseSpec reference_spec(const Options &o) {
  ReferencePulseSpec r = o.reference.empty() ? ReferencePulseSpec{} : io::parse_reference_spec(io::read_file(o.reference)).reference;
  if (o.alpha) r.alpha = parse_amplitude(*o.alpha, "--alpha");
  return r;
}

FrequencyGrid pick_grid(const Options &o, std::optional<io::GridSpec> from_file, double center, io::GridSpec fallback) {
  io::GridSpec g = from_file.value_or(fallback);
  if (o.grid_span) g.span = *o.grid_span;
  if (o.grid_count) g.count = *o.grid_count;
  require(g.span > 0.0, ErrorKind::parse, "--grid-span must be positive");
  require(g.count >= 2, ErrorKind::parse, "--grid-count must be at least 2");
  return g.at(center);
}

// Everything needed to simulate or analyse a pair experiment.
struct PairConfig {
  std::optional<GaussianPdcSpec> state;
  FrequencyGrid grid{0.0, 1.0, 2};
  ReferencePulseSpec reference;
  InterferenceSetup2D setup;
};

PairConfig pair_config(const Options &o, bool need_state, std::optional<FrequencyGrid> table_grid = std::nullopt) {
  PairConfig c;
  std::optional<PairPreset> preset;
  if (!o.preset.empty()) {
    preset = find_pair_preset(o.preset);
    require(preset.has_value(), ErrorKind::parse, "--preset: unknown preset '" + o.preset + "' (expected fig3 or fig4)");
  }
  require(preset.has_value() + !o.state.empty() <= 1, ErrorKind::parse, "--preset and --state are exclusive");
  std::optional<io::GridSpec> file_grid;
  if (preset) {
    c.state = preset->state;
    file_grid = io::GridSpec{preset->grid.back(), preset->grid.count()};
  } else if (!o.state.empty()) {
    const auto file = io::parse_state_spec(io::read_file(o.state));
    c.state = file.state;
    file_grid = file.grid;
  }
  require(!need_state || c.state.has_value(), ErrorKind::parse, "a state is required: pass --preset or --state");
  const double center = c.state ? 0.5 * c.state->pump_detuning : 0.0;
  c.grid = table_grid ? *table_grid : pick_grid(o, file_grid, center, {6.0, 512});
  c.reference = reference_spec(o);

  double diff = preset ? preset->t_r1 - preset->t_r2 : nan;
  double t1 = preset ? preset->t_r1 : nan, t2 = preset ? preset->t_r2 : nan;
  if (o.tr_sum != 0.0 && preset) {
    t1 = 0.5 * (o.tr_sum + diff);
    t2 = 0.5 * (o.tr_sum - diff);
  }
  if (o.tr1) t1 = *o.tr1;
  if (o.tr2) t2 = *o.tr2;
  require(std::isfinite(t1) && std::isfinite(t2), ErrorKind::parse, "--tr1 and --tr2 are required without a preset");
  c.setup.alpha = c.reference.alpha;
  c.setup.t_r1 = t1;
  c.setup.t_r2 = t2;
  return c;
}

SpectralAmplitude build_reference(const PairConfig &c) { return make_gaussian_reference(c.reference, c.grid); }

complex resolve_eta(const Options &o, const PairConfig &c, const SpectralAmplitude &phi) {
  if (o.eta) return parse_amplitude(*o.eta, "--eta");
  require(c.state.has_value(), ErrorKind::parse, "--eta is required without --preset or --state");
  return balanced_eta(make_gaussian_pdc_state(*c.state, c.grid, c.grid), phi, c.setup.alpha);
}

CountDistribution maybe_sample(const Options &o, CountDistribution rates) {
  if (!o.shots) return rates;
  return sample_poisson_counts(rates, static_cast<double>(shot_count(o)), o.seed);
}

void write(const fs::path &path, const std::string &text) { io::write_file_atomic(path, text); }

void require_out(const Options &o) { require(!o.out.empty(), ErrorKind::parse, "--out is required"); }

// Single photon.

struct SingleConfig {
  SignalPulseSpec signal;
  FrequencyGrid grid{0.0, 1.0, 2};
  ReferencePulseSpec reference;
  InterferenceSetup1D setup;
};

SingleConfig single_config(const Options &o, bool need_signal, std::optional<FrequencyGrid> table_grid = std::nullopt) {
  SingleConfig c;
  std::optional<io::GridSpec> file_grid;
  require(!need_signal || !o.signal.empty(), ErrorKind::parse, "--signal is required");
  if (!o.signal.empty()) {
    const auto file = io::parse_signal_spec(io::read_file(o.signal));
    c.signal = file.signal;
    file_grid = file.grid;
  }
  c.grid = table_grid ? *table_grid : pick_grid(o, file_grid, c.signal.center_detuning, {8.0, 1601});
  c.reference = reference_spec(o);
  c.setup.alpha = c.reference.alpha;
  if (o.gamma) c.setup.gamma = parse_amplitude(*o.gamma, "--gamma");
  c.setup.t_r = o.tr.value_or(c.reference.peak_time);
  return c;
}

int simulate_single(const Options &o) {
  require_out(o);
  const auto c = single_config(o, true);
  const auto phi = make_gaussian_reference(c.reference, c.grid);
  const auto rates = single_photon_rate(make_gaussian_signal(c.signal, c.grid), phi, c.setup);
  write(o.out, io::table_csv(maybe_sample(o, rates)));
  return 0;
}

int simulate_pair(const Options &o) {
  require_out(o);
  auto c = pair_config(o, true);
  const auto phi = build_reference(c);
  c.setup.eta = resolve_eta(o, c, phi);
  const auto state = make_gaussian_pdc_state(*c.state, c.grid, c.grid);
  write(o.out, io::table_csv(maybe_sample(o, coincidence_rate(state, phi, c.setup))));
  return 0;
}

void write_pair_outputs(const fs::path &out, const ReconstructionReport &r, const nlohmann::ordered_json &extra) {
  auto doc = nlohmann::ordered_json::parse(io::report_json(r));
  for (const auto &[key, value] : extra.items()) doc[key] = value;
  write(out, doc.dump(2) + '\n');
  write(sibling(out, "_gradient", ".csv"), io::columns_csv({"nu", "value"}, {r.phase.nu, r.phase.gradient}));
  write(sibling(out, "_phase", ".csv"), io::columns_csv({"nu", "value"}, {r.phase.nu, r.phase.integrated()}));
  std::vector<double> nu, amp;
  for (std::size_t i = 0; i < r.amplitude_diff.valid.size(); ++i) {
    if (!r.amplitude_diff.valid[i]) continue;
    nu.push_back(r.amplitude_diff.grid.point(i));
    amp.push_back(r.amplitude_diff.values[i]);
  }
  write(sibling(out, "_amplitude", ".csv"), io::columns_csv({"nu", "value"}, {nu, amp}));
}

void print_pair_summary(const ReconstructionReport &r) {
  std::cout << "curvature " << r.curvature << "  delta_sum " << r.delta_sum << "  delta_diff " << r.delta_diff
            << "  t_corr_eq12 " << r.t_corr_strong_chirp << "  margin " << r.margin
            << "  entangled " << (r.entangled ? "true" : "false") << '\n';
}

PairOptions pair_options(const PairConfig &c) {
  PairOptions opts;
  if (c.state) opts.fallback_moments = joint_spectral_moments(make_gaussian_pdc_state(*c.state, c.grid, c.grid));
  return opts;
}

int reconstruct_pair(const Options &o) {
  require_out(o);
  const auto table = io::parse_table_csv(io::read_file(o.input));
  require(table.is_2d(), ErrorKind::parse, o.input + ": pair reconstruction needs a 2-D table");
  auto c = pair_config(o, false, table.grid1());
  const auto phi = build_reference(c);
  c.setup.eta = resolve_eta(o, c, phi);
  const auto r = analyze_pair(table, phi, c.setup, pair_options(c));
  write_pair_outputs(o.out, r, nlohmann::ordered_json::object());
  print_pair_summary(r);
  return 0;
}

int reconstruct_single(const Options &o) {
  require_out(o);
  const auto table = io::parse_table_csv(io::read_file(o.input));
  require(!table.is_2d(), ErrorKind::parse, o.input + ": single-photon reconstruction needs a 1-D table");
  const auto c = single_config(o, false, table.grid1());
  const auto phi = make_gaussian_reference(c.reference, c.grid);
  const auto r = analyze_single(table, phi, c.setup);
  write(o.out, io::report_json(r));
  write(sibling(o.out, "_gradient", ".csv"), io::columns_csv({"omega", "value"}, {r.phase.nu, r.phase.gradient}));
  std::vector<double> w, amp;
  for (std::size_t k = 0; k < r.amplitude.valid.size(); ++k) {
    if (!r.amplitude.valid[k]) continue;
    w.push_back(r.amplitude.grid.point(k));
    amp.push_back(r.amplitude.values[k]);
  }
  write(sibling(o.out, "_amplitude", ".csv"), io::columns_csv({"omega", "value"}, {w, amp}));
  std::cout << "fringe_spacing " << r.fringe_spacing << "  signal_time " << r.signal_time << '\n';
  return 0;
}

int scan_single(const Options &o) {
  require_out(o);
  const auto c = single_config(o, true);
  const auto phi = make_gaussian_reference(c.reference, c.grid);
  const auto signal = make_gaussian_signal(c.signal, c.grid);
  std::vector<ScanSample> series;
  std::uint64_t i = 0;
  for (double t : parse_times(o.tr_list, "--tr")) {
    auto rates = single_photon_rate(signal, phi, {c.setup.alpha, c.setup.gamma, t});
    if (o.shots) rates = sample_poisson_counts(rates, static_cast<double>(shot_count(o)), o.seed + i++);
    series.push_back({t, std::move(rates)});
  }
  const auto result = timescan_tomography(series, phi, c.setup.alpha, c.setup.gamma);
  std::vector<double> w, mag, arg, valid;
  for (std::size_t k = 0; k < c.grid.count(); ++k) {
    w.push_back(c.grid.point(k));
    mag.push_back(std::abs(result.amplitude[k]));
    arg.push_back(std::arg(result.amplitude[k]));
    valid.push_back(result.valid[k]);
  }
  write(o.out, io::columns_csv({"omega", "abs", "phase", "valid"}, {w, mag, arg, valid}));
  return 0;
}

int scan_pair(const Options &o) {
  require_out(o);
  auto c = pair_config(o, true);
  const auto phi = build_reference(c);
  c.setup.eta = resolve_eta(o, c, phi);
  const auto state = make_gaussian_pdc_state(*c.state, c.grid, c.grid);
  std::vector<PairScanSample> series;
  std::uint64_t i = 0;
  for (double t1 : parse_times(o.tr1_list, "--tr1")) {
    for (double t2 : parse_times(o.tr2_list, "--tr2")) {
      auto setup = c.setup;
      setup.t_r1 = t1;
      setup.t_r2 = t2;
      auto rates = coincidence_rate(state, phi, setup);
      if (o.shots) rates = sample_poisson_counts(rates, static_cast<double>(shot_count(o)), o.seed + i++);
      series.push_back({t1, t2, std::move(rates)});
    }
  }
  const auto result = timescan_tomography(series, phi, c.setup.alpha, c.setup.eta);
  std::vector<double> w1, w2, mag, arg, valid;
  const std::size_t n = c.grid.count();
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      w1.push_back(c.grid.point(k1));
      w2.push_back(c.grid.point(k2));
      mag.push_back(std::abs(result.amplitude(k1, k2)));
      arg.push_back(std::arg(result.amplitude(k1, k2)));
      valid.push_back(result.valid[k1 * n + k2]);
    }
  }
  write(o.out, io::columns_csv({"omega1", "omega2", "abs", "phase", "valid"}, {w1, w2, mag, arg, valid}));
  return 0;
}

// Simulates the configured pair experiment and analyses it.
struct PairRun {
  PairConfig config;
  CountDistribution table;
  ReconstructionReport report;
  SpectralAmplitude reference;
};

PairRun run_pair(const Options &o) {
  auto c = pair_config(o, true);
  auto phi = build_reference(c);
  c.setup.eta = resolve_eta(o, c, phi);
  const auto state = make_gaussian_pdc_state(*c.state, c.grid, c.grid);
  auto table = maybe_sample(o, coincidence_rate(state, phi, c.setup));
  auto report = analyze_pair(table, phi, c.setup, pair_options(c));
  return {c, std::move(table), std::move(report), std::move(phi)};
}

int plotdata(const Options &o) {
  require_out(o);
  const auto run = run_pair(o);
  const auto &r = run.report;
  const fs::path out = o.out;
  write(sibling(out, "_a", ".csv"), io::table_csv(run.table));

  const double eta = std::abs(run.config.setup.eta);
  std::vector<double> c_max(r.slice_nu.size(), nan), c_min(r.slice_nu.size(), nan);
  for (std::size_t i = 0; i < r.slice_nu.size(); ++i) {
    if (!r.amplitude_diff.valid[i]) continue;
    const double p = eta * r.amplitude_diff.values[i], ref = r.slice_reference[i];
    c_max[i] = 0.25 * (ref + p) * (ref + p);
    c_min[i] = 0.25 * (ref - p) * (ref - p);
  }
  write(sibling(out, "_b", ".csv"), io::columns_csv({"nu", "value", "c_max", "c_min"}, {r.slice_nu, r.slice_values, c_max, c_min}));
  write(sibling(out, "_c", ".csv"), io::columns_csv({"nu", "gradient", "phase"}, {r.phase.nu, r.phase.gradient, r.phase.integrated()}));

  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
  if (run.config.setup.t_r1 + run.config.setup.t_r2 != 0.0) {
    extra["sum_fringe_spacing"] = sum_direction_spacing(run.table, run.reference, run.config.setup);
  }
  auto doc = nlohmann::ordered_json::parse(io::report_json(r));
  for (const auto &[key, value] : extra.items()) doc[key] = value;
  write(sibling(out, "_report", ".json"), doc.dump(2) + '\n');
  print_pair_summary(r);
  if (extra.contains("sum_fringe_spacing")) std::cout << "sum_fringe_spacing " << extra["sum_fringe_spacing"] << '\n';
  return 0;
}

int analyze(const Options &o) {
  require_out(o);
  const auto run = run_pair(o);
  const auto state = make_gaussian_pdc_state(*run.config.state, run.config.grid, run.config.grid);
  const auto moments = joint_spectral_moments(state);
  nlohmann::ordered_json oracle;
  oracle["delta_sum"] = moments.delta_sum;
  oracle["delta_diff"] = moments.delta_diff;
  oracle["curvature"] = -run.config.state->chirp;
  oracle["t_corr"] = time_difference_std(state);
  write_pair_outputs(o.out, run.report, {{"oracle", oracle}});
  print_pair_summary(run.report);
  std::cout << "oracle t_corr " << oracle["t_corr"] << '\n';
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::parse:
  case ErrorKind::invalid_argument:
    return 2;
  case ErrorKind::grid_too_narrow:
  case ErrorKind::grid_mismatch:
  case ErrorKind::under_resolved_grid:
  case ErrorKind::zero_total_rate:
    return 3;
  case ErrorKind::no_extrema:
  case ErrorKind::nonpositive_spacing:
  case ErrorKind::insufficient_samples:
  case ErrorKind::insufficient_scan_range:
  case ErrorKind::zero_signal:
    return 4;
  }
  return 1;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Spectral interferometry of single photons and photon pairs"};
  app.require_subcommand(1);
  Options o;

  auto out = [&](CLI::App *cmd) { cmd->add_option("--out", o.out, "Output file (reports and CSVs are written next to it)"); };
  auto sampling = [&](CLI::App *cmd) {
    cmd->add_option("--shots", o.shots, "Total expected counts to sample with Poisson noise");
    cmd->add_option("--seed", o.seed, "Sampling seed")->capture_default_str();
  };
  auto grid = [&](CLI::App *cmd) {
    cmd->add_option("--grid-span", o.grid_span, "Grid half-width in units of sigma_r");
    cmd->add_option("--grid-count", o.grid_count, "Grid points per axis");
  };
  auto reference = [&](CLI::App *cmd) {
    cmd->add_option("--reference", o.reference, "Reference pulse spec (JSON)");
    cmd->add_option("--alpha", o.alpha, "Reference amplitude, abs or abs@phase");
  };
  auto single = [&](CLI::App *cmd) {
    reference(cmd);
    cmd->add_option("--signal", o.signal, "Signal pulse spec (JSON)");
    cmd->add_option("--gamma", o.gamma, "Signal amplitude, abs or abs@phase");
  };
  auto pair = [&](CLI::App *cmd, bool with_times) {
    reference(cmd);
    cmd->add_option("--preset", o.preset, "fig3 or fig4");
    cmd->add_option("--state", o.state, "Pair state spec (JSON)");
    cmd->add_option("--eta", o.eta, "Pair amplitude, abs or abs@phase (default: balanced against the reference)");
    if (with_times) {
      cmd->add_option("--tr1", o.tr1, "Reference peak time, arm 1");
      cmd->add_option("--tr2", o.tr2, "Reference peak time, arm 2");
    }
  };

  auto *simulate = app.add_subcommand("simulate", "Write a rate or count table");
  simulate->require_subcommand(1);
  auto *sim_single = simulate->add_subcommand("single", "Single-photon interference");
  single(sim_single);
  sim_single->add_option("--tr", o.tr, "Reference peak time");
  out(sim_single), sampling(sim_single), grid(sim_single);
  auto *sim_pair = simulate->add_subcommand("pair", "Two-photon coincidences");
  pair(sim_pair, true);
  out(sim_pair), sampling(sim_pair), grid(sim_pair);

  auto *reconstruct = app.add_subcommand("reconstruct", "Analyse a table and write a report");
  reconstruct->require_subcommand(1);
  auto *rec_single = reconstruct->add_subcommand("single", "Single-photon table");
  rec_single->add_option("input", o.input, "Count table (CSV)")->required();
  single(rec_single);
  rec_single->add_option("--tr", o.tr, "Reference peak time");
  out(rec_single);
  auto *rec_pair = reconstruct->add_subcommand("pair", "Coincidence table");
  rec_pair->add_option("input", o.input, "Count table (CSV)")->required();
  pair(rec_pair, true);
  out(rec_pair);

  auto *scan = app.add_subcommand("scan", "Time-scan tomography");
  scan->require_subcommand(1);
  auto *scan_1 = scan->add_subcommand("single", "Scan the reference peak time");
  single(scan_1);
  o.tr_list = "-7.5:7.5:16";
  scan_1->add_option("--tr", o.tr_list, "Peak times, 'a,b,c' or 'start:stop:count'")->capture_default_str();
  out(scan_1), sampling(scan_1), grid(scan_1);
  auto *scan_2 = scan->add_subcommand("pair", "Scan both reference peak times");
  pair(scan_2, false);
  o.tr1_list = o.tr2_list = "-6:6:5";
  scan_2->add_option("--tr1", o.tr1_list, "Arm-1 peak times")->capture_default_str();
  scan_2->add_option("--tr2", o.tr2_list, "Arm-2 peak times")->capture_default_str();
  out(scan_2), sampling(scan_2), grid(scan_2);

  auto *plot = app.add_subcommand("plotdata", "Table, central slice with envelopes and phase profile");
  pair(plot, true);
  plot->add_option("--tr-sum", o.tr_sum, "t_r1 + t_r2, keeping the preset t_r1 - t_r2");
  out(plot), sampling(plot), grid(plot);

  auto *an = app.add_subcommand("analyze", "Simulate, reconstruct and compare with the exact state");
  pair(an, true);
  out(an), sampling(an), grid(an);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim_single->parsed()) return simulate_single(o);
    if (sim_pair->parsed()) return simulate_pair(o);
    if (rec_single->parsed()) return reconstruct_single(o);
    if (rec_pair->parsed()) return reconstruct_pair(o);
    if (scan_1->parsed()) return scan_single(o);
    if (scan_2->parsed()) return scan_pair(o);
    if (plot->parsed()) return plotdata(o);
    if (an->parsed()) return analyze(o);
  } catch (const Error &e) {
    std::cerr << "cspi: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "cspi: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
