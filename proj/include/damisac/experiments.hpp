#pragma once

// The CLI experiments. Each compute_* function returns plain data (used by the
// acceptance checks); the matching run_* wraps it into a FigureBundle of CSV
// tables and SVG plots. Trial i of a run uses the stream derive_seed(seed, i).

#include "damisac/beamforming.hpp"
#include "damisac/config.hpp"
#include "damisac/io.hpp"
#include "damisac/ofdm_radar.hpp"
#include "damisac/sensing.hpp"
#include "damisac/waveform.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace damisac {

inline const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> c = {"af",   "beampattern",  "doppler-cut-isr", "tradeoff",
                                             "papr", "compare-ofdm", "snr-budget"};
  return c;
}

struct ExperimentSpec {
  std::string command;
  Config config;
  std::uint64_t seed = 1;
};

struct FigureBundle {
  std::string command;
  std::vector<std::pair<std::string, CsvTable>> tables;
  std::vector<std::pair<std::string, LinePlot>> plots;
  std::map<std::string, double> metrics;  // headline numbers, copied into the manifest

  void add(const std::string& name, CsvTable t) { tables.emplace_back(name, std::move(t)); }
  void add(const std::string& name, LinePlot p) { plots.emplace_back(name, std::move(p)); }

  const CsvTable& table(const std::string& name) const {
    for (const auto& [n, t] : tables)
      if (n == name) return t;
    throw InvalidArgument("bundle has no table " + name);
  }

  /// Writes every table and plot into dir; returns the file names in write order.
  std::vector<std::string> write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    for (const auto& [n, t] : tables) {
      t.write(dir / n);
      files.push_back(n);
    }
    for (const auto& [n, p] : plots) {
      write_svg(dir / n, p);
      files.push_back(n);
    }
    return files;
  }
};

// ---------------------------------------------------------------------------
// shared setup

/// Runs parse(text) and reports library argument errors against the config key.
template <typename Fn>
auto parse_key(const Config& c, const std::string& key, Fn&& parse) {
  try {
    return parse(c.text(key));
  } catch (const InvalidArgument& e) {
    throw ConfigError(c.origin(key) + ": " + key + ": " + e.what());
  }
}

struct SensingSetup {
  ScenarioConfig scenario;
  double alpha_sq = 0.0;
  double theta_rad = 0.0;
  BeamformingScenario bf_scenario;
  Constellation constellation;
};

inline SensingSetup sensing_setup(const Config& c, std::uint64_t seed) {
  SensingSetup s;
  s.scenario = scenario_from(c, seed);
  c.check(c.real("target_range_m") > 0, "target_range_m", "must be positive");
  c.check(c.real("target_rcs_m2") > 0, "target_rcs_m2", "must be positive");
  c.check(std::abs(c.real("target_angle_deg")) <= 90.0, "target_angle_deg", "must lie in [-90, 90]");
  s.alpha_sq = sensing_gain_magnitude(s.scenario.carrier_freq_hz, c.real("target_range_m"), c.real("target_rcs_m2"));
  s.theta_rad = deg_to_rad(c.real("target_angle_deg"));
  s.bf_scenario = BeamformingScenario::from(s.scenario, s.alpha_sq);
  s.constellation = Constellation::make(parse_key(c, "modulation", parse_modulation));
  return s;
}

inline IsacOptions isac_options(const Config& c, std::uint64_t seed) {
  IsacOptions o;
  o.mode = parse_key(c, "lifting", parse_lifting_mode);
  const double tol = c.real("solver_tol");
  c.check(tol >= 0 && tol < 1, "solver_tol", "must lie in [0, 1)");
  if (tol > 0) {
    SolverSettings s = default_sdr_settings(o.mode);
    s.tol = tol;
    o.settings = s;
  }
  c.check(c.integer("randomization_samples") >= 0, "randomization_samples", "must be nonnegative");
  o.rank.num_samples = static_cast<int>(c.integer("randomization_samples"));
  o.rank.seed = seed;
  return o;
}

inline double mag_db_or_floor(cplx v) { return std::abs(v) > 0 ? mag_db(std::abs(v)) : -kInf; }

inline CsvTable cut_table(const std::string& axis, const std::vector<double>& x, const CVec& v) {
  CsvTable t({axis, "mag_db", "phase_rad"});
  for (std::size_t i = 0; i < x.size(); ++i) {
    const cplx z = v(static_cast<Eigen::Index>(i));
    if (axis.ends_with("_taps"))
      t.add_row({static_cast<long long>(std::llround(x[i])), mag_db_or_floor(z), std::arg(z)});
    else
      t.add_row({x[i], mag_db_or_floor(z), std::arg(z)});
  }
  return t;
}

inline std::vector<double> db_series(const CVec& v, double ref = 1.0) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(mag_db_or_floor(v(i) / ref));
  return out;
}

inline std::string tag(double v) { return format_number(v); }

// ---------------------------------------------------------------------------
// af: empirical vs asymptotic AF cuts under single-path beamforming

struct AfCuts {
  int cpi_len = 0;
  std::vector<double> d_tau;  // Doppler cut axis (taps)
  CVec doppler_cut_emp, doppler_cut_asym;
  std::vector<double> d_nu;   // delay cut axis (Hz), ascending
  CVec delay_cut_emp, delay_cut_asym;
  double delay_psr_db_emp = 0, delay_psr_db_asym = 0;
  double doppler_floor_rms_db = 0;   // RMS of |chi(d_tau, 0)| over d_tau != 0
  double doppler_max_sidelobe_db = 0;
  AmbiguitySurface surface;          // empirical, small window around the origin
};

inline std::vector<AfCuts> compute_af(const Config& c, std::uint64_t seed) {
  const SensingSetup s = sensing_setup(c, seed);
  const auto lengths = c.ints("af_cpi_lengths");
  const int span = static_cast<int>(c.integer("af_delay_span"));
  const int dop_bins = static_cast<int>(c.integer("af_doppler_span_bins"));
  const int os = static_cast<int>(c.integer("af_doppler_oversample"));
  c.check(!lengths.empty(), "af_cpi_lengths", "must not be empty");
  for (int n : lengths) c.check(n >= 16 && n <= 10'000'000, "af_cpi_lengths", "entries must lie in [16, 1e7]");
  c.check(span >= 1 && span <= 1000, "af_delay_span", "must lie in [1, 1000]");
  c.check(dop_bins >= 2 && dop_bins <= 1000, "af_doppler_span_bins", "must lie in [2, 1000]");
  c.check(os >= 1 && os <= 64, "af_doppler_oversample", "must lie in [1, 64]");

  const int m = s.scenario.num_tx_antennas;
  const double ts = s.scenario.sample_period();
  const BeamformerSet bf = single_path_beamformer(s.theta_rad, s.scenario.tx_power_w, m);
  const CVec a = steering_vector(m, s.theta_rad);
  std::vector<AfCuts> out;
  for (std::size_t idx = 0; idx < lengths.size(); ++idx) {
    const int n = lengths[idx];
    AfCuts r;
    r.cpi_len = n;
    const SymbolFrame frame = SymbolFrame::random(s.constellation, n, 2 * span, derive_seed(seed, idx));
    const ReferenceStream ref = ReferenceStream::from(dam_modulate(bf, frame, 2 * span), a);

    // Doppler cut: tau = span, tau_p = 0..2 span, so d_tau = tau_p - tau.
    DelayDopplerGrid g1;
    for (int p = 0; p <= 2 * span; ++p) g1.delay_bins.push_back(p);
    g1.doppler_bins = {0.0};
    const AmbiguitySurface dc = empirical_af(ref, span, 0.0, g1, n, ts);
    r.doppler_cut_emp = dc.values.col(0);
    r.doppler_cut_asym.resize(2 * span + 1);
    double acc = 0, peak = 0;
    for (int p = 0; p <= 2 * span; ++p) {
      const int d = p - span;
      r.d_tau.push_back(d);
      r.doppler_cut_asym(p) = asymptotic_af(bf, a, d, 0.0, n, ts);
      if (d != 0) {
        acc += std::norm(r.doppler_cut_emp(p));
        peak = std::max(peak, std::abs(r.doppler_cut_emp(p)));
      }
    }
    r.doppler_floor_rms_db = 10.0 * std::log10(acc / (2 * span));
    r.doppler_max_sidelobe_db = mag_db(peak);

    // Delay cut: nu = 0, nu_q = q step, so d_nu = -nu_q; stored ascending in d_nu.
    const double step = 1.0 / (os * static_cast<double>(n) * ts);
    const int q_max = dop_bins * os;
    DelayDopplerGrid g2;
    g2.delay_bins = {span};
    for (int q = -q_max; q <= q_max; ++q) g2.doppler_bins.push_back(q * step);
    const AmbiguitySurface tc = empirical_af(ref, span, 0.0, g2, n, ts);
    const int q_len = 2 * q_max + 1;
    r.delay_cut_emp.resize(q_len);
    r.delay_cut_asym.resize(q_len);
    for (int i = 0; i < q_len; ++i) {
      const double d_nu = (i - q_max) * step;
      r.d_nu.push_back(d_nu);
      r.delay_cut_emp(i) = tc.values(0, q_len - 1 - i);
      r.delay_cut_asym(i) = asymptotic_af(bf, a, 0, d_nu, n, ts);
    }
    const std::vector<cplx> emp(r.delay_cut_emp.data(), r.delay_cut_emp.data() + q_len);
    const std::vector<cplx> asym(r.delay_cut_asym.data(), r.delay_cut_asym.data() + q_len);
    r.delay_psr_db_emp = mag_db(psr_doppler(r.d_nu, emp, n, ts));
    r.delay_psr_db_asym = mag_db(psr_doppler(r.d_nu, asym, n, ts));

    if (idx == 0) {
      const int ds = std::min(span, 10);
      DelayDopplerGrid g3;
      for (int p = span - ds; p <= span + ds; ++p) g3.delay_bins.push_back(p);
      const int qs = 5 * std::min(os, 4);
      const double st = 1.0 / (std::min(os, 4) * static_cast<double>(n) * ts);
      for (int q = -qs; q <= qs; ++q) g3.doppler_bins.push_back(q * st);
      r.surface = empirical_af(ref, span, 0.0, g3, n, ts);
      for (int& d : r.surface.delays) d -= span;
      for (double& f : r.surface.dopplers) f = -f;  // d_nu = -nu_q: reverse to ascend
      std::ranges::reverse(r.surface.dopplers);
      r.surface.values = r.surface.values.rowwise().reverse().eval();
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline CsvTable surface_table(const AmbiguitySurface& s) {
  CsvTable t({"d_tau_taps", "d_nu_hz", "mag_db", "phase_rad"});
  for (std::size_t p = 0; p < s.delays.size(); ++p)
    for (std::size_t q = 0; q < s.dopplers.size(); ++q) {
      const cplx v = s.values(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
      t.add_row({static_cast<long long>(s.delays[p]), s.dopplers[q], mag_db_or_floor(v), std::arg(v)});
    }
  return t;
}

inline FigureBundle run_af(const ExperimentSpec& spec) {
  const auto cuts = compute_af(spec.config, spec.seed);
  FigureBundle b{"af", {}, {}, {}};
  CsvTable summary({"cpi_len", "delay_cut_psr_db_empirical", "delay_cut_psr_db_asymptotic",
                    "doppler_cut_floor_rms_db", "doppler_cut_max_sidelobe_db"});
  LinePlot dplot{"Doppler cut |chi(d_tau, 0)|", "d_tau (taps)", "dB", {}, -80.0, 0.0};
  LinePlot tplot{"Delay cut |chi(0, d_nu)|", "d_nu (kHz)", "dB", {}, -60.0, 0.0};
  for (const auto& r : cuts) {
    const std::string n = std::to_string(r.cpi_len);
    b.add("af_doppler_cut_empirical_N" + n + ".csv", cut_table("d_tau_taps", r.d_tau, r.doppler_cut_emp));
    b.add("af_doppler_cut_asymptotic_N" + n + ".csv", cut_table("d_tau_taps", r.d_tau, r.doppler_cut_asym));
    b.add("af_delay_cut_empirical_N" + n + ".csv", cut_table("d_nu_hz", r.d_nu, r.delay_cut_emp));
    b.add("af_delay_cut_asymptotic_N" + n + ".csv", cut_table("d_nu_hz", r.d_nu, r.delay_cut_asym));
    if (!r.surface.delays.empty()) b.add("af_surface_empirical_N" + n + ".csv", surface_table(r.surface));
    summary.add_row({static_cast<long long>(r.cpi_len), r.delay_psr_db_emp, r.delay_psr_db_asym,
                     r.doppler_floor_rms_db, r.doppler_max_sidelobe_db});
    b.metrics["delay_cut_psr_db_N" + n] = r.delay_psr_db_emp;
    b.metrics["doppler_cut_floor_rms_db_N" + n] = r.doppler_floor_rms_db;
    dplot.series.push_back({"empirical N=" + n, r.d_tau, db_series(r.doppler_cut_emp)});
    std::vector<double> khz;
    for (double f : r.d_nu) khz.push_back(f / 1e3);
    tplot.series.push_back({"empirical N=" + n, khz, db_series(r.delay_cut_emp)});
  }
  const auto& last = cuts.back();
  dplot.series.push_back({"asymptotic", last.d_tau, db_series(last.doppler_cut_asym)});
  b.add("af_summary.csv", std::move(summary));
  b.add("af_doppler_cut.svg", std::move(dplot));
  b.add("af_delay_cut.svg", std::move(tplot));
  return b;
}

// ---------------------------------------------------------------------------
// beampattern

/// "-35;15,19;27" -> {{-35}, {15, 19}, {27}} (degrees).
inline std::vector<std::vector<double>> parse_aod_groups(const std::string& text) {
  std::vector<std::vector<double>> groups;
  std::stringstream paths(text);
  std::string item;
  while (std::getline(paths, item, ';')) {
    std::vector<double> g;
    std::stringstream sub(item);
    std::string tok;
    while (std::getline(sub, tok, ',')) {
      const auto b = tok.find_first_not_of(" \t");
      const auto e = tok.find_last_not_of(" \t");
      if (b == std::string::npos) throw InvalidArgument("empty AoD entry in '" + text + "'");
      const double v = detail::parse_real(tok.substr(b, e - b + 1));
      if (!(std::abs(v) <= 90.0)) throw InvalidArgument("AoD " + tok + " outside [-90, 90]");
      g.push_back(v);
    }
    if (g.empty()) throw InvalidArgument("path with no AoDs in '" + text + "'");
    groups.push_back(g);
  }
  if (groups.empty()) throw InvalidArgument("no AoDs given");
  return groups;
}

inline MultipathChannel channel_from(const Config& c, const ScenarioConfig& s, std::uint64_t seed,
                                     const std::vector<int>& delays = {},
                                     const std::vector<std::vector<double>>& aods_deg = {}) {
  CommChannelParams p = channel_params_from(c, s);
  if (p.fixed_delays.empty()) p.fixed_delays = delays;
  for (const auto& g : aods_deg) {
    std::vector<double> r;
    for (double d : g) r.push_back(deg_to_rad(d));
    p.fixed_aods_rad.push_back(r);
  }
  return gen_comm_channel(s, p, seed);
}

struct BeampatternResult {
  std::vector<double> angles_deg;
  std::vector<std::pair<std::string, std::vector<double>>> patterns;  // normalized gain (linear)
  std::vector<std::pair<double, IsacBeamformingResult>> isac;         // per gamma_th_db
  BeamformerSet comm_only, sensing_only;
};

inline BeampatternResult compute_beampattern(const Config& c, std::uint64_t seed) {
  const SensingSetup s = sensing_setup(c, seed);
  const auto groups = parse_key(c, "beampattern_aods_deg", parse_aod_groups);
  c.check(static_cast<int>(groups.size()) == s.scenario.num_paths, "beampattern_aods_deg",
          "needs one ';'-separated group per path (num_paths = " + std::to_string(s.scenario.num_paths) + ")");
  const double step = c.real("beampattern_step_deg");
  c.check(step > 0 && step <= 10, "beampattern_step_deg", "must lie in (0, 10]");
  const MultipathChannel ch = channel_from(c, s.scenario, derive_seed(seed, 0), {}, groups);
  const IsacOptions opt = isac_options(c, derive_seed(seed, 1));
  const double p_t = s.scenario.tx_power_w;

  BeampatternResult r;
  const int steps = static_cast<int>(std::llround(180.0 / step));
  std::vector<double> grid;
  for (int i = 0; i <= steps; ++i) {
    r.angles_deg.push_back(-90.0 + 180.0 * i / steps);
    grid.push_back(deg_to_rad(r.angles_deg.back()));
  }
  r.comm_only = comm_only_beamformer(ch, p_t);
  r.sensing_only = single_path_beamformer(s.theta_rad, p_t, s.scenario.num_tx_antennas);
  r.patterns.emplace_back("comm_only", beampattern(r.comm_only, grid).total);
  r.patterns.emplace_back("sensing_only", beampattern(r.sensing_only, grid).total);
  for (double g : c.reals("beampattern_gamma_db")) {
    const auto th = IsacThresholds::from_db(g, c.real("phi_th_db"));
    IsacBeamformingResult res = optimize_isac(ch, s.theta_rad, th, s.bf_scenario, opt);
    if (res.recovery == Recovery::Failed)
      throw InfeasibleError("beampattern: no feasible beamformer at gamma_th = " + tag(g) + " dB: " +
                                res.diagnostics,
                            0.0);
    const Beampattern bp = beampattern(res.bf, grid);
    r.patterns.emplace_back("isac_gamma" + tag(g) + "db", bp.total);
    r.patterns.emplace_back("isac_gamma" + tag(g) + "db_f1", bp.per_path[0]);
    r.isac.emplace_back(g, std::move(res));
  }
  return r;
}

inline FigureBundle run_beampattern(const ExperimentSpec& spec) {
  const auto r = compute_beampattern(spec.config, spec.seed);
  FigureBundle b{"beampattern", {}, {}, {}};
  std::vector<std::string> header = {"angle_deg"};
  for (const auto& [name, _] : r.patterns) header.push_back(name + "_db");
  CsvTable t(header);
  for (std::size_t i = 0; i < r.angles_deg.size(); ++i) {
    std::vector<CsvTable::Cell> row = {r.angles_deg[i]};
    for (const auto& [_, v] : r.patterns) row.emplace_back(v[i] > 0 ? lin_to_db(v[i]) : -kInf);
    t.add_row(std::move(row));
  }
  b.add("beampattern.csv", std::move(t));
  CsvTable m({"gamma_th_db", "comm_snr_db", "sensing_snr_db", "isr_db", "power_w", "recovery"});
  for (const auto& [g, res] : r.isac) {
    m.add_row({g, lin_to_db(res.comm_snr), lin_to_db(res.sensing_snr), lin_to_db(res.isr), res.bf.total_power(),
               std::string(to_string(res.recovery))});
    b.metrics["comm_snr_db_gamma" + tag(g)] = lin_to_db(res.comm_snr);
  }
  b.add("beampattern_solutions.csv", std::move(m));
  LinePlot p{"Normalized transmit beampattern", "angle (deg)", "dB", {}, -40.0, 0.0};
  for (const auto& [name, v] : r.patterns) {
    std::vector<double> db;
    for (double x : v) db.push_back(x > 0 ? lin_to_db(x) : -kInf);
    p.series.push_back({name, r.angles_deg, db});
  }
  b.add("beampattern.svg", std::move(p));
  return b;
}

// ---------------------------------------------------------------------------
// doppler-cut-isr

struct IsrCutResult {
  double phi_th_db = 0;
  IsacBeamformingResult res;
  std::vector<double> d_tau;
  CVec cut;                      // chi(d_tau, 0)
  double max_sidelobe_db = -kInf;
  std::vector<int> support;      // d_tau != 0 with |chi| above 1e-6 of the peak
};

struct IsrExperiment {
  MultipathChannel channel;
  double theta_rad = 0;
  BeamformingScenario scenario;
  IsacThresholds base;
  std::vector<IsrCutResult> runs;
};

inline IsrExperiment compute_doppler_cut_isr(const Config& c, std::uint64_t seed) {
  const SensingSetup s = sensing_setup(c, seed);
  std::vector<int> delays = c.ints("path_delays");
  if (delays.empty()) delays = c.ints("isr_path_delays");
  c.check(static_cast<int>(delays.size()) == s.scenario.num_paths, "isr_path_delays",
          "needs one delay per path (num_paths = " + std::to_string(s.scenario.num_paths) + ")");
  for (int d : delays) c.check(d >= 0 && d <= s.scenario.guard_len(), "isr_path_delays", "outside the guard");
  const MultipathChannel ch = channel_from(c, s.scenario, derive_seed(seed, 0), delays);
  const IsacOptions opt = isac_options(c, derive_seed(seed, 1));
  IsrExperiment e{ch, s.theta_rad, s.bf_scenario, IsacThresholds::from_db(c.real("gamma_th_db"), kInf), {}};
  const CVec a = steering_vector(s.scenario.num_tx_antennas, s.theta_rad);
  for (double phi : c.reals("isr_phi_db")) {
    IsrCutResult r;
    r.phi_th_db = phi;
    r.res = optimize_isac(ch, s.theta_rad, IsacThresholds::from_db(c.real("gamma_th_db"), phi), s.bf_scenario, opt);
    if (r.res.recovery == Recovery::Failed)
      throw InfeasibleError("doppler-cut-isr: no feasible beamformer at phi_th = " + tag(phi) + " dB: " +
                                r.res.diagnostics,
                            0.0);
    const int nd = r.res.bf.max_kappa() - *std::ranges::min_element(r.res.bf.kappas);
    const int span = nd + 4;
    r.cut.resize(2 * span + 1);
    for (int d = -span; d <= span; ++d) {
      r.d_tau.push_back(d);
      const cplx v = doppler_cut_af(r.res.bf, a, d);
      r.cut(d + span) = v;
      if (d != 0 && std::abs(v) > 1e-6) r.support.push_back(d);
      if (d != 0 && std::abs(v) > 0) r.max_sidelobe_db = std::max(r.max_sidelobe_db, mag_db(std::abs(v)));
    }
    e.runs.push_back(std::move(r));
  }
  return e;
}

inline FigureBundle run_doppler_cut_isr(const ExperimentSpec& spec) {
  const auto e = compute_doppler_cut_isr(spec.config, spec.seed);
  FigureBundle b{"doppler-cut-isr", {}, {}, {}};
  CsvTable m({"phi_th_db", "gamma_th_db", "comm_snr_db", "sensing_snr_db", "isr_db", "power_w",
              "max_sidelobe_db", "sidelobe_support", "recovery"});
  LinePlot p{"Doppler-cut AF of the ISAC beamformer", "d_tau (taps)", "dB", {}, -80.0, 0.0};
  for (const auto& r : e.runs) {
    b.add("isr_doppler_cut_phi" + tag(r.phi_th_db) + "db.csv", cut_table("d_tau_taps", r.d_tau, r.cut));
    std::string sup;
    for (int d : r.support) sup += (sup.empty() ? "" : " ") + std::to_string(d);
    m.add_row({r.phi_th_db, spec.config.real("gamma_th_db"), lin_to_db(r.res.comm_snr),
               lin_to_db(r.res.sensing_snr), r.res.isr > 0 ? lin_to_db(r.res.isr) : -kInf, r.res.bf.total_power(),
               r.max_sidelobe_db, sup, std::string(to_string(r.res.recovery))});
    b.metrics["max_sidelobe_db_phi" + tag(r.phi_th_db)] = r.max_sidelobe_db;
    p.series.push_back({"phi_th=" + tag(r.phi_th_db) + " dB", r.d_tau, db_series(r.cut)});
  }
  b.add("isr_summary.csv", std::move(m));
  b.add("isr_doppler_cut.svg", std::move(p));
  return b;
}

// ---------------------------------------------------------------------------
// tradeoff: spectral efficiency vs phi_th and vs gamma_th over channel seeds

struct TradeoffPoint {
  std::string sweep;  // "phi" (phi varies at fixed gamma) or "gamma"
  double gamma_th_db = 0, phi_th_db = 0;
};

struct TradeoffSample {
  double comm_snr = 0;           // 0 when infeasible / unrecovered
  double spectral_efficiency = 0;
  std::string status;            // recovery label or "infeasible"
};

struct TradeoffResult {
  std::vector<TradeoffPoint> points;
  std::vector<std::vector<TradeoffSample>> samples;  // [seed][point]
  std::vector<double> comm_only_snr;                 // closed-form baseline per seed
  int cpi_len = 0, block_len = 0;

  double mean_se(std::size_t point) const {
    double acc = 0;
    for (const auto& s : samples) acc += s[point].spectral_efficiency;
    return acc / static_cast<double>(samples.size());
  }
};

inline TradeoffResult compute_tradeoff(const Config& c, std::uint64_t seed) {
  const SensingSetup s = sensing_setup(c, seed);
  const CommChannelParams params = channel_params_from(c, s.scenario);
  const long long seeds = c.integer("tradeoff_num_seeds");
  c.check(seeds >= 1 && seeds <= 100000, "tradeoff_num_seeds", "must lie in [1, 1e5]");
  TradeoffResult r;
  for (double g : c.reals("tradeoff_gamma_fixed_db"))
    for (double phi : c.reals("tradeoff_phi_sweep_db")) r.points.push_back({"phi", g, phi});
  for (double phi : c.reals("tradeoff_phi_fixed_db"))
    for (double g : c.reals("tradeoff_gamma_sweep_db")) r.points.push_back({"gamma", g, phi});
  r.cpi_len = s.scenario.cpi_len();
  r.block_len = s.scenario.block_len();
  r.samples.assign(static_cast<std::size_t>(seeds), std::vector<TradeoffSample>(r.points.size()));
  r.comm_only_snr.assign(static_cast<std::size_t>(seeds), 0.0);
  const IsacOptions base = isac_options(c, seed);

  parallel_for(static_cast<std::size_t>(seeds), [&](std::size_t i) {
    const MultipathChannel ch = gen_comm_channel(s.scenario, params, derive_seed(seed, i));
    r.comm_only_snr[i] = comm_snr(ch, comm_only_beamformer(ch, s.scenario.tx_power_w), s.scenario.noise_power_w);
    IsacOptions opt = base;
    opt.rank.seed = derive_seed(derive_seed(seed, i), 1);
    for (std::size_t k = 0; k < r.points.size(); ++k) {
      const auto& pt = r.points[k];
      TradeoffSample& out = r.samples[i][k];
      try {
        const auto res =
            optimize_isac(ch, s.theta_rad, IsacThresholds::from_db(pt.gamma_th_db, pt.phi_th_db), s.bf_scenario, opt);
        out.status = to_string(res.recovery);
        out.comm_snr = res.recovery == Recovery::Failed ? 0.0 : res.comm_snr;
      } catch (const InfeasibleError&) {
        out.status = "infeasible";
      }
      out.spectral_efficiency = spectral_efficiency(out.comm_snr, r.cpi_len, r.block_len);
    }
  });
  return r;
}

inline FigureBundle run_tradeoff(const ExperimentSpec& spec) {
  const auto r = compute_tradeoff(spec.config, spec.seed);
  FigureBundle b{"tradeoff", {}, {}, {}};
  CsvTable per({"sweep", "seed_index", "gamma_th_db", "phi_th_db", "comm_snr_db", "spectral_efficiency", "status"});
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    for (std::size_t k = 0; k < r.points.size(); ++k) {
      const auto& pt = r.points[k];
      const auto& smp = r.samples[i][k];
      per.add_row({pt.sweep, static_cast<long long>(i), pt.gamma_th_db, pt.phi_th_db,
                   smp.comm_snr > 0 ? lin_to_db(smp.comm_snr) : -kInf, smp.spectral_efficiency, smp.status});
    }
    const double base = r.comm_only_snr[i];
    per.add_row({std::string("comm_only"), static_cast<long long>(i), -kInf, kInf, lin_to_db(base),
                 spectral_efficiency(base, r.cpi_len, r.block_len), std::string("closed_form")});
  }
  b.add("tradeoff_per_seed.csv", std::move(per));

  CsvTable mean({"sweep", "gamma_th_db", "phi_th_db", "mean_spectral_efficiency", "feasible_fraction"});
  std::map<std::pair<std::string, double>, PlotSeries> curves;
  for (std::size_t k = 0; k < r.points.size(); ++k) {
    const auto& pt = r.points[k];
    double feasible = 0;
    for (const auto& s : r.samples) feasible += s[k].status == "infeasible" || s[k].status == "failed" ? 0 : 1;
    const double m = r.mean_se(k);
    mean.add_row({pt.sweep, pt.gamma_th_db, pt.phi_th_db, m, feasible / static_cast<double>(r.samples.size())});
    const bool by_phi = pt.sweep == "phi";
    auto& cv = curves[{pt.sweep, by_phi ? pt.gamma_th_db : pt.phi_th_db}];
    cv.name = by_phi ? "gamma_th=" + tag(pt.gamma_th_db) + " dB" : "phi_th=" + tag(pt.phi_th_db) + " dB";
    cv.x.push_back(by_phi ? pt.phi_th_db : pt.gamma_th_db);
    cv.y.push_back(m);
  }
  double base_mean = 0;
  for (double g : r.comm_only_snr) base_mean += spectral_efficiency(g, r.cpi_len, r.block_len);
  base_mean /= static_cast<double>(r.comm_only_snr.size());
  b.metrics["comm_only_mean_spectral_efficiency"] = base_mean;
  b.add("tradeoff_mean.csv", std::move(mean));
  LinePlot pphi{"Spectral efficiency vs ISR threshold", "phi_th (dB)", "bit/s/Hz", {}, -kInf, kInf};
  LinePlot pg{"Spectral efficiency vs SNR threshold", "gamma_th (dB)", "bit/s/Hz", {}, -kInf, kInf};
  for (auto& [key, cv] : curves) (key.first == "phi" ? pphi : pg).series.push_back(cv);
  b.add("tradeoff_vs_phi.svg", std::move(pphi));
  b.add("tradeoff_vs_gamma.svg", std::move(pg));
  return b;
}

// ---------------------------------------------------------------------------
// papr: per-antenna PAPR CCDF, DAM with L paths vs OFDM with K subcarriers

struct PaprSeries {
  std::string name;
  double bound = 0;              // closed-form coherent-addition bound
  std::vector<double> samples;   // one PAPR per window of K samples
  double q1e3_db = 0;            // PAPR exceeded with probability 1e-3
};

/// Each sample is one window of K symbol-rate samples at one antenna, with constant-modulus random-phase weights
/// (1/sqrt(L) per path, 1/sqrt(K) per subcarrier) so the coherent bound equals L resp. K for a PSK alphabet.
/// PAPR is peak over the window divided by the expected power sum |w|^2 E|s|^2.
inline std::vector<PaprSeries> compute_papr(const Config& c, std::uint64_t seed) {
  const auto paths = c.ints("papr_paths");
  const int k_len = static_cast<int>(c.integer("papr_subcarriers"));
  const long long count = c.integer("papr_samples");
  c.check(is_power_of_two(k_len) && k_len >= 8 && k_len <= (1 << 16), "papr_subcarriers",
          "must be a power of two in [8, 65536]");
  c.check(count >= 1000 && count <= 10'000'000, "papr_samples", "must lie in [1e3, 1e7]");
  for (int l : paths) c.check(l >= 1 && l <= k_len, "papr_paths", "entries must lie in [1, papr_subcarriers]");
  const Constellation cons = Constellation::make(parse_key(c, "papr_modulation", parse_modulation));
  double es = 0;
  for (const auto& p : cons.points) es += std::norm(p);
  es /= static_cast<double>(cons.points.size());

  std::vector<PaprSeries> out;
  auto run = [&](const std::string& name, std::uint64_t stream, auto&& one) {
    PaprSeries sr;
    sr.name = name;
    sr.samples.assign(static_cast<std::size_t>(count), 0.0);
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t w) {
      Rng rng(derive_seed(stream, w));
      sr.samples[w] = one(rng);
    });
    sr.q1e3_db = lin_to_db(ccdf_quantile(sr.samples, 1e-3));
    out.push_back(std::move(sr));
  };
  for (std::size_t li = 0; li < paths.size(); ++li) {
    const int l = paths[li];
    std::vector<int> kappas(static_cast<std::size_t>(l));
    std::iota(kappas.begin(), kappas.end(), 0);
    CMat unit(1, l);
    for (int i = 0; i < l; ++i) unit(0, i) = std::polar(1.0 / std::sqrt(l), 0.3 * i);
    const double bound = papr_bound_dam(BeamformerSet(unit, kappas), cons.a_max).front();
    run("dam_L" + std::to_string(l), derive_seed(seed, li), [&](Rng& rng) {
      CMat f(1, l);
      for (int i = 0; i < l; ++i) f(0, i) = unit_phasor(rng) / std::sqrt(static_cast<double>(l));
      std::vector<cplx> sym(static_cast<std::size_t>(k_len + l));
      for (auto& v : sym) v = cons.draw(rng);
      const SymbolFrame frame(std::move(sym), l);
      const TxFrame tx = dam_modulate(BeamformerSet(f, kappas), frame);
      return tx.samples.cwiseAbs2().maxCoeff() / (f.squaredNorm() * es);
    });
    out.back().bound = bound;
  }
  const CMat wk = CMat::Constant(1, k_len, 1.0 / std::sqrt(static_cast<double>(k_len)));
  const double ofdm_bound = papr_bound_ofdm(wk, cons.a_max).front();
  run("ofdm_K" + std::to_string(k_len), derive_seed(seed, paths.size()), [&](Rng& rng) {
    CMat w(1, k_len), x(1, k_len);
    for (int k = 0; k < k_len; ++k) w(0, k) = unit_phasor(rng) / std::sqrt(static_cast<double>(k_len));
    for (int k = 0; k < k_len; ++k) x(0, k) = cons.draw(rng);
    const TxFrame tx = ofdm_modulate(w, x, 0);
    return tx.samples.cwiseAbs2().maxCoeff() / (w.squaredNorm() * es);
  });
  out.back().bound = ofdm_bound;
  return out;
}

inline FigureBundle run_papr(const ExperimentSpec& spec) {
  const auto series = compute_papr(spec.config, spec.seed);
  FigureBundle b{"papr", {}, {}, {}};
  std::vector<double> thr;
  for (int i = 0; i <= 150; ++i) thr.push_back(0.1 * i);
  std::vector<std::string> header = {"papr_db"};
  std::vector<CcdfTable> tabs;
  for (const auto& s : series) {
    header.push_back("ccdf_" + s.name);
    tabs.push_back(papr_ccdf(s.samples, thr));
  }
  CsvTable t(header);
  for (std::size_t i = 0; i < thr.size(); ++i) {
    std::vector<CsvTable::Cell> row = {thr[i]};
    for (const auto& tb : tabs) row.emplace_back(tb.probability[i]);
    t.add_row(std::move(row));
  }
  b.add("papr_ccdf.csv", std::move(t));
  CsvTable sum({"waveform", "bound_db", "quantile_1e-3_db", "samples"});
  LinePlot p{"PAPR CCDF", "PAPR (dB)", "log10 P(PAPR > x)", {}, -5.0, 0.0};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    sum.add_row({s.name, lin_to_db(s.bound), s.q1e3_db, static_cast<long long>(s.samples.size())});
    b.metrics["q1e3_db_" + s.name] = s.q1e3_db;
    std::vector<double> y;
    for (double v : tabs[k].probability) y.push_back(v > 0 ? std::log10(v) : -kInf);
    p.series.push_back({s.name, thr, y});
  }
  b.add("papr_summary.csv", std::move(sum));
  b.add("papr_ccdf.svg", std::move(p));
  return b;
}

// ---------------------------------------------------------------------------
// compare-ofdm: range / Doppler profiles of OFDM radar and DAM sensing

struct CompareRun {
  double velocity_mps = 0, doppler_hz = 0;
  int tau = 0;
  OfdmEstimate ofdm;
  double ofdm_range_psr_db = 0, ofdm_doppler_psr_db = 0;
  std::vector<double> dam_tau_axis, dam_nu_axis;
  CVec dam_range_profile, dam_doppler_profile;
  int dam_tau_hat = 0;
  double dam_nu_hat = 0;
  double dam_range_psr_db = 0, dam_doppler_psr_db = 0;
};

struct CompareResult {
  OfdmConfig ofdm_cfg;
  int dam_cpi_len = 0, guard_len = 0;
  double sample_period = 0;
  std::vector<CompareRun> runs;
};

namespace detail {
/// Coarse DAM acquisition: |sum_n y[n] u*[n - tau_p] e^{-j 2 pi nu_q n Ts}| over all delay bins and a coarse
/// Doppler grid, with the products first summed over blocks of `block` samples (the phase drift inside a block
/// is below 1e-2 cycles for the spans used here).
inline std::pair<int, double> coarse_acquire(const EchoFrame& echo, const ReferenceStream& ref, int max_delay,
                                             const std::vector<double>& nus, double ts, int block) {
  const Eigen::Index n_len = echo.samples.size();
  const Eigen::Index nb = (n_len + block - 1) / block;
  std::vector<double> best(static_cast<std::size_t>(max_delay + 1), -1.0);
  std::vector<double> best_nu(best.size(), 0.0);
  parallel_for(best.size(), [&](std::size_t p) {
    CVec acc = CVec::Zero(nb);
    for (Eigen::Index n = 0; n < n_len; ++n)
      acc(n / block) += echo.samples(n) * std::conj(ref[static_cast<int>(n) - static_cast<int>(p)]);
    for (double nu : nus) {
      cplx s{0.0, 0.0};
      for (Eigen::Index m = 0; m < nb; ++m)
        s += acc(m) * std::polar(1.0, -2.0 * kPi * nu * ts * (static_cast<double>(m * block) + 0.5 * (block - 1)));
      if (std::abs(s) > best[p]) best[p] = std::abs(s), best_nu[p] = nu;
    }
  });
  const auto it = std::ranges::max_element(best);
  const auto p = static_cast<std::size_t>(it - best.begin());
  return {static_cast<int>(p), best_nu[p]};
}
}  // namespace detail

inline CompareResult compute_compare_ofdm(const Config& c, std::uint64_t seed) {
  const SensingSetup s = sensing_setup(c, seed);
  const double bw = c.real("ofdm_bandwidth_hz");
  c.check(bw > 0 && std::isfinite(bw), "ofdm_bandwidth_hz", "must be positive");
  const double ts = 1.0 / bw;
  const int k_len = static_cast<int>(c.integer("ofdm_subcarriers"));
  c.check(is_power_of_two(k_len) && k_len >= 16 && k_len <= (1 << 16), "ofdm_subcarriers",
          "must be a power of two in [16, 65536]");
  const int guard = static_cast<int>(std::lround(s.scenario.guard_time_s * bw));
  const int block = static_cast<int>(std::lround(s.scenario.coherence_time_s * bw));
  c.check(guard <= k_len, "guard_time_s", "OFDM cyclic prefix (guard) must not exceed the symbol length");
  c.check(block >= 2 * (k_len + guard), "coherence_time_s", "block must hold at least two OFDM symbols");
  CompareResult out;
  out.ofdm_cfg = OfdmConfig::fitting(block, k_len, guard, ts);
  out.dam_cpi_len = block - guard;
  out.guard_len = guard;
  out.sample_period = ts;
  const double range = c.real("compare_range_m");
  const int tau = delay_taps_from_range(range, ts);
  c.check(range > 0 && tau <= guard, "compare_range_m", "target delay must lie within the guard interval");
  const double snr_db = c.real("compare_snr_db");
  const double span = c.real("compare_doppler_span_hz");
  const int os = static_cast<int>(c.integer("compare_doppler_oversample"));
  c.check(span > 0 && span < 0.5 / ts, "compare_doppler_span_hz", "must lie in (0, B/2)");
  c.check(os >= 1 && os <= 64, "compare_doppler_oversample", "must lie in [1, 64]");
  const Window win = parse_key(c, "ofdm_window", parse_window);
  const OfdmEstimateOptions eopt{win, c.flag("ofdm_periodogram")};
  const int m = s.scenario.num_tx_antennas;
  const CVec a = steering_vector(m, s.theta_rad);
  const double p_t = s.scenario.tx_power_w;

  // Same symbols for every velocity, so the runs differ only in the Doppler shift.
  const CMat data = random_ofdm_data(s.constellation, out.ofdm_cfg.num_symbols, k_len, derive_seed(seed, 0));
  const CMat precoders = aligned_precoders(out.ofdm_cfg, m, s.theta_rad, p_t);
  const BeamformerSet bf = single_path_beamformer(s.theta_rad, p_t, m);
  const SymbolFrame frame = SymbolFrame::random(s.constellation, out.dam_cpi_len, guard, derive_seed(seed, 1));
  const ReferenceStream ref = ReferenceStream::from(dam_modulate(bf, frame, guard), a);
  const double dam_sig = ref.samples.squaredNorm() / static_cast<double>(ref.samples.size());

  const auto vels = c.reals("compare_velocities_mps");
  for (std::size_t vi = 0; vi < vels.size(); ++vi) {
    CompareRun r;
    r.velocity_mps = vels[vi];
    r.doppler_hz = doppler_from_velocity(s.scenario.carrier_freq_hz, vels[vi]);
    c.check(std::abs(r.doppler_hz) < span, "compare_velocities_mps", "Doppler shift exceeds compare_doppler_span_hz");
    r.tau = tau;
    const SensingTarget target{s.theta_rad, tau, r.doppler_hz, {1.0, 0.0}};

    // OFDM: per-sample signal power of a^H x is sum_k |a^H w_k|^2 = M P_t.
    const double ofdm_sig = static_cast<double>(m) * p_t;
    const double s2o = std::isfinite(snr_db) ? ofdm_sig / db_to_lin(snr_db) : 0.0;
    const CMat echo_o = ofdm_echo_subcarriers(out.ofdm_cfg, precoders, data, target, s2o, derive_seed(seed, 10 + vi));
    r.ofdm = ofdm_estimate(out.ofdm_cfg, echo_o, data, eopt);
    {
      const CVec& rp = r.ofdm.profiles.range_profile;
      std::vector<double> mags(static_cast<std::size_t>(rp.size()));
      for (Eigen::Index i = 0; i < rp.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(rp(i));
      r.ofdm_range_psr_db = mag_db(profile_psr(mags, true));
      const CVec& dp = r.ofdm.profiles.doppler_profile;
      std::vector<double> dm(static_cast<std::size_t>(dp.size()));
      for (Eigen::Index i = 0; i < dp.size(); ++i) dm[static_cast<std::size_t>(i)] = std::abs(dp(i));
      r.ofdm_doppler_psr_db = mag_db(profile_psr(dm, true));
    }

    // DAM: matched filter. Coarse acquisition, then exact profiles through the estimate.
    const double s2d = std::isfinite(snr_db) ? dam_sig / db_to_lin(snr_db) : 0.0;
    const EchoFrame echo = synth_echo(ref, target, s2d, ts, derive_seed(seed, 20 + vi));
    const double bin = 1.0 / (static_cast<double>(out.dam_cpi_len) * ts);
    std::vector<double> coarse;
    const int qc = static_cast<int>(std::ceil(span / bin));
    for (int q = -qc; q <= qc; ++q) coarse.push_back(q * bin);
    const auto [tau0, nu0] = detail::coarse_acquire(echo, ref, guard, coarse, ts, 32);
    DelayDopplerGrid gd;
    gd.delay_bins = {tau0};
    const int qf = static_cast<int>(std::ceil(span / (bin / os)));
    for (int q = -qf; q <= qf; ++q) gd.doppler_bins.push_back(q * bin / os);
    // Doppler profile at the acquired delay, Hamming-weighted over the CPI when requested.
    {
      CVec w(out.dam_cpi_len);
      const RVec taps = window_taps(win, out.dam_cpi_len);
      double energy = 0;
      for (int n = 0; n < out.dam_cpi_len; ++n) {
        const cplx u = ref[n - tau0];
        energy += std::norm(u);
        w(n) = echo.samples(n) * std::conj(u) * taps(n);
      }
      r.dam_doppler_profile.resize(static_cast<Eigen::Index>(gd.doppler_bins.size()));
      parallel_for(gd.doppler_bins.size(), [&](std::size_t q) {
        r.dam_doppler_profile(static_cast<Eigen::Index>(q)) =
            detail::rotated_sum(w, -gd.doppler_bins[q], ts) / std::sqrt(energy);
      });
      r.dam_nu_axis = gd.doppler_bins;
      Eigen::Index qh = 0;
      r.dam_doppler_profile.cwiseAbs().maxCoeff(&qh);
      r.dam_nu_hat = gd.doppler_bins[static_cast<std::size_t>(qh)];
    }
    DelayDopplerGrid gr;
    for (int p = 0; p <= guard; ++p) gr.delay_bins.push_back(p);
    gr.doppler_bins = {r.dam_nu_hat};
    const CMat rmap = matched_filter_map(echo, ref, gr, ts);
    r.dam_range_profile = rmap.col(0);
    Eigen::Index ph = 0;
    r.dam_range_profile.cwiseAbs().maxCoeff(&ph);
    r.dam_tau_hat = static_cast<int>(ph);
    for (int p : gr.delay_bins) r.dam_tau_axis.push_back(p);
    std::vector<double> rm, dm;
    for (Eigen::Index i = 0; i < r.dam_range_profile.size(); ++i) rm.push_back(std::abs(r.dam_range_profile(i)));
    for (Eigen::Index i = 0; i < r.dam_doppler_profile.size(); ++i) dm.push_back(std::abs(r.dam_doppler_profile(i)));
    r.dam_range_psr_db = mag_db(profile_psr(rm));
    r.dam_doppler_psr_db = mag_db(profile_psr(dm));
    out.runs.push_back(std::move(r));
  }
  return out;
}

inline FigureBundle run_compare_ofdm(const ExperimentSpec& spec) {
  const auto cr = compute_compare_ofdm(spec.config, spec.seed);
  FigureBundle b{"compare-ofdm", {}, {}, {}};
  CsvTable sum({"velocity_mps", "doppler_hz", "tau_taps", "ofdm_tau_hat", "ofdm_nu_hat_hz", "ofdm_range_psr_db",
                "ofdm_doppler_psr_db", "dam_tau_hat", "dam_nu_hat_hz", "dam_range_psr_db", "dam_doppler_psr_db"});
  LinePlot pr{"Range profiles", "delay (taps)", "dB", {}, -70.0, 0.0};
  LinePlot pd{"Doppler profiles", "Doppler (kHz)", "dB", {}, -70.0, 0.0};
  for (const auto& r : cr.runs) {
    const std::string v = tag(r.velocity_mps);
    // OFDM range axis: tau_p in [0, N_p]; the profile beyond the CP is aliased and not reported.
    const CVec& rp = r.ofdm.profiles.range_profile;
    const double o_peak = rp.cwiseAbs().maxCoeff();
    std::vector<double> otau;
    for (int p = 0; p <= cr.guard_len; ++p) otau.push_back(p);
    const CVec o_rng = rp.head(cr.guard_len + 1) / o_peak;
    b.add("ofdm_range_profile_v" + v + ".csv", cut_table("tau_taps", otau, o_rng));
    const CVec& dp = r.ofdm.profiles.doppler_profile;
    const CVec o_dop = dp / dp.cwiseAbs().maxCoeff();
    b.add("ofdm_doppler_profile_v" + v + ".csv", cut_table("nu_hz", r.ofdm.profiles.doppler_bins_hz, o_dop));
    const CVec d_rng = r.dam_range_profile / r.dam_range_profile.cwiseAbs().maxCoeff();
    const CVec d_dop = r.dam_doppler_profile / r.dam_doppler_profile.cwiseAbs().maxCoeff();
    b.add("dam_range_profile_v" + v + ".csv", cut_table("tau_taps", r.dam_tau_axis, d_rng));
    b.add("dam_doppler_profile_v" + v + ".csv", cut_table("nu_hz", r.dam_nu_axis, d_dop));
    sum.add_row({r.velocity_mps, r.doppler_hz, static_cast<long long>(r.tau), static_cast<long long>(r.ofdm.tau_hat),
                 r.ofdm.nu_hat_hz, r.ofdm_range_psr_db, r.ofdm_doppler_psr_db, static_cast<long long>(r.dam_tau_hat),
                 r.dam_nu_hat, r.dam_range_psr_db, r.dam_doppler_psr_db});
    b.metrics["ofdm_range_psr_db_v" + v] = r.ofdm_range_psr_db;
    b.metrics["dam_range_psr_db_v" + v] = r.dam_range_psr_db;
    pr.series.push_back({"OFDM v=" + v, otau, db_series(o_rng)});
    pr.series.push_back({"DAM v=" + v, r.dam_tau_axis, db_series(d_rng)});
    std::vector<double> okhz, dkhz;
    for (double f : r.ofdm.profiles.doppler_bins_hz) okhz.push_back(f / 1e3);
    for (double f : r.dam_nu_axis) dkhz.push_back(f / 1e3);
    pd.series.push_back({"OFDM v=" + v, okhz, db_series(o_dop)});
    pd.series.push_back({"DAM v=" + v, dkhz, db_series(d_dop)});
  }
  b.add("compare_summary.csv", std::move(sum));
  b.add("compare_range_profiles.svg", std::move(pr));
  b.add("compare_doppler_profiles.svg", std::move(pd));
  return b;
}

// ---------------------------------------------------------------------------
// snr-budget

struct SnrBudget {
  int cpi_len = 0, num_paths = 0, num_subcarriers = 0, num_symbols = 0, num_antennas = 0;
  double alpha_sq = 0, noise_power = 0, tx_power = 0;
  double single_path_formula = 0, single_path_library = 0;  // |alpha|^2 N M P / sigma^2
  double mc_snr = 0;                                         // matched-filter output, Monte Carlo
  double mc_expected = 0;                                    // |alpha|^2 ||u||^2 / sigma^2 for the drawn frame
  int mc_trials = 0;
  double dam_max = 0, ofdm_max = 0;                          // under the peak-power backoff model
  double ratio_closed_form = 0;                              // N / (L I)
};

inline SnrBudget compute_snr_budget(const Config& c, std::uint64_t seed) {
  const SensingSetup s = sensing_setup(c, seed);
  const ScenarioConfig& sc = s.scenario;
  SnrBudget b;
  b.cpi_len = sc.cpi_len();
  b.num_paths = sc.num_paths;
  b.num_antennas = sc.num_tx_antennas;
  b.alpha_sq = s.alpha_sq;
  b.noise_power = sc.noise_power_w;
  b.tx_power = sc.tx_power_w;
  const double ts = sc.sample_period();
  const CVec a = steering_vector(b.num_antennas, s.theta_rad);
  const BeamformerSet sp = single_path_beamformer(s.theta_rad, b.tx_power, b.num_antennas);
  b.single_path_formula = b.alpha_sq * b.cpi_len * b.num_antennas * b.tx_power / b.noise_power;
  b.single_path_library = sensing_snr(sp, a, b.alpha_sq, b.cpi_len, b.noise_power);

  // Monte Carlo: noisy echoes of one frame, matched filter at the true (tau, nu).
  const long long trials = c.integer("snr_mc_trials");
  c.check(trials >= 10 && trials <= 1'000'000, "snr_mc_trials", "must lie in [10, 1e6]");
  b.mc_trials = static_cast<int>(trials);
  const int tau = delay_taps_from_range(c.real("target_range_m"), ts);
  c.check(tau <= sc.guard_len(), "target_range_m", "target delay exceeds the guard interval");
  const double nu = doppler_from_velocity(sc.carrier_freq_hz, c.real("target_velocity_mps"));
  const SymbolFrame frame = SymbolFrame::random(s.constellation, b.cpi_len, sc.guard_len(), derive_seed(seed, 0));
  const ReferenceStream ref = ReferenceStream::from(dam_modulate(sp, frame, sc.guard_len()), a);
  const SensingTarget target{s.theta_rad, tau, nu, {std::sqrt(b.alpha_sq), 0.0}};
  double energy = 0;
  for (int n = 0; n < b.cpi_len; ++n) energy += std::norm(ref[n - tau]);
  b.mc_expected = b.alpha_sq * energy / b.noise_power;
  DelayDopplerGrid g{{tau}, {nu}};
  std::vector<cplx> out(static_cast<std::size_t>(trials));
  parallel_for(out.size(), [&](std::size_t t) {
    const EchoFrame e = synth_echo(ref, target, b.noise_power, ts, derive_seed(seed, 1 + t));
    out[t] = matched_filter_map(e, ref, g, ts)(0, 0);
  });
  cplx mean{0.0, 0.0};
  for (const cplx& v : out) mean += v;
  mean /= static_cast<double>(out.size());
  double var = 0;
  for (const cplx& v : out) var += std::norm(v - mean);
  var /= static_cast<double>(out.size() - 1);
  b.mc_snr = std::norm(mean) / var;

  // Backoff: average power P_max / PAPR with PAPR = K (OFDM) and L (DAM); P_max is the configured power.
  b.num_subcarriers = static_cast<int>(c.integer("snr_ofdm_subcarriers"));
  c.check(is_power_of_two(b.num_subcarriers) && b.num_subcarriers >= sc.guard_len(), "snr_ofdm_subcarriers",
          "must be a power of two no smaller than the guard length");
  const OfdmConfig ocfg = OfdmConfig::fitting(sc.block_len(), b.num_subcarriers, sc.guard_len(), ts);
  c.check(ocfg.num_symbols >= 1, "snr_ofdm_subcarriers", "no OFDM symbol fits in the coherence block");
  b.num_symbols = ocfg.num_symbols;
  b.ofdm_max = ofdm_max_sensing_snr(ocfg, b.num_antennas, b.tx_power / b.num_subcarriers, b.alpha_sq, b.noise_power);
  const BeamformerSet backed_off = single_path_beamformer(s.theta_rad, b.tx_power / b.num_paths, b.num_antennas);
  b.dam_max = sensing_snr(backed_off, a, b.alpha_sq, b.cpi_len, b.noise_power);
  b.ratio_closed_form = static_cast<double>(b.cpi_len) / (static_cast<double>(b.num_paths) * b.num_symbols);
  return b;
}

inline FigureBundle run_snr_budget(const ExperimentSpec& spec) {
  const auto s = compute_snr_budget(spec.config, spec.seed);
  FigureBundle b{"snr-budget", {}, {}, {}};
  CsvTable t({"quantity", "value", "value_db"});
  auto row = [&](const std::string& k, double v, bool db = true) {
    t.add_row({k, v, db ? lin_to_db(v) : std::nan("")});
    b.metrics[k] = v;
  };
  row("cpi_len", s.cpi_len, false);
  row("num_paths", s.num_paths, false);
  row("ofdm_subcarriers", s.num_subcarriers, false);
  row("ofdm_symbols", s.num_symbols, false);
  row("single_path_snr_formula", s.single_path_formula);
  row("single_path_snr_library", s.single_path_library);
  row("mc_matched_filter_snr", s.mc_snr);
  row("mc_expected_snr", s.mc_expected);
  row("mc_trials", s.mc_trials, false);
  row("gamma_dam_max", s.dam_max);
  row("gamma_ofdm_max", s.ofdm_max);
  row("ratio_dam_over_ofdm", s.dam_max / s.ofdm_max);
  row("ratio_closed_form", s.ratio_closed_form);
  b.add("snr_budget.csv", std::move(t));
  return b;
}

// ---------------------------------------------------------------------------

inline FigureBundle run_experiment(const ExperimentSpec& spec) {
  static const std::map<std::string, std::function<FigureBundle(const ExperimentSpec&)>> table = {
      {"af", run_af},
      {"beampattern", run_beampattern},
      {"doppler-cut-isr", run_doppler_cut_isr},
      {"tradeoff", run_tradeoff},
      {"papr", run_papr},
      {"compare-ofdm", run_compare_ofdm},
      {"snr-budget", run_snr_budget},
  };
  const auto it = table.find(spec.command);
  if (it == table.end()) throw ConfigError("unknown command '" + spec.command + "'");
  return it->second(spec);
}

}  // namespace damisac
