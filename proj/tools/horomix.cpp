// horomix command-line experiment runner.
//
//   horomix <command> [--config FILE] [--seed N] [--out PATH] [--section.key=value ...]
//
// Exit codes: 0 pass, 1 assertion or inequality failure, 2 configuration
// error, 3 resource exhaustion.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "horomix/cluster.hpp"
#include "horomix/config.hpp"
#include "horomix/errors.hpp"
#include "horomix/experiment.hpp"
#include "horomix/mixinglab.hpp"
#include "horomix/random.hpp"

using namespace horomix;
using nlohmann::json;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kConfigError = 2;
constexpr int kResourceError = 3;

constexpr std::uint64_t kTagFlowCheck = 200;
constexpr std::uint64_t kTagSample = 201;

// Output sink: a file given by --out, else stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string format(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

json config_json(const Config& c) {
  json j = json::object();
  for (const auto& [key, value] : c.entries()) {
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return j;
}

json envelope(const std::string& command, const Config& c) {
  return {{"version", version_string()}, {"command", command}, {"config", config_json(c)}};
}

json record(const std::string& experiment, json params, const EstimateResult& r) {
  return {{"experiment", experiment}, {"params", std::move(params)}, {"value", r.value},
          {"stderr", r.stderr_},      {"n", r.n},                    {"seed", r.seed}};
}

void write_json(Output& out, const json& j) { out.stream() << j.dump(2) << '\n'; }

// CSV preamble: version and the full config as comment lines.
void csv_header(std::ostream& os, const std::string& command, const Config& c) {
  os << "# " << version_string() << '\n';
  os << "# command: " << command << '\n';
  std::istringstream text(c.to_text());
  std::string line;
  while (std::getline(text, line)) os << "# " << line << '\n';
}

std::uint64_t seed_of(const Config& c) { return c.count("run.seed"); }

// ---------------------------------------------------------------- commands

int cmd_flow_check(const Config& c, Output& out) {
  const Setup s = make_setup(c);
  json report = envelope("flow-check", c);
  bool pass = true;

  // renormalization identity
  double worst_renorm = 0.0;
  for (double t : c.reals("flow.renorm_t")) {
    for (double sv : c.reals("flow.renorm_s")) {
      worst_renorm = std::max(worst_renorm, renormalization_residual(t, sv));
    }
  }
  const bool renorm_ok = worst_renorm <= c.real("flow.renorm_tol");
  pass = pass && renorm_ok;
  report["renormalization"] = {{"max_residual", worst_renorm}, {"pass", renorm_ok}};

  // lattice
  const double relation = s.lattice->relation_residual();
  const bool lattice_ok = relation <= 1e-8;
  pass = pass && lattice_ok;
  report["lattice"] = {{"relation_residual", relation}, {"pass", lattice_ok}};

  // cocycle additivity and round trip
  const std::uint64_t seed = seed_of(c);
  const HaarSampler points(s.lattice, derive_seed(seed, kTagFlowCheck));
  const std::size_t samples = c.count("flow.additivity_samples");
  const double tmax = c.real("flow.additivity_tmax");
  std::mt19937_64 rng = substream(seed, 0, kTagFlowCheck);
  std::uniform_real_distribution<double> time(0.0, tmax);
  double worst_add = 0.0, worst_round = 0.0, worst_unit = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const QuotientPoint x = points.draw(i);
    const double t1 = time(rng), t2 = time(rng);
    const double u1 = u_of(s.clock, x, t1);
    const QuotientPoint y = flow_tau(s.clock, x, t1);
    worst_add = std::max(worst_add, std::abs(u_of(s.clock, x, t1 + t2) - u1 - u_of(s.clock, y, t2)));
    worst_round = std::max(worst_round, std::abs(inverse_clock(s.clock, x, u1) - t1));
    if (s.clock.tau.is_constant()) {
      worst_unit = std::max(worst_unit, std::abs(u1 - t1 / s.clock.tau.constant_value()));
    }
  }
  const bool add_ok = worst_add <= c.real("flow.additivity_tol") && worst_round <= 1e-7 &&
                      worst_unit <= 1e-8;
  pass = pass && add_ok;
  report["cocycle"] = {{"samples", samples},
                       {"max_additivity_residual", worst_add},
                       {"max_round_trip", worst_round},
                       {"max_constant_deviation", worst_unit},
                       {"pass", add_ok}};

  // shear discrepancy
  std::uniform_real_distribution<double> s_dist(0.0, 1.0), t_dist(1.0, 100.0);
  double worst_a = 0.0, worst_res = 0.0;
  json rows = json::array();
  for (std::size_t i = 0; i < c.count("flow.shear_samples"); ++i) {
    const QuotientPoint x = points.draw(samples + i);
    const double sv = s_dist(rng), T = t_dist(rng);
    const ShearReport r = shear_report(s.clock, x, sv, T);
    worst_a = std::max(worst_a, std::abs(r.discrepancy));
    worst_res = std::max(worst_res, r.residual);
    rows.push_back({{"s", sv}, {"T", T}, {"A", r.discrepancy}});
  }
  bool shear_ok = worst_res <= 1e-5;
  if (s.clock.tau.is_constant()) shear_ok = shear_ok && worst_a <= c.real("flow.shear_tol");
  pass = pass && shear_ok;
  report["shear"] = {{"max_abs_A", worst_a}, {"max_residual", worst_res}, {"rows", rows},
                     {"pass", shear_ok}};

  // measure invariance
  const auto ts = c.reals("flow.invariance_t");
  json inv = json::array();
  bool inv_ok = true;
  const std::size_t n = c.count("flow.invariance_n");
  for (std::size_t k = 0; k < std::min<std::size_t>(2, s.components.size() + 1); ++k) {
    const Observable& f = k == 0 ? s.family : s.components[0];
    for (const auto& r : measure_invariance(f, s.clock, ts, n, derive_seed(seed, k))) {
      inv_ok = inv_ok && r.holds;
      inv.push_back({{"observable", k == 0 ? "family" : "component0"},
                     {"t", r.t},
                     {"flowed", r.flowed.value},
                     {"base", r.base.value},
                     {"difference", r.difference},
                     {"combined_stderr", r.combined_stderr},
                     {"pass", r.holds}});
    }
  }
  pass = pass && inv_ok;
  report["invariance"] = {{"n", n}, {"rows", inv}, {"pass", inv_ok}};
  report["pass"] = pass;
  write_json(out, report);
  return pass ? kPass : kFail;
}

int cmd_correlate(const Config& c, Output& out) {
  const Setup s = make_setup(c);
  const auto k = c.integer("correlate.k");
  if (k < 2 || k > 5) throw ConfigError("correlate.k must lie in [2, 5]");
  const auto gaps = c.reals("correlate.gaps");
  const std::size_t n = c.count("correlate.n");
  const CorrelationOptions opts{c.real("correlate.window"), c.real("correlate.window_step")};
  const std::uint64_t seed = seed_of(c);

  std::vector<const Observable*> fs(static_cast<std::size_t>(k), &s.family);
  std::vector<std::vector<double>> tuples;
  std::vector<bool> flagged;
  for (double g : gaps) {
    if (!(g >= 0.0)) throw ConfigError("correlate.gaps must be non-negative");
    const bool beyond = static_cast<double>(k - 1) * g + opts.window > s.clock.horizon;
    flagged.push_back(beyond);
    if (!beyond) {
      std::vector<double> ts;
      for (std::int64_t i = 0; i < k; ++i) ts.push_back(static_cast<double>(i) * g);
      tuples.push_back(ts);
    }
  }
  const auto results = tuples.empty() ? std::vector<EstimateResult>{}
                                      : correlate_k_grid(fs, tuples, s.clock, n, seed, opts);

  std::ostream& os = out.stream();
  csv_header(os, "correlate", c);
  os << "min_gap,value,stderr,n,seed,flag\n";
  std::vector<DecayPoint> points;
  std::size_t next = 0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (flagged[i]) {
      os << format(gaps[i]) << ",,,," << seed << ",horizon\n";
      continue;
    }
    const EstimateResult& r = results[next++];
    os << format(gaps[i]) << ',' << format(r.value) << ',' << format(r.stderr_) << ',' << r.n
       << ',' << r.seed << ",\n";
    if (gaps[i] > 0.0) points.push_back({gaps[i], r.value, r.stderr_, true});
  }
  try {
    const QPropertyFit q = q_property_fit(static_cast<std::size_t>(k), points,
                                          c.real("correlate.noise_floor"));
    const double z = c.real("correlate.confidence_z");
    os << "# fit: exponent=" << format(q.fit.exponent) << " exponent_stderr="
       << format(q.fit.exponent_stderr) << " r_squared=" << format(q.fit.r_squared)
       << " beta_k=" << format(q.beta) << " decays_at_z" << format(z) << '='
       << (q.fit.decays(z) ? "yes" : "no") << '\n';
    for (const auto& p : q.fit.points) {
      if (!p.used) os << "# fit: excluded below noise floor: min_gap=" << format(p.t) << '\n';
    }
  } catch (const InsufficientDataError& e) {
    os << "# fit: insufficient data (" << e.what() << ")\n";
  }
  return kPass;
}

void write_scan(std::ostream& os, const ShearScan& scan, const std::string& reference_name,
                const std::function<double(double)>& reference, bool with_residual) {
  os << "s,T,max_abs,mean_abs" << (with_residual ? ",max_residual" : "") << ',' << reference_name
     << '\n';
  for (std::size_t i = 0; i < scan.Ts.size(); ++i) {
    os << format(scan.s) << ',' << format(scan.Ts[i]) << ',' << format(scan.max_abs[i]) << ','
       << format(scan.mean_abs[i]);
    if (with_residual) os << ',' << format(scan.max_residual[i]);
    os << ',' << format(reference(scan.Ts[i])) << '\n';
  }
  if (scan.fit) {
    os << "# fit: growth_exponent=" << format(scan.fit->exponent)
       << " r_squared=" << format(scan.fit->r_squared) << '\n';
  } else {
    os << "# fit: insufficient nonzero values\n";
  }
}

int cmd_shear(const Config& c, Output& out) {
  const Setup s = make_setup(c);
  const double sv = c.real("shear.s");
  const ShearScan scan = shear_scan(s.clock, sv, c.reals("shear.T"), c.count("shear.samples"),
                                    seed_of(c));
  std::ostream& os = out.stream();
  csv_header(os, "shear", c);
  write_scan(os, scan, "s_log_T", [sv](double T) { return sv * std::log(T); }, true);
  const double beta = c.real("model.beta");
  os << "# reference growth exponent 1 - beta = " << format(1.0 - beta) << '\n';
  return kPass;
}

int cmd_deviation(const Config& c, Output& out) {
  const Setup s = make_setup(c);
  const double sv = c.real("deviation.s");
  const double beta = c.real("model.beta");
  const ShearScan scan = deviation_scan(s.clock, sv, c.reals("deviation.T"),
                                        c.count("deviation.samples"), seed_of(c));
  std::ostream& os = out.stream();
  csv_header(os, "deviation", c);
  write_scan(os, scan, "s_T_pow_1_minus_beta",
             [sv, beta](double T) { return deviation_reference(sv, T, beta); }, false);
  return kPass;
}

int cmd_l2avg(const Config& c, Output& out) {
  const Setup s = make_setup(c);
  const double K = c.real("l2avg.K");
  if (!(K > 0.0 && K < 1.0)) throw ConfigError("l2avg.K must lie in (0, 1)");
  const double m = c.real("l2avg.m");
  const std::size_t n = c.count("l2avg.n");
  const std::size_t steps = c.count("l2avg.steps");
  const std::vector<const Observable*> fs{&s.family, &s.family};
  const double bound = modulus_bound(fs);
  std::ostream& os = out.stream();
  csv_header(os, "l2avg", c);
  os << "window,value,stderr,n,seed,modulus_bound,within_bound\n";
  bool pass = true;
  for (double w : c.reals("l2avg.windows")) {
    const EstimateResult r = l2_multi_average(fs, {K, 1.0}, m, m + w, s.clock, n, seed_of(c), steps);
    const bool ok = r.value <= bound + 3.0 * r.stderr_;
    pass = pass && ok;
    os << format(w) << ',' << format(r.value) << ',' << format(r.stderr_) << ',' << r.n << ','
       << r.seed << ',' << format(bound) << ',' << (ok ? "yes" : "no") << '\n';
  }
  os << "# measure: Haar (L2 norm over mu)\n";
  return pass ? kPass : kFail;
}

int cmd_vdc(const Config& c, Output& out) {
  const Setup s = make_setup(c);
  const auto reports = vdc_grid(s.family, s.clock, c.reals("vdc.N"), c.reals("vdc.L"),
                                c.count("vdc.n"), seed_of(c), c.real("vdc.step"));
  json j = envelope("vdc", c);
  json rows = json::array();
  bool pass = true;
  for (const auto& r : reports) {
    pass = pass && r.holds;
    json rec = record("vdc", {{"N", r.N}, {"L", r.L}}, r.lhs);
    rec["rhs"] = r.rhs.value;
    rec["rhs_stderr"] = r.rhs.stderr_;
    rec["margin"] = r.margin;
    rec["combined_stderr"] = r.combined_stderr;
    rec["constant"] = r.constant;
    rec["norm"] = r.norm;
    rec["holds"] = r.holds;
    rows.push_back(rec);
  }
  j["records"] = rows;
  j["pass"] = pass;
  write_json(out, j);
  return pass ? kPass : kFail;
}

json cluster_json(const ClusterInput& in, const ClusterResult& r) {
  json assignment = json::array();
  for (std::size_t i = 0; i < r.assignment.size(); ++i) {
    const Cover& cv = r.assignment[i];
    json a = {{"t", in.times[i]}};
    switch (cv.kind) {
      case Cover::Kind::Start: a["interval"] = "start"; break;
      case Cover::Kind::End: a["interval"] = "end"; break;
      case Cover::Kind::Anchor:
        a["interval"] = "anchor";
        a["anchor_index"] = r.anchors[cv.anchor];
        break;
    }
    assignment.push_back(a);
  }
  json j = {{"stop_step", r.stop_step}, {"radii", r.radii},         {"anchors", r.anchors},
            {"xi_k", r.xi_k},           {"assignment", assignment}};
  if (r.stop_step == in.k()) j["stop_condition_holds"] = stop_condition_holds(in, r);
  return j;
}

int cmd_cluster(const Config& c, Output& out) {
  const ClusterInput in{c.reals("cluster.zetas"), c.reals("cluster.times")};
  json j = envelope("cluster", c);
  j["result"] = cluster_json(in, run_procedure(in));
  j["zetas_note"] = "zetas are configuration placeholders";
  write_json(out, j);
  return kPass;
}

int cmd_plan(const Config& c, Output& out) {
  json j = envelope("plan", c);
  const auto times = c.reals("plan.times");
  if (!times.empty()) {
    const CasePlan p = plan_kmix(times, c.reals("plan.zetas"));
    j["plan"] = {{"case", p.which == ProofCase::A ? "A" : "B"},
                 {"sigma", p.sigma},
                 {"alpha", p.alpha},
                 {"xi_k", p.xi},
                 {"reflected", p.reflected},
                 {"times", p.times},
                 {"cluster", cluster_json({c.reals("plan.zetas"), p.times}, p.cluster)}};
  } else {
    double t1 = c.real("plan.t1");
    const double t2 = c.real("plan.t2");
    // relabel t1 -> t2 - t1 so that t1 <= t2 - t1
    const bool reflected = t1 > t2 - t1;
    if (reflected) t1 = t2 - t1;
    const CasePlan p = plan_3mix(t1, t2, c.real("model.beta"));
    j["plan"] = {{"case", p.which == ProofCase::A ? "A" : "B"},
                 {"sigma", p.sigma},
                 {"threshold", p.threshold},
                 {"K", p.K},
                 {"case_b_precondition", p.case_b_precondition},
                 {"reflected", reflected},
                 {"times", p.times}};
  }
  write_json(out, j);
  return kPass;
}

int cmd_sample(const Config& c, Output& out) {
  const Setup s = make_setup(c);
  const std::string& measure = c.text("sample.measure");
  if (measure != "haar" && measure != "tau") throw ConfigError("sample.measure must be haar or tau");
  const HaarSampler points(s.lattice, derive_seed(seed_of(c), kTagSample));
  std::ostream& os = out.stream();
  csv_header(os, "sample", c);
  os << "index,a,b,c,d,weight,f\n";
  for (std::size_t i = 0; i < c.count("sample.n"); ++i) {
    const QuotientPoint x = points.draw(i);
    const Mat2& g = x.rep().matrix();
    const double w = measure == "tau" ? s.clock.tau.eval(x) : 1.0;
    os << i << ',' << format(g.a) << ',' << format(g.b) << ',' << format(g.c) << ','
       << format(g.d) << ',' << format(w) << ',' << format(s.family.eval(x)) << '\n';
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"horomix: time-changed horocycle flow experiments"};
  app.require_subcommand(1);
  std::string config_path, out_path;
  std::uint64_t seed = 0;
  bool seed_given = false;

  struct Command {
    std::string name, help;
    std::function<int(const Config&, Output&)> run;
  };
  const std::vector<Command> commands{
      {"flow-check", "flow, lattice, cocycle, shear and invariance checks (JSON)", cmd_flow_check},
      {"correlate", "k-point correlations over a gap grid with a decay fit (CSV)", cmd_correlate},
      {"vdc", "van der Corput inequality on an (N, L) grid (JSON)", cmd_vdc},
      {"shear", "shear discrepancy scan over T (CSV)", cmd_shear},
      {"deviation", "ergodic-integral deviation scan over T (CSV)", cmd_deviation},
      {"l2avg", "L2 norm of multiple ergodic averages over windows (CSV)", cmd_l2avg},
      {"cluster", "time-clustering procedure (JSON)", cmd_cluster},
      {"plan", "case plan for a time tuple (JSON)", cmd_plan},
      {"sample", "Haar or time-changed measure samples (CSV)", cmd_sample}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->allow_extras();
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--out", out_path, "output file (default stdout)");
    sub->add_option("--seed", seed, "random seed")->each([&](const std::string&) { seed_given = true; });
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    Config config = config_path.empty() ? Config::defaults() : Config::load(config_path);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      for (const auto& extra : subs[i]->remaining()) {
        if (extra.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + extra + "'");
        config.override_with(extra);
      }
      if (seed_given) config.set("run.seed", std::to_string(seed));
      if (const auto threads = config.count("run.threads"); threads > 0) set_worker_count(threads);
      worker_count();  // validates HOROMIX_THREADS
      Output out(out_path);
      return commands[i].run(config, out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InputError& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kConfigError;
  } catch (const ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return kResourceError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kFail;
}
