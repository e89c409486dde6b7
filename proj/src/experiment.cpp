#include "wlab/experiment.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "wlab/report.hpp"

namespace wlab {

namespace pt = boost::property_tree;

namespace {

// ---------------------------------------------------------------- parsing

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"", {"model", "grid", "period"}},
      {"potential", {"family", "params", "samples"}},
      {"solver", {"initial", "seed_time", "source", "t0", "snapshots", "error_target", "fd_step"}},
      {"checks", {"select", "m", "K", "rel_tol", "integrated", "samples"}},
      {"flow", {"family", "lambda0", "rate", "amplitude", "omega", "horizon"}},
      {"output", {"dir"}},
  };
  return keys;
}

std::vector<std::string> tokens(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

// Accepts plain numbers and multiples of pi ("pi", "2pi", "0.5pi").
double parse_real(const std::string& tok, const std::string& key) {
  std::string body = tok;
  double factor = 1.0;
  if (body.size() >= 2 && body.compare(body.size() - 2, 2, "pi") == 0) {
    factor = std::numbers::pi;
    body.erase(body.size() - 2);
    if (!body.empty() && body.back() == '*') body.pop_back();
    if (body.empty()) body = "1";
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(body, &used);
    if (used != body.size()) throw std::invalid_argument(tok);
    return v * factor;
  } catch (const std::exception&) {
    throw ConfigError(key, "not a number: '" + tok + "'");
  }
}

std::vector<double> parse_reals(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& tok : tokens(text)) out.push_back(parse_real(tok, key));
  return out;
}

int parse_int(const std::string& tok, const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "not an integer: '" + tok + "'");
  }
}

double single_real(const pt::ptree& tree, const std::string& path, double fallback) {
  const auto v = tree.get_optional<std::string>(path);
  if (!v) return fallback;
  const auto r = parse_reals(*v, path);
  if (r.size() != 1) throw ConfigError(path, "expected a single number");
  return r[0];
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      if (!known_keys().at("").count(name)) throw ConfigError(name, "unknown key");
      continue;
    }
    const auto sec = known_keys().find(name);
    if (sec == known_keys().end() || name.empty()) throw ConfigError(name, "unknown section");
    for (const auto& [key, _] : node)
      if (!sec->second.count(key)) throw ConfigError(name + "." + key, "unknown key");
  }

  ExperimentConfig c;
  auto& m = c.manifold;
  m.model = parse_model(tree.get<std::string>("model", "circle"));
  const int n = m.model == Model::circle ? 1 : 2;
  for (const auto& tok : tokens(tree.get<std::string>("grid", n == 1 ? "256" : "64")))
    m.grid.push_back(parse_int(tok, "grid"));
  m.period = parse_reals(tree.get<std::string>("period", "2pi"), "period");
  m.potential.family = parse_family(tree.get<std::string>("potential.family", "zero"));
  m.potential.params = parse_reals(tree.get<std::string>("potential.params", ""), "potential.params");
  m.potential.samples =
      parse_reals(tree.get<std::string>("potential.samples", ""), "potential.samples");

  c.initial = tree.get<std::string>("solver.initial", "seeded");
  if (c.initial != "seeded" && c.initial != "kernel")
    throw ConfigError("solver.initial", "expected 'seeded' or 'kernel'");
  c.seed_time = single_real(tree, "solver.seed_time", 0.25);
  if (!(c.seed_time > 0.0)) throw ConfigError("solver.seed_time", "must be positive");
  for (const auto& tok : tokens(tree.get<std::string>("solver.source", "")))
    c.source.push_back(parse_int(tok, "solver.source"));
  if (!c.source.empty() && static_cast<int>(c.source.size()) != n)
    throw ConfigError("solver.source", "one grid index per axis");
  c.t0 = single_real(tree, "solver.t0", 0.0);
  if (c.t0 < 0.0) throw ConfigError("solver.t0", "must be positive");
  c.snapshots = parse_reals(tree.get<std::string>("solver.snapshots", "0.05 0.1 0.5 1 2"),
                            "solver.snapshots");
  if (c.snapshots.empty()) throw ConfigError("solver.snapshots", "at least one time required");
  for (std::size_t i = 0; i < c.snapshots.size(); ++i) {
    if (!(c.snapshots[i] > 0.0)) throw ConfigError("solver.snapshots", "times must be positive");
    if (i && !(c.snapshots[i] > c.snapshots[i - 1]))
      throw ConfigError("solver.snapshots", "times must be strictly ascending");
  }
  c.error_target = single_real(tree, "solver.error_target", 1e-8);
  if (!(c.error_target > 0.0)) throw ConfigError("solver.error_target", "must be positive");
  c.fd_step = single_real(tree, "solver.fd_step", 1e-3);
  if (!(c.fd_step > 0.0)) throw ConfigError("solver.fd_step", "must be positive");

  c.select = tokens(tree.get<std::string>("checks.select", ""));
  for (const auto& name : c.select)
    if (std::find(all_checks().begin(), all_checks().end(), name) == all_checks().end())
      throw ConfigError("checks.select", "unknown check '" + name + "'");
  for (const auto& tok : tokens(tree.get<std::string>("checks.m", ""))) {
    if (tok == "inf") throw ConfigError("checks.m", "finite m required for the inequalities");
    c.m_values.push_back(parse_real(tok, "checks.m"));
  }
  const std::string kmode = tree.get<std::string>("checks.K", "admissible");
  if (kmode == "admissible") {
    c.k_mode = KMode::admissible;
  } else if (kmode == "fitted") {
    c.k_mode = KMode::fitted;
  } else {
    c.k_mode = KMode::explicit_value;
    c.K_value = parse_real(kmode, "checks.K");
    if (!(c.K_value >= 0.0) || !std::isfinite(c.K_value))
      throw ConfigError("checks.K", "must be 'admissible', 'fitted' or a number >= 0");
  }
  c.rel_tol = single_real(tree, "checks.rel_tol", 1e-6);
  if (!(c.rel_tol > 0.0)) throw ConfigError("checks.rel_tol", "must be positive");
  const auto pairs = tree.get<std::string>("checks.integrated", "0.05:0.2 0.1:0.5");
  for (const auto& tok : tokens(pairs)) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw ConfigError("checks.integrated", "expected tau:T pairs");
    const double tau = parse_real(tok.substr(0, colon), "checks.integrated");
    const double T = parse_real(tok.substr(colon + 1), "checks.integrated");
    if (!(tau > 0.0) || !(tau < T)) throw ConfigError("checks.integrated", "require 0 < tau < T");
    c.integrated.emplace_back(tau, T);
  }
  c.sample_nodes = parse_int(tree.get<std::string>("checks.samples", "8"), "checks.samples");
  if (c.sample_nodes < 2) throw ConfigError("checks.samples", "need at least two nodes");

  if (tree.get_child_optional("flow")) {
    FlowParams f;
    f.family = parse_flow_family(tree.get<std::string>("flow.family", "static"));
    f.lambda0 = single_real(tree, "flow.lambda0", 0.0);
    f.rate = single_real(tree, "flow.rate", 0.0);
    f.amplitude = single_real(tree, "flow.amplitude", 0.0);
    f.omega = single_real(tree, "flow.omega", 1.0);
    f.horizon = single_real(tree, "flow.horizon", c.snapshots.back());
    if (!(f.horizon > 0.0)) throw ConfigError("flow.horizon", "must be positive");
    c.flow = f;
  }
  c.output_dir = tree.get<std::string>("output.dir", "wlab_out");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

const std::vector<std::string>& all_checks() {
  static const std::vector<std::string> all = {
      "curvature",  "ball_ratio", "mass",        "positivity", "bochner",  "self_adjoint",
      "li_yau",     "hamilton",   "integrated",  "sup_bound",  "kernel_dt", "dissipation",
      "w_entropy",  "tilde",      "flow_margin", "flow_w",     "flow_dissipation"};
  return all;
}

const std::vector<std::string>& checks_for(const std::string& command) {
  static const std::map<std::string, std::vector<std::string>> groups = {
      {"curvature", {"curvature", "ball_ratio"}},
      {"simulate", {"mass", "positivity", "bochner", "self_adjoint"}},
      {"harnack", {"li_yau", "hamilton", "integrated", "sup_bound", "kernel_dt"}},
      {"entropy", {"dissipation", "w_entropy", "tilde"}},
      {"flow", {"flow_margin", "flow_w", "flow_dissipation"}},
      {"all", all_checks()},
  };
  const auto it = groups.find(command);
  if (it == groups.end()) throw ConfigError("command", "unknown subcommand '" + command + "'");
  return it->second;
}

// ---------------------------------------------------------------- pipeline

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string m_tag(double m) {
  std::string s = format_number(m);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

Field random_band_limited(const WeightedManifold& M, std::mt19937_64& rng, int band) {
  std::normal_distribution<double> normal;
  Field f(M.size(), 0.0);
  const auto& P = M.circumferences();
  const int ky_max = M.dim() == 2 ? band : 0;
  for (int kx = 0; kx <= band; ++kx)
    for (int ky = -ky_max; ky <= ky_max; ++ky) {
      const double a = normal(rng), b = normal(rng);
      const double decay = 1.0 / (1.0 + kx * kx + ky * ky);
      for (std::size_t i = 0; i < f.size(); ++i) {
        double arg = 2.0 * std::numbers::pi * kx * M.coordinate(i, 0) / P[0];
        if (M.dim() == 2) arg += 2.0 * std::numbers::pi * ky * M.coordinate(i, 1) / P[1];
        f[i] += decay * (a * std::cos(arg) + b * std::sin(arg));
      }
    }
  return f;
}

std::vector<std::size_t> sample_nodes(const WeightedManifold& M, int count) {
  std::vector<std::size_t> nodes;
  const auto& g = M.grid_sizes();
  for (int k = 0; k < count; ++k) {
    if (M.dim() == 1) {
      const int idx[] = {k * g[0] / count};
      nodes.push_back(M.node_at(idx));
    } else {
      const int idx[] = {k * g[0] / count, ((3 * k) % count) * g[1] / count};
      nodes.push_back(M.node_at(idx));
    }
  }
  return nodes;
}

struct Window {
  double t = 0.0;  // centre, absolute time
  HeatState lo, mid, hi;
};

class Pipeline {
 public:
  Pipeline(const ExperimentConfig& cfg, std::vector<std::string> checks)
      : cfg_(cfg), checks_(std::move(checks)), M_(build(cfg)) {}

  ExperimentResult run();

 private:
  static WeightedManifold build(const ExperimentConfig& cfg) {
    ManifoldConfig mc = cfg.manifold;
    if (cfg.grid_scale < 1) throw ConfigError("grid-scale", "must be >= 1");
    for (int& g : mc.grid) g *= cfg.grid_scale;
    if (cfg.grid_scale > 1 && mc.potential.family == PotentialFamily::samples)
      throw ConfigError("grid-scale", "sampled potentials cannot be refined");
    return WeightedManifold::build(mc);
  }

  bool wants(const std::string& name) const {
    return std::find(checks_.begin(), checks_.end(), name) != checks_.end();
  }
  bool wants_any(std::initializer_list<const char*> names) const {
    for (const char* n : names)
      if (wants(n)) return true;
    return false;
  }
  void add(CheckResult r) { results_.push_back(std::move(r)); }
  void write(const std::string& name, const std::string& content) {
    write_atomic(cfg_.output_dir / name, content);
  }

  double K_for(double m) const;
  EvolveOptions evolve_options() const {
    EvolveOptions o;
    o.error_target = cfg_.error_target;
    return o;
  }
  EvolveOptions window_options() const {
    EvolveOptions o;
    o.error_target = std::min(cfg_.error_target, 1e-11);
    o.initial_dt = cfg_.fd_step / 4.0;
    return o;
  }

  void curvature_stage();
  void simulate_stage();
  void harnack_stage();
  void entropy_stage();
  void flow_stage();
  void prepare_run();
  std::vector<Window> windows(const std::vector<double>& times,
                              const std::vector<HeatState>& states, const RateFn& rate) const;
  const HeatState& state_at(double t) const;
  HeatState exact_state(double t) const {
    return make_state(M_, flat_kernel_images(M_, x0_, t), t, 0.0);
  }

  const ExperimentConfig& cfg_;
  std::vector<std::string> checks_;
  WeightedManifold M_;
  std::vector<double> m_values_;
  std::map<double, CurvatureField> curvature_;
  std::size_t x0_ = 0;
  HeatState s0_;
  std::vector<double> times_;      // absolute evaluation times after s0
  std::vector<HeatState> states_;  // parallel to times_
  std::vector<CheckResult> results_;
  bool ran_ = false;
  bool exact_ = false;
};

double Pipeline::K_for(double m) const {
  switch (cfg_.k_mode) {
    case KMode::explicit_value: return cfg_.K_value;
    case KMode::fitted:
      if (cfg_.flow) {
        const FlowSpec flow = make_flow(M_, *cfg_.flow);
        std::vector<double> ts;
        for (int k = 0; k <= 200; ++k) ts.push_back(flow.horizon() * k / 200.0);
        return fit_flow_K(flow, m, ts);
      }
      return curvature_.at(m).admissible_K;
    case KMode::admissible: return curvature_.at(m).admissible_K;
  }
  return 0.0;
}

const HeatState& Pipeline::state_at(double t) const {
  for (std::size_t i = 0; i < times_.size(); ++i)
    if (std::fabs(times_[i] - t) <= 1e-12 * std::max(1.0, t)) return states_[i];
  if (std::fabs(s0_.t - t) <= 1e-12 * std::max(1.0, t)) return s0_;
  throw std::logic_error("no state at t=" + format_number(t));
}

void Pipeline::prepare_run() {
  const int n = M_.dim();
  if (!cfg_.source.empty()) {
    for (int a = 0; a < n; ++a)
      if (cfg_.source[a] < 0 || cfg_.source[a] >= M_.grid_sizes()[a] / cfg_.grid_scale)
        throw ConfigError("solver.source", "grid index out of range");
    std::vector<int> idx(cfg_.source);
    for (int& i : idx) i *= cfg_.grid_scale;
    x0_ = M_.node_at(idx);
  }
  if (cfg_.initial == "seeded") {
    s0_ = source_state(M_, x0_, cfg_.seed_time);
  } else {
    const double t0 = cfg_.t0 > 0.0 ? cfg_.t0 : M_.spacing(0) * M_.spacing(0);
    // Constant potential: the kernel is known in closed form at every time, so
    // nothing is integrated and the checks see no time-stepping error.
    exact_ = M_.potential_is_constant();
    s0_ = exact_ ? exact_state(t0) : initial_delta(M_, x0_, t0, evolve_options());
  }
  std::set<double> times;
  for (double t : cfg_.snapshots) {
    if (!(t > s0_.t)) throw ConfigError("solver.snapshots", "times must exceed the start time");
    times.insert(t);
    if (wants_any({"dissipation", "w_entropy", "tilde", "flow_w", "flow_dissipation"}) &&
        t - cfg_.fd_step > s0_.t)
      times.insert(t - cfg_.fd_step);
  }
  if (wants("integrated"))
    for (const auto& [tau, T] : cfg_.integrated) {
      if (!(s0_.origin + tau > s0_.t))
        throw ConfigError("checks.integrated", "tau precedes the start of the run");
      times.insert(s0_.origin + tau);
      times.insert(s0_.origin + T);
    }
  times_.assign(times.begin(), times.end());
  Evolution ev;
  if (exact_)
    for (double t : times_) ev.snapshots.push_back(exact_state(t));
  else
    ev = evolve(M_, s0_, times_, evolve_options());
  states_ = ev.snapshots;

  std::vector<HeatState> snaps{s0_};
  for (double t : cfg_.snapshots) snaps.push_back(state_at(t));
  write("snapshots.csv", snapshots_csv(snaps));
  write("manifest.csv", manifest_csv(ev.manifest));
  ran_ = true;
}

std::vector<Window> Pipeline::windows(const std::vector<double>& times,
                                      const std::vector<HeatState>& states,
                                      const RateFn& rate) const {
  std::vector<Window> out;
  const double h = cfg_.fd_step;
  for (double t : cfg_.snapshots) {
    const double lo_t = t - h;
    auto it = std::find_if(times.begin(), times.end(), [&](double x) {
      return std::fabs(x - lo_t) <= 1e-12 * std::max(1.0, x);
    });
    if (it == times.end()) continue;
    const HeatState& lo = states[static_cast<std::size_t>(it - times.begin())];
    if (exact_ && !rate) {
      out.push_back({t, exact_state(lo_t), exact_state(t), exact_state(t + h)});
      continue;
    }
    const Evolution ev = evolve(M_, lo, {lo_t, t, t + h}, window_options(), rate);
    out.push_back({t, ev.snapshots[0], ev.snapshots[1], ev.snapshots[2]});
  }
  return out;
}

void Pipeline::curvature_stage() {
  if (wants("curvature")) {
    CheckResult r{"curvature", true, true, 0.0, ""};
    for (double m : m_values_) {
      const auto& c = curvature_.at(m);
      write("curvature_m" + m_tag(m) + ".csv", curvature_csv(M_, c));
      r.ok = r.ok && c.admissible_K >= 0.0 && std::isfinite(c.min_value);
      r.detail += "m=" + format_number(m) + ": min=" + fmt(c.min_value) + " K=" +
                  fmt(c.admissible_K) + " at node " + std::to_string(c.argmin) + "; ";
      r.worst = std::min(r.worst, c.min_value);
    }
    add(r);
  }
  if (wants("ball_ratio")) {
    CheckResult r{"ball_ratio", true, true, 0.0, ""};
    const double R = std::min(1.0, M_.injectivity_scale());
    const double rr = 0.5 * R;
    for (double m : m_values_) {
      const double K = std::max(K_for(m), curvature_.at(m).admissible_K);
      const auto b = ball_volume_ratio_check(M_, m, K, x0_, rr, R);
      r.ok = r.ok && b.ok;
      r.worst = std::max(r.worst, b.ratio / b.bound);
      r.detail += "m=" + format_number(m) + ": ratio=" + fmt(b.ratio) + " bound=" + fmt(b.bound) + "; ";
    }
    add(r);
  }
}

void Pipeline::simulate_stage() {
  if (wants("mass")) {
    double drift = 0.0;
    for (const auto& s : states_) drift = std::max(drift, std::fabs(s.mass - s0_.mass) / s0_.mass);
    add({"mass", true, drift <= 1e-10, drift, "max relative mass drift over the run"});
  }
  if (wants("positivity")) {
    double lo = INFINITY;
    for (const auto& s : states_) lo = std::min(lo, *std::min_element(s.u.begin(), s.u.end()));
    add({"positivity", true, lo > 0.0, lo, "min u over all evaluation times"});
  }
  std::mt19937_64 rng(cfg_.seed);
  const int band = M_.dim() == 1 ? 8 : 6;
  if (wants("bochner")) {
    double worst = 0.0;
    for (int k = 0; k < 50; ++k)
      worst = std::max(worst, bochner_residual(M_, random_band_limited(M_, rng, band)).relative);
    add({"bochner", true, worst <= 1e-8, worst, "50 random band-limited fields, relative residual"});
  }
  if (wants("self_adjoint")) {
    double worst = 0.0;
    bool negative = true;
    for (int k = 0; k < 20; ++k) {
      const Field f = random_band_limited(M_, rng, band), h = random_band_limited(M_, rng, band);
      const Field lf = witten_laplacian(M_, f), lh = witten_laplacian(M_, h);
      const double ff = integrate_mu(M_, f, lf), hh = integrate_mu(M_, h, lh);
      negative = negative && ff <= 0.0 && hh <= 0.0;
      const double asym = std::fabs(integrate_mu(M_, f, lh) - integrate_mu(M_, h, lf));
      worst = std::max(worst, asym / std::sqrt(ff * hh));
    }
    add({"self_adjoint", true, worst <= 1e-10 && negative, worst,
         std::string("relative asymmetry over 20 pairs; Dirichlet form ") +
             (negative ? "non-negative" : "NEGATIVE")});
  }
}

void Pipeline::harnack_stage() {
  std::vector<HarnackRow> rows;
  std::vector<HeatState> snaps;
  for (double t : cfg_.snapshots) snaps.push_back(state_at(t));

  for (double m : m_values_) {
    const double K = K_for(m);
    const double admissible = curvature_.at(m).admissible_K;
    if (wants("li_yau")) {
      CheckResult r{"li_yau m=" + format_number(m), admissible == 0.0, true, INFINITY, ""};
      for (const auto& s : snaps) {
        const auto rep = li_yau_defect(M_, s, m, cfg_.rel_tol);
        rows.push_back(to_row(rep));
        r.ok = r.ok && rep.ok;
        r.worst = std::min(r.worst, rep.min_defect / rep.scale);
      }
      r.detail = admissible == 0.0 ? "min defect relative to m/2t"
                                   : "informational: admissible K > 0";
      add(r);
    }
    if (wants("hamilton")) {
      CheckResult r{"hamilton m=" + format_number(m), K >= admissible, true, INFINITY,
                    "K=" + format_number(K) + "; min defect relative to (m/2t)e^{4Kt}"};
      for (const auto& s : snaps) {
        const auto rep = hamilton_harnack_defect(M_, s, m, K, cfg_.rel_tol);
        rows.push_back(to_row(rep));
        r.ok = r.ok && rep.ok;
        r.worst = std::min(r.worst, rep.min_defect / rep.scale);
      }
      add(r);
    }
    if (wants("integrated")) {
      CheckResult r{"integrated m=" + format_number(m), K >= admissible, true, 0.0,
                    "max lhs/rhs over sample pairs, K=" + format_number(K)};
      const auto nodes = sample_nodes(M_, cfg_.sample_nodes);
      for (const auto& [tau, T] : cfg_.integrated) {
        const HeatState& a = state_at(s0_.origin + tau);
        const HeatState& b = state_at(s0_.origin + T);
        for (std::size_t x : nodes)
          for (std::size_t y : nodes) {
            const auto c = integrated_harnack_check(M_, a, b, x, y, m, K, cfg_.rel_tol);
            r.ok = r.ok && c.ok;
            r.worst = std::max(r.worst, c.lhs / c.rhs);
          }
      }
      add(r);
    }
    if (wants("sup_bound")) {
      const double Ks = std::max(K, 0.1);
      std::vector<HeatState> all{s0_};
      all.insert(all.end(), states_.begin(), states_.end());
      const double A = sup_bound_A(all);
      CheckResult r{"sup_bound m=" + format_number(m), Ks >= admissible, true, INFINITY,
                    "K=" + format_number(Ks) + " A=" + fmt(A)};
      double order = INFINITY;
      for (const auto& s : snaps) {
        const auto rep = sup_bound_defect(M_, s, m, Ks, A, cfg_.rel_tol);
        rows.push_back(to_row(rep.sharp));
        rows.push_back(to_row(rep.variant));
        r.ok = r.ok && rep.sharp.ok && rep.variant.ok && rep.variant_minus_sharp >= 0.0;
        r.worst = std::min({r.worst, rep.sharp.min_defect / rep.sharp.scale,
                            rep.variant.min_defect / rep.variant.scale});
        order = std::min(order, rep.variant_minus_sharp);
      }
      r.detail += "; min(variant - sharp)=" + fmt(order);
      add(r);
    }
    if (wants("kernel_dt")) {
      const auto kb = kernel_dt_log_bounds(M_, snaps, x0_, m, K, cfg_.rel_tol);
      // Same run on the doubled grid for the shape-constant stability.
      ExperimentConfig fine = cfg_;
      fine.grid_scale = cfg_.grid_scale * 2;
      fine.select.clear();
      fine.integrated.clear();
      fine.output_dir = cfg_.output_dir / "refined";
      Pipeline p(fine, {"positivity"});
      p.prepare_run();
      std::vector<HeatState> fine_snaps;
      for (double t : cfg_.snapshots) fine_snaps.push_back(p.state_at(t));
      const auto kb2 = kernel_dt_log_bounds(p.M_, fine_snaps, p.x0_, m, K, cfg_.rel_tol);
      const double change = std::fabs(kb2.fitted_C - kb.fitted_C) / std::fabs(kb.fitted_C);
      add({"kernel_dt m=" + format_number(m), true, kb.lower_ok && change <= 0.05,
           kb.min_lower_defect,
           "min (dt log u + bound)/bound; fitted C=" + fmt(kb.fitted_C) + " (2N: " +
               fmt(kb2.fitted_C) + ", change " + fmt(change) + ")"});
    }
  }
  if (!rows.empty()) write("harnack.csv", harnack_csv(rows));
}

void Pipeline::entropy_stage() {
  if (!wants_any({"dissipation", "w_entropy", "tilde"})) return;
  const std::vector<Window> wins = windows(times_, states_, {});
  const double h = cfg_.fd_step;

  if (wants("dissipation")) {
    double worst1 = 0.0, worst2 = 0.0;
    for (const auto& w : wins) {
      const auto a = entropy_H(M_, w.lo), b = entropy_H(M_, w.mid), c = entropy_H(M_, w.hi);
      const double d2 = entropy_second_derivative(M_, w.mid);
      const double fd1 = (c.H - a.H) / (2.0 * h);
      const double fd2 = (c.H - 2.0 * b.H + a.H) / (h * h);
      worst1 = std::max(worst1, std::fabs(fd1 - b.dH_dt) / std::fabs(b.dH_dt));
      worst2 = std::max(worst2, std::fabs(fd2 - d2) / std::fabs(d2));
    }
    add({"dissipation", true, !wins.empty() && worst1 <= 1e-4 && worst2 <= 1e-3, worst1,
         "first-derivative relative error " + fmt(worst1) + ", second " + fmt(worst2) +
             " (centred differences, h=" + format_number(h) + ")"});
  }
  if (wants("w_entropy")) {
    for (double m : m_values_) {
      const double K = K_for(m);
      const double admissible = curvature_.at(m).admissible_K;
      const bool hypothesis = K >= admissible;
      EntropySeries series;
      series.m = m;
      series.K = K;
      double worst = 0.0, reduction = 0.0;
      bool mono = true, signs = true;
      for (const auto& w : wins) {
        const WValues a = w_entropy(M_, w.lo, m, K), b = w_entropy(M_, w.mid, m, K),
                      c = w_entropy(M_, w.hi, m, K);
        EntropyRow row;
        row.t = b.t;
        row.H = b.H;
        row.dH_dt = b.dH_dt;
        row.d2H_dt2 = entropy_second_derivative(M_, w.mid);
        row.Phi = b.Phi;
        row.H_mK = b.H_mK;
        row.W_mK = b.W_mK;
        row.terms = w_derivative_decomposition(M_, w.mid, m, K);
        row.bound = row.terms.T4;
        row.dW_dt_numeric = (c.W_mK - a.W_mK) / (2.0 * h);
        row.residual = row.dW_dt_numeric - row.terms.formula;
        series.rows.push_back(row);
        const auto& T = row.terms;
        worst = std::max(worst, std::fabs(row.residual) / (1.0 + std::fabs(T.formula)));
        const double slack =
            1e-8 * (1.0 + std::fabs(T.T1) + std::fabs(T.T2) + std::fabs(T.T3) + std::fabs(T.T4));
        signs = signs && T.T1 <= slack && T.T3 <= slack && (!hypothesis || T.T2 <= slack);
        if (K == 0.0) {
          const WTerms cl = classical_w_derivative(M_, w.mid, m);
          for (auto [x, y] : {std::pair{T.T1, cl.T1}, {T.T2, cl.T2}, {T.T3, cl.T3}})
            reduction = std::max(reduction, std::fabs(x - y) / (1.0 + std::fabs(y)));
        }
      }
      mono = w_monotonicity_check(series);
      write("entropy_m" + m_tag(m) + ".csv", entropy_csv(series, false));
      const bool ok = !wins.empty() && worst <= 1e-3 && signs && (!hypothesis || mono) &&
                      reduction <= 1e-10;
      add({"w_entropy m=" + format_number(m), true, ok, worst,
           "K=" + format_number(K) + "; residual/(1+|formula|); monotone=" +
               (mono ? "yes" : "no") + (hypothesis ? "" : " (not asserted)") +
               (K == 0.0 ? "; K=0 classical terms agree to " + fmt(reduction) : "")});
    }
  }
  if (wants("tilde")) {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j)
        for (int k = 0; k < 10; ++k) {
          const double m = M_.dim() + 0.5 * i, K = 0.2 * j, t = 0.05 + 0.2 * k;
          worst = std::max(worst, tilde_w_comparison(m, K, t).identity_residual);
        }
    double dual = 0.0;
    for (double m : m_values_) {
      const double K = K_for(m);
      for (const auto& w : wins) {
        const double diff = tilde_w(M_, w.mid, m, K) - w_entropy(M_, w.mid, m, K).W_mK;
        const double expected = tilde_w_comparison(m, K, w.mid.elapsed()).d_dt_tPsi;
        dual = std::max(dual, std::fabs(diff - expected) / (1.0 + std::fabs(expected)));
      }
    }
    add({"tilde", true, worst <= 1e-9 && dual <= 1e-6, worst,
         "identity residual on the 10x10x10 lattice; W~ - W vs d/dt(t Psi): " + fmt(dual)});
  }
}

void Pipeline::flow_stage() {
  if (!wants_any({"flow_margin", "flow_w", "flow_dissipation"})) return;
  const FlowSpec flow = make_flow(M_, *cfg_.flow);
  const double T = flow.horizon();
  std::vector<double> samples;
  for (int k = 0; k <= 200; ++k) samples.push_back(T * k / 200.0);
  const double drift = measure_drift(flow, samples);

  std::vector<double> times;
  for (double t : cfg_.snapshots) {
    if (t > T * (1.0 + 1e-12)) continue;
    if (t - cfg_.fd_step > s0_.t) times.push_back(t - cfg_.fd_step);
    times.push_back(t);
  }
  if (times.empty()) throw ConfigError("flow.horizon", "no snapshot inside the flow horizon");
  std::sort(times.begin(), times.end());
  const RateFn rate = [&flow](double t) { return flow.rate_factor(t); };
  const Evolution ev = evolve_heat_on_flow(flow, s0_, times, evolve_options());
  std::vector<Window> wins;
  for (const auto& w : windows(times, ev.snapshots, rate))
    if (w.t + cfg_.fd_step <= T * (1.0 + 1e-12)) wins.push_back(w);
  const double h = cfg_.fd_step;

  for (double m : m_values_) {
    const double K = cfg_.k_mode == KMode::explicit_value ? cfg_.K_value : fit_flow_K(flow, m, samples);
    const MarginReport margin = super_ricci_flow_margin(flow, m, K, samples);
    if (wants("flow_margin"))
      add({"flow_margin m=" + format_number(m), true, margin.ok && drift <= 1e-14, margin.min_value,
           "K=" + format_number(K) + " min margin at node " + std::to_string(margin.argmin) +
               ", t=" + format_number(margin.argmin_t) + "; measure drift " + fmt(drift)});
    if (wants("flow_w")) {
      const CurvatureField& ric = curvature_.at(m);
      EntropySeries series;
      series.m = m;
      series.K = K;
      double worst = 0.0;
      for (const auto& w : wins) {
        const WValues a = w_entropy_on_flow(flow, w.lo, m, K),
                      b = w_entropy_on_flow(flow, w.mid, m, K),
                      c = w_entropy_on_flow(flow, w.hi, m, K);
        EntropyRow row;
        row.t = b.t;
        row.H = b.H;
        row.dH_dt = b.dH_dt;
        row.d2H_dt2 = entropy_dissipation_on_flow(flow, {w.mid}).front().d2H_dt2;
        row.Phi = b.Phi;
        row.H_mK = b.H_mK;
        row.W_mK = b.W_mK;
        row.terms = w_decomposition_on_flow(flow, w.mid, m, K);
        row.bound = row.terms.T4;
        row.dW_dt_numeric = (c.W_mK - a.W_mK) / (2.0 * h);
        row.residual = row.dW_dt_numeric - row.terms.formula;
        row.margin = flow.dlambda(w.mid.t) + flow.rate_factor(w.mid.t) * ric.min_value + K;
        series.rows.push_back(row);
        worst = std::max(worst, std::fabs(row.residual) / (1.0 + std::fabs(row.terms.formula)));
      }
      const bool mono = w_monotonicity_check(series);
      write("flow_entropy_m" + m_tag(m) + ".csv", entropy_csv(series, true));
      add({"flow_w m=" + format_number(m), true,
           !wins.empty() && worst <= 1e-3 && (!margin.ok || mono), worst,
           "K=" + format_number(K) + "; residual/(1+|formula|); monotone=" + (mono ? "yes" : "no")});
    }
  }
  if (wants("flow_dissipation")) {
    std::vector<DissipationRow> rows;
    double worst1 = 0.0, worst2 = 0.0;
    for (const auto& w : wins) {
      const auto r = entropy_dissipation_on_flow(flow, {w.lo, w.mid, w.hi});
      rows.push_back(r[1]);
      worst1 = std::max(worst1, r[1].residual1);
      worst2 = std::max(worst2, r[1].residual2);
    }
    write("flow_dissipation.csv", dissipation_csv(rows));
    add({"flow_dissipation", true, !wins.empty() && worst1 <= 1e-4 && worst2 <= 1e-3, worst1,
         "first-derivative relative error " + fmt(worst1) + ", second " + fmt(worst2)});
  }
}

ExperimentResult Pipeline::run() {
  if (cfg_.m_values.empty()) m_values_ = {M_.dim() + 1.0};
  else m_values_ = cfg_.m_values;
  for (double m : m_values_) curvature_.emplace(m, ricci_bakry_emery(M_, m));
  if (!cfg_.flow) {
    const bool flow_only = wants_any({"flow_margin", "flow_w", "flow_dissipation"}) &&
                           !wants_any({"curvature", "mass", "hamilton", "w_entropy"});
    if (flow_only) throw ConfigError("flow", "section missing");
    checks_.erase(std::remove_if(checks_.begin(), checks_.end(),
                                 [](const std::string& c) { return c.rfind("flow", 0) == 0; }),
                  checks_.end());
  }

  try {
    curvature_stage();
    const bool needs_run =
        wants_any({"mass", "positivity", "li_yau", "hamilton", "integrated", "sup_bound",
                   "kernel_dt", "dissipation", "w_entropy", "tilde", "flow_margin", "flow_w",
                   "flow_dissipation"});
    if (needs_run) prepare_run();
    simulate_stage();
    if (needs_run) {
      harnack_stage();
      entropy_stage();
      flow_stage();
    }
  } catch (const std::runtime_error& e) {
    add({"numerics", true, false, NAN, e.what()});
  }

  ExperimentResult result;
  result.checks = results_;
  bool pass = true;
  for (const auto& c : results_)
    if (c.asserted && !c.ok) pass = false;
  result.exit_code = pass ? 0 : 1;

  std::ostringstream txt;
  nlohmann::json js;
  js["model"] = to_string(M_.model());
  js["grid"] = M_.grid_sizes();
  js["potential"] = to_string(cfg_.manifold.potential.family);
  js["initial"] = cfg_.initial;
  if (ran_) {
    js["start_time"] = s0_.t;
    js["origin"] = s0_.origin;
  }
  js["phi_normalisation"] = "Phi_mK(t) = (m/2)(log 4 pi t + 1) + (m/2) sum (4Kt)^j/(j j!)";
  txt << "wlab summary: model=" << to_string(M_.model()) << " grid=";
  for (std::size_t a = 0; a < M_.grid_sizes().size(); ++a)
    txt << (a ? "x" : "") << M_.grid_sizes()[a];
  txt << " potential=" << to_string(cfg_.manifold.potential.family) << " initial=" << cfg_.initial;
  if (ran_) txt << " start_t=" << format_number(s0_.t) << " origin=" << format_number(s0_.origin);
  txt << "\n";
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : results_) {
    const char* status = !c.asserted ? "INFO" : (c.ok ? "PASS" : "FAIL");
    txt << status << "  " << c.name << "  worst=" << fmt(c.worst) << "  " << c.detail << "\n";
    arr.push_back({{"name", c.name},
                   {"asserted", c.asserted},
                   {"ok", c.ok},
                   {"worst", std::isfinite(c.worst) ? nlohmann::json(c.worst) : nlohmann::json()},
                   {"detail", c.detail}});
  }
  txt << (pass ? "RESULT PASS\n" : "RESULT FAIL\n");
  js["checks"] = arr;
  js["exit_code"] = result.exit_code;
  write("summary.txt", txt.str());
  write("summary.json", js.dump(2) + "\n");
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& command,
                                const std::vector<std::string>& only) {
  std::vector<std::string> checks;
  for (const auto& name : checks_for(command)) {
    if (!config.select.empty() &&
        std::find(config.select.begin(), config.select.end(), name) == config.select.end())
      continue;
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    checks.push_back(name);
  }
  for (const auto& name : only)
    if (std::find(all_checks().begin(), all_checks().end(), name) == all_checks().end())
      throw ConfigError("check", "unknown check '" + name + "'");
  if (checks.empty()) throw ConfigError("checks.select", "no checks selected for '" + command + "'");
  Pipeline p(config, checks);
  return p.run();
}

}  // namespace wlab
