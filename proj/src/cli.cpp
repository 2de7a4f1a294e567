#include "rotwind/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <sstream>

#include "rotwind/boundary_layers.hpp"
#include "rotwind/config.hpp"
#include "rotwind/csv.hpp"
#include "rotwind/direct_sim.hpp"
#include "rotwind/ekman_sources.hpp"
#include "rotwind/envelope.hpp"
#include "rotwind/errors.hpp"
#include "rotwind/json_util.hpp"
#include "rotwind/mean_limit.hpp"
#include "rotwind/quadrature.hpp"
#include "rotwind/resonance.hpp"

namespace rotwind {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace jsonu;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"basis",        "resonance",   "forcing-check",
                                             "layers",       "sources",     "solve-envelope",
                                             "mean-limit",   "solve-direct", "compare"};
  return s;
}

fs::path resolve_output_dir(const std::optional<std::string>& flag, const std::string& config_value) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("ROTWIND_OUT"); env && *env) return env;
  if (!config_value.empty()) return config_value;
  return "rotwind_out";
}

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex_digest(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double x) { return csv_number(x); }
std::string num(long long x) { return csv_number(x); }
std::string num(int x) { return csv_number(x); }

json mode_json(const ModeIndex& k) { return json::array({k.k1, k.k2, k.k3}); }

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> number_list(const json& j, const std::string& path) {
  array(j, path);
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], index(path, i)));
  return v;
}

std::vector<double> number_list_or(const json& j, const std::string& path, const char* key,
                                   std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  return number_list(j.at(key), join(path, key));
}

int positive_int_or(const json& j, const std::string& path, const char* key, int fallback) {
  const long long v = integer_or(j, path, key, fallback);
  if (v < 1) throw ConfigError(join(path, key), "must be a positive integer");
  return static_cast<int>(v);
}

class Context {
 public:
  Context(std::string sub, ExperimentConfig cfg, const RunOptions& opt, std::ostream& out)
      : sub_(std::move(sub)), cfg_(std::move(cfg)), out_(out) {
    if (opt.seed) cfg_.seed = *opt.seed;
    threads_flag_ = opt.threads;
    if (opt.threads && *opt.threads < 1) throw ConfigError("--threads", "must be at least 1");
    rebuild_ = opt.rebuild_cache;
    dir_ = resolve_output_dir(opt.out, cfg_.output_dir);
    cache_ = cfg_.cache_dir.empty() ? dir_ / "cache" : fs::path(cfg_.cache_dir);
    fs::create_directories(dir_);
  }

  const ExperimentConfig& cfg() const { return cfg_; }
  const TorusGeometry& geom() const { return cfg_.geom; }
  std::uint64_t seed() const { return cfg_.seed; }
  std::uint64_t seed_for(SeedStream s) const { return stream_seed(cfg_.seed, s); }
  /// --threads, then a block-level value, then the top-level one.
  int threads(const json& blk = json::object(), const std::string& path = "") const {
    if (threads_flag_) return *threads_flag_;
    if (blk.contains("threads")) return positive_int_or(blk, path, "threads", 1);
    return cfg_.threads;
  }
  std::ostream& out() { return out_; }
  const fs::path& dir() const { return dir_; }

  const WindStress& wind_required() const {
    if (!cfg_.has_wind) throw ConfigError("wind", "missing required field");
    return cfg_.wind;
  }
  PhasePoint phases() const { return cfg_.phase_point(); }

  CsvTable table(const std::string& schema, std::vector<std::string> cols) const {
    CsvTable t(schema, std::move(cols));
    t.meta("subcommand", sub_);
    t.meta("config_digest", hex_digest(cfg_.doc.dump()));
    std::ostringstream s;
    s << "master=" << cfg_.seed << ";initial=" << seed_for(SeedStream::InitialData)
      << ";phases=" << seed_for(SeedStream::Phases)
      << ";montecarlo=" << seed_for(SeedStream::MonteCarlo)
      << ";diagnostics=" << seed_for(SeedStream::Diagnostics);
    t.meta("seed", s.str());
    const TorusGeometry& g = cfg_.geom;
    t.meta("geometry", "a1=" + num(g.a1) + ";a2=" + num(g.a2) + ";a=" + num(g.a));
    return t;
  }

  void emit(const std::string& name, const CsvTable& t) {
    write_csv(dir_ / name, t);
    artifacts_.push_back(name);
  }
  void emit(const std::string& name, json j) {
    j["seed"] = cfg_.seed;
    write_json(dir_ / name, j);
    artifacts_.push_back(name);
  }

  std::shared_ptr<const TriadTable> triads(int n) const {
    return std::make_shared<const TriadTable>(
        TriadTable::load_or_build(cache_, cfg_.geom, n, 1e-12, rebuild_, threads()));
  }
  bool rebuild() const { return rebuild_; }
  const fs::path& cache() const { return cache_; }

  void finish(const std::string& started, double seconds) {
    json side = {{"subcommand", sub_},
                 {"started_utc", started},
                 {"finished_utc", utc_now()},
                 {"wall_seconds", seconds},
                 {"artifacts", artifacts_},
                 {"seed", cfg_.seed},
                 {"threads", threads()}};
    write_json(dir_ / (sub_ + ".run.json"), side);
  }

 private:
  std::string sub_;
  ExperimentConfig cfg_;
  std::ostream& out_;
  std::optional<int> threads_flag_;
  bool rebuild_ = false;
  fs::path dir_, cache_;
  std::vector<std::string> artifacts_;
};

// ------------------------------------------------------------------ basis

void cmd_basis(Context& c) {
  const json& b = c.cfg().block("basis");
  check_keys(b, "basis", {"N", "tol"});
  const int n = positive_int_or(b, "basis", "N", 4);
  const double tol = number_or(b, "basis", "tol", 1e-8);
  const TorusGeometry& g = c.geom();

  CsvTable t = c.table("basis_modes/1", {"k1", "k2", "k3", "kp1", "kp2", "kp3", "lambda", "re_n1",
                                         "im_n1", "re_n2", "im_n2", "re_n3", "im_n3"});
  const ModeSet ms(n);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const ModeIndex k = ms.mode(i);
    const Vec3 kp = wavevector(g, k);
    const CVec3 nv = eigenvector(g, k);
    t.add_row({num(k.k1), num(k.k2), num(k.k3), num(kp(0)), num(kp(1)), num(kp(2)),
               num(eigenvalue(g, k)), num(nv(0).real()), num(nv(0).imag()), num(nv(1).real()),
               num(nv(1).imag()), num(nv(2).real()), num(nv(2).imag())});
  }
  c.emit("basis_modes.csv", t);

  const OrthonormalityReport r = orthonormality_report(g, n, QuadratureSpec::for_truncation(n));
  const bool pass = r.max_gram_defect < tol && r.max_coriolis_defect < tol;
  c.emit("basis_report.json",
         {{"N", n},
          {"modes", ms.size()},
          {"tol", tol},
          {"max_gram_defect", r.max_gram_defect},
          {"worst_gram_pair", {mode_json(r.worst_gram_k), mode_json(r.worst_gram_l)}},
          {"max_coriolis_defect", r.max_coriolis_defect},
          {"worst_coriolis_mode", mode_json(r.worst_coriolis)},
          {"pass", pass}});
  c.out() << "basis: N=" << n << " modes=" << ms.size() << " gram=" << r.max_gram_defect
          << " coriolis=" << r.max_coriolis_defect << (pass ? " pass" : " FAIL") << "\n";
}

// -------------------------------------------------------------- resonance

void cmd_resonance(Context& c) {
  const json& b = c.cfg().block("resonance");
  check_keys(b, "resonance", {"N", "tol", "cutoff", "torus_tol", "threads"});
  const int n = positive_int_or(b, "resonance", "N", 2);
  const double tol = number_or(b, "resonance", "tol", 1e-12);
  const int cutoff = positive_int_or(b, "resonance", "cutoff", 4);
  const double ttol = number_or(b, "resonance", "torus_tol", 1e-12);
  const TorusGeometry& g = c.geom();

  const TriadTable tab =
      TriadTable::load_or_build(c.cache(), g, n, tol, c.rebuild(), c.threads(b, "resonance"));
  CsvTable t = c.table("triads/1", {"k1", "k2", "k3", "l1", "l2", "l3", "m1", "m2", "m3",
                                    "re_alpha", "im_alpha"});
  t.meta("tolerance", num(tol));
  const ModeSet ms(n);
  for (const Triad& tr : tab.triads()) {
    const ModeIndex k = ms.mode(tr.k), l = ms.mode(tr.l), m = ms.mode(tr.m);
    t.add_row({num(k.k1), num(k.k2), num(k.k3), num(l.k1), num(l.k2), num(l.k3), num(m.k1),
               num(m.k2), num(m.k3), num(tr.alpha.real()), num(tr.alpha.imag())});
  }
  c.emit("triads.csv", t);

  const NonresonanceReport r = check_nonresonant_torus(g, cutoff, ttol);
  CsvTable v = c.table("torus_violations/1",
                       {"k1", "k2", "k3", "n1", "n2", "n3", "eta1", "eta2", "eta3"});
  v.meta("cutoff", num(cutoff));
  for (const auto& x : r.violations)
    v.add_row({num(x.k.k1), num(x.k.k2), num(x.k.k3), num(x.n.k1), num(x.n.k2), num(x.n.k3),
               num(x.eta1), num(x.eta2), num(x.eta3)});
  c.emit("torus_violations.csv", v);

  c.emit("resonance_report.json",
         {{"N", n},
          {"tol", tol},
          {"triads", tab.triads().size()},
          {"cache_key", tab.cache_key()},
          {"torus",
           {{"cutoff", cutoff},
            {"nonresonant", r.nonresonant},
            {"checked", r.checked},
            {"violation_count", r.violation_count},
            {"listed", r.violations.size()}}}});
  c.out() << "resonance: N=" << n << " triads=" << tab.triads().size() << " torus "
          << (r.nonresonant ? "non-resonant" : "resonant") << " up to K=" << cutoff << " ("
          << r.violation_count << " violations)\n";
}

// ---------------------------------------------------------- forcing-check

WindStress counterexample_wind(const TorusGeometry& g, const ScalarProcess& p) {
  WindMode m;
  m.k1 = 1;
  m.k2 = 0;
  for (std::size_t i = 0; i < p.mu.size(); ++i) {
    FrequencyAtom a;
    a.mu = p.mu[i];
    a.coeff = CVec2(p.phi[i], 0.0);
    m.atoms.push_back(a);
  }
  return WindStress(g, {m}, {});
}

void cmd_forcing(Context& c) {
  const json& b = c.cfg().block("forcing");
  check_keys(b, "forcing", {"eta", "alphas", "counterexample", "sigma_alpha", "lambda_max",
                            "lambda_points"});
  const double eta = number_or(b, "forcing", "eta", 0.5);
  if (!(eta > 0.0)) throw ConfigError("forcing.eta", "must be positive");
  const std::vector<double> alphas = number_list_or(b, "forcing", "alphas", {1e-1, 1e-2, 1e-3});
  for (std::size_t i = 0; i < alphas.size(); ++i)
    if (!(alphas[i] > 0.0)) throw ConfigError(index("forcing.alphas", i), "must be positive");
  const double lmax = number_or(b, "forcing", "lambda_max", 3.0);
  const int lpts = positive_int_or(b, "forcing", "lambda_points", 241);

  std::optional<ScalarProcess> cex;
  WindStress ws;
  if (b.contains("counterexample")) {
    const json& ce = b["counterexample"];
    check_keys(ce, "forcing.counterexample", {"count"});
    cex = h2_counterexample(positive_int_or(ce, "forcing.counterexample", "count", 10));
    ws = counterexample_wind(c.geom(), *cex);
  } else {
    ws = c.wind_required();
  }
  const PhasePoint w = cex ? PhasePoint{} : c.phases();

  const H1Report h1 = check_H1(ws);
  const H2Report h2 = check_H2(ws, eta, alphas);
  CsvTable curve = c.table("h2_curve/1", {"alpha", "sup_F"});
  curve.meta("eta", num(eta));
  for (const auto& [a, s] : h2.curve) curve.add_row({num(a), num(s)});
  c.emit("h2_curve.csv", curve);

  CsvTable fa = c.table("falpha/1", {"k1", "k2", "alpha", "lambda", "re_F1", "im_F1", "re_F2",
                                     "im_F2"});
  for (const auto& [k1, k2] : ws.horizontal_support())
    for (double a : alphas)
      for (int i = 0; i < lpts; ++i) {
        const double lam = lpts == 1 ? 0.0 : -lmax + 2.0 * lmax * i / (lpts - 1);
        const CVec2 f = spectral_density_Falpha(ws, lam, a, k1, k2, w);
        fa.add_row({num(k1), num(k2), num(a), num(lam), num(f(0).real()), num(f(0).imag()),
                    num(f(1).real()), num(f(1).imag())});
      }
  c.emit("falpha.csv", fa);

  json report = {{"source", cex ? "h2_counterexample" : "wind"},
                 {"H1", {{"verdict", h1.holds ? "pass" : "fail"}, {"bound", h1.bound}}},
                 {"H2",
                  {{"verdict", h2.holds ? "pass" : "fail"},
                   {"eta", eta},
                   {"distance", h2.distance}}}};

  if (cex) {
    CsvTable pk = c.table("h2_counterexample/1",
                          {"alpha", "n", "mu", "lorentzian_sum", "bound_2phi_over_alpha"});
    bool exceeds = true;
    for (double a : alphas)
      for (std::size_t i = 0; i < cex->mu.size(); ++i) {
        const double v = lorentzian_sum(cex->mu, cex->phi, cex->mu[i], a);
        const double bound = 2.0 * cex->phi[i] / a;
        exceeds = exceeds && v >= bound;
        pk.add_row({num(a), num(static_cast<long long>(i + 1)), num(cex->mu[i]), num(v), num(bound)});
      }
    c.emit("h2_counterexample.csv", pk);
    report["counterexample"] = {{"count", cex->mu.size()}, {"exceeds_2phi_over_alpha", exceeds}};
  } else {
    json rel = json::array();
    for (const auto& r : rational_relations(ws.base_frequencies())) rel.push_back(r);
    report["rational_relations"] = rel;
  }

  const json sa = b.contains("sigma_alpha") ? b["sigma_alpha"] : json::object();
  check_keys(sa, "forcing.sigma_alpha", {"alphas", "T", "points"});
  const std::vector<double> sal =
      number_list_or(sa, "forcing.sigma_alpha", "alphas", {1e-1, 1e-2, 1e-3});
  const double T = number_or(sa, "forcing.sigma_alpha", "T", 10.0);
  const int pts = positive_int_or(sa, "forcing.sigma_alpha", "points", 21);
  CsvTable st = c.table("sigma_alpha/1", {"alpha", "sup_err", "tail_bound"});
  std::vector<double> sups;
  for (double a : sal) {
    if (!(a > 0.0)) throw ConfigError("forcing.sigma_alpha.alphas", "must be positive");
    double sup = 0.0, tail = 0.0;
    for (int i = 0; i < pts; ++i) {
      const double tau = pts == 1 ? 0.0 : T * i / (pts - 1);
      const SigmaAlphaResult r = reconstruct_sigma_alpha(ws, a, 0.0, tau, Vec2::Zero(), w);
      sup = std::max(sup, (r.value - ws.sample(0.0, tau, Vec2::Zero(), w)).norm());
      tail = std::max(tail, r.tail_bound);
    }
    sups.push_back(sup);
    st.add_row({num(a), num(sup), num(tail)});
  }
  c.emit("sigma_alpha.csv", st);
  report["sigma_alpha"] = {{"monotone", strictly_decreasing(sups)}, {"sup_err", sups}};
  c.emit("forcing_report.json", report);
  c.out() << "forcing-check: H1 " << (h1.holds ? "pass" : "fail") << " (bound " << h1.bound
          << "), H2 " << (h2.holds ? "pass" : "fail") << " (distance " << h2.distance
          << ", eta " << eta << ")\n";
}

// ----------------------------------------------------------------- layers

LayerParams layer_params_from(const json& blk, const std::string& path) {
  return blk.contains("params") ? parse_layer_params(blk["params"], join(path, "params"))
                                : LayerParams{};
}

void cmd_layers(Context& c) {
  const json& b = c.cfg().block("layers");
  check_keys(b, "layers", {"params", "taus", "zeta_max", "zeta_points", "sweep", "N"});
  const LayerParams p = layer_params_from(b, "layers");
  const std::vector<double> taus = number_list_or(b, "layers", "taus", {0.0, 1.0, 2.0, 3.0});
  const double zmax = number_or(b, "layers", "zeta_max", 8.0);
  if (!(zmax > 0.0)) throw ConfigError("layers.zeta_max", "must be positive");
  const int zpts = positive_int_or(b, "layers", "zeta_points", 81);
  if (zpts < 3) throw ConfigError("layers.zeta_points", "must be at least 3");
  const std::vector<double> sweep = number_list_or(b, "layers", "sweep", {1e-2, 1e-3, 1e-4});
  const WindStress& ws = c.wind_required();
  const PhasePoint w = c.phases();
  const Vec2 xh = Vec2::Zero();
  std::vector<double> zetas;
  for (int i = 0; i < zpts; ++i) zetas.push_back(zmax * i / (zpts - 1));

  const std::vector<std::string> cols = {"tau",   "zeta",  "re_u1", "im_u1",
                                         "re_u2", "im_u2", "re_u3", "im_u3"};
  CsvTable prof = c.table("layer_profile/1", cols);
  prof.meta("layer", "top");
  prof.meta("params", layer_params_to_json(p).dump());
  for (double tau : taus)
    for (double z : zetas) {
      const CVec2 u = top_layer_uh(ws, p, 0.0, tau, xh, z, w);
      const cplx u3 = top_layer_u3(ws, p, 0.0, tau, xh, z, w);
      prof.add_row({num(tau), num(z), num(u(0).real()), num(u(0).imag()), num(u(1).real()),
                    num(u(1).imag()), num(u3.real()), num(u3.imag())});
    }
  c.emit("layer_profile.csv", prof);

  json report = {{"params", layer_params_to_json(p)}};
  if (c.cfg().doc.contains("initial")) {
    const int n = positive_int_or(b, "layers", "N", 2);
    const SpectralField u0 =
        build_initial(c.cfg().block("initial"), c.geom(), n, c.seed_for(SeedStream::InitialData));
    const BottomLayerSpec spec = BottomLayerSpec::from_interior(u0);
    CsvTable bot = c.table("layer_profile/1", cols);
    bot.meta("layer", "bottom");
    bot.meta("params", layer_params_to_json(p).dump());
    double wall = 0.0;
    for (double tau : taus)
      for (double z : zetas) {
        CVec3 u = CVec3::Zero();
        for (const auto& [k, m] : spec.modes) u += bottom_layer(spec, k, tau, xh, z, p);
        u.head<2>() += bottom_classical_kh0(spec, tau, z);
        if (z == 0.0) {
          // interior value at the wall cancels the layer
          CVec3 interior = CVec3::Zero();
          for (std::size_t i = 0; i < u0.size(); ++i) {
            const ModeIndex k = u0.modes().mode(i);
            interior += u0[i] * std::exp(cplx(0.0, -eigenvalue(c.geom(), k) * tau)) *
                        mode_profile(c.geom(), k, 0.0);
          }
          wall = std::max(wall, (u.head<2>() + interior.head<2>()).norm());
        }
        bot.add_row({num(tau), num(z), num(u(0).real()), num(u(0).imag()), num(u(1).real()),
                     num(u(1).imag()), num(u(2).real()), num(u(2).imag())});
      }
    c.emit("layer_bottom_profile.csv", bot);
    report["bottom_dirichlet_defect"] = wall;
  }

  // Neumann condition at zeta = 0 by a second-order one-sided difference
  double neumann = 0.0, scale = 0.0;
  const double h = 1e-4;
  for (double tau : taus) {
    const CVec2 u0v = top_layer_uh(ws, p, 0.0, tau, xh, 0.0, w);
    const CVec2 u1v = top_layer_uh(ws, p, 0.0, tau, xh, h, w);
    const CVec2 u2v = top_layer_uh(ws, p, 0.0, tau, xh, 2 * h, w);
    const CVec2 d = (-3.0 * u0v + 4.0 * u1v - u2v) / (2 * h);
    const Vec2 want = -p.eta() * p.beta * ws.sample(0.0, tau, xh, w);
    neumann = std::max(neumann, (d - want.cast<cplx>()).norm());
    scale = std::max(scale, want.norm());
  }
  std::vector<double> rtaus;
  for (double tau : taus) rtaus.push_back(tau + 1.0);
  std::vector<double> rzetas = {0.25, 0.5, 1.0, 2.0, 4.0};
  const LayerResidual res = layer_residual(
      [&](double tau, double z) { return top_layer_uh(ws, p, 0.0, tau, xh, z, w); }, p.delta,
      rtaus, rzetas, 1e-2);

  CsvTable sc = c.table("layer_scaling/1", {"epsilon", "nu", "beta", "eta", "sup_norm",
                                            "l2_zeta_norm", "sup_ratio", "l2_ratio"});
  std::vector<double> etas, sup_r, l2_r;
  for (double e : sweep) {
    if (!(e > 0.0)) throw ConfigError("layers.sweep", "entries must be positive");
    LayerParams q = p;
    q.epsilon = e;
    q.nu = e;
    double sup = 0.0, l2 = 0.0;
    for (double tau : taus) {
      double acc = 0.0;
      for (int i = 0; i < zpts; ++i) {
        const double v = top_layer_uh(ws, q, 0.0, tau, xh, zetas[i], w).norm();
        sup = std::max(sup, v);
        acc += (i == 0 || i == zpts - 1 ? 0.5 : 1.0) * v * v;
      }
      l2 = std::max(l2, std::sqrt(acc * zmax / (zpts - 1)));
    }
    const double eb = q.eta() * q.beta;
    etas.push_back(q.eta());
    sup_r.push_back(sup / eb);
    l2_r.push_back(l2 / eb);
    sc.add_row({num(e), num(e), num(q.beta), num(q.eta()), num(sup), num(l2), num(sup / eb),
                num(l2 / eb)});
  }
  c.emit("layer_scaling.csv", sc);

  report["neumann_defect"] = neumann;
  report["neumann_scale"] = scale;
  report["layer_residual"] = {{"max", res.max_residual}, {"max_value", res.max_value}};
  if (sweep.size() >= 2) {
    report["scaling_slope_sup"] = loglog_slope(etas, sup_r);
    report["scaling_slope_l2"] = loglog_slope(etas, l2_r);
  }
  report["psi"] = {{"psi0", psi(0.0)},
                   {"psi2", psi(2.0)},
                   {"ode_residual", psi_ode_residual({0.5, 1.0, 2.0, 3.0, 4.0}, 1e-3)}};
  c.emit("layers_report.json", report);
  c.out() << "layers: neumann defect " << neumann << ", residual " << res.max_residual
          << ", psi(2) " << psi(2.0) << "\n";
}

// ---------------------------------------------------------------- sources

void cmd_sources(Context& c) {
  const json& b = c.cfg().block("sources");
  check_keys(b, "sources", {"N", "params", "t", "thetas", "lift"});
  const int n = positive_int_or(b, "sources", "N", 1);
  const LayerParams p = layer_params_from(b, "sources");
  const double t = number_or(b, "sources", "t", 0.0);
  const std::vector<double> thetas = number_list_or(b, "sources", "thetas", {1e2, 1e3, 1e4});
  LiftProfile lift = LiftProfile::Linear;
  if (b.contains("lift")) {
    const json& l = b["lift"];
    if (l == "linear") lift = LiftProfile::Linear;
    else if (l == "quadratic") lift = LiftProfile::Quadratic;
    else throw ConfigError("sources.lift", "expected \"linear\" or \"quadratic\"");
  }
  const TorusGeometry& g = c.geom();
  const WindStress ws = c.cfg().has_wind ? c.cfg().wind : WindStress();
  const PhasePoint w = c.phases();
  const SpectralField u0 =
      build_initial(c.cfg().block("initial"), g, n, c.seed_for(SeedStream::InitialData));

  CsvTable pa = c.table("pumping_A/1", {"k1", "k2", "k3", "lambda", "re_A", "im_A"});
  const ModeSet ms(n);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const ModeIndex k = ms.mode(i);
    const cplx a = pumping_coefficient_A(g, k);
    pa.add_row({num(k.k1), num(k.k2), num(k.k3), num(eigenvalue(g, k)), num(a.real()),
                num(a.imag())});
  }
  c.emit("pumping_A.csv", pa);

  json report = {{"N", n}, {"params", layer_params_to_json(p)}, {"t", t}};
  const SpectralField std_ = S_T_delta(ws, p.delta, t, w, n);
  std::optional<SpectralField> lim;
  try {
    lim = S_T_limit(ws, t, w, n);
  } catch (const HypothesisError& e) {
    report["limit_unavailable"] = e.what();
  }
  CsvTable sf = c.table("source_ST/1", {"k1", "k2", "k3", "re_ST_delta", "im_ST_delta",
                                        "re_ST_limit", "im_ST_limit"});
  sf.meta("delta", num(p.delta));
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const ModeIndex k = ms.mode(i);
    const cplx l = lim ? (*lim)[i] : cplx(NAN, NAN);
    sf.add_row({num(k.k1), num(k.k2), num(k.k3), num(std_[i].real()), num(std_[i].imag()),
                num(l.real()), num(l.imag())});
  }
  c.emit("source_ST.csv", sf);

  const OscillatorySeries cb = compute_cB3(u0);
  const OscillatorySeries ct = ws.empty() ? OscillatorySeries{} : compute_cT3(ws, p, t, w);
  const SpectralField sbar = S_bar(g, n, cb, ct, p);
  SpectralField rhs = p.eta() * S_B_apply(u0);
  rhs += (p.epsilon * p.nu * p.beta) * std_;
  report["sbar_identity_defect"] = (sbar - rhs).max_abs();
  report["sbar_max"] = sbar.max_abs();

  // Pointwise errors oscillate at the detuning frequencies; the windowed value takes
  // theta' |S_theta' - S_bar| over theta' in [theta, 2 theta], divided by theta.
  CsvTable sth = c.table("stheta/1", {"theta", "err", "err_windowed"});
  std::vector<double> errs;
  for (double th : thetas) {
    if (!(th > 0.0)) throw ConfigError("sources.thetas", "entries must be positive");
    double pointwise = 0.0, win = 0.0;
    for (double f : {1.0, 1.25, 1.5, 1.75, 2.0}) {
      const double e = (source_average_Stheta(g, n, cb, ct, p, f * th, lift) - sbar).max_abs();
      if (f == 1.0) pointwise = e;
      win = std::max(win, f * th * e);
    }
    errs.push_back(win / th);
    sth.add_row({num(th), num(pointwise), num(win / th)});
  }
  c.emit("stheta.csv", sth);
  if (thetas.size() >= 2 && std::all_of(errs.begin(), errs.end(), [](double e) { return e > 0; }))
    report["stheta_slope"] = loglog_slope(thetas, errs);
  c.emit("sources_report.json", report);
  c.out() << "sources: sbar identity defect " << report["sbar_identity_defect"].get<double>();
  if (report.contains("stheta_slope")) c.out() << ", S_theta slope " << report["stheta_slope"].get<double>();
  c.out() << "\n";
}

// --------------------------------------------------------- solve-envelope

EnvelopeConfig envelope_config(const Context& c) {
  return EnvelopeConfig::from_json(c.cfg().block("envelope"), "envelope");
}

void cmd_envelope(Context& c) {
  const EnvelopeConfig ec = envelope_config(c);
  const TorusGeometry& g = c.geom();
  const WindStress ws = c.cfg().has_wind ? c.cfg().wind : WindStress();
  const PhasePoint w = c.phases();
  const SpectralField u0 = build_initial(c.cfg().block("initial"), g, ec.truncation,
                                         c.seed_for(SeedStream::InitialData));
  const auto tab = ec.nonlinear ? c.triads(ec.truncation) : nullptr;
  const TrajectoryRecord rec = solve_envelope(u0, ws, ec, w, tab);

  CsvTable t = c.table("trajectory/1", {"time", "energy", "dissipation", "pumping", "source_work"});
  t.meta("envelope", ec.to_json().dump());
  for (const Diagnostics& d : rec.diagnostics)
    t.add_row({num(d.time), num(d.energy), num(d.dissipation), num(d.pumping), num(d.source_work)});
  c.emit("envelope_trajectory.csv", t);

  json snaps = json::array();
  for (const auto& s : rec.snapshots) snaps.push_back(s.to_json());
  c.emit("envelope_snapshots.json", {{"times", rec.times}, {"snapshots", snaps}});

  json rel = json::array();
  for (const auto& r : rational_relations(ws.base_frequencies())) rel.push_back(r);
  const Diagnostics& last = rec.diagnostics.back();
  c.emit("envelope_report.json", {{"envelope", ec.to_json()},
                                  {"phases", w},
                                  {"steps", rec.diagnostics.size() - 1},
                                  {"final_energy", last.energy},
                                  {"final_h01", last.h01},
                                  {"energy_budget_residual", energy_budget_residual(rec)},
                                  {"rational_relations", rel}});
  c.out() << "solve-envelope: " << rec.diagnostics.size() - 1 << " steps, final energy "
          << last.energy << "\n";
}

// ------------------------------------------------------------- mean-limit

void cmd_mean_limit(Context& c) {
  const EnvelopeConfig ec = envelope_config(c);
  const json& b = c.cfg().block("mean_limit");
  check_keys(b, "mean_limit", {"draws", "decoupling_samples", "threads"});
  const long long draws = integer_or(b, "mean_limit", "draws", 64);
  if (draws != 0 && draws < 2) throw ConfigError("mean_limit.draws", "must be 0 or at least 2");
  const int samples = positive_int_or(b, "mean_limit", "decoupling_samples", 8);
  const TorusGeometry& g = c.geom();
  const WindStress ws = c.cfg().has_wind ? c.cfg().wind : WindStress();
  const SpectralField u0 = build_initial(c.cfg().block("initial"), g, ec.truncation,
                                         c.seed_for(SeedStream::InitialData));
  const auto tab = c.triads(ec.truncation);

  const DecouplingReport dr =
      decoupling_check(g, ec.truncation, samples, c.seed_for(SeedStream::Diagnostics), tab);
  const MeanLimitResult m = solve_mean_limit(u0, ws, ec, tab);

  CsvTable t = c.table("mean_limit/1", {"time", "wbar_norm", "wtilde_norm", "vorticity_max"});
  for (std::size_t i = 0; i < m.times.size(); ++i)
    if (i % std::size_t(ec.output_every) == 0 || i + 1 == m.times.size())
      t.add_row({num(m.times[i]), num(m.wbar[i].norm()), num(m.wtilde[i].norm()),
                 num(m.vorticity[i].max_abs())});
  c.emit("mean_limit.csv", t);

  json report = {{"envelope", ec.to_json()},
                 {"decoupling",
                  {{"nonresonant", dr.nonresonant},
                   {"torus_violations", dr.torus_violations},
                   {"max_qbar", dr.max_qbar},
                   {"coupling_count", dr.coupling_count},
                   {"pass", dr.pass()}}}};
  if (draws > 0) {
    const MonteCarloCheck mc =
        monte_carlo_mean_check(u0, ws, ec, m, int(draws), c.seed_for(SeedStream::MonteCarlo), tab,
                               c.threads(b, "mean_limit"));
    report["monte_carlo"] = {{"draws", mc.draws},
                             {"l2_distance", mc.l2_distance},
                             {"l2_bound", mc.l2_bound},
                             {"max_mode_excess", mc.max_mode_excess},
                             {"horizontal_distance", mc.horizontal_distance},
                             {"pass", mc.pass()}};
    c.out() << "mean-limit: MC distance " << mc.l2_distance << " (bound " << mc.l2_bound
            << "), decoupling " << (dr.pass() ? "pass" : "fail") << "\n";
  } else {
    c.out() << "mean-limit: decoupling " << (dr.pass() ? "pass" : "fail") << "\n";
  }
  c.emit("mean_limit_report.json", report);
}

// ----------------------------------------------------------- solve-direct

void cmd_direct(Context& c) {
  const json& b = c.cfg().block("direct");
  check_keys(b, "direct", {"epsilon", "nu", "beta", "N"});
  LayerParams p;
  p.epsilon = number_or(b, "direct", "epsilon", 1e-2);
  p.nu = number_or(b, "direct", "nu", p.epsilon);
  p.beta = number_or(b, "direct", "beta", 1.0 / std::sqrt(p.epsilon * p.nu));
  if (!(p.epsilon > 0.0)) throw ConfigError("direct.epsilon", "must be positive");
  if (!(p.nu > 0.0)) throw ConfigError("direct.nu", "must be positive");
  if (!(p.beta >= 0.0)) throw ConfigError("direct.beta", "must be nonnegative");
  const int n = positive_int_or(b, "direct", "N", 1);
  GridConfig gc = GridConfig::from_json(c.cfg().block("grid"), "grid");
  gc.threads = c.threads(c.cfg().block("grid"), "grid");
  const TorusGeometry& g = c.geom();
  const WindStress ws = c.cfg().has_wind ? c.cfg().wind : WindStress();
  const PhasePoint w = c.phases();
  const SpectralField u0 =
      build_initial(c.cfg().block("initial"), g, n, c.seed_for(SeedStream::InitialData));
  const DirectTrajectory tr = solve_direct_linear(u0, ws, p, gc, w);

  CsvTable t = c.table("direct_trajectory/1", {"time", "l2_norm", "divergence"});
  for (std::size_t o = 0; o < tr.times.size(); ++o)
    t.add_row({num(tr.times[o]), num(tr.l2_norm(o)), num(tr.divergence[o])});
  c.emit("direct_trajectory.csv", t);

  CsvTable pr = c.table("direct_profile/1", {"k1", "k2", "z", "re_u1", "im_u1", "re_u2", "im_u2",
                                             "re_u3", "im_u3"});
  pr.meta("time", num(tr.times.back()));
  for (std::size_t m = 0; m < tr.kh.size(); ++m) {
    const ProfileMatrix& u = tr.fields.back()[m];
    if (u.cwiseAbs().maxCoeff() == 0.0) continue;
    for (std::size_t j = 0; j < tr.grid.size(); ++j)
      pr.add_row({num(tr.kh[m].first), num(tr.kh[m].second), num(tr.grid.z()[j]),
                  num(u(j, 0).real()), num(u(j, 0).imag()), num(u(j, 1).real()),
                  num(u(j, 1).imag()), num(u(j, 2).real()), num(u(j, 2).imag())});
  }
  c.emit("direct_profile.csv", pr);

  json report = {{"params", {{"epsilon", p.epsilon}, {"nu", p.nu}, {"beta", p.beta}}},
                 {"grid", gc.to_json()},
                 {"stretch", tr.grid.stretch()},
                 {"layer_points_bottom", tr.grid.points_within(p.eta(), true)},
                 {"layer_points_top", tr.grid.points_within(p.eta(), false)},
                 {"max_divergence", *std::max_element(tr.divergence.begin(), tr.divergence.end())},
                 {"warnings", tr.warnings}};
  if (tr.grid.size() >= std::size_t(12 * n + 24)) {
    const std::vector<SpectralField> f = filter_project(tr, n, p.epsilon);
    CsvTable fc = c.table("direct_filtered/1", {"time", "k1", "k2", "k3", "re", "im"});
    for (std::size_t o = 0; o < f.size(); ++o)
      for (std::size_t i = 0; i < f[o].size(); ++i) {
        const ModeIndex k = f[o].modes().mode(i);
        fc.add_row({num(tr.times[o]), num(k.k1), num(k.k2), num(k.k3), num(f[o][i].real()),
                    num(f[o][i].imag())});
      }
    c.emit("direct_filtered.csv", fc);
  } else {
    report["warnings"].push_back("grid too coarse for filtered projection; skipped");
  }
  c.emit("direct_report.json", report);
  for (const auto& wmsg : report["warnings"]) std::cerr << "warning: " << wmsg.get<std::string>() << "\n";
  c.out() << "solve-direct: " << tr.times.size() << " outputs, max divergence "
          << report["max_divergence"].get<double>() << "\n";
}

// ---------------------------------------------------------------- compare

void cmd_compare(Context& c) {
  json b = c.cfg().block("compare");
  std::vector<double> eps = {1e-1, 3e-2, 1e-2};
  if (b.contains("epsilons")) {
    eps = number_list(b["epsilons"], "compare.epsilons");
    b.erase("epsilons");
  }
  if (eps.empty()) throw ConfigError("compare.epsilons", "must not be empty");
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (!(eps[i] > 0.0)) throw ConfigError(index("compare.epsilons", i), "must be positive");
  ConvergenceConfig cc = ConvergenceConfig::from_json(b, "compare");
  cc.threads = c.threads(b, "compare");
  const TorusGeometry& g = c.geom();
  const WindStress ws = c.cfg().has_wind ? c.cfg().wind : WindStress();
  const PhasePoint w = c.phases();
  const SpectralField u0 = build_initial(c.cfg().block("initial"), g, cc.truncation,
                                         c.seed_for(SeedStream::InitialData));
  const std::vector<ConvergenceRow> rows = convergence_study(u0, ws, eps, cc, w);

  CsvTable t = c.table("errors/1", {"epsilon", "nu", "beta", "err_LinfL2", "err_L2H10", "runtime_s"});
  t.meta("compare", cc.to_json().dump());
  CsvTable f = c.table("errors_full/1", {"epsilon", "nu", "beta", "full_LinfL2", "full_L2H10"});
  std::vector<double> a, h, fa, fh;
  json jrows = json::array();
  for (const ConvergenceRow& r : rows) {
    t.add_row({num(r.epsilon), num(r.nu), num(r.beta), num(r.err_LinfL2), num(r.err_L2H10),
               num(r.runtime_s)});
    f.add_row({num(r.epsilon), num(r.nu), num(r.beta), num(r.full_LinfL2), num(r.full_L2H10)});
    a.push_back(r.err_LinfL2);
    h.push_back(r.err_L2H10);
    fa.push_back(r.full_LinfL2);
    fh.push_back(r.full_L2H10);
    jrows.push_back({{"epsilon", r.epsilon},
                     {"nu", r.nu},
                     {"beta", r.beta},
                     {"err_LinfL2", r.err_LinfL2},
                     {"err_L2H10", r.err_L2H10},
                     {"full_LinfL2", r.full_LinfL2},
                     {"full_L2H10", r.full_L2H10}});
  }
  c.emit("errors.csv", t);
  c.emit("errors_full.csv", f);
  // errors are listed in the order of `epsilons`; monotone means decreasing along it
  c.emit("compare_report.json", {{"compare", cc.to_json()},
                                 {"rows", jrows},
                                 {"monotone_filtered", strictly_decreasing(a) && strictly_decreasing(h)},
                                 {"monotone_full", strictly_decreasing(fa) && strictly_decreasing(fh)}});
  c.out() << "compare:";
  for (const ConvergenceRow& r : rows)
    c.out() << " eps=" << r.epsilon << " [" << r.err_LinfL2 << ", " << r.err_L2H10 << "]";
  c.out() << "\n";
}

void dispatch(const std::string& sub, Context& c) {
  if (sub == "basis") return cmd_basis(c);
  if (sub == "resonance") return cmd_resonance(c);
  if (sub == "forcing-check") return cmd_forcing(c);
  if (sub == "layers") return cmd_layers(c);
  if (sub == "sources") return cmd_sources(c);
  if (sub == "solve-envelope") return cmd_envelope(c);
  if (sub == "mean-limit") return cmd_mean_limit(c);
  if (sub == "solve-direct") return cmd_direct(c);
  if (sub == "compare") return cmd_compare(c);
  throw ConfigError("", "unknown subcommand '" + sub + "'");
}

int report_error(std::ostream& err, const std::string& kind, const std::string& path,
                 const std::string& message, int code) {
  json e = {{"error", {{"kind", kind}, {"path", path}, {"message", message}, {"exit_code", code}}}};
  err << e.dump() << "\n";
  return code;
}

}  // namespace

int run(const std::string& subcommand, const RunOptions& opt, std::ostream& out,
        std::ostream& err) {
  try {
    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    Context ctx(subcommand, ExperimentConfig::load(opt.config, subcommand), opt, out);
    dispatch(subcommand, ctx);
    ctx.finish(started,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return kExitOk;
  } catch (const ConfigError& e) {
    return report_error(err, "config", e.path(), e.what(), kExitConfig);
  } catch (const HypothesisError& e) {
    return report_error(err, "hypothesis", "", e.what(), kExitNumerical);
  } catch (const NumericalError& e) {
    return report_error(err, "numerical", "", e.what(), kExitNumerical);
  } catch (const InvalidArgument& e) {
    return report_error(err, "invalid_argument", "", e.what(), kExitConfig);
  } catch (const json::exception& e) {
    return report_error(err, "config", "", e.what(), kExitConfig);
  } catch (const std::exception& e) {
    return report_error(err, "internal", "", e.what(), kExitFailure);
  }
}

int cli_main(int argc, char** argv) {
  CLI::App app{"rotwind: rotating-fluid wind-stress experiments"};
  app.require_subcommand(1);
  RunOptions opt;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<CLI::App*> subs;
  for (const std::string& name : subcommands()) {
    CLI::App* s = app.add_subcommand(name, "run the " + name + " experiment");
    s->add_option("--config", opt.config, "experiment JSON")->required();
    s->add_option("--out", out_dir, "output directory (overrides ROTWIND_OUT)");
    s->add_option("--seed", seed, "master seed (overrides the config)");
    s->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    s->add_flag("--rebuild-cache", opt.rebuild_cache, "ignore cached triad tables");
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(std::cerr, "usage", "", e.what(), kExitConfig);
  }
  for (CLI::App* s : subs) {
    if (!s->parsed()) continue;
    if (s->count("--out")) opt.out = out_dir;
    if (s->count("--seed")) opt.seed = seed;
    if (s->count("--threads")) opt.threads = threads;
    return run(s->get_name(), opt, std::cout, std::cerr);
  }
  return kExitConfig;
}

}  // namespace rotwind
