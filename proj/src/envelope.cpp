#include "rotwind/envelope.hpp"

#include <cmath>

#include "rotwind/ekman_sources.hpp"
#include "rotwind/errors.hpp"
#include "rotwind/json_util.hpp"

namespace rotwind {

void EnvelopeConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("envelope.epsilon", "must be positive");
  if (!(nu > 0.0)) throw ConfigError("envelope.nu", "must be positive");
  if (!(beta >= 0.0)) throw ConfigError("envelope.beta", "must be nonnegative");
  if (!(delta >= 0.0)) throw ConfigError("envelope.delta", "must be nonnegative");
  if (truncation < 1) throw ConfigError("envelope.N", "must be at least 1");
  if (!(dt > 0.0)) throw ConfigError("envelope.dt", "must be positive");
  if (!(T_final >= 0.0)) throw ConfigError("envelope.T_final", "must be nonnegative");
  if (output_every < 1) throw ConfigError("envelope.output_every", "must be at least 1");
  if (scheme != "cn-ab2") throw ConfigError("envelope.scheme", "unknown scheme '" + scheme + "'");
  if (!(energy_bound > 0.0)) throw ConfigError("envelope.energy_bound", "must be positive");
}

double EnvelopeConfig::pumping_scale() const { return std::sqrt(nu / epsilon); }

EnvelopeConfig EnvelopeConfig::from_json(const nlohmann::json& j, const std::string& path) {
  using namespace jsonu;
  check_keys(j, path,
             {"epsilon", "nu", "beta", "delta", "N", "dt", "T_final", "output_every", "seed",
              "scheme", "nonlinear", "energy_bound", "h2_eta"});
  EnvelopeConfig c;
  c.epsilon = number_or(j, path, "epsilon", c.epsilon);
  c.nu = number_or(j, path, "nu", c.nu);
  c.beta = number_or(j, path, "beta", c.beta);
  c.delta = number_or(j, path, "delta", c.delta);
  c.truncation = static_cast<int>(integer_or(j, path, "N", c.truncation));
  c.dt = number_or(j, path, "dt", c.dt);
  c.T_final = number_or(j, path, "T_final", c.T_final);
  c.output_every = static_cast<int>(integer_or(j, path, "output_every", c.output_every));
  const long long seed = integer_or(j, path, "seed", 0);
  if (seed < 0) throw ConfigError(join(path, "seed"), "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  if (j.contains("scheme")) {
    if (!j["scheme"].is_string()) throw ConfigError(join(path, "scheme"), "expected a string");
    c.scheme = j["scheme"].get<std::string>();
  }
  if (j.contains("nonlinear")) {
    if (!j["nonlinear"].is_boolean())
      throw ConfigError(join(path, "nonlinear"), "expected a boolean");
    c.nonlinear = j["nonlinear"].get<bool>();
  }
  c.energy_bound = number_or(j, path, "energy_bound", c.energy_bound);
  c.h2_eta = number_or(j, path, "h2_eta", c.h2_eta);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    // re-root the path at the caller's prefix
    const std::string p = e.path();
    throw ConfigError(path + p.substr(std::string("envelope").size()), e.what());
  }
  return c;
}

nlohmann::json EnvelopeConfig::to_json() const {
  return {{"epsilon", epsilon},     {"nu", nu},       {"beta", beta},
          {"delta", delta},         {"N", truncation}, {"dt", dt},
          {"T_final", T_final},     {"output_every", output_every},
          {"seed", seed},           {"scheme", scheme}, {"nonlinear", nonlinear},
          {"energy_bound", energy_bound}, {"h2_eta", h2_eta}};
}

EnvelopeSolver::EnvelopeSolver(const SpectralField& u0, const WindStress& ws,
                               const EnvelopeConfig& cfg, const PhasePoint& w,
                               std::shared_ptr<const TriadTable> table)
    : g_(u0.geometry()), cfg_(cfg), ws_(ws), phases_(w), table_(std::move(table)),
      w_(u0.retruncated(cfg.truncation)), nl_prev_(u0.geometry(), cfg.truncation) {
  cfg_.validate();
  if (!(ws_.geometry() == g_) && !ws_.empty())
    throw InvalidArgument("envelope: wind and initial data use different geometries");
  if (cfg_.nonlinear) {
    if (!table_) table_ = std::make_shared<TriadTable>(TriadTable::build(g_, cfg_.truncation));
    if (table_->truncation() != cfg_.truncation || !(table_->geometry() == g_))
      throw InvalidArgument("envelope: triad table does not match geometry/truncation");
  }
  rate_.resize(w_.size());
  for (std::size_t i = 0; i < w_.size(); ++i) {
    const ModeIndex k = w_.modes().mode(i);
    const Vec3 kp = wavevector(g_, k);
    rate_[i] = kp(0) * kp(0) + kp(1) * kp(1) + cfg_.pumping_scale() * pumping_coefficient_A(g_, k);
  }
}

SpectralField EnvelopeSolver::source(double t) const {
  if (ws_.empty() || cfg_.beta == 0.0) return SpectralField(g_, cfg_.truncation);
  SpectralField s = cfg_.delta > 0.0
                        ? S_T_delta(ws_, cfg_.delta, t, phases_, cfg_.truncation)
                        : S_T_limit(ws_, t, phases_, cfg_.truncation, cfg_.h2_eta);
  s *= cfg_.nu * cfg_.beta;
  return s;
}

SpectralField EnvelopeSolver::nonlinear_term(const SpectralField& w) const {
  if (!cfg_.nonlinear) return SpectralField(g_, cfg_.truncation);
  return table_->qbar_apply(w, w);
}

SpectralField EnvelopeSolver::advance(const SpectralField& w, double h,
                                      const SpectralField& rhs) const {
  SpectralField out(g_, cfg_.truncation);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const cplx r = 0.5 * h * rate_[i];
    out[i] = ((1.0 - r) * w[i] - h * rhs[i]) / (1.0 + r);
  }
  return out;
}

void EnvelopeSolver::step() {
  const double h = cfg_.dt;
  const SpectralField nl = nonlinear_term(w_);
  SpectralField next;
  if (n_ == 0) {
    const SpectralField half = advance(w_, 0.5 * h, nl + source(t_ + 0.25 * h));
    next = advance(w_, h, nonlinear_term(half) + source(t_ + 0.5 * h));
  } else {
    SpectralField ab = 1.5 * nl;
    ab -= 0.5 * nl_prev_;
    next = advance(w_, h, ab + source(t_ + 0.5 * h));
  }
  nl_prev_ = nl;
  w_ = std::move(next);
  t_ += h;
  ++n_;
  const double e = 0.5 * w_.norm() * w_.norm();
  if (!std::isfinite(e) || e > cfg_.energy_bound)
    throw NumericalError("envelope: energy " + std::to_string(e) + " exceeds bound at t = " +
                         std::to_string(t_));
}

Diagnostics EnvelopeSolver::diagnostics() const {
  Diagnostics d;
  d.time = t_;
  const SpectralField s = source(t_);
  for (std::size_t i = 0; i < w_.size(); ++i) {
    const double m2 = std::norm(w_[i]);
    const ModeIndex k = w_.modes().mode(i);
    const Vec3 kp = wavevector(g_, k);
    const double kh2 = kp(0) * kp(0) + kp(1) * kp(1);
    d.energy += 0.5 * m2;
    d.dissipation += kh2 * m2;
    d.pumping += (rate_[i].real() - kh2) * m2;
    d.source_work += (std::conj(s[i]) * w_[i]).real();
    d.h01 += (1.0 + double(k.k3) * k.k3) * m2;
  }
  return d;
}

TrajectoryRecord solve_envelope(const SpectralField& u0, const WindStress& ws,
                                const EnvelopeConfig& cfg, const PhasePoint& w,
                                std::shared_ptr<const TriadTable> table) {
  EnvelopeSolver s(u0, ws, cfg, w, std::move(table));
  TrajectoryRecord r;
  const auto steps = static_cast<std::size_t>(std::llround(cfg.T_final / cfg.dt));
  r.times.push_back(0.0);
  r.snapshots.push_back(s.state());
  r.diagnostics.push_back(s.diagnostics());
  for (std::size_t n = 1; n <= steps; ++n) {
    s.step();
    r.diagnostics.push_back(s.diagnostics());
    if (n % static_cast<std::size_t>(cfg.output_every) == 0 || n == steps) {
      r.times.push_back(s.time());
      r.snapshots.push_back(s.state());
    }
  }
  return r;
}

double energy_budget_residual(const TrajectoryRecord& r, double t_min) {
  const auto& d = r.diagnostics;
  double m = 0.0;
  for (std::size_t n = 1; n + 1 < d.size(); ++n) {
    if (d[n].time < t_min) continue;
    const double dedt = (d[n + 1].energy - d[n - 1].energy) / (d[n + 1].time - d[n - 1].time);
    m = std::max(m, std::abs(dedt + d[n].dissipation + d[n].pumping + d[n].source_work));
  }
  return m;
}

}  // namespace rotwind
