#include "rotwind/config.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "rotwind/json_util.hpp"
#include "rotwind/rng.hpp"

namespace rotwind {

using namespace jsonu;

std::uint64_t stream_seed(std::uint64_t master, SeedStream s, std::uint64_t index) {
  return derive_seed(master, static_cast<std::uint64_t>(s), index);
}

TorusGeometry parse_geometry(const nlohmann::json& j, const std::string& path) {
  check_keys(j, path, {"a1", "a2", "a"});
  TorusGeometry g;
  g.a1 = number(field(j, path, "a1"), join(path, "a1"));
  g.a2 = number(field(j, path, "a2"), join(path, "a2"));
  g.a = number(field(j, path, "a"), join(path, "a"));
  for (const auto& [key, v] : std::initializer_list<std::pair<const char*, double>>{
           {"a1", g.a1}, {"a2", g.a2}, {"a", g.a}})
    if (!(v > 0.0)) throw ConfigError(join(path, key), "must be positive");
  return g;
}

LayerParams parse_layer_params(const nlohmann::json& j, const std::string& path) {
  check_keys(j, path, {"epsilon", "nu", "beta", "delta"});
  LayerParams p;
  p.epsilon = number_or(j, path, "epsilon", p.epsilon);
  p.nu = number_or(j, path, "nu", p.nu);
  p.beta = number_or(j, path, "beta", p.beta);
  p.delta = number_or(j, path, "delta", p.delta);
  for (const auto& [key, v] : std::initializer_list<std::pair<const char*, double>>{
           {"epsilon", p.epsilon}, {"nu", p.nu}, {"beta", p.beta}, {"delta", p.delta}})
    if (!(v > 0.0)) throw ConfigError(join(path, key), "must be positive");
  return p;
}

nlohmann::json layer_params_to_json(const LayerParams& p) {
  return {{"epsilon", p.epsilon}, {"nu", p.nu}, {"beta", p.beta}, {"delta", p.delta}};
}

namespace {

ModeIndex parse_mode(const nlohmann::json& j, const std::string& path) {
  array(j, path);
  if (j.size() != 3) throw ConfigError(path, "expected three integers");
  ModeIndex k{static_cast<int>(integer(j[0], index(path, 0))),
              static_cast<int>(integer(j[1], index(path, 1))),
              static_cast<int>(integer(j[2], index(path, 2)))};
  if (k.is_zero()) throw ConfigError(path, "the zero mode is not a basis mode");
  return k;
}

void set_real_pair(SpectralField& f, const ModeIndex& k, cplx v, const std::string& path) {
  if (!f.modes().contains(k)) throw ConfigError(path, "mode " + k.str() + " exceeds the truncation");
  f.set(k, v);
  f.set(-k, double(conjugate_partner_sign(k)) * std::conj(v));
}

}  // namespace

SpectralField build_initial(const nlohmann::json& j, const TorusGeometry& g, int truncation,
                            std::uint64_t seed, const std::string& path) {
  SpectralField f(g, truncation);
  if (j.is_null() || (j.is_object() && j.empty())) return f;
  require_object(j, path);
  const auto& kind_j = field(j, path, "kind");
  if (!kind_j.is_string()) throw ConfigError(join(path, "kind"), "expected a string");
  const std::string kind = kind_j.get<std::string>();
  if (kind == "zero") {
    check_keys(j, path, {"kind"});
  } else if (kind == "single_mode") {
    check_keys(j, path, {"kind", "k", "amplitude"});
    const ModeIndex k = parse_mode(field(j, path, "k"), join(path, "k"));
    set_real_pair(f, k, number_or(j, path, "amplitude", 1.0), join(path, "k"));
  } else if (kind == "random") {
    check_keys(j, path, {"kind", "decay", "amplitude"});
    std::mt19937_64 rng(seed);
    f = random_real_field(g, truncation, rng, number_or(j, path, "decay", 2.0));
    f *= number_or(j, path, "amplitude", 1.0);
  } else if (kind == "shear") {
    check_keys(j, path, {"kind", "k2", "amplitude"});
    const int k2 = static_cast<int>(integer_or(j, path, "k2", 1));
    if (k2 == 0) throw ConfigError(join(path, "k2"), "must be nonzero");
    set_real_pair(f, {0, k2, 0}, number_or(j, path, "amplitude", 1.0), join(path, "k2"));
  } else if (kind == "field") {
    check_keys(j, path, {"kind", "entries"});
    const std::string ep = join(path, "entries");
    const auto& entries = array(field(j, path, "entries"), ep);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string p = index(ep, i);
      array(entries[i], p);
      if (entries[i].size() != 5) throw ConfigError(p, "expected [k1,k2,k3,re,im]");
      const ModeIndex k{static_cast<int>(integer(entries[i][0], index(p, 0))),
                        static_cast<int>(integer(entries[i][1], index(p, 1))),
                        static_cast<int>(integer(entries[i][2], index(p, 2)))};
      if (k.is_zero() || !f.modes().contains(k))
        throw ConfigError(p, "mode outside the truncation or zero");
      f.set(k, cplx(number(entries[i][3], index(p, 3)), number(entries[i][4], index(p, 4))));
    }
  } else {
    throw ConfigError(join(path, "kind"), "unknown initial data kind '" + kind + "'");
  }
  return f;
}

ExperimentConfig ExperimentConfig::parse(const nlohmann::json& j, const std::string& subcommand) {
  check_keys(j, "", {"experiment", "geometry", "wind", "phases", "initial", "envelope", "layers",
                     "grid", "compare", "basis", "resonance", "forcing", "sources",
                     "mean_limit", "direct", "output_dir", "cache_dir", "seed", "threads"});
  ExperimentConfig c;
  c.doc = j;
  if (j.contains("experiment")) {
    if (!j["experiment"].is_string()) throw ConfigError("experiment", "expected a string");
    if (j["experiment"].get<std::string>() != subcommand)
      throw ConfigError("experiment", "config is for '" + j["experiment"].get<std::string>() +
                                          "', not '" + subcommand + "'");
  }
  c.geom = parse_geometry(field(j, "", "geometry"));
  if (j.contains("wind")) {
    c.has_wind = true;
    try {
      c.wind = WindStress::from_json(c.geom, j["wind"], "wind");
    } catch (const InvalidArgument& e) {
      throw ConfigError("wind", e.what());
    }
  }
  if (j.contains("phases")) {
    const auto& ph = array(j["phases"], "phases");
    PhasePoint w;
    for (std::size_t i = 0; i < ph.size(); ++i) w.push_back(number(ph[i], index("phases", i)));
    if (w.size() != c.wind.base_frequencies().size())
      throw ConfigError("phases", "expected one phase per base frequency");
    c.phases = w;
  }
  const long long seed = integer_or(j, "", "seed", 0);
  if (seed < 0) throw ConfigError("seed", "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.threads = static_cast<int>(integer_or(j, "", "threads", 1));
  if (c.threads < 1) throw ConfigError("threads", "must be at least 1");
  for (const auto& [key, dst] : std::initializer_list<std::pair<const char*, std::string*>>{
           {"output_dir", &c.output_dir}, {"cache_dir", &c.cache_dir}})
    if (j.contains(key)) {
      if (!j[key].is_string()) throw ConfigError(key, "expected a string");
      *dst = j[key].get<std::string>();
    }
  for (const char* key : {"initial", "envelope", "layers", "grid", "compare", "basis", "resonance",
                          "forcing", "sources", "mean_limit", "direct"})
    if (j.contains(key)) require_object(j[key], key);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& p,
                                        const std::string& subcommand) {
  std::ifstream f(p);
  if (!f) throw ConfigError("", "cannot open config file " + p.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
  return parse(j, subcommand);
}

const nlohmann::json& ExperimentConfig::block(const std::string& key, bool required) const {
  static const nlohmann::json empty = nlohmann::json::object();
  if (doc.contains(key)) return doc.at(key);
  if (required) throw ConfigError(key, "missing required field");
  return empty;
}

PhasePoint ExperimentConfig::phase_point() const {
  if (phases) return *phases;
  std::mt19937_64 rng(stream_seed(seed, SeedStream::Phases));
  return wind.sample_phases(rng);
}

}  // namespace rotwind
