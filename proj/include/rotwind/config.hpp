#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "rotwind/boundary_layers.hpp"
#include "rotwind/direct_sim.hpp"
#include "rotwind/envelope.hpp"
#include "rotwind/forcing.hpp"
#include "rotwind/spectral_field.hpp"

namespace rotwind {

// Seed streams fanned out from the master seed with derive_seed(master, stream, index).
enum class SeedStream : std::uint64_t {
  InitialData = 1,
  Phases = 2,
  MonteCarlo = 3,
  Diagnostics = 4,
};

std::uint64_t stream_seed(std::uint64_t master, SeedStream s, std::uint64_t index = 0);

TorusGeometry parse_geometry(const nlohmann::json& j, const std::string& path = "geometry");
LayerParams parse_layer_params(const nlohmann::json& j, const std::string& path = "layers");
nlohmann::json layer_params_to_json(const LayerParams& p);

/// Initial data presets:
///   {"kind": "zero"}
///   {"kind": "single_mode", "k": [k1,k2,k3], "amplitude": a}   real field, c_k = a
///   {"kind": "random", "decay": 2.0, "amplitude": 1.0}         low-pass random real field
///   {"kind": "shear", "k2": 1, "amplitude": a}                 2D shear on mode (0, k2, 0)
///   {"kind": "field", "entries": [[k1,k2,k3,re,im], ...]}
SpectralField build_initial(const nlohmann::json& j, const TorusGeometry& g, int truncation,
                            std::uint64_t seed, const std::string& path = "initial");

/// One JSON document for all subcommands; unknown top-level keys are rejected.
struct ExperimentConfig {
  nlohmann::json doc;
  TorusGeometry geom;
  bool has_wind = false;
  WindStress wind;
  std::optional<PhasePoint> phases;  // explicit phase point, otherwise drawn from the seed
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir;  // empty when not set in the document
  std::string cache_dir;

  static ExperimentConfig parse(const nlohmann::json& j, const std::string& subcommand);
  static ExperimentConfig load(const std::filesystem::path& p, const std::string& subcommand);

  /// Block `key` or an empty object; `required` turns absence into a ConfigError.
  const nlohmann::json& block(const std::string& key, bool required = false) const;
  /// Phase point for the wind: explicit, or sampled from the Phases stream.
  PhasePoint phase_point() const;
};

}  // namespace rotwind
