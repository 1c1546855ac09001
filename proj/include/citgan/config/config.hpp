#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "citgan/classifier.hpp"
#include "citgan/data/domains.hpp"
#include "citgan/trainer.hpp"

namespace citgan {

struct DataSection {
  std::filesystem::path manifest;  // relative paths resolve against the config file
  ImageLoadOptions load;
};

struct FidSection {
  int bootstrap = 20;
  int subset = 50;
};

struct PadSection {
  std::filesystem::path checkpoint;  // GAN checkpoint for experiments 2-4
  int exp4_target = 0;               // 0: largest PA domain count
  ClassifierConfig classifier;
};

/// Everything the CLI reads from a config file. Seeds of all components
/// derive from `seed`.
struct AppConfig {
  std::uint64_t seed = 0;
  DataSection data;
  TrainConfig train;
  ClassifierConfig extractor;
  FidSection fid;
  PadSection pad;

  /// Copies shared fields (seed, resolution, channels) into the component
  /// configs. Called by the parser; call again after editing by hand.
  void sync();
};

/// Parses flat `key = value` text with `[section]` headers. '#' and ';'
/// start comment lines. Unknown keys, duplicates, keys outside a section and
/// malformed values throw ConfigError naming the key and line number.
AppConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

/// Applies CITGAN_SEED from the environment when set. Returns true if it did.
bool apply_seed_override(AppConfig& config);

/// Canonical text of every key, in section order. Parsing it back gives the
/// same config; `format_config(AppConfig{})` is the defaults listing.
std::string format_config(const AppConfig& config);

/// Hash of the canonical text.
std::string config_hash(const AppConfig& config);

}  // namespace citgan
