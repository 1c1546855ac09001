#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "citgan/core/adam.hpp"
#include "citgan/data/domains.hpp"
#include "citgan/networks.hpp"

namespace citgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned container of string metadata and named tensors.
///
/// Layout: magic "CITGANCK", u32 format version, u64 payload size, payload,
/// u64 FNV-1a checksum of the payload. Doubles are stored bit-exactly.
struct CheckpointData {
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const std::string& meta(const std::string& key) const;
  const Tensor& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointData& data);
/// Throws CheckpointError naming both versions when the file's format version
/// differs from kCheckpointVersion, or when the file is truncated/corrupt.
CheckpointData read_checkpoint_file(const std::filesystem::path& path);

void put_params(CheckpointData& data, const std::string& prefix, const ParameterSet& params);
ParameterSet take_params(const CheckpointData& data, const std::string& prefix);
void put_network_config(CheckpointData& data, const NetworkConfig& config);
NetworkConfig take_network_config(const CheckpointData& data);
void put_optimizer(CheckpointData& data, const std::string& prefix, const Adam& opt);
Adam take_optimizer(const CheckpointData& data, const std::string& prefix, const ParameterSet& params);

/// Everything the trainer needs to continue a run bit-identically.
struct TrainState {
  CitGanModel model;
  DomainRegistry registry;
  Adam opt_generator;
  Adam opt_styling;
  Adam opt_discriminator;
  long step = 0;
  std::mt19937_64 rng;

  TrainState(CitGanModel m, DomainRegistry reg, AdamConfig gs, AdamConfig d, std::uint64_t data_seed);
  TrainState(CitGanModel m, DomainRegistry reg, Adam g, Adam s, Adam d, long step, std::mt19937_64 rng);
};

/// Writes the three networks, optimizer moments, step counter, RNG state and
/// `config_hash` (plus any extra metadata).
void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const std::string& config_hash,
                     const std::map<std::string, std::string>& extra = {});
TrainState load_checkpoint(const std::filesystem::path& path, std::string* config_hash = nullptr);
/// Networks and registry only, for translation.
struct LoadedModel {
  CitGanModel model;
  DomainRegistry registry;
};
LoadedModel load_model(const std::filesystem::path& path);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::uint64_t fnv1a64(const void* bytes, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace citgan
