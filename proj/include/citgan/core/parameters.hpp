#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "citgan/core/autograd.hpp"

namespace citgan {

/// Ordered collection of named trainable leaves.
///
/// Entries are shared graph nodes, so copying would alias weights; the type is
/// move-only and `clone()` makes an independent deep copy.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  Var& add(const std::string& name, Tensor init);
  const Var& get(const std::string& name) const;
  Var& get(const std::string& name);
  bool contains(const std::string& name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::pair<std::string, Var>>& entries() const noexcept { return entries_; }
  std::vector<std::pair<std::string, Var>>& entries() noexcept { return entries_; }

  void zero_grad();
  void set_requires_grad(bool on);
  ParameterSet clone() const;

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

/// He-style normal init with std sqrt(gain / fan_in).
Tensor fan_in_normal(std::vector<int> shape, int fan_in, double gain, std::mt19937_64& rng);

}  // namespace citgan
