#include "citgan/core/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "citgan/core/errors.hpp"

namespace citgan {

Var& ParameterSet::add(const std::string& name, Tensor init) {
  CITGAN_REQUIRE(!contains(name), "duplicate parameter name: " + name);
  entries_.emplace_back(name, Var::leaf(std::move(init), true));
  return entries_.back().second;
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

const Var& ParameterSet::get(const std::string& name) const {
  for (const auto& [key, var] : entries_)
    if (key == name) return var;
  throw ContractViolation("unknown parameter: " + name);
}

Var& ParameterSet::get(const std::string& name) {
  return const_cast<Var&>(static_cast<const ParameterSet&>(*this).get(name));
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.value().size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

void ParameterSet::set_requires_grad(bool on) {
  for (auto& e : entries_) e.second.set_requires_grad(on);
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& [name, var] : entries_) {
    Var& v = out.add(name, var.value());
    v.set_requires_grad(var.requires_grad());
  }
  return out;
}

Tensor fan_in_normal(std::vector<int> shape, int fan_in, double gain, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std::sqrt(gain / static_cast<double>(fan_in)));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace citgan
