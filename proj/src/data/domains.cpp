#include "citgan/data/domains.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "citgan/core/errors.hpp"

namespace citgan {

namespace fs = std::filesystem;

DomainRegistry::DomainRegistry(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw DataError("domain names must be nonempty");
    if (!seen.insert(n).second) throw DataError("duplicate domain name: " + n);
  }
}

const std::string& DomainRegistry::name(int index) const {
  CITGAN_REQUIRE(index >= 0 && index < count(), "domain index " + std::to_string(index) + " out of range");
  return names_[static_cast<std::size_t>(index)];
}

std::optional<int> DomainRegistry::find(const std::string& name) const {
  for (int i = 0; i < count(); ++i)
    if (names_[static_cast<std::size_t>(i)] == name) return i;
  return std::nullopt;
}

int DomainRegistry::index_of(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw DataError("unknown domain '" + name + "'");
}

std::vector<double> DomainRegistry::one_hot(int index) const {
  CITGAN_REQUIRE(index >= 0 && index < count(), "domain index " + std::to_string(index) + " out of range");
  std::vector<double> v(static_cast<std::size_t>(count()), 0.0);
  v[static_cast<std::size_t>(index)] = 1.0;
  return v;
}

std::string to_string(Split split) { return split == Split::Train ? "train" : "test"; }
std::string to_string(Provenance p) { return p == Provenance::Real ? "real" : "synthetic"; }

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "test") return Split::Test;
  throw DataError("unknown split '" + text + "' (expected train or test)");
}

Provenance parse_provenance(const std::string& text) {
  if (text == "real") return Provenance::Real;
  if (text == "synthetic") return Provenance::Synthetic;
  throw DataError("unknown provenance '" + text + "' (expected real or synthetic)");
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kHeader = "path,domain,split,pa_class";
constexpr const char* kHeaderWithProvenance = "path,domain,split,pa_class,provenance";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Reads the header, skipping leading comments. Returns the header line.
std::string read_header(std::istream& in, int& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (!line.empty() && line[0] == '#') continue;
    return line;
  }
  return {};
}

}  // namespace

Manifest load_manifest(const fs::path& path, const DomainRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw ConfigError("manifest not found or unreadable: " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  int line_no = 0;
  const std::string header = read_header(in, line_no);
  if (header == kHeaderWithProvenance) {
    m.has_provenance = true;
  } else if (header != kHeader) {
    throw DataError("manifest " + path.string() + ": header must be '" + kHeader + "', got '" + header + "'");
  }
  const std::size_t columns = m.has_provenance ? 5 : 4;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    ++row;
    const auto cells = split_csv(line);
    const std::string where = "manifest " + path.string() + " row " + std::to_string(row) + " (line " +
                              std::to_string(line_no) + ")";
    if (cells.size() != columns)
      throw DataError(where + ": expected " + std::to_string(columns) + " columns, got " + std::to_string(cells.size()));
    SampleDescriptor d;
    d.path = cells[0];
    if (d.path.empty()) throw DataError(where + ": empty path");
    auto domain = registry.find(cells[1]);
    if (!domain) throw DataError(where + ": unknown domain '" + cells[1] + "'");
    d.domain = *domain;
    try {
      d.split = parse_split(cells[2]);
      if (m.has_provenance) d.provenance = parse_provenance(cells[4]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    d.pa_class = cells[3];
    if (d.pa_class.empty()) throw DataError(where + ": empty pa_class");
    m.rows.push_back(std::move(d));
  }
  if (m.rows.empty()) spdlog::warn("manifest {} has no data rows", path.string());
  return m;
}

void write_manifest(const fs::path& path, const std::vector<SampleDescriptor>& rows, const DomainRegistry& registry,
                    bool with_provenance, const std::vector<std::string>& comments) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  for (const auto& c : comments) out << "# " << c << '\n';
  out << (with_provenance ? kHeaderWithProvenance : kHeader) << '\n';
  for (const auto& r : rows) {
    CITGAN_REQUIRE(r.path.find(',') == std::string::npos, "manifest paths may not contain commas: " + r.path);
    out << r.path << ',' << registry.name(r.domain) << ',' << to_string(r.split) << ',' << r.pa_class;
    if (with_provenance) out << ',' << to_string(r.provenance);
    out << '\n';
  }
  if (!out) throw Error("failed writing manifest " + path.string());
}

DomainRegistry registry_from_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("manifest not found or unreadable: " + path.string());
  int line_no = 0;
  const std::string header = read_header(in, line_no);
  if (header != kHeader && header != kHeaderWithProvenance)
    throw DataError("manifest " + path.string() + ": header must be '" + kHeader + "', got '" + header + "'");
  std::vector<std::string> names;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() >= 2 && !cells[1].empty() && seen.insert(cells[1]).second) names.push_back(cells[1]);
  }
  return DomainRegistry(std::move(names));
}

LoadedImages load_images(const Manifest& manifest, const ImageLoadOptions& options) {
  LoadedImages out;
  int row = 0;
  for (const auto& d : manifest.rows) {
    ++row;
    fs::path p(d.path);
    if (p.is_relative()) p = manifest.base_dir / p;
    auto img = read_image(p, options.channels, options.resolution, options.interpolation);
    if (!img) {
      out.failures.push_back({row, p.string(), "image could not be decoded"});
      spdlog::warn("skipping manifest row {}: cannot decode image {}", row, p.string());
      continue;
    }
    ImageSample s;
    s.pixels = std::move(*img);
    s.domain = d.domain;
    s.split = d.split;
    s.pa_class = d.pa_class;
    s.provenance = d.provenance;
    s.path = fs::absolute(p).lexically_normal().string();
    out.samples.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Image render_stripes(int resolution, int period, int phase, double contrast) {
  CITGAN_REQUIRE(period >= 1, "stripe period must be positive");
  Image img(resolution, resolution, 1);
  for (int y = 0; y < resolution; ++y) {
    const bool high = ((y + phase) / period) % 2 == 0;
    const double v = contrast * (high ? ToyLevels::kStripeHigh : ToyLevels::kStripeLow);
    for (int x = 0; x < resolution; ++x) img.at(y, x) = v;
  }
  return img;
}

Image render_checker(int resolution, int cell, int offset_x, int offset_y, double contrast) {
  CITGAN_REQUIRE(cell >= 1, "checker cell size must be positive");
  Image img(resolution, resolution, 1);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      const bool high = (((x + offset_x) / cell) + ((y + offset_y) / cell)) % 2 == 0;
      img.at(y, x) = contrast * (high ? ToyLevels::kCheckerHigh : ToyLevels::kCheckerLow);
    }
  return img;
}

Image render_blobs(int resolution, const std::vector<std::pair<double, double>>& centers, double contrast) {
  const double sigma = 2.0 * resolution / 32.0;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Image img(resolution, resolution, 1);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      double v = 0.0;
      for (const auto& [cx, cy] : centers) v += std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) * inv);
      img.at(y, x) = contrast * std::min(v, 1.0);
    }
  return img;
}

namespace {

Image render_smooth(int resolution, std::mt19937_64& rng, double contrast) {
  std::uniform_real_distribution<double> freq(0.4, 1.4), angle(0.0, 2.0 * std::numbers::pi);
  const double fx1 = freq(rng), fy1 = freq(rng), p1 = angle(rng);
  const double fx2 = freq(rng), fy2 = freq(rng), p2 = angle(rng);
  const double w = 2.0 * std::numbers::pi / resolution;
  Image img(resolution, resolution, 1);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      const double v = 0.5 + 0.15 * std::sin(w * (fx1 * x + fy1 * y) + p1) + 0.15 * std::sin(w * (fx2 * x - fy2 * y) + p2);
      img.at(y, x) = contrast * v;
    }
  return img;
}

Image render_random(ToyPattern pattern, int resolution, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size_pick(3, 5);
  std::uniform_real_distribution<double> contrast_dist(0.6, 1.0);
  switch (pattern) {
    case ToyPattern::Stripes: {
      const int period = size_pick(rng);
      const int phase = std::uniform_int_distribution<int>(0, 2 * period - 1)(rng);
      return render_stripes(resolution, period, phase, contrast_dist(rng));
    }
    case ToyPattern::Checker: {
      const int cell = size_pick(rng);
      std::uniform_int_distribution<int> off(0, 2 * cell - 1);
      const int ox = off(rng), oy = off(rng);
      return render_checker(resolution, cell, ox, oy, contrast_dist(rng));
    }
    case ToyPattern::Blobs: {
      const int n = std::uniform_int_distribution<int>(2, 5)(rng);
      std::uniform_real_distribution<double> pos(0.0, resolution - 1.0);
      std::vector<std::pair<double, double>> centers;
      for (int i = 0; i < n; ++i) {
        const double cx = pos(rng), cy = pos(rng);
        centers.emplace_back(cx, cy);
      }
      return render_blobs(resolution, centers, contrast_dist(rng));
    }
    case ToyPattern::Smooth: {
      const double c = contrast_dist(rng);
      return render_smooth(resolution, rng, c);
    }
  }
  throw ContractViolation("unknown toy pattern");
}

}  // namespace

std::vector<ImageSample> generate_toy_set(std::uint64_t seed, const std::vector<ToyDomainSpec>& specs, int resolution,
                                          Split split) {
  CITGAN_REQUIRE(resolution >= 16, "toy resolution must be at least 16, got " + std::to_string(resolution));
  std::vector<ImageSample> out;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    CITGAN_REQUIRE(specs[k].count >= 0, "toy domain count must be non-negative");
    for (int i = 0; i < specs[k].count; ++i) {
      std::mt19937_64 rng(mix_seed(mix_seed(seed, k), static_cast<std::uint64_t>(i)));
      ImageSample s;
      s.pixels = render_random(specs[k].pattern, resolution, rng);
      s.domain = static_cast<int>(k);
      s.split = split;
      s.pa_class = specs[k].pa_class;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<ToyDomainSpec> standard_toy_specs(int per_domain) {
  return {{"stripes", ToyPattern::Stripes, "print", per_domain},
          {"checker", ToyPattern::Checker, "contact", per_domain},
          {"blobs", ToyPattern::Blobs, "artificial", per_domain}};
}

DomainRegistry standard_toy_registry() { return DomainRegistry({"stripes", "checker", "blobs"}); }

std::vector<ImageSample> generate_toy_domains(std::uint64_t seed, int per_domain, int resolution) {
  CITGAN_REQUIRE(per_domain >= 1, "per_domain must be at least 1");
  return generate_toy_set(seed, standard_toy_specs(per_domain), resolution);
}

std::vector<ToyDomainSpec> toy_pad_specs(int bonafide, int stripes, int checker, int blobs) {
  return {{"bonafide", ToyPattern::Smooth, kBonafide, bonafide},
          {"stripes", ToyPattern::Stripes, "print", stripes},
          {"checker", ToyPattern::Checker, "contact", checker},
          {"blobs", ToyPattern::Blobs, "artificial", blobs}};
}

DomainRegistry toy_pad_registry() { return DomainRegistry({"bonafide", "stripes", "checker", "blobs"}); }

}  // namespace citgan
