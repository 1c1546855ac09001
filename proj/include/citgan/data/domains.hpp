#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "citgan/data/image.hpp"

namespace citgan {

/// Ordered set of domain names; a domain's index is its label.
class DomainRegistry {
 public:
  DomainRegistry() = default;
  explicit DomainRegistry(std::vector<std::string> names);

  int count() const noexcept { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(int index) const;
  std::optional<int> find(const std::string& name) const;
  /// Throws DataError for an unregistered name.
  int index_of(const std::string& name) const;
  std::vector<double> one_hot(int index) const;

  bool operator==(const DomainRegistry&) const = default;

 private:
  std::vector<std::string> names_;
};

enum class Split { Train, Test };
enum class Provenance { Real, Synthetic };

std::string to_string(Split split);
std::string to_string(Provenance provenance);
Split parse_split(const std::string& text);
Provenance parse_provenance(const std::string& text);

inline const std::string kBonafide = "bonafide";

/// One manifest row before its pixels are decoded.
struct SampleDescriptor {
  std::string path;
  int domain = 0;
  Split split = Split::Train;
  std::string pa_class;
  Provenance provenance = Provenance::Real;

  bool operator==(const SampleDescriptor&) const = default;
};

struct ImageSample {
  Image pixels;
  int domain = 0;
  Split split = Split::Train;
  std::string pa_class;
  Provenance provenance = Provenance::Real;
  std::string path;  // empty for in-memory samples

  bool is_bonafide() const { return pa_class == kBonafide; }
};

struct Manifest {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::vector<SampleDescriptor> rows;
  bool has_provenance = false;
};

/// Reads a `path,domain,split,pa_class[,provenance]` CSV. Lines starting with
/// '#' before the header are comments. Row numbers in errors count data rows
/// from 1.
Manifest load_manifest(const std::filesystem::path& path, const DomainRegistry& registry);

/// Writes rows in the same schema. The provenance column is emitted when
/// `with_provenance` is set; `comments` become leading '#' lines.
void write_manifest(const std::filesystem::path& path, const std::vector<SampleDescriptor>& rows,
                    const DomainRegistry& registry, bool with_provenance = false,
                    const std::vector<std::string>& comments = {});

/// Domain names in order of first appearance in a manifest file.
DomainRegistry registry_from_manifest(const std::filesystem::path& path);

struct ImageLoadOptions {
  int resolution = 32;
  int channels = 1;
  Interpolation interpolation = Interpolation::Bilinear;
};

struct RowFailure {
  int row = 0;
  std::string path;
  std::string reason;
};

struct LoadedImages {
  std::vector<ImageSample> samples;
  std::vector<RowFailure> failures;
};

/// Decodes every row; rows whose image cannot be read are skipped and
/// reported in `failures` (each is also logged as a warning).
LoadedImages load_images(const Manifest& manifest, const ImageLoadOptions& options);

// ---------------------------------------------------------------------------
// Procedural toy domains

enum class ToyPattern { Stripes, Checker, Blobs, Smooth };

struct ToyDomainSpec {
  std::string name;
  ToyPattern pattern = ToyPattern::Stripes;
  std::string pa_class;
  int count = 0;
};

/// Horizontal stripes of `period` rows, alternating high/low starting at row
/// -phase, scaled by contrast.
Image render_stripes(int resolution, int period, int phase, double contrast);
/// Checkerboard of `cell`-pixel squares shifted by (offset_x, offset_y).
Image render_checker(int resolution, int cell, int offset_x, int offset_y, double contrast);
/// Sum of isotropic Gaussian bumps (clipped to 1) at the given centers.
Image render_blobs(int resolution, const std::vector<std::pair<double, double>>& centers, double contrast);

/// Intensity levels of the toy patterns.
struct ToyLevels {
  static constexpr double kStripeHigh = 1.0;
  static constexpr double kStripeLow = 0.6;
  static constexpr double kCheckerHigh = 0.6;
  static constexpr double kCheckerLow = 0.08;
};

/// Renders `spec.count` images of each domain. Image i of domain k depends
/// only on (seed, k, i), so outputs are reproducible and independent of the
/// other domains' counts. Domain indices follow the order of `specs`.
std::vector<ImageSample> generate_toy_set(std::uint64_t seed, const std::vector<ToyDomainSpec>& specs,
                                          int resolution, Split split = Split::Train);

/// The three standard toy domains: stripes, checker, blobs.
std::vector<ToyDomainSpec> standard_toy_specs(int per_domain);
DomainRegistry standard_toy_registry();
std::vector<ImageSample> generate_toy_domains(std::uint64_t seed, int per_domain, int resolution);

/// Bonafide (smooth texture) plus the three standard domains as PA classes.
std::vector<ToyDomainSpec> toy_pad_specs(int bonafide, int stripes, int checker, int blobs);
DomainRegistry toy_pad_registry();

/// Stateless 64-bit mixer used to derive per-item seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace citgan
