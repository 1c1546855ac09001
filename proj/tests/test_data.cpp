#include <doctest.h>

#include <fstream>
#include <map>

#include "citgan/core/errors.hpp"
#include "citgan/data/domains.hpp"
#include "support/log_capture.hpp"
#include "support/tempdir.hpp"

using namespace citgan;
using citgan::testing::LogCapture;
using citgan::testing::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

Image flat_image(int res, double v) { return Image(res, res, 1, v); }

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("registry invariants") {
    DomainRegistry reg({"a", "b", "c"});
    CHECK(reg.count() == 3);
    CHECK(reg.index_of("c") == 2);
    CHECK_FALSE(reg.find("zzz").has_value());
    CHECK_THROWS_AS(reg.index_of("zzz"), DataError);
    for (int i = 0; i < 3; ++i) {
      const auto v = reg.one_hot(i);
      int ones = 0;
      for (int k = 0; k < 3; ++k) ones += v[static_cast<std::size_t>(k)] == 1.0;
      CHECK(ones == 1);
      CHECK(v[static_cast<std::size_t>(i)] == 1.0);
    }
    CHECK_THROWS(DomainRegistry({"a", "a"}));
    CHECK_THROWS(DomainRegistry({"a", ""}));
  }

  TEST_CASE("4-row manifest over 2 domains") {
    TempDir dir("manifest");
    write_text(dir / "m.csv",
               "path,domain,split,pa_class\n"
               "a0.png,A,train,bonafide\n"
               "b0.png,B,train,print\n"
               "a1.png,A,test,bonafide\n"
               "b1.png,B,test,print\n");
    const Manifest m = load_manifest(dir / "m.csv", DomainRegistry({"A", "B"}));
    REQUIRE(m.rows.size() == 4);
    CHECK(m.rows[0].domain == 0);
    CHECK(m.rows[1].domain == 1);
    CHECK(m.rows[2].domain == 0);
    CHECK(m.rows[3].domain == 1);
    CHECK(m.rows[2].split == Split::Test);
    CHECK(m.rows[1].pa_class == "print");
  }

  TEST_CASE("header-only manifest gives no rows and a warning") {
    TempDir dir("manifest");
    write_text(dir / "m.csv", "path,domain,split,pa_class\n");
    LogCapture log;
    const Manifest m = load_manifest(dir / "m.csv", DomainRegistry({"A"}));
    CHECK(m.rows.empty());
    CHECK(log.text().find("warn") != std::string::npos);
  }

  TEST_CASE("unknown domain names the row") {
    TempDir dir("manifest");
    write_text(dir / "m.csv",
               "path,domain,split,pa_class\n"
               "a.png,A,train,x\n"
               "b.png,A,train,x\n"
               "c.png,unknown,train,x\n");
    try {
      load_manifest(dir / "m.csv", DomainRegistry({"A"}));
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
      CHECK(std::string(e.what()).find("unknown") != std::string::npos);
    }
  }

  TEST_CASE("missing manifest and bad header") {
    TempDir dir("manifest");
    CHECK_THROWS_AS(load_manifest(dir / "nope.csv", DomainRegistry({"A"})), ConfigError);
    write_text(dir / "bad.csv", "path,domain,split\n");
    CHECK_THROWS_AS(load_manifest(dir / "bad.csv", DomainRegistry({"A"})), DataError);
  }

  TEST_CASE("write then load round-trips field by field") {
    TempDir dir("manifest");
    const DomainRegistry reg({"x", "y"});
    const std::vector<SampleDescriptor> rows{{"p/1.png", 0, Split::Train, "bonafide", Provenance::Real},
                                             {"p/2.png", 1, Split::Test, "print", Provenance::Synthetic},
                                             {"p/3.png", 1, Split::Train, "print", Provenance::Real}};
    write_manifest(dir / "m.csv", rows, reg, true, {"a comment"});
    const Manifest m = load_manifest(dir / "m.csv", reg);
    CHECK(m.has_provenance);
    CHECK(m.rows == rows);

    write_manifest(dir / "plain.csv", rows, reg, false);
    const Manifest p = load_manifest(dir / "plain.csv", reg);
    CHECK_FALSE(p.has_provenance);
    REQUIRE(p.rows.size() == 3);
    CHECK(p.rows[1].provenance == Provenance::Real);
    CHECK(registry_from_manifest(dir / "m.csv") == reg);
  }

  TEST_CASE("unreadable image is skipped and reported with its path") {
    TempDir dir("images");
    write_png(dir / "good.png", flat_image(64, 0.5));
    write_text(dir / "broken.png", "not a png");
    write_text(dir / "m.csv",
               "path,domain,split,pa_class\n"
               "good.png,A,train,x\n"
               "broken.png,A,train,x\n"
               "missing.png,A,train,x\n");
    LogCapture log;
    const auto loaded = load_images(load_manifest(dir / "m.csv", DomainRegistry({"A"})), ImageLoadOptions{});
    REQUIRE(loaded.samples.size() == 1);
    CHECK(loaded.samples[0].pixels.height == 32);
    CHECK(loaded.samples[0].pixels.pixels[0] == doctest::Approx(0.5).epsilon(0.01));
    REQUIRE(loaded.failures.size() == 2);
    CHECK(loaded.failures[0].path.find("broken.png") != std::string::npos);
    CHECK(loaded.failures[1].path.find("missing.png") != std::string::npos);
    CHECK(log.text().find("broken.png") != std::string::npos);
  }

  TEST_CASE("toy domains: counts, range and determinism") {
    const auto a = generate_toy_domains(0, 10, 32);
    REQUIRE(a.size() == 30);
    std::map<int, int> per;
    for (const auto& s : a) {
      per[s.domain]++;
      CHECK(s.pixels.height == 32);
      for (double v : s.pixels.pixels) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
    CHECK(per == std::map<int, int>{{0, 10}, {1, 10}, {2, 10}});
    const auto b = generate_toy_domains(0, 10, 32);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].pixels.pixels == b[i].pixels.pixels);
    const auto c = generate_toy_domains(1, 10, 32);
    CHECK(a[0].pixels.pixels != c[0].pixels.pixels);
    CHECK_THROWS_AS(generate_toy_domains(0, 0, 32), ContractViolation);
    CHECK_THROWS_AS(generate_toy_domains(0, 10, 8), ContractViolation);
  }

  TEST_CASE("stripes with period 4 and phase 0 alternate in blocks of 4 rows") {
    const double contrast = 0.8;
    const Image img = render_stripes(32, 4, 0, contrast);
    for (int y = 0; y < 32; ++y) {
      const bool high = (y / 4) % 2 == 0;
      const double expected = contrast * (high ? ToyLevels::kStripeHigh : ToyLevels::kStripeLow);
      for (int x = 0; x < 32; ++x) CHECK(img.pixels[static_cast<std::size_t>(y * 32 + x)] == expected);
    }
  }

  TEST_CASE("nearest-centroid on raw pixels separates the toy domains") {
    const auto train = generate_toy_domains(0, 100, 32);
    const auto test = generate_toy_domains(1, 100, 32);
    const std::size_t dim = 32 * 32;
    std::vector<std::vector<double>> centroid(3, std::vector<double>(dim, 0.0));
    std::vector<int> count(3, 0);
    for (const auto& s : train) {
      count[static_cast<std::size_t>(s.domain)]++;
      for (std::size_t i = 0; i < dim; ++i) centroid[static_cast<std::size_t>(s.domain)][i] += s.pixels.pixels[i];
    }
    for (int d = 0; d < 3; ++d)
      for (auto& v : centroid[static_cast<std::size_t>(d)]) v /= count[static_cast<std::size_t>(d)];
    int correct = 0;
    for (const auto& s : test) {
      int best = -1;
      double best_dist = 1e300;
      for (int d = 0; d < 3; ++d) {
        double dist = 0;
        for (std::size_t i = 0; i < dim; ++i) {
          const double e = s.pixels.pixels[i] - centroid[static_cast<std::size_t>(d)][i];
          dist += e * e;
        }
        if (dist < best_dist) best_dist = dist, best = d;
      }
      correct += best == s.domain;
    }
    const double acc = correct / static_cast<double>(test.size());
    MESSAGE("nearest-centroid accuracy " << acc);
    CHECK(acc >= 0.95);
  }

  TEST_CASE("network batch conversion maps [0,1] to [-1,1] and back") {
    const Image a = flat_image(4, 0.25), b = flat_image(4, 1.0);
    const Tensor t = to_network_batch({&a, &b});
    CHECK(t.shape() == std::vector<int>{2, 1, 4, 4});
    CHECK(t[0] == doctest::Approx(-0.5));
    CHECK(t[16] == doctest::Approx(1.0));
    CHECK(from_network_batch(t, 0).pixels[3] == doctest::Approx(0.25));
    CHECK(from_network_batch(t, 1).pixels[3] == doctest::Approx(1.0));
  }

  TEST_CASE("PAD toy registry marks bonafide") {
    const auto set = generate_toy_set(3, toy_pad_specs(4, 3, 2, 1), 32);
    CHECK(set.size() == 10);
    CHECK(set[0].is_bonafide());
    CHECK_FALSE(set[4].is_bonafide());
    CHECK(toy_pad_registry().name(0) == kBonafide);
  }
}
