#include "citgan/config/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "citgan/core/errors.hpp"

namespace citgan {

namespace fs = std::filesystem;

namespace {

struct Entry {
  std::string section;
  std::string key;
  std::function<std::string(const AppConfig&)> get;
  std::function<void(AppConfig&, const std::string&, const fs::path&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("not a number: '" + v + "'");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

template <typename T>
Entry number(std::string section, std::string key, std::function<T&(AppConfig&)> ref) {
  Entry e;
  e.section = std::move(section);
  e.key = std::move(key);
  if constexpr (std::is_floating_point_v<T>) {
    e.get = [ref](const AppConfig& c) { return format_double(ref(const_cast<AppConfig&>(c))); };
    e.set = [ref](AppConfig& c, const std::string& v, const fs::path&) {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("not a number: '" + v + "'");
      ref(c) = d;
    };
  } else {
    e.get = [ref](const AppConfig& c) { return std::to_string(ref(const_cast<AppConfig&>(c))); };
    e.set = [ref](AppConfig& c, const std::string& v, const fs::path&) { ref(c) = parse_number<T>(v); };
  }
  return e;
}

Entry path_entry(std::string section, std::string key, std::function<fs::path&(AppConfig&)> ref) {
  return {std::move(section), std::move(key),
          [ref](const AppConfig& c) { return ref(const_cast<AppConfig&>(c)).string(); },
          [ref](AppConfig& c, const std::string& v, const fs::path& base) {
            fs::path p(v);
            ref(c) = (p.empty() || p.is_absolute() || base.empty()) ? p : (base / p).lexically_normal();
          }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back(number<std::uint64_t>("run", "seed", [](AppConfig& c) -> std::uint64_t& { return c.seed; }));

    t.push_back(path_entry("data", "manifest", [](AppConfig& c) -> fs::path& { return c.data.manifest; }));
    t.push_back(number<int>("data", "resolution", [](AppConfig& c) -> int& { return c.data.load.resolution; }));
    t.push_back(number<int>("data", "channels", [](AppConfig& c) -> int& { return c.data.load.channels; }));
    t.push_back({"data", "interpolation",
                 [](const AppConfig& c) { return to_string(c.data.load.interpolation); },
                 [](AppConfig& c, const std::string& v, const fs::path&) {
                   c.data.load.interpolation = parse_interpolation(v);
                 }});

    t.push_back(number<int>("network", "style_dim", [](AppConfig& c) -> int& { return c.train.network.style_dim; }));
    t.push_back(number<int>("network", "base_width", [](AppConfig& c) -> int& { return c.train.network.base_width; }));
    t.push_back(number<int>("network", "max_width", [](AppConfig& c) -> int& { return c.train.network.max_width; }));
    t.push_back(number<int>("network", "generator_blocks",
                            [](AppConfig& c) -> int& { return c.train.network.generator_blocks; }));
    t.push_back(number<int>("network", "trunk_blocks", [](AppConfig& c) -> int& { return c.train.network.trunk_blocks; }));
    t.push_back(
        number<double>("network", "leaky_slope", [](AppConfig& c) -> double& { return c.train.network.leaky_slope; }));

    t.push_back(number<long>("train", "steps", [](AppConfig& c) -> long& { return c.train.steps; }));
    t.push_back(number<int>("train", "batch_size", [](AppConfig& c) -> int& { return c.train.batch_size; }));
    t.push_back(number<double>("train", "lr_gs", [](AppConfig& c) -> double& { return c.train.lr_gs; }));
    t.push_back(number<double>("train", "lr_d", [](AppConfig& c) -> double& { return c.train.lr_d; }));
    t.push_back(number<double>("train", "beta1", [](AppConfig& c) -> double& { return c.train.beta1; }));
    t.push_back(number<double>("train", "beta2", [](AppConfig& c) -> double& { return c.train.beta2; }));
    t.push_back(number<long>("train", "checkpoint_interval",
                             [](AppConfig& c) -> long& { return c.train.checkpoint_interval; }));
    t.push_back(number<long>("train", "log_interval", [](AppConfig& c) -> long& { return c.train.log_interval; }));

    t.push_back(
        number<double>("losses", "lambda_style", [](AppConfig& c) -> double& { return c.train.weights.lambda_style; }));
    t.push_back(
        number<double>("losses", "lambda_cls", [](AppConfig& c) -> double& { return c.train.weights.lambda_cls; }));
    t.push_back(
        number<double>("losses", "lambda_cycle", [](AppConfig& c) -> double& { return c.train.weights.lambda_cycle; }));
    t.push_back({"losses", "norm", [](const AppConfig& c) { return to_string(c.train.norm); },
                 [](AppConfig& c, const std::string& v, const fs::path&) { c.train.norm = parse_norm(v); }});

    t.push_back(number<long>("extractor", "steps", [](AppConfig& c) -> long& { return c.extractor.steps; }));
    t.push_back(number<int>("extractor", "batch_size", [](AppConfig& c) -> int& { return c.extractor.batch_size; }));
    t.push_back(number<double>("extractor", "lr", [](AppConfig& c) -> double& { return c.extractor.lr; }));

    t.push_back(number<int>("fid", "bootstrap", [](AppConfig& c) -> int& { return c.fid.bootstrap; }));
    t.push_back(number<int>("fid", "subset", [](AppConfig& c) -> int& { return c.fid.subset; }));

    t.push_back(path_entry("pad", "checkpoint", [](AppConfig& c) -> fs::path& { return c.pad.checkpoint; }));
    t.push_back(number<int>("pad", "exp4_target", [](AppConfig& c) -> int& { return c.pad.exp4_target; }));
    t.push_back(number<long>("pad", "steps", [](AppConfig& c) -> long& { return c.pad.classifier.steps; }));
    t.push_back(number<int>("pad", "batch_size", [](AppConfig& c) -> int& { return c.pad.classifier.batch_size; }));
    t.push_back(number<double>("pad", "lr", [](AppConfig& c) -> double& { return c.pad.classifier.lr; }));
    return t;
  }();
  return table;
}

}  // namespace

void AppConfig::sync() {
  train.seed = seed;
  train.network.resolution = data.load.resolution;
  train.network.channels = data.load.channels;
  extractor.seed = mix_seed(seed, 21);
  extractor.network = train.network;
  pad.classifier.seed = mix_seed(seed, 22);
  pad.classifier.network = train.network;
}

AppConfig parse_config(const std::string& text, const fs::path& base_dir) {
  std::map<std::string, const Entry*> by_name;
  for (const auto& e : entries()) by_name[e.section + "." + e.key] = &e;

  AppConfig config;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = " at line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header '" + line + "'" + where);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + line + "'" + where);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = by_name.find(full);
    if (it == by_name.end()) throw ConfigError("unknown config key '" + full + "'" + where);
    if (!seen.insert(full).second) throw ConfigError("duplicate config key '" + full + "'" + where);
    try {
      it->second->set(config, value, base_dir);
    } catch (const std::exception& e) {
      throw ConfigError("invalid value for '" + full + "'" + where + ": " + e.what());
    }
  }
  config.sync();
  config.train.validate();
  if (config.fid.bootstrap < 1) throw ConfigError("fid.bootstrap must be positive");
  if (config.fid.subset < 2) throw ConfigError("fid.subset must be at least 2");
  if (config.pad.exp4_target < 0) throw ConfigError("pad.exp4_target must be >= 0");
  if (config.pad.classifier.steps < 0 || config.extractor.steps < 0) throw ConfigError("classifier steps must be >= 0");
  return config;
}

AppConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::absolute(path).parent_path());
}

bool apply_seed_override(AppConfig& config) {
  const char* env = std::getenv("CITGAN_SEED");
  if (env == nullptr || *env == '\0') return false;
  try {
    config.seed = parse_number<std::uint64_t>(trim(env));
  } catch (const std::exception&) {
    throw ConfigError(std::string("CITGAN_SEED is not an unsigned integer: '") + env + "'");
  }
  config.sync();
  return true;
}

std::string format_config(const AppConfig& config) {
  std::string out, section;
  for (const auto& e : entries()) {
    if (e.section != section) {
      if (!section.empty()) out += '\n';
      section = e.section;
      out += "[" + section + "]\n";
    }
    out += e.key + " = " + e.get(config) + "\n";
  }
  return out;
}

std::string config_hash(const AppConfig& config) {
  const std::string text = format_config(config);
  return hex64(fnv1a64(text.data(), text.size()));
}

}  // namespace citgan
