#include "citgan/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "citgan/core/errors.hpp"

namespace citgan {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'C', 'I', 'T', 'G', 'A', 'N', 'C', 'K'};

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size, std::string source) : p_(data), end_(data + size), src_(std::move(source)) {}
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(p_, p_ + n);
    p_ += n;
    return s;
  }
  void raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, p_, n);
    p_ += n;
  }
  bool done() const { return p_ == end_; }

 private:
  void need(std::uint64_t n) const {
    if (static_cast<std::uint64_t>(end_ - p_) < n) throw CheckpointError("checkpoint " + src_ + " is truncated");
  }
  const char* p_;
  const char* end_;
  std::string src_;
};

}  // namespace

std::uint64_t fnv1a64(const void* bytes, std::size_t size, std::uint64_t seed) {
  std::uint64_t h = seed;
  const auto* b = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

const std::string& CheckpointData::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw CheckpointError("checkpoint is missing metadata key '" + key + "'");
  return it->second;
}

const Tensor& CheckpointData::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw CheckpointError("checkpoint is missing tensor '" + name + "'");
}

bool CheckpointData::has_tensor(const std::string& name) const {
  for (const auto& e : tensors)
    if (e.first == name) return true;
  return false;
}

void write_checkpoint_file(const fs::path& path, const CheckpointData& data) {
  Writer payload;
  payload.u64(data.metadata.size());
  for (const auto& [k, v] : data.metadata) {
    payload.str(k);
    payload.str(v);
  }
  payload.u64(data.tensors.size());
  for (const auto& [name, t] : data.tensors) {
    payload.str(name);
    payload.u32(static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) payload.u64(static_cast<std::uint64_t>(d));
    payload.raw(t.data(), t.size() * sizeof(double));
  }
  const auto& bytes = payload.bytes();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t size = bytes.size();
    const std::uint64_t sum = fnv1a64(bytes.data(), bytes.size());
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&size), sizeof size);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.write(reinterpret_cast<const char*>(&sum), sizeof sum);
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
  }
  fs::rename(tmp, path);
}

CheckpointData read_checkpoint_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<char> file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string src = path.string();
  Reader head(file.data(), file.size(), src);
  char magic[8];
  head.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw CheckpointError(src + " is not a checkpoint file");
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint " + src + " has format version " + std::to_string(version) +
                          ", this build reads version " + std::to_string(kCheckpointVersion));
  const std::uint64_t size = head.u64();
  const std::size_t offset = sizeof magic + sizeof version + sizeof size;
  if (file.size() < offset + size + sizeof(std::uint64_t)) throw CheckpointError("checkpoint " + src + " is truncated");
  std::uint64_t stored;
  std::memcpy(&stored, file.data() + offset + size, sizeof stored);
  if (stored != fnv1a64(file.data() + offset, size))
    throw CheckpointError("checkpoint " + src + " is corrupt (checksum mismatch)");

  Reader r(file.data() + offset, size, src);
  CheckpointData data;
  const std::uint64_t n_meta = r.u64();
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    data.metadata[k] = r.str();
  }
  const std::uint64_t n_tensors = r.u64();
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw CheckpointError("checkpoint " + src + " has a tensor with invalid rank");
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(r.u64()));
    Tensor t(shape);
    r.raw(t.data(), t.size() * sizeof(double));
    data.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw CheckpointError("checkpoint " + src + " has trailing bytes");
  return data;
}

void put_params(CheckpointData& data, const std::string& prefix, const ParameterSet& params) {
  for (const auto& [name, var] : params.entries()) data.tensors.emplace_back(prefix + "/" + name, var.value());
}

ParameterSet take_params(const CheckpointData& data, const std::string& prefix) {
  ParameterSet p;
  const std::string lead = prefix + "/";
  for (const auto& [name, t] : data.tensors)
    if (name.rfind(lead, 0) == 0) p.add(name.substr(lead.size()), t);
  if (p.size() == 0) throw CheckpointError("checkpoint has no parameters under '" + prefix + "'");
  return p;
}

void put_network_config(CheckpointData& data, const NetworkConfig& c) {
  auto& m = data.metadata;
  m["net.resolution"] = std::to_string(c.resolution);
  m["net.channels"] = std::to_string(c.channels);
  m["net.style_dim"] = std::to_string(c.style_dim);
  m["net.base_width"] = std::to_string(c.base_width);
  m["net.max_width"] = std::to_string(c.max_width);
  m["net.num_domains"] = std::to_string(c.num_domains);
  m["net.generator_blocks"] = std::to_string(c.generator_blocks);
  m["net.trunk_blocks"] = std::to_string(c.trunk_blocks);
  std::ostringstream slope;
  slope.precision(17);
  slope << c.leaky_slope;
  m["net.leaky_slope"] = slope.str();
}

NetworkConfig take_network_config(const CheckpointData& data) {
  NetworkConfig c;
  c.resolution = std::stoi(data.meta("net.resolution"));
  c.channels = std::stoi(data.meta("net.channels"));
  c.style_dim = std::stoi(data.meta("net.style_dim"));
  c.base_width = std::stoi(data.meta("net.base_width"));
  c.max_width = std::stoi(data.meta("net.max_width"));
  c.num_domains = std::stoi(data.meta("net.num_domains"));
  c.generator_blocks = std::stoi(data.meta("net.generator_blocks"));
  c.trunk_blocks = std::stoi(data.meta("net.trunk_blocks"));
  c.leaky_slope = std::stod(data.meta("net.leaky_slope"));
  return c;
}

namespace {

std::string exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

void put_optimizer(CheckpointData& data, const std::string& prefix, const Adam& opt) {
  auto& m = data.metadata;
  m[prefix + ".lr"] = exact(opt.config().lr);
  m[prefix + ".beta1"] = exact(opt.config().beta1);
  m[prefix + ".beta2"] = exact(opt.config().beta2);
  m[prefix + ".eps"] = exact(opt.config().eps);
  m[prefix + ".t"] = std::to_string(opt.steps_taken());
  for (std::size_t i = 0; i < opt.names().size(); ++i) {
    data.tensors.emplace_back(prefix + "/m/" + opt.names()[i], opt.first_moments()[i]);
    data.tensors.emplace_back(prefix + "/v/" + opt.names()[i], opt.second_moments()[i]);
  }
}

Adam take_optimizer(const CheckpointData& data, const std::string& prefix, const ParameterSet& params) {
  AdamConfig cfg;
  cfg.lr = std::stod(data.meta(prefix + ".lr"));
  cfg.beta1 = std::stod(data.meta(prefix + ".beta1"));
  cfg.beta2 = std::stod(data.meta(prefix + ".beta2"));
  cfg.eps = std::stod(data.meta(prefix + ".eps"));
  Adam opt(params, cfg);
  opt.set_steps_taken(std::stol(data.meta(prefix + ".t")));
  for (std::size_t i = 0; i < opt.names().size(); ++i) {
    opt.first_moments()[i] = data.tensor(prefix + "/m/" + opt.names()[i]);
    opt.second_moments()[i] = data.tensor(prefix + "/v/" + opt.names()[i]);
  }
  return opt;
}

TrainState::TrainState(CitGanModel m, DomainRegistry reg, AdamConfig gs, AdamConfig d, std::uint64_t data_seed)
    : model(std::move(m)),
      registry(std::move(reg)),
      opt_generator(model.generator.params(), gs),
      opt_styling(model.styling.params(), gs),
      opt_discriminator(model.discriminator.params(), d),
      rng(data_seed) {}

TrainState::TrainState(CitGanModel m, DomainRegistry reg, Adam g, Adam s, Adam d, long st, std::mt19937_64 r)
    : model(std::move(m)),
      registry(std::move(reg)),
      opt_generator(std::move(g)),
      opt_styling(std::move(s)),
      opt_discriminator(std::move(d)),
      step(st),
      rng(std::move(r)) {}

void save_checkpoint(const fs::path& path, const TrainState& state, const std::string& config_hash,
                     const std::map<std::string, std::string>& extra) {
  CheckpointData data;
  data.metadata = extra;
  data.metadata["kind"] = "citgan";
  data.metadata["config_hash"] = config_hash;
  data.metadata["step"] = std::to_string(state.step);
  data.metadata["domains"] = join(state.registry.names());
  std::ostringstream rng;
  rng << state.rng;
  data.metadata["rng"] = rng.str();
  put_network_config(data, state.model.config);
  put_params(data, "generator", state.model.generator.params());
  put_params(data, "styling", state.model.styling.params());
  put_params(data, "discriminator", state.model.discriminator.params());
  put_optimizer(data, "opt_generator", state.opt_generator);
  put_optimizer(data, "opt_styling", state.opt_styling);
  put_optimizer(data, "opt_discriminator", state.opt_discriminator);
  write_checkpoint_file(path, data);
}

namespace {

LoadedModel model_from(const CheckpointData& data) {
  if (data.meta("kind") != "citgan") throw CheckpointError("checkpoint is a '" + data.meta("kind") + "', not a citgan model");
  NetworkConfig cfg = take_network_config(data);
  DomainRegistry reg(split_names(data.meta("domains")));
  if (reg.count() != cfg.num_domains) throw CheckpointError("checkpoint domain list does not match network config");
  CitGanModel model(cfg, Generator(cfg, take_params(data, "generator")),
                    StylingNetwork(cfg, take_params(data, "styling")),
                    Discriminator(cfg, take_params(data, "discriminator")));
  return {std::move(model), std::move(reg)};
}

}  // namespace

LoadedModel load_model(const fs::path& path) { return model_from(read_checkpoint_file(path)); }

TrainState load_checkpoint(const fs::path& path, std::string* config_hash) {
  CheckpointData data = read_checkpoint_file(path);
  LoadedModel lm = model_from(data);
  Adam g = take_optimizer(data, "opt_generator", lm.model.generator.params());
  Adam s = take_optimizer(data, "opt_styling", lm.model.styling.params());
  Adam d = take_optimizer(data, "opt_discriminator", lm.model.discriminator.params());
  std::mt19937_64 rng;
  std::istringstream is(data.meta("rng"));
  is >> rng;
  if (!is) throw CheckpointError("checkpoint " + path.string() + " has an unreadable RNG state");
  if (config_hash) *config_hash = data.meta("config_hash");
  return TrainState(std::move(lm.model), std::move(lm.registry), std::move(g), std::move(s), std::move(d),
                    std::stol(data.meta("step")), std::move(rng));
}

}  // namespace citgan
