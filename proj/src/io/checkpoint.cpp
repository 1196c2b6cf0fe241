#include "svea/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "svea/errors.hpp"

namespace svea {
namespace {

constexpr char kMagic[8] = {'S', 'V', 'E', 'A', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <class T>
  T get() {
    T v{};
    read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 20)) throw IoError(path_ + ": implausible string length");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError(path_ + ": truncated checkpoint");
  }

 private:
  std::istream& in_;
  std::string path_;
};

std::string hex(std::uint64_t h) {
  std::ostringstream ss;
  ss << std::hex << h;
  return ss.str();
}

void copy_values(ParamStore& dst, const ParamStore& src, const std::string& what) {
  if (!dst.same_structure(src)) throw ConfigError("checkpoint store '" + what + "' does not match the network layout");
  for (std::size_t i = 0; i < dst.size(); ++i) dst.value(i) = src.value(i);
}

}  // namespace

const ParamStore& Checkpoint::store(const std::string& name) const {
  for (const auto& [n, s] : stores)
    if (n == name) return s;
  throw IoError("checkpoint has no store named '" + name + "'");
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointManifest& manifest,
                      const std::vector<std::pair<std::string, const ParamStore*>>& stores) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  put(out, manifest.version);
  put(out, manifest.config_hash);
  put(out, manifest.step);
  put(out, manifest.updates);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(stores.size()));
  for (const auto& [name, store] : stores) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(store->size()));
    for (std::size_t i = 0; i < store->size(); ++i) {
      const Tensor& t = store->value(i);
      put_string(out, store->name(i));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
      for (int d = 0; d < t.rank(); ++d) put<std::int64_t>(out, t.dim(d));
      out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
    }
  }
  if (!out) throw IoError("write failed on " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[8];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError(path.string() + ": not a checkpoint file");
  Checkpoint ck;
  ck.manifest.version = r.get<std::uint32_t>();
  if (ck.manifest.version != kCheckpointVersion)
    throw IoError(path.string() + ": checkpoint version " + std::to_string(ck.manifest.version) + ", expected " +
                  std::to_string(kCheckpointVersion));
  ck.manifest.config_hash = r.get<std::uint64_t>();
  ck.manifest.step = r.get<std::int64_t>();
  ck.manifest.updates = r.get<std::int64_t>();
  const auto n_stores = r.get<std::uint32_t>();
  for (std::uint32_t s = 0; s < n_stores; ++s) {
    std::string name = r.get_string();
    ParamStore store;
    const auto n = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      std::string entry = r.get_string();
      const auto rank = r.get<std::uint32_t>();
      if (rank > 8) throw IoError(path.string() + ": implausible tensor rank");
      Shape shape;
      for (std::uint32_t d = 0; d < rank; ++d) {
        const auto dim = r.get<std::int64_t>();
        if (dim < 0 || dim > (1 << 28)) throw IoError(path.string() + ": implausible tensor dimension");
        shape.push_back(dim);
      }
      Tensor t(shape);
      r.read(reinterpret_cast<char*>(t.data()), static_cast<std::size_t>(t.numel()) * sizeof(float));
      store.add(std::move(entry), std::move(t));
    }
    ck.stores.emplace_back(std::move(name), std::move(store));
  }
  return ck;
}

void save_agent(const std::filesystem::path& path, const Agent& agent, std::uint64_t config_hash, std::int64_t step) {
  CheckpointManifest m;
  m.config_hash = config_hash;
  m.step = step;
  m.updates = agent.updates();
  write_checkpoint(path, m,
                   {{"critic", &agent.critic()},
                    {"target", &agent.target()},
                    {"actor", &agent.actor()},
                    {"log_temperature", &agent.log_temperature()}});
}

CheckpointManifest load_agent(const std::filesystem::path& path, Agent& agent, std::uint64_t expected_hash) {
  Checkpoint ck = read_checkpoint(path);
  if (ck.manifest.config_hash != expected_hash)
    throw ConfigError("checkpoint " + path.string() + " was written under config hash " +
                      hex(ck.manifest.config_hash) + " but the current config hashes to " + hex(expected_hash));
  copy_values(agent.critic(), ck.store("critic"), "critic");
  copy_values(agent.target(), ck.store("target"), "target");
  copy_values(agent.actor(), ck.store("actor"), "actor");
  copy_values(agent.log_temperature(), ck.store("log_temperature"), "log_temperature");
  return ck.manifest;
}

}  // namespace svea
