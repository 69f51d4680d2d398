#pragma once

// Checkpoint container.
//
//   LCSC-CHECKPOINT\n
//   <manifest length in bytes>\n
//   <manifest: JSON text>\n
//   <payload>
//
// The manifest holds the format version, network config, schedule, epoch,
// optimizer step and hyperparameters, the tensor table (name, shape, offset
// and element count, in parameter visiting order), the payload size and the
// SHA-256 of the payload. The payload is little-endian float32: every
// parameter tensor, then the Adam first moments, then the second moments.
// Saving is a pure function of its inputs, so equal states give equal bytes.

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lcsc/optimizer.hpp"

namespace lcsc {

inline constexpr const char* kCheckpointMagic = "LCSC-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json to_json(const NetworkConfig& c) {
  return {{"blocks", c.blocks},       {"units_per_block", c.units_per_block},
          {"width", c.width},         {"rho", c.rho},
          {"enhanced", c.enhanced},   {"scale", c.scale},
          {"head", to_string(c.head)}, {"fusion", c.fusion},
          {"residual", c.residual_target}, {"in_channels", c.in_channels},
          {"seed", c.seed}};
}

inline NetworkConfig network_config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.blocks = j.at("blocks").get<std::size_t>();
  c.units_per_block = j.at("units_per_block").get<std::size_t>();
  c.width = j.at("width").get<std::size_t>();
  c.rho = j.at("rho").get<std::vector<double>>();
  c.enhanced = j.at("enhanced").get<bool>();
  c.scale = j.at("scale").get<std::size_t>();
  c.head = parse_head(j.at("head").get<std::string>());
  c.fusion = j.at("fusion").get<bool>();
  c.residual_target = j.at("residual").get<bool>();
  c.in_channels = j.at("in_channels").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

inline nlohmann::json to_json(const TrainSchedule& s) {
  return {{"initial_lr", s.initial_lr},     {"decay_every", s.decay_every}, {"decay_factor", s.decay_factor},
          {"total_epochs", s.total_epochs}, {"batch_size", s.batch_size},   {"beta", s.beta}};
}

inline TrainSchedule schedule_from_json(const nlohmann::json& j) {
  TrainSchedule s;
  s.initial_lr = j.at("initial_lr").get<double>();
  s.decay_every = j.at("decay_every").get<std::size_t>();
  s.decay_factor = j.at("decay_factor").get<double>();
  s.total_epochs = j.at("total_epochs").get<std::size_t>();
  s.batch_size = j.at("batch_size").get<std::size_t>();
  s.beta = j.at("beta").get<double>();
  return s;
}

struct Checkpoint {
  NetworkConfig network;
  TrainSchedule schedule;
  std::size_t epoch = 0;
  NetworkParams<float> params;
  std::optional<AdamState<float>> optimizer;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw DataError("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

namespace detail {

inline void append_le(std::string& out, const Tensor<float>& t) {
  for (float f : t.data()) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xffu));
  }
}

inline void read_le(std::string_view payload, std::size_t offset, Tensor<float>& t) {
  auto d = t.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b)
      u |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[offset + 4 * i + b])) << (8 * b);
    d[i] = std::bit_cast<float>(u);
  }
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  validate_params(ck.params, ck.network);
  const auto refs = tensor_refs(ck.params);
  const auto names = tensor_names(ck.params);
  if (ck.optimizer && (ck.optimizer->m.size() != refs.size() || ck.optimizer->v.size() != refs.size()))
    throw ConfigError("optimizer state does not match the parameter list");

  std::string payload;
  nlohmann::json table = nlohmann::json::array();
  auto add = [&](const std::string& name, const Tensor<float>& t) {
    const Shape s = t.shape();
    table.push_back({{"name", name}, {"shape", {s.n, s.c, s.h, s.w}}, {"offset", payload.size()}, {"count", t.size()}});
    detail::append_le(payload, t);
  };
  for (std::size_t i = 0; i < refs.size(); ++i) add(names[i], *refs[i]);
  if (ck.optimizer) {
    for (std::size_t i = 0; i < refs.size(); ++i) add("adam.m." + names[i], ck.optimizer->m[i]);
    for (std::size_t i = 0; i < refs.size(); ++i) add("adam.v." + names[i], ck.optimizer->v[i]);
  }

  nlohmann::json m;
  m["version"] = kCheckpointVersion;
  m["network"] = to_json(ck.network);
  m["schedule"] = to_json(ck.schedule);
  m["epoch"] = ck.epoch;
  if (ck.optimizer)
    m["optimizer"] = {{"kind", "adam"},
                      {"step", ck.optimizer->step},
                      {"beta1", ck.optimizer->hyper.beta1},
                      {"beta2", ck.optimizer->hyper.beta2},
                      {"eps", ck.optimizer->hyper.eps}};
  else
    m["optimizer"] = nullptr;
  m["dtype"] = "float32le";
  m["tensors"] = std::move(table);
  m["payload_bytes"] = payload.size();
  m["sha256"] = sha256_hex(payload);

  const std::string manifest = m.dump(1) + "\n";
  std::string out = std::string(kCheckpointMagic) + "\n" + std::to_string(manifest.size()) + "\n" + manifest;
  return out + payload;
}

inline Checkpoint parse_checkpoint(std::string_view bytes, const std::string& what = "checkpoint") {
  auto fail = [&](const std::string& msg) { return DataError(what + ": " + msg); };
  const std::string magic = std::string(kCheckpointMagic) + "\n";
  if (bytes.substr(0, magic.size()) != magic) throw fail("corrupt header (bad magic)");
  std::size_t pos = magic.size();
  const std::size_t nl = bytes.find('\n', pos);
  if (nl == std::string_view::npos || nl == pos) throw fail("corrupt header (missing manifest length)");
  std::size_t manifest_len = 0;
  for (std::size_t i = pos; i < nl; ++i) {
    if (bytes[i] < '0' || bytes[i] > '9') throw fail("corrupt header (bad manifest length)");
    manifest_len = manifest_len * 10 + static_cast<std::size_t>(bytes[i] - '0');
  }
  pos = nl + 1;
  if (bytes.size() < pos + manifest_len) throw fail("corrupt header (manifest truncated)");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(bytes.substr(pos, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("corrupt manifest: ") + e.what());
  }
  const std::string_view payload = bytes.substr(pos + manifest_len);

  try {
    const int version = m.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw fail("version mismatch: file has " + std::to_string(version) + ", reader expects " +
                 std::to_string(kCheckpointVersion));
    if (sha256_hex(payload) != m.at("sha256").get<std::string>())
      throw fail("digest failure: payload SHA-256 does not match the manifest (file truncated or modified)");
    if (payload.size() != m.at("payload_bytes").get<std::size_t>()) throw fail("payload size mismatch");
    if (m.at("dtype").get<std::string>() != "float32le") throw fail("unsupported dtype");

    Checkpoint ck;
    ck.network = network_config_from_json(m.at("network"));
    ck.schedule = schedule_from_json(m.at("schedule"));
    ck.epoch = m.at("epoch").get<std::size_t>();
    ck.params = NetworkParams<float>::init(ck.network);
    const auto refs = tensor_refs(ck.params);
    const auto names = tensor_names(ck.params);
    const auto& table = m.at("tensors");
    const bool has_opt = !m.at("optimizer").is_null();
    const std::size_t expected = refs.size() * (has_opt ? 3 : 1);
    if (table.size() != expected)
      throw fail("tensor table has " + std::to_string(table.size()) + " entries, config implies " +
                 std::to_string(expected));

    auto load = [&](std::size_t idx, const std::string& name, Tensor<float>& t) {
      const auto& e = table.at(idx);
      if (e.at("name").get<std::string>() != name)
        throw fail("tensor " + std::to_string(idx) + " is '" + e.at("name").get<std::string>() + "', expected '" +
                   name + "'");
      const auto sh = e.at("shape").get<std::vector<std::size_t>>();
      const Shape s = t.shape();
      if (sh != std::vector<std::size_t>{s.n, s.c, s.h, s.w}) throw fail("shape mismatch for " + name);
      const auto offset = e.at("offset").get<std::size_t>();
      if (e.at("count").get<std::size_t>() != t.size() || offset + 4 * t.size() > payload.size())
        throw fail("bad extent for " + name);
      detail::read_le(payload, offset, t);
    };
    for (std::size_t i = 0; i < refs.size(); ++i) load(i, names[i], *refs[i]);
    if (has_opt) {
      const auto& o = m.at("optimizer");
      AdamConfig hyper{o.at("beta1").get<double>(), o.at("beta2").get<double>(), o.at("eps").get<double>()};
      AdamState<float> st = adam_init(ck.params, hyper);
      st.step = o.at("step").get<std::uint64_t>();
      for (std::size_t i = 0; i < refs.size(); ++i) load(refs.size() + i, "adam.m." + names[i], st.m[i]);
      for (std::size_t i = 0; i < refs.size(); ++i) load(2 * refs.size() + i, "adam.v." + names[i], st.v[i]);
      ck.optimizer = std::move(st);
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("corrupt manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw fail(std::string("invalid config in manifest: ") + e.what());
  }
}

// Writes to a sibling temporary file and renames, so a crash never leaves a
// half-written checkpoint under the final name.
inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ck);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str(), path.string());
}

}  // namespace lcsc
