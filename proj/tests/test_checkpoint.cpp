#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "lcsc/checkpoint.hpp"

using namespace lcsc;

namespace {

Checkpoint random_checkpoint(std::uint64_t seed, bool with_optimizer = true) {
  Checkpoint ck;
  ck.network.blocks = 2;
  ck.network.units_per_block = 2;
  ck.network.width = 4;
  ck.network.rho = {0.5, 0.75};
  ck.network.enhanced = true;
  ck.network.fusion = true;
  ck.network.seed = seed;
  ck.schedule.total_epochs = 7;
  ck.epoch = 3;
  ck.params = NetworkParams<float>::init(ck.network);
  Rng rng(seed);
  ck.params.for_each([&](const std::string&, Tensor<float>& t) {
    for (auto& v : t.data()) v = static_cast<float>(rng.normal());
  });
  if (with_optimizer) {
    auto st = adam_init(ck.params);
    st.step = 42;
    for (auto& m : st.m)
      for (auto& v : m.data()) v = static_cast<float>(rng.normal());
    for (auto& m : st.v)
      for (auto& v : m.data()) v = static_cast<float>(rng.uniform());
    ck.optimizer = st;
  }
  return ck;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("lcsc_ckpt_" + name);
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (bool opt : {true, false}) {
      const auto ck = random_checkpoint(seed, opt);
      const auto back = parse_checkpoint(serialize_checkpoint(ck));
      EXPECT_EQ(back, ck);
    }
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto path = temp_file("rt.ckpt");
  const auto ck = random_checkpoint(9);
  save_checkpoint(ck, path);
  const auto bytes = serialize_checkpoint(ck);
  const auto again = serialize_checkpoint(load_checkpoint(path));
  EXPECT_EQ(bytes, again);
  std::filesystem::remove(path);
}

TEST(Checkpoint, PayloadLayoutIsLittleEndianInManifestOrder) {
  const auto ck = random_checkpoint(3);
  const auto bytes = serialize_checkpoint(ck);
  // Independent reading of the container: magic, length line, manifest.
  const auto first_nl = bytes.find('\n');
  ASSERT_EQ(bytes.substr(0, first_nl), "LCSC-CHECKPOINT");
  const auto second_nl = bytes.find('\n', first_nl + 1);
  const std::size_t len = std::stoul(bytes.substr(first_nl + 1, second_nl - first_nl - 1));
  const auto manifest = nlohmann::json::parse(bytes.substr(second_nl + 1, len));
  const std::string payload = bytes.substr(second_nl + 1 + len);
  EXPECT_EQ(manifest["tensors"][0]["name"], "pfe.weight");
  EXPECT_EQ(payload.size(), manifest["payload_bytes"].get<std::size_t>());
  const std::size_t params = ck.params.param_count();
  EXPECT_EQ(payload.size(), 3 * 4 * params);
  std::size_t idx = 0;
  ck.params.for_each([&](const std::string& name, const Tensor<float>& t) {
    const auto& e = manifest["tensors"][idx++];
    EXPECT_EQ(e["name"], name);
    const std::size_t off = e["offset"].get<std::size_t>();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto* b = reinterpret_cast<const unsigned char*>(payload.data() + off + 4 * i);
      const std::uint32_t u = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
      ASSERT_EQ(std::bit_cast<float>(u), t[i]) << name << "[" << i << "]";
    }
  });
  EXPECT_EQ(manifest["sha256"].get<std::string>(), sha256_hex(payload));
}

TEST(Checkpoint, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Checkpoint, TruncatedFileFailsDigest) {
  const auto bytes = serialize_checkpoint(random_checkpoint(4));
  try {
    parse_checkpoint(bytes.substr(0, bytes.size() - 10));
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("digest"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, FlippedPayloadByteFailsDigest) {
  auto bytes = serialize_checkpoint(random_checkpoint(5));
  bytes[bytes.size() - 1] ^= 0x1;
  EXPECT_THROW(parse_checkpoint(bytes), DataError);
}

TEST(Checkpoint, CorruptHeaderAndVersion) {
  const auto bytes = serialize_checkpoint(random_checkpoint(6));
  EXPECT_THROW(parse_checkpoint("NOT-A-CHECKPOINT\n"), DataError);
  EXPECT_THROW(parse_checkpoint(bytes.substr(0, 30)), DataError);
  auto v2 = bytes;
  const auto pos = v2.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  v2[pos + 11] = '2';
  try {
    parse_checkpoint(v2);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version mismatch"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, DeterministicBytes) {
  EXPECT_EQ(serialize_checkpoint(random_checkpoint(7)), serialize_checkpoint(random_checkpoint(7)));
  EXPECT_NE(serialize_checkpoint(random_checkpoint(7)), serialize_checkpoint(random_checkpoint(8)));
}

TEST(Checkpoint, MissingFile) {
  EXPECT_THROW(load_checkpoint(temp_file("does_not_exist.ckpt")), DataError);
}

TEST(Checkpoint, ConfigJsonRoundTrip) {
  NetworkConfig c;
  c.blocks = 3;
  c.rho = {0.25, 0.5, 1.0};
  c.head = HeadKind::SubPixel;
  c.scale = 4;
  c.residual_target = false;
  c.seed = 1234567890123ull;
  EXPECT_EQ(network_config_from_json(to_json(c)), c);
  TrainSchedule s;
  s.beta = 0.3;
  s.initial_lr = 2.5e-4;
  EXPECT_EQ(schedule_from_json(to_json(s)), s);
}
