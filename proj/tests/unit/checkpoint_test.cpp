#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "dpl/checkpoint.hpp"
#include "dpl/networks.hpp"

using namespace dpl;
namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dpl_unit";
  fs::create_directories(dir);
  return dir / name;
}

NamedTensors sample_bundle() {
  NamedTensors b;
  b["zeta"] = Tensor::from_data({2}, {1.5f, -0.0f});
  b["alpha.weight"] = Tensor::from_data({1, 2, 1, 1}, {std::numeric_limits<float>::denorm_min(), 3.25f});
  b["mid"] = Tensor::scalar(7.0f);
  return b;
}

}  // namespace

TEST_CASE("empty bundle is a 12-byte file") {
  const auto bytes = encode_checkpoint({});
  const std::vector<unsigned char> want{'D', 'P', 'L', 'C', 1, 0, 0, 0, 0, 0, 0, 0};
  CHECK(bytes == want);
  CHECK(decode_checkpoint(bytes).empty());
}

TEST_CASE("checkpoint layout") {
  NamedTensors b;
  b["w"] = Tensor::from_data({2}, {1.0f, -2.0f});
  const auto bytes = encode_checkpoint(b);
  // header 12 | name len 2 + 1 | rank 1 | dim 4 | payload 8
  REQUIRE(bytes.size() == 12 + 3 + 1 + 4 + 8);
  CHECK(bytes[8] == 1);
  CHECK(bytes[12] == 1);
  CHECK(bytes[13] == 0);
  CHECK(bytes[14] == 'w');
  CHECK(bytes[15] == 1);
  CHECK(bytes[16] == 2);
  const auto one = std::bit_cast<std::uint32_t>(1.0f);
  CHECK(bytes[20] == (one & 0xff));
  CHECK(bytes[23] == (one >> 24));
}

TEST_CASE("checkpoint round trips bit-exactly") {
  const auto b = sample_bundle();
  const auto path = temp_path("rt.dplc");
  save_checkpoint(b, path);
  const auto first = read_bytes(path);
  const auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == b.size());
  for (const auto& [name, t] : b) {
    const auto& u = loaded.at(name);
    CHECK(u.shape() == t.shape());
    CHECK(std::memcmp(u.data().data(), t.data().data(), t.numel() * sizeof(float)) == 0);
  }
  save_checkpoint(loaded, path);
  CHECK(read_bytes(path) == first);

  // Names are written in lexicographic order, whatever the source order.
  CHECK(first[14] == 'a');

  Rng rng(1);
  GeneratorF f(rng);
  const auto fb = to_bundle(f.named_parameters());
  CHECK(encode_checkpoint(decode_checkpoint(encode_checkpoint(fb))) == encode_checkpoint(fb));
}

TEST_CASE("checkpoint errors") {
  auto bytes = encode_checkpoint(sample_bundle());
  auto bad = bytes;
  std::memcpy(bad.data(), "XXXX", 4);
  try {
    decode_checkpoint(bad);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
  }
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_WITH_AS(decode_checkpoint(bad), doctest::Contains("version"), std::runtime_error);
  for (std::size_t cut : {3u, 11u, 20u}) CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(cut)), std::runtime_error);
  CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(bytes.size() - 1)), std::runtime_error);
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(bad), std::runtime_error);

  // Two tensors named "a".
  NamedTensors one;
  one["a"] = Tensor::scalar(1.0f);
  auto single = encode_checkpoint(one);
  std::vector<unsigned char> dup(single.begin(), single.end());
  dup[8] = 2;
  dup.insert(dup.end(), single.begin() + 12, single.end());
  CHECK_THROWS_WITH_AS(decode_checkpoint(dup), doctest::Contains("duplicate"), std::runtime_error);

  NamedTensors unnamed;
  unnamed[""] = Tensor::scalar(1.0f);
  CHECK_THROWS_AS(encode_checkpoint(unnamed), std::invalid_argument);
  CHECK_THROWS(load_checkpoint(temp_path("does_not_exist.dplc")));
}
