#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "slm/checkpoint.hpp"
#include "slm/errors.hpp"

using namespace slm;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("checkpoints round-trip bit-exactly for every model kind") {
  const Vocabulary vocab = build_vocab({"a b c", "b c d"}, 50);
  for (ModelKind kind : {ModelKind::Slm, ModelKind::Clm, ModelKind::Mlm, ModelKind::BiLm}) {
    ModelConfig c;
    c.layers = 1;
    c.d_model = 8;
    c.heads = 2;
    c.d_ff = 12;
    c.vocab_size = vocab.size();
    c.max_len = 10;
    c.tie_embeddings = kind == ModelKind::Clm;
    const ModelParams p = init_model(c, 42, kind);
    const std::string path = temp_path("slm_ckpt_" + to_string(kind) + ".bin");
    save_checkpoint(path, p, vocab);
    const Checkpoint ck = load_checkpoint(path);
    CHECK(ck.params.kind == kind);
    CHECK(ck.params.seed == 42);
    CHECK(ck.params.config == c);
    CHECK(ck.vocab.tokens() == vocab.tokens());
    const auto a = p.named();
    const auto b = ck.params.named();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].name == b[i].name);
      CHECK(*a[i].tensor == *b[i].tensor);
    }
    std::filesystem::remove(path);
  }
}

TEST_CASE("checkpoint byte layout") {
  const Vocabulary vocab = build_vocab({"a"}, 10);
  ModelConfig c;
  c.layers = 1;
  c.d_model = 4;
  c.heads = 1;
  c.d_ff = 4;
  c.vocab_size = vocab.size();
  c.max_len = 5;
  const ModelParams p = init_model(c, 1);
  const std::string path = temp_path("slm_ckpt_layout.bin");
  save_checkpoint(path, p, vocab);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes(std::istreambuf_iterator<char>(in), {});
  REQUIRE(bytes.size() > 16);
  CHECK(bytes.substr(0, 8) == "SLMCKPT1");
  std::uint64_t header = 0;
  for (int i = 7; i >= 0; --i) header = (header << 8) | static_cast<unsigned char>(bytes[8 + static_cast<std::size_t>(i)]);
  CHECK(bytes.size() == 16 + header + 8 * p.parameter_count());
  CHECK(bytes[16] == '{');
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are io errors") {
  const std::string path = temp_path("slm_ckpt_bad.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTACKPT";
  }
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
  CHECK_THROWS_AS(load_checkpoint(temp_path("slm_missing_ckpt.bin")), IoError);

  const Vocabulary vocab = build_vocab({"a"}, 10);
  ModelConfig c;
  c.layers = 1;
  c.d_model = 4;
  c.heads = 1;
  c.d_ff = 4;
  c.vocab_size = vocab.size();
  c.max_len = 5;
  save_checkpoint(path, init_model(c, 1), vocab);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
  std::filesystem::remove(path);
}
