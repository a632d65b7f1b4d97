#include "slm/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "slm/errors.hpp"

namespace slm {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'L', 'M', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw IoError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params, const Vocabulary& vocab) {
  const ModelConfig& c = params.config;
  nlohmann::ordered_json header;
  header["format"] = "slm-checkpoint";
  header["version"] = 1;
  header["kind"] = to_string(params.kind);
  header["seed"] = params.seed;
  header["config"] = {{"layers", c.layers},     {"d_model", c.d_model}, {"heads", c.heads},
                      {"d_ff", c.d_ff},         {"vocab_size", c.vocab_size},
                      {"max_len", c.max_len},   {"dropout", c.dropout}, {"tie_embeddings", c.tie_embeddings}};
  header["vocab"] = {{"char_level", vocab.char_level()}, {"tokens", vocab.tokens()}};
  auto tensors = nlohmann::ordered_json::array();
  const auto named = params.named();
  for (const auto& nt : named) tensors.push_back({{"name", nt.name}, {"shape", nt.tensor->shape()}});
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& nt : named) {
    for (double v : nt.tensor->data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError("'" + path + "' is not a checkpoint (bad magic)");
  const std::uint64_t len = get_u64(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("checkpoint header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  try {
    if (header.at("format") != "slm-checkpoint" || header.at("version") != 1) {
      throw IoError("unsupported checkpoint format/version");
    }
    const auto& jc = header.at("config");
    ModelConfig cfg;
    cfg.layers = jc.at("layers");
    cfg.d_model = jc.at("d_model");
    cfg.heads = jc.at("heads");
    cfg.d_ff = jc.at("d_ff");
    cfg.vocab_size = jc.at("vocab_size");
    cfg.max_len = jc.at("max_len");
    cfg.dropout = jc.at("dropout");
    cfg.tie_embeddings = jc.at("tie_embeddings");
    const ModelKind kind = parse_model_kind(header.at("kind").get<std::string>());
    const std::uint64_t seed = header.at("seed");

    Checkpoint ck{init_model(cfg, seed, kind),
                  Vocabulary(header.at("vocab").at("tokens").get<std::vector<std::string>>(),
                             header.at("vocab").at("char_level").get<bool>())};
    auto named = ck.params.named();
    const auto& jt = header.at("tensors");
    if (jt.size() != named.size()) throw IoError("checkpoint tensor list does not match its config");
    for (std::size_t i = 0; i < named.size(); ++i) {
      if (jt[i].at("name") != named[i].name || jt[i].at("shape").get<Shape>() != named[i].tensor->shape()) {
        throw IoError("checkpoint tensor " + std::to_string(i) + " (" + jt[i].at("name").get<std::string>() +
                      ") does not match the expected layout");
      }
    }
    for (auto& nt : named) {
      for (double& v : nt.tensor->data()) v = std::bit_cast<double>(get_u64(in));
    }
    if (ck.vocab.size() != cfg.vocab_size) throw IoError("checkpoint vocabulary size disagrees with config");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed checkpoint header: ") + e.what());
  }
}

}  // namespace slm
