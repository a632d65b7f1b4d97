#pragma once

#include <string>

#include "slm/model.hpp"
#include "slm/vocab.hpp"

namespace slm {

// Byte layout (all integers little-endian):
//
//   offset 0   8 bytes   magic "SLMCKPT1"
//   offset 8   u64       H = header length in bytes
//   offset 16  H bytes   UTF-8 JSON header
//   then                 for each entry of header.tensors, in order,
//                        product(shape) IEEE-754 binary64 values, row-major
//
// Header keys: format ("slm-checkpoint"), version (1), kind, seed,
// config {layers, d_model, heads, d_ff, vocab_size, max_len, dropout,
// tie_embeddings}, vocab {char_level, tokens[]}, tensors [{name, shape}].
// Tensor order is ModelParams::named().
struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
};

void save_checkpoint(const std::string& path, const ModelParams& params, const Vocabulary& vocab);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace slm
