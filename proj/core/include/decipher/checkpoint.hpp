#pragma once

// Binary model checkpoints. Layout: magic "HSDC", format version (u32 LE),
// header length (u32 LE), JSON header (model kind, hyperparameters, both
// vocabularies, tensor directory with name/shape/byte offset), then tensor
// payloads as little-endian 32-bit floats, row-major, in directory order.
// Serialization is byte-deterministic for identical inputs.

#include <string>

#include "decipher/corpus.hpp"
#include "decipher/seq2seq.hpp"
#include "decipher/variational.hpp"

namespace decipher {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::string& model_kind,
                     const ModelDims& dims, const Vocab& vocab,
                     const ParamListT<float>& params);

// Exactly one of the two models is populated, per `kind`.
struct LoadedCheckpoint {
  std::string kind;  // "seq2seq" | "vd"
  ModelDims dims;
  Vocab vocab;
  Seq2SeqModel seq2seq;
  VdModel vd;
};

// Throws CheckpointError on bad magic, unsupported version, malformed
// header, or a tensor directory that does not match the declared model.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace decipher
