#include "decipher/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "decipher/fsutil.hpp"
#include "json.hpp"

namespace decipher {

namespace {

using nlohmann::ordered_json;

void append_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t read_u32(const std::string& bytes, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 3])) << 24;
}

ordered_json dims_to_json(const ModelDims& d) {
  ordered_json j;
  j["hidden_size"] = d.hidden;
  j["word_emb"] = d.word_dim;
  j["char_emb"] = d.char_dim;
  j["latent_dim"] = d.latent;
  j["mlp_hidden"] = d.mlp_hidden;
  j["max_len"] = d.max_len;
  j["tweet_words"] = d.tweet_len;
  j["symbol_words"] = d.sym_word_len;
  j["symbol_chars"] = d.sym_char_len;
  j["def_words"] = d.def_len;
  return j;
}

ModelDims dims_from_json(const ordered_json& j) {
  ModelDims d;
  d.hidden = j.at("hidden_size").get<int>();
  d.word_dim = j.at("word_emb").get<int>();
  d.char_dim = j.at("char_emb").get<int>();
  d.latent = j.at("latent_dim").get<int>();
  d.mlp_hidden = j.at("mlp_hidden").get<int>();
  d.max_len = j.at("max_len").get<int>();
  d.tweet_len = j.at("tweet_words").get<int>();
  d.sym_word_len = j.at("symbol_words").get<int>();
  d.sym_char_len = j.at("symbol_chars").get<int>();
  d.def_len = j.at("def_words").get<int>();
  return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& model_kind,
                     const ModelDims& dims, const Vocab& vocab,
                     const ParamListT<float>& params) {
  ordered_json header;
  header["model"] = model_kind;
  header["hyperparameters"] = dims_to_json(dims);
  header["vocab"]["words"] = vocab.id_to_word;
  header["vocab"]["chars"] = vocab.id_to_char;
  header["tensors"] = ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, p] : params) {
    ordered_json entry;
    entry["name"] = name;
    entry["shape"] = p->shape;
    entry["offset"] = offset;
    header["tensors"].push_back(std::move(entry));
    offset += static_cast<std::uint64_t>(p->numel()) * 4;
  }
  const std::string hbytes = header.dump();

  std::string out;
  out.reserve(12 + hbytes.size() + offset);
  out += "HSDC";
  append_u32(out, kCheckpointVersion);
  append_u32(out, static_cast<std::uint32_t>(hbytes.size()));
  out += hbytes;
  for (const auto& [name, p] : params)
    for (float v : p->value) append_u32(out, std::bit_cast<std::uint32_t>(v));
  write_text_atomic(path, out);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();

  if (bytes.size() < 12 || bytes.compare(0, 4, "HSDC") != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  const std::uint32_t version = read_u32(bytes, 4);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t hlen = read_u32(bytes, 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(hlen))
    throw CheckpointError("truncated checkpoint header: " + path);

  ordered_json header;
  try {
    header = ordered_json::parse(bytes.substr(12, hlen));
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  LoadedCheckpoint loaded;
  try {
    loaded.kind = header.at("model").get<std::string>();
    loaded.dims = dims_from_json(header.at("hyperparameters"));
    loaded.vocab.id_to_word = header.at("vocab").at("words").get<std::vector<std::string>>();
    loaded.vocab.id_to_char = header.at("vocab").at("chars").get<std::vector<std::string>>();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("incomplete checkpoint header: ") + e.what());
  }
  const std::vector<std::string> reserved{"<pad>", "<unk>", "<sos>", "<eos>"};
  for (auto* list : {&loaded.vocab.id_to_word, &loaded.vocab.id_to_char}) {
    if (list->size() < reserved.size())
      throw CheckpointError("checkpoint vocabulary too small");
    for (std::size_t i = 0; i < reserved.size(); ++i)
      if ((*list)[i] != reserved[i])
        throw CheckpointError("checkpoint vocabulary missing reserved token " + reserved[i]);
  }
  for (std::size_t i = 0; i < loaded.vocab.id_to_word.size(); ++i)
    loaded.vocab.word_to_id.emplace(loaded.vocab.id_to_word[i], static_cast<int>(i));
  for (std::size_t i = 0; i < loaded.vocab.id_to_char.size(); ++i)
    loaded.vocab.char_to_id.emplace(loaded.vocab.id_to_char[i], static_cast<int>(i));
  loaded.dims.word_vocab = loaded.vocab.word_count();
  loaded.dims.char_vocab = loaded.vocab.char_count();

  Rng init_rng(0);
  ParamListT<float> params;
  if (loaded.kind == "seq2seq") {
    loaded.seq2seq = Seq2SeqModel(loaded.dims, init_rng, 0.01);
    params = loaded.seq2seq.params();
  } else if (loaded.kind == "vd") {
    loaded.vd = VdModel(loaded.dims, init_rng, 0.01);
    params = loaded.vd.params();
  } else {
    throw CheckpointError("unknown model kind \"" + loaded.kind + "\"");
  }

  const auto& directory = header.at("tensors");
  if (directory.size() != params.size())
    throw CheckpointError("tensor directory has " + std::to_string(directory.size()) +
                          " entries, model needs " + std::to_string(params.size()));
  const std::size_t payload_base = 12 + hlen;
  std::uint64_t expect_offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = directory[i];
    auto& [name, p] = params[i];
    if (entry.at("name").get<std::string>() != name)
      throw CheckpointError("tensor directory mismatch: expected " + name + ", found " +
                            entry.at("name").get<std::string>());
    if (entry.at("shape").get<std::vector<int>>() != p->shape)
      throw CheckpointError("tensor " + name + " has unexpected shape");
    if (entry.at("offset").get<std::uint64_t>() != expect_offset)
      throw CheckpointError("tensor " + name + " has unexpected offset");
    const auto count = static_cast<std::size_t>(p->numel());
    const std::size_t at = payload_base + expect_offset;
    if (bytes.size() < at + count * 4)
      throw CheckpointError("truncated checkpoint payload at tensor " + name);
    for (std::size_t k = 0; k < count; ++k)
      p->value[k] = std::bit_cast<float>(read_u32(bytes, at + k * 4));
    expect_offset += count * 4;
  }
  if (bytes.size() != payload_base + expect_offset)
    throw CheckpointError("checkpoint has trailing bytes");
  return loaded;
}

}  // namespace decipher
