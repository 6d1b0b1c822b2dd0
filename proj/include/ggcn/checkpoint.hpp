#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ggcn/model.hpp"
#include "ggcn/train_config.hpp"

namespace ggcn {

// Container layout: magic "GGCN", format version (u32 LE), manifest length
// (u64 LE), a JSON manifest (config, label vocabulary, embedding table
// metadata, parameter names and shapes), then the raw parameter values as
// little-endian IEEE-754 doubles in manifest order.
inline constexpr char kCheckpointMagic[4] = {'G', 'G', 'C', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

inline void write_f64(std::ostream& out, double d) {
  write_u64(out, std::bit_cast<std::uint64_t>(d));
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

inline nlohmann::ordered_json config_to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["learning_rate"] = cfg.learning_rate;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["use_gates"] = cfg.use_gates;
  j["use_diversity"] = cfg.use_diversity;
  j["use_consistency"] = cfg.use_consistency;
  j["isc_form"] = isc_form_name(cfg.isc_form);
  j["negative_keep_prob"] = cfg.negative_keep_prob;
  j["gcn_layers"] = cfg.gcn_layers;
  j["bilstm_hidden"] = cfg.bilstm_hidden;
  j["gcn_width"] = cfg.gcn_width;
  j["score_dim"] = cfg.score_dim;
  j["classifier_hidden"] = cfg.classifier_hidden;
  j["embed_dim"] = cfg.embed_dim;
  j["embeddings_trainable"] = cfg.embeddings_trainable;
  j["gate_from_h0"] = cfg.gate_from_h0;
  j["gd_pair_mean"] = cfg.gd_pair_mean;
  return j;
}

inline TrainConfig config_from_json(const nlohmann::ordered_json& j) {
  TrainConfig cfg;
  cfg.alpha = j.at("alpha").get<double>();
  cfg.beta = j.at("beta").get<double>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.use_gates = j.at("use_gates").get<bool>();
  cfg.use_diversity = j.at("use_diversity").get<bool>();
  cfg.use_consistency = j.at("use_consistency").get<bool>();
  cfg.isc_form = parse_isc_form(j.at("isc_form").get<std::string>());
  cfg.negative_keep_prob = j.at("negative_keep_prob").get<double>();
  cfg.gcn_layers = j.at("gcn_layers").get<int>();
  cfg.bilstm_hidden = j.at("bilstm_hidden").get<int>();
  cfg.gcn_width = j.at("gcn_width").get<int>();
  cfg.score_dim = j.at("score_dim").get<int>();
  cfg.classifier_hidden = j.at("classifier_hidden").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.embeddings_trainable = j.at("embeddings_trainable").get<bool>();
  cfg.gate_from_h0 = j.at("gate_from_h0").get<bool>();
  cfg.gd_pair_mean = j.at("gd_pair_mean").get<bool>();
  return cfg;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const Model& model) {
  auto params = model.all_parameters();

  nlohmann::ordered_json manifest;
  manifest["config"] = detail::config_to_json(model.config());
  manifest["labels"] = model.labels();
  const EmbeddingProvider& provider = model.provider();
  nlohmann::ordered_json pj;
  pj["mode"] = provider.mode == EmbeddingProvider::Mode::Lookup ? "lookup" : "contextual";
  pj["dim"] = provider.dim;
  pj["trainable"] = provider.trainable;
  pj["vocab"] = provider.vocab;
  manifest["provider"] = pj;
  nlohmann::ordered_json plist = nlohmann::ordered_json::array();
  for (const auto& [name, t] : params) {
    nlohmann::ordered_json e;
    e["name"] = name;
    e["shape"] = t.shape();
    plist.push_back(e);
  }
  manifest["params"] = plist;

  std::string manifest_text = manifest.dump();
  out.write(kCheckpointMagic, 4);
  detail::write_u32(out, kCheckpointVersion);
  detail::write_u64(out, manifest_text.size());
  out.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));
  for (const auto& [name, t] : params) {
    (void)name;
    for (double v : t.values()) detail::write_f64(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

inline void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  save_checkpoint(out, model);
}

inline std::string checkpoint_bytes(const Model& model) {
  std::ostringstream out(std::ios::binary);
  save_checkpoint(out, model);
  return out.str();
}

// Rebuilds the model recorded in a checkpoint. A contextual-mode
// checkpoint carries no embedding table; attach one afterwards with
// Model::set_provider before running the model.
inline Model load_checkpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kCheckpointMagic, 4)) {
    throw std::runtime_error("checkpoint: bad magic bytes");
  }
  std::uint32_t version = detail::read_u32(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  std::uint64_t manifest_len = detail::read_u64(in);
  std::string manifest_text(manifest_len, '\0');
  in.read(manifest_text.data(), static_cast<std::streamsize>(manifest_len));
  if (!in) throw std::runtime_error("checkpoint: truncated manifest");
  nlohmann::ordered_json manifest = nlohmann::ordered_json::parse(manifest_text);

  TrainConfig cfg = detail::config_from_json(manifest.at("config"));
  std::vector<std::string> labels = manifest.at("labels").get<std::vector<std::string>>();

  const auto& pj = manifest.at("provider");
  EmbeddingProvider provider;
  provider.dim = pj.at("dim").get<std::size_t>();
  provider.trainable = pj.at("trainable").get<bool>();
  if (pj.at("mode").get<std::string>() == "lookup") {
    provider.mode = EmbeddingProvider::Mode::Lookup;
    provider.vocab = pj.at("vocab").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < provider.vocab.size(); ++i) {
      provider.index.emplace(provider.vocab[i], i);
      provider.vectors.push_back(Tensor::zeros({provider.dim}, provider.trainable));
    }
    provider.unk = Tensor::zeros({provider.dim}, provider.trainable);
  } else {
    provider.mode = EmbeddingProvider::Mode::Contextual;
  }

  Rng rng(0);  // values are overwritten below
  Model model(cfg, std::move(provider), std::move(labels), rng);

  auto params = model.all_parameters();
  const auto& plist = manifest.at("params");
  if (plist.size() != params.size()) {
    throw std::runtime_error("checkpoint: manifest lists " + std::to_string(plist.size()) +
                             " parameters, model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = plist[i];
    if (entry.at("name").get<std::string>() != params[i].first) {
      throw std::runtime_error("checkpoint: parameter order mismatch at " + params[i].first);
    }
    if (entry.at("shape").get<Shape>() != params[i].second.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + params[i].first);
    }
    for (double& v : params[i].second.values()) v = detail::read_f64(in);
  }
  return model;
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace ggcn
