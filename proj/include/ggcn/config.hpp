#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ggcn/train_config.hpp"

namespace ggcn {

// Everything a command needs: file paths plus the full training
// configuration. Values are resolved flag > config file > default.
struct RunConfig {
  std::string command;
  std::string corpus_path, dev_path, embeddings_path, contextual_path;
  std::string checkpoint_path, out_path, config_path;
  int sentence = 1;  // 1-based, inspect-scores
  int trigger = 1;   // 1-based, inspect-scores
  TrainConfig train;
};

// Thrown for bad invocations (missing/unknown flags, bad values); the CLI
// maps it to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw UsageError(key + ": expected a boolean, got '" + value + "'");
}

inline double parse_double_opt(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != value.size()) throw UsageError(key + ": expected a number, got '" + value + "'");
  return v;
}

inline long parse_long_opt(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != value.size()) throw UsageError(key + ": expected an integer, got '" + value + "'");
  return v;
}

}  // namespace detail

// Option keys shared by the command line (as --<key>) and the config file
// (as `key = value` lines). Returns the table mapping key -> setter.
inline const std::map<std::string, std::function<void(RunConfig&, const std::string&)>>&
option_table() {
  using detail::parse_bool;
  using detail::parse_double_opt;
  using detail::parse_long_opt;
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&)>>
      table = {
          {"corpus", [](RunConfig& c, const std::string& v) { c.corpus_path = v; }},
          {"dev", [](RunConfig& c, const std::string& v) { c.dev_path = v; }},
          {"embeddings", [](RunConfig& c, const std::string& v) { c.embeddings_path = v; }},
          {"contextual", [](RunConfig& c, const std::string& v) { c.contextual_path = v; }},
          {"checkpoint", [](RunConfig& c, const std::string& v) { c.checkpoint_path = v; }},
          {"out", [](RunConfig& c, const std::string& v) { c.out_path = v; }},
          {"alpha",
           [](RunConfig& c, const std::string& v) { c.train.alpha = parse_double_opt("alpha", v); }},
          {"beta",
           [](RunConfig& c, const std::string& v) { c.train.beta = parse_double_opt("beta", v); }},
          {"lr",
           [](RunConfig& c, const std::string& v) {
             c.train.learning_rate = parse_double_opt("lr", v);
           }},
          {"epochs",
           [](RunConfig& c, const std::string& v) {
             c.train.epochs = static_cast<int>(parse_long_opt("epochs", v));
           }},
          {"batch-size",
           [](RunConfig& c, const std::string& v) {
             c.train.batch_size = static_cast<int>(parse_long_opt("batch-size", v));
           }},
          {"seed",
           [](RunConfig& c, const std::string& v) {
             c.train.seed = static_cast<std::uint64_t>(parse_long_opt("seed", v));
           }},
          {"gcn-layers",
           [](RunConfig& c, const std::string& v) {
             c.train.gcn_layers = static_cast<int>(parse_long_opt("gcn-layers", v));
           }},
          {"no-gates",
           [](RunConfig& c, const std::string& v) {
             c.train.use_gates = !parse_bool("no-gates", v);
           }},
          {"no-diversity",
           [](RunConfig& c, const std::string& v) {
             c.train.use_diversity = !parse_bool("no-diversity", v);
           }},
          {"no-consistency",
           [](RunConfig& c, const std::string& v) {
             c.train.use_consistency = !parse_bool("no-consistency", v);
           }},
          {"isc-form",
           [](RunConfig& c, const std::string& v) {
             try {
               c.train.isc_form = parse_isc_form(v);
             } catch (const std::exception& e) {
               throw UsageError(e.what());
             }
           }},
          {"negative-keep-prob",
           [](RunConfig& c, const std::string& v) {
             c.train.negative_keep_prob = parse_double_opt("negative-keep-prob", v);
           }},
          {"embed-dim",
           [](RunConfig& c, const std::string& v) {
             c.train.embed_dim = static_cast<int>(parse_long_opt("embed-dim", v));
           }},
          {"bilstm-hidden",
           [](RunConfig& c, const std::string& v) {
             c.train.bilstm_hidden = static_cast<int>(parse_long_opt("bilstm-hidden", v));
           }},
          {"gcn-width",
           [](RunConfig& c, const std::string& v) {
             c.train.gcn_width = static_cast<int>(parse_long_opt("gcn-width", v));
           }},
          {"score-dim",
           [](RunConfig& c, const std::string& v) {
             c.train.score_dim = static_cast<int>(parse_long_opt("score-dim", v));
           }},
          {"classifier-hidden",
           [](RunConfig& c, const std::string& v) {
             c.train.classifier_hidden = static_cast<int>(parse_long_opt("classifier-hidden", v));
           }},
          {"frozen-embeddings",
           [](RunConfig& c, const std::string& v) {
             c.train.embeddings_trainable = !parse_bool("frozen-embeddings", v);
           }},
          {"gate-from-h0",
           [](RunConfig& c, const std::string& v) {
             c.train.gate_from_h0 = parse_bool("gate-from-h0", v);
           }},
          {"gd-pair-mean",
           [](RunConfig& c, const std::string& v) {
             c.train.gd_pair_mean = parse_bool("gd-pair-mean", v);
           }},
          {"sentence",
           [](RunConfig& c, const std::string& v) {
             c.sentence = static_cast<int>(parse_long_opt("sentence", v));
           }},
          {"trigger",
           [](RunConfig& c, const std::string& v) {
             c.trigger = static_cast<int>(parse_long_opt("trigger", v));
           }},
      };
  return table;
}

// `key = value` lines, '#' starts a comment, blank lines ignored.
inline std::map<std::string, std::string> parse_config_file(std::istream& in,
                                                            const std::string& name) {
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      std::size_t e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw UsageError(name + ": line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(trimmed.substr(0, eq));
    std::string value = trim(trimmed.substr(eq + 1));
    if (key.empty()) {
      throw UsageError(name + ": line " + std::to_string(line_no) + ": empty key");
    }
    entries[key] = value;
  }
  return entries;
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config file not found: " + path);
  auto entries = parse_config_file(in, path);
  const auto& table = option_table();
  for (const auto& [key, value] : entries) {
    auto it = table.find(key);
    if (it == table.end()) throw UsageError(path + ": unknown key '" + key + "'");
    it->second(cfg, value);
  }
}

}  // namespace ggcn
