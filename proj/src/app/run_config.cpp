// Copyright 2026 The AdvSeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "app/run_config.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "common/error.h"
#include "json.hpp"

ADVSEQ_NAMESPACE_BEGIN

namespace {

using Json = nlohmann::ordered_json;

// Reads the members of one JSON object, remembering which keys were used so
// that typos surface as errors instead of silently falling back to defaults.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCode::kConfig, "'" + where() + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::kConfig, "'" + child(key) + "' has the wrong type: " + it->dump());
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  ObjectReader object(const char* key) {
    seen_.insert(key);
    static const Json kEmpty = Json::object();
    auto it = j_.find(key);
    return ObjectReader(it == j_.end() || it->is_null() ? kEmpty : *it, child(key));
  }

  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  // Call after all reads.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(ErrorCode::kConfig, "unknown config key '" + child(it.key().c_str()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_adam(ObjectReader r, AdamConfig& a) {
  r.read("learning_rate", a.learning_rate);
  r.read("beta1", a.beta1);
  r.read("beta2", a.beta2);
  r.read("epsilon", a.epsilon);
  r.read("warmup_steps", a.warmup_steps);
  r.read("clip_norm", a.clip_norm);
  r.finish();
}

Json adam_json(const AdamConfig& a) {
  return Json{{"learning_rate", a.learning_rate}, {"beta1", a.beta1},
              {"beta2", a.beta2},                 {"epsilon", a.epsilon},
              {"warmup_steps", a.warmup_steps},   {"clip_norm", a.clip_norm}};
}

RunConfig from_json(const Json& root) {
  RunConfig cfg;
  ObjectReader r(root, "");
  r.read("seed", cfg.seed);
  r.read("out", cfg.out);

  {
    auto d = r.object("data");
    if (d.has("toy")) {
      auto t = d.object("toy");
      ToyTaskSpec spec;
      std::string kind = toy_kind_name(spec.kind);
      t.read("kind", kind);
      spec.kind = parse_toy_kind(kind);
      t.read("vocab_size", spec.vocab_size);
      t.read("corpus_size", spec.corpus_size);
      t.read("min_len", spec.min_len);
      t.read("max_len", spec.max_len);
      t.read("seed", spec.seed);
      t.read("branching", spec.branching);
      t.finish();
      cfg.data.toy = spec;
    } else {
      d.object("toy").finish();
    }
    d.read("valid_size", cfg.data.valid_size);
    d.read("test_size", cfg.data.test_size);
    d.read("train_src", cfg.data.train_src);
    d.read("train_trg", cfg.data.train_trg);
    d.read("valid_src", cfg.data.valid_src);
    d.read("valid_trg", cfg.data.valid_trg);
    d.read("test_src", cfg.data.test_src);
    d.read("test_trg", cfg.data.test_trg);
    d.read("src_vocab", cfg.data.src_vocab);
    d.read("trg_vocab", cfg.data.trg_vocab);
    d.read("min_count", cfg.data.min_count);
    d.finish();
  }

  {
    auto m = r.object("model");
    auto& mt = cfg.setup.mt;
    m.read("num_layers", mt.num_layers);
    m.read("model_dim", mt.model_dim);
    m.read("num_heads", mt.num_heads);
    m.read("ff_dim", mt.ff_dim);
    m.read("max_len", mt.max_len);
    m.read("dropout", mt.dropout);
    m.read("attention_layer", mt.attention_layer);
    m.finish();
  }

  {
    auto l = r.object("lm");
    auto& lm = cfg.setup.lm;
    l.read("num_layers", lm.num_layers);
    l.read("num_heads", lm.num_heads);
    l.read("ff_dim", lm.ff_dim);
    l.read("dropout", lm.dropout);
    auto p = l.object("pretrain");
    p.read("steps", cfg.setup.lm_pretrain.steps);
    p.read("batch_sentences", cfg.setup.lm_pretrain.batch_sentences);
    read_adam(p.object("adam"), cfg.setup.lm_pretrain.adam);
    p.finish();
    l.finish();
  }

  {
    auto a = r.object("adv");
    auto& adv = cfg.setup.train.adv;
    a.read("gamma_src", adv.gamma_src);
    a.read("gamma_trg", adv.gamma_trg);
    a.read("candidates", adv.n);
    a.read("lambda", adv.lambda);
    a.read("seed", adv.rng_seed);
    a.finish();
  }

  {
    auto t = r.object("train");
    auto& tr = cfg.setup.train;
    t.read("steps", tr.steps);
    t.read("batch_tokens", tr.batch_tokens);
    t.read("checkpoint_every", tr.checkpoint_every);
    auto s = t.object("loss");
    s.read("clean", tr.switches.clean);
    s.read("lm", tr.switches.lm);
    s.read("adv_source", tr.switches.adv_source);
    s.read("adv_target", tr.switches.adv_target);
    s.finish();
    read_adam(t.object("adam"), tr.adam);
    t.finish();
  }

  {
    auto n = r.object("noise");
    n.read("fraction", cfg.noise.fraction);
    n.read("k", cfg.noise.k);
    n.read("pool", cfg.noise.pool);
    n.read("seed", cfg.noise.seed);
    n.finish();
  }

  {
    auto e = r.object("eval");
    e.read("fractions", cfg.eval.fractions);
    e.finish();
  }
  r.finish();

  cfg.setup.seed = cfg.seed;
  // The LMs share the MT embedding tables, so width and length follow the MT model.
  cfg.setup.lm.model_dim = cfg.setup.mt.model_dim;
  cfg.setup.lm.max_len = cfg.setup.mt.max_len;
  cfg.validate();
  return cfg;
}

Json to_json(const RunConfig& cfg) {
  Json data = Json::object();
  if (cfg.data.toy) {
    const auto& t = *cfg.data.toy;
    data["toy"] = Json{{"kind", toy_kind_name(t.kind)}, {"vocab_size", t.vocab_size},
                       {"corpus_size", t.corpus_size}, {"min_len", t.min_len},
                       {"max_len", t.max_len},         {"seed", t.seed},
                       {"branching", t.branching}};
  }
  data["valid_size"] = cfg.data.valid_size;
  data["test_size"] = cfg.data.test_size;
  data["train_src"] = cfg.data.train_src;
  data["train_trg"] = cfg.data.train_trg;
  data["valid_src"] = cfg.data.valid_src;
  data["valid_trg"] = cfg.data.valid_trg;
  data["test_src"] = cfg.data.test_src;
  data["test_trg"] = cfg.data.test_trg;
  data["src_vocab"] = cfg.data.src_vocab;
  data["trg_vocab"] = cfg.data.trg_vocab;
  data["min_count"] = cfg.data.min_count;

  const auto& mt = cfg.setup.mt;
  const auto& lm = cfg.setup.lm;
  const auto& tr = cfg.setup.train;
  Json j;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out;
  j["data"] = data;
  j["model"] = Json{{"num_layers", mt.num_layers}, {"model_dim", mt.model_dim},
                    {"num_heads", mt.num_heads},   {"ff_dim", mt.ff_dim},
                    {"max_len", mt.max_len},       {"dropout", mt.dropout},
                    {"attention_layer", mt.attention_layer}};
  j["lm"] = Json{{"num_layers", lm.num_layers},
                 {"num_heads", lm.num_heads},
                 {"ff_dim", lm.ff_dim},
                 {"dropout", lm.dropout},
                 {"pretrain", Json{{"steps", cfg.setup.lm_pretrain.steps},
                                   {"batch_sentences", cfg.setup.lm_pretrain.batch_sentences},
                                   {"adam", adam_json(cfg.setup.lm_pretrain.adam)}}}};
  j["adv"] = Json{{"gamma_src", tr.adv.gamma_src}, {"gamma_trg", tr.adv.gamma_trg},
                  {"candidates", tr.adv.n},        {"lambda", tr.adv.lambda},
                  {"seed", tr.adv.rng_seed}};
  j["train"] = Json{{"steps", tr.steps},
                    {"batch_tokens", tr.batch_tokens},
                    {"checkpoint_every", tr.checkpoint_every},
                    {"loss", Json{{"clean", tr.switches.clean},
                                  {"lm", tr.switches.lm},
                                  {"adv_source", tr.switches.adv_source},
                                  {"adv_target", tr.switches.adv_target}}},
                    {"adam", adam_json(tr.adam)}};
  j["noise"] = Json{{"fraction", cfg.noise.fraction}, {"k", cfg.noise.k},
                    {"pool", cfg.noise.pool},         {"seed", cfg.noise.seed}};
  j["eval"] = Json{{"fractions", cfg.eval.fractions}};
  return j;
}

Json parse_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kConfig, "malformed config " + origin + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (out.empty()) fail(ErrorCode::kConfig, "out must not be empty");
  if (data.toy) {
    if (data.toy->vocab_size < 10) fail(ErrorCode::kConfig, "data.toy.vocab_size must be at least 10");
    if (data.toy->min_len < 1 || data.toy->max_len < data.toy->min_len)
      fail(ErrorCode::kConfig, "data.toy length range is empty");
    if (data.toy->corpus_size < 1) fail(ErrorCode::kConfig, "data.toy.corpus_size must be positive");
    if (data.valid_size < 0 || data.test_size < 0)
      fail(ErrorCode::kConfig, "data.valid_size and data.test_size must be non-negative");
  }
  if (data.min_count < 1) fail(ErrorCode::kConfig, "data.min_count must be at least 1");
  // Vocabulary sizes come from the data, so only the architecture is checked here.
  TransformerConfig mt = setup.mt;
  mt.src_vocab_size = std::max(mt.src_vocab_size, kNumReserved + 1);
  mt.trg_vocab_size = std::max(mt.trg_vocab_size, kNumReserved + 1);
  mt.validate();
  setup.train.validate();
  noise.validate();
  for (double f : eval.fractions) {
    if (!(f >= 0.0 && f <= 1.0)) fail(ErrorCode::kConfig, "eval.fractions must lie in [0, 1]");
  }
  if (setup.lm_pretrain.steps < 0 || setup.lm_pretrain.batch_sentences < 1)
    fail(ErrorCode::kConfig, "lm.pretrain needs steps >= 0 and batch_sentences >= 1");
}

RunConfig config_from_json_text(const std::string& text) { return from_json(parse_text(text, "text")); }

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(parse_text(ss.str(), "'" + path + "'"));
}

std::string config_to_json_text(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

void apply_override(RunConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(ErrorCode::kConfig, "override '" + assignment + "' is not of the form key=value");
  std::string key = assignment.substr(0, eq);
  std::string raw = assignment.substr(eq + 1);

  Json value;
  try {
    value = Json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }

  Json root = to_json(cfg);
  Json* node = &root;
  std::string path;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorCode::kConfig, "override key '" + key + "' has an empty component");
    path += (path.empty() ? "" : ".") + part;
    if (dot == std::string::npos) {
      // Only `data.toy` may be introduced from scratch; everything else must exist.
      if (!node->contains(part) && !(path.rfind("data.toy.", 0) == 0))
        fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
      (*node)[part] = value;
      break;
    }
    if (!node->contains(part)) {
      if (path != "data.toy") fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
      (*node)[part] = Json::object();
    }
    node = &(*node)[part];
    if (!node->is_object()) fail(ErrorCode::kConfig, "config key '" + path + "' is not a section");
    start = dot + 1;
  }
  cfg = from_json(root);
}

ADVSEQ_NAMESPACE_END
