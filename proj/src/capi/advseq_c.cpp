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

#include "advseq/advseq.h"

#include <cstdio>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "app/commands.h"
#include "app/run_config.h"
#include "common/error.h"
#include "data/vocab.h"
#include "eval/bleu.h"

using namespace advseq;

struct advseq_config {
  RunConfig cfg;
  std::string json;
};

struct advseq_model {
  LoadedModel model;
};

namespace {

thread_local std::string g_last_error;

advseq_print_fn g_printer = nullptr;
void* g_printer_user = nullptr;

void emit(const std::string& text) {
  // Multi-line reports arrive as one string; hand them over line by line.
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string line = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
    if (!(nl == std::string::npos && line.empty() && start > 0)) {
      if (g_printer) {
        g_printer(line.c_str(), g_printer_user);
      } else {
        std::fputs(line.c_str(), stdout);
        std::fputc('\n', stdout);
        std::fflush(stdout);
      }
    }
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
}

advseq_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return ADVSEQ_ERR_CONFIG;
    case ErrorCode::kIo: return ADVSEQ_ERR_IO;
    case ErrorCode::kFormat: return ADVSEQ_ERR_FORMAT;
    case ErrorCode::kDimension: return ADVSEQ_ERR_DIMENSION;
    case ErrorCode::kData: return ADVSEQ_ERR_DATA;
    case ErrorCode::kVocabulary: return ADVSEQ_ERR_VOCABULARY;
    case ErrorCode::kLength: return ADVSEQ_ERR_LENGTH;
    case ErrorCode::kDegenerateInput: return ADVSEQ_ERR_DEGENERATE;
    case ErrorCode::kContract: return ADVSEQ_ERR_CONTRACT;
    case ErrorCode::kDiverged: return ADVSEQ_ERR_DIVERGED;
  }
  return ADVSEQ_ERR_INTERNAL;
}

advseq_status set_error(advseq_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
advseq_status guarded(F&& body) {
  try {
    body();
    return ADVSEQ_OK;
  } catch (const Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(ADVSEQ_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(ADVSEQ_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(ADVSEQ_ERR_INTERNAL, "unknown failure");
  }
}

std::string str(const char* s) { return s ? std::string(s) : std::string(); }

#define ADVSEQ_REQUIRE(cond, what) \
  if (!(cond)) return set_error(ADVSEQ_ERR_CONTRACT, what)

}  // namespace

extern "C" {

const char* advseq_status_name(advseq_status status) {
  switch (status) {
    case ADVSEQ_OK: return "ok";
    case ADVSEQ_ERR_CONFIG: return "config";
    case ADVSEQ_ERR_IO: return "io";
    case ADVSEQ_ERR_FORMAT: return "format";
    case ADVSEQ_ERR_DIMENSION: return "dimension";
    case ADVSEQ_ERR_DATA: return "data";
    case ADVSEQ_ERR_VOCABULARY: return "vocabulary";
    case ADVSEQ_ERR_LENGTH: return "length";
    case ADVSEQ_ERR_DEGENERATE: return "degenerate_input";
    case ADVSEQ_ERR_CONTRACT: return "contract";
    case ADVSEQ_ERR_DIVERGED: return "diverged";
    case ADVSEQ_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* advseq_last_error(void) { return g_last_error.c_str(); }

const char* advseq_version(void) { return "0.1.0"; }

void advseq_set_printer(advseq_print_fn fn, void* user) {
  g_printer = fn;
  g_printer_user = user;
}

advseq_status advseq_config_new(advseq_config** out) {
  ADVSEQ_REQUIRE(out, "out must not be null");
  return guarded([&] { *out = new advseq_config{}; });
}

advseq_status advseq_config_load(const char* path, advseq_config** out) {
  ADVSEQ_REQUIRE(path && out, "path and out must not be null");
  return guarded([&] { *out = new advseq_config{load_config(path), {}}; });
}

advseq_status advseq_config_parse(const char* json_text, advseq_config** out) {
  ADVSEQ_REQUIRE(json_text && out, "json_text and out must not be null");
  return guarded([&] { *out = new advseq_config{config_from_json_text(json_text), {}}; });
}

advseq_status advseq_config_set(advseq_config* cfg, const char* assignment) {
  ADVSEQ_REQUIRE(cfg && assignment, "cfg and assignment must not be null");
  return guarded([&] {
    RunConfig copy = cfg->cfg;
    apply_override(copy, assignment);
    cfg->cfg = std::move(copy);
  });
}

advseq_status advseq_config_set_seed(advseq_config* cfg, uint64_t seed) {
  ADVSEQ_REQUIRE(cfg, "cfg must not be null");
  return guarded([&] { apply_override(cfg->cfg, "seed=" + std::to_string(seed)); });
}

advseq_status advseq_config_set_out(advseq_config* cfg, const char* dir) {
  ADVSEQ_REQUIRE(cfg && dir, "cfg and dir must not be null");
  return guarded([&] {
    RunConfig copy = cfg->cfg;
    copy.out = dir;
    copy.validate();
    cfg->cfg = std::move(copy);
  });
}

const char* advseq_config_json(advseq_config* cfg) {
  if (!cfg) return "";
  cfg->json = config_to_json_text(cfg->cfg);
  return cfg->json.c_str();
}

void advseq_config_free(advseq_config* cfg) { delete cfg; }

advseq_status advseq_gen_toy(const advseq_config* cfg) {
  ADVSEQ_REQUIRE(cfg, "cfg must not be null");
  return guarded([&] { cmd_gen_toy(cfg->cfg, emit); });
}

advseq_status advseq_pretrain_lm(const advseq_config* cfg) {
  ADVSEQ_REQUIRE(cfg, "cfg must not be null");
  return guarded([&] { cmd_pretrain_lm(cfg->cfg, emit); });
}

advseq_status advseq_train(const advseq_config* cfg, const char* init_checkpoint) {
  ADVSEQ_REQUIRE(cfg, "cfg must not be null");
  return guarded([&] { cmd_train(cfg->cfg, str(init_checkpoint), emit); });
}

advseq_status advseq_attack(const advseq_config* cfg, const char* checkpoint, const char* sentence,
                            const char* input_path) {
  ADVSEQ_REQUIRE(cfg, "cfg must not be null");
  return guarded([&] { cmd_attack(cfg->cfg, str(checkpoint), str(sentence), str(input_path), emit); });
}

advseq_status advseq_noise(const advseq_config* cfg, const char* checkpoint, const char* input_path) {
  ADVSEQ_REQUIRE(cfg, "cfg must not be null");
  return guarded([&] { cmd_noise(cfg->cfg, str(checkpoint), str(input_path), emit); });
}

advseq_status advseq_eval(const advseq_config* cfg, const char* checkpoint, const char* hyp_path,
                          const char* ref_path) {
  ADVSEQ_REQUIRE(cfg, "cfg must not be null");
  return guarded([&] { cmd_eval(cfg->cfg, str(checkpoint), str(hyp_path), str(ref_path), emit); });
}

advseq_status advseq_ablate(const advseq_config* cfg, const char* grid) {
  ADVSEQ_REQUIRE(cfg && grid, "cfg and grid must not be null");
  return guarded([&] { cmd_ablate(cfg->cfg, grid, emit); });
}

advseq_status advseq_model_load(const advseq_config* cfg, const char* checkpoint, advseq_model** out) {
  ADVSEQ_REQUIRE(cfg && checkpoint && out, "cfg, checkpoint and out must not be null");
  return guarded([&] { *out = new advseq_model{load_model(cfg->cfg, checkpoint)}; });
}

advseq_status advseq_model_translate(const advseq_model* model, const char* sentence, char* buffer,
                                     size_t capacity, size_t* needed) {
  ADVSEQ_REQUIRE(model && sentence, "model and sentence must not be null");
  std::string text;
  auto st = guarded([&] {
    const auto& m = model->model;
    TokenSeq x = m.src_vocab.encode(tokenize(sentence));
    TokenSeq y = m.state->mt().greedy_decode(x, 2 * static_cast<int>(x.size()) + 10);
    text = join_tokens(m.trg_vocab.decode(y));
  });
  if (st != ADVSEQ_OK) return st;
  if (needed) *needed = text.size() + 1;
  if (!buffer || capacity < text.size() + 1) {
    return set_error(ADVSEQ_ERR_CONTRACT, "translation needs a buffer of " +
                                              std::to_string(text.size() + 1) + " bytes");
  }
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  return ADVSEQ_OK;
}

void advseq_model_free(advseq_model* model) { delete model; }

advseq_status advseq_bleu(const char* const* hypotheses, const char* const* references, size_t n,
                          double* out) {
  ADVSEQ_REQUIRE(out, "out must not be null");
  ADVSEQ_REQUIRE(n == 0 || (hypotheses && references), "sentence arrays must not be null");
  return guarded([&] {
    std::vector<Tokens> hyps, refs;
    for (size_t i = 0; i < n; ++i) {
      hyps.push_back(tokenize(str(hypotheses[i])));
      refs.push_back(tokenize(str(references[i])));
    }
    *out = bleu(hyps, refs);
  });
}

}  // extern "C"
