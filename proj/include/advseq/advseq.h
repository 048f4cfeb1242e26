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

#ifndef ADVSEQ_ADVSEQ_H_
#define ADVSEQ_ADVSEQ_H_

/* C interface to the advseq toolkit: robust sequence-to-sequence training
 * with gradient-guided adversarial inputs.
 *
 * Every fallible call returns an advseq_status. On failure the message is
 * available from advseq_last_error() until the next failing call on the same
 * thread. Handles are opaque and must be released with their _free function.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ADVSEQ_API __declspec(dllexport)
#else
#define ADVSEQ_API __attribute__((visibility("default")))
#endif

typedef enum advseq_status {
  ADVSEQ_OK = 0,
  ADVSEQ_ERR_CONFIG = 1,     /* malformed or invalid configuration, bad usage */
  ADVSEQ_ERR_IO = 2,         /* missing or unwritable file */
  ADVSEQ_ERR_FORMAT = 3,     /* unreadable checkpoint, shape mismatch against it */
  ADVSEQ_ERR_DIMENSION = 4,  /* tensor shape disagreement */
  ADVSEQ_ERR_DATA = 5,       /* inconsistent corpus contents */
  ADVSEQ_ERR_VOCABULARY = 6, /* token id outside the vocabulary */
  ADVSEQ_ERR_LENGTH = 7,     /* sequence length contract violated */
  ADVSEQ_ERR_DEGENERATE = 8, /* input admits no meaningful result */
  ADVSEQ_ERR_CONTRACT = 9,   /* precondition violated by the caller */
  ADVSEQ_ERR_DIVERGED = 10,  /* training produced a non-finite loss */
  ADVSEQ_ERR_INTERNAL = 11   /* anything else */
} advseq_status;

/* Short lowercase name of a status, e.g. "config". Never NULL. */
ADVSEQ_API const char* advseq_status_name(advseq_status status);

/* Message of the most recent failure on this thread; "" if none. */
ADVSEQ_API const char* advseq_last_error(void);

/* Library version string. */
ADVSEQ_API const char* advseq_version(void);

/* Report lines from commands go to this callback. The default writes each
 * line to stdout. Pass NULL to restore the default. */
typedef void (*advseq_print_fn)(const char* line, void* user);
ADVSEQ_API void advseq_set_printer(advseq_print_fn fn, void* user);

/* ---- Run configuration ------------------------------------------------- */

typedef struct advseq_config advseq_config;

/* Defaults. */
ADVSEQ_API advseq_status advseq_config_new(advseq_config** out);
/* Reads a JSON config file. Unknown keys are rejected. */
ADVSEQ_API advseq_status advseq_config_load(const char* path, advseq_config** out);
ADVSEQ_API advseq_status advseq_config_parse(const char* json_text, advseq_config** out);
/* Overrides one key, e.g. "train.steps=200" or "adv.gamma_src=0". */
ADVSEQ_API advseq_status advseq_config_set(advseq_config* cfg, const char* assignment);
ADVSEQ_API advseq_status advseq_config_set_seed(advseq_config* cfg, uint64_t seed);
ADVSEQ_API advseq_status advseq_config_set_out(advseq_config* cfg, const char* dir);
/* Resolved config as JSON. The string is owned by the handle and stays valid
 * until the next call on it. */
ADVSEQ_API const char* advseq_config_json(advseq_config* cfg);
ADVSEQ_API void advseq_config_free(advseq_config* cfg);

/* ---- Commands ---------------------------------------------------------- */
/* Each writes its artifacts under the configured output directory. Optional
 * string arguments may be NULL or "". */

ADVSEQ_API advseq_status advseq_gen_toy(const advseq_config* cfg);
ADVSEQ_API advseq_status advseq_pretrain_lm(const advseq_config* cfg);
ADVSEQ_API advseq_status advseq_train(const advseq_config* cfg, const char* init_checkpoint);
ADVSEQ_API advseq_status advseq_attack(const advseq_config* cfg, const char* checkpoint,
                                       const char* sentence, const char* input_path);
ADVSEQ_API advseq_status advseq_noise(const advseq_config* cfg, const char* checkpoint,
                                      const char* input_path);
ADVSEQ_API advseq_status advseq_eval(const advseq_config* cfg, const char* checkpoint,
                                     const char* hyp_path, const char* ref_path);
/* grid: "switches" or "ratios". */
ADVSEQ_API advseq_status advseq_ablate(const advseq_config* cfg, const char* grid);

/* ---- Models ------------------------------------------------------------ */

typedef struct advseq_model advseq_model;

/* Loads a checkpoint written by train or pretrain-lm. The architecture comes
 * from cfg; vocabularies from data.src_vocab / data.trg_vocab when set, else
 * from src.vocab / trg.vocab beside the checkpoint. */
ADVSEQ_API advseq_status advseq_model_load(const advseq_config* cfg, const char* checkpoint,
                                           advseq_model** out);
/* Greedy translation of one whitespace-tokenized sentence. Writes at most
 * `capacity` bytes including the terminator; `*needed` receives the full
 * length plus one. A too-small buffer yields ADVSEQ_ERR_CONTRACT. */
ADVSEQ_API advseq_status advseq_model_translate(const advseq_model* model, const char* sentence,
                                                char* buffer, size_t capacity, size_t* needed);
ADVSEQ_API void advseq_model_free(advseq_model* model);

/* ---- Scoring ----------------------------------------------------------- */

/* Case-insensitive corpus BLEU (0-100) of n whitespace-tokenized sentences. */
ADVSEQ_API advseq_status advseq_bleu(const char* const* hypotheses, const char* const* references,
                                     size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* ADVSEQ_ADVSEQ_H_ */
