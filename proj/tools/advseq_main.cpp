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

// advseq command-line front end. Talks to the toolkit only through the C API.

#include <advseq/advseq.h>

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

int exit_code(advseq_status st) {
  switch (st) {
    case ADVSEQ_OK: return 0;
    case ADVSEQ_ERR_CONFIG: return 2;
    case ADVSEQ_ERR_IO: return 3;
    case ADVSEQ_ERR_FORMAT:
    case ADVSEQ_ERR_DIMENSION: return 4;
    case ADVSEQ_ERR_DATA:
    case ADVSEQ_ERR_VOCABULARY:
    case ADVSEQ_ERR_LENGTH: return 5;
    case ADVSEQ_ERR_DIVERGED: return 6;
    default: return 1;
  }
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

// One machine-parsable line on stderr.
int report(const char* code, const std::string& msg, int exit) {
  std::fprintf(stderr, "error: code=%s msg=\"%s\"\n", code, escape(msg).c_str());
  return exit;
}

int report(advseq_status st) { return report(advseq_status_name(st), advseq_last_error(), exit_code(st)); }

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config,-c", c.config, "JSON run configuration");
  cmd->add_option("--seed", c.seed, "top-level seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out,-o", c.out, "output directory");
  cmd->add_option("--set,overrides", c.overrides, "config overrides as key=value");
}

// Builds the effective configuration: file (or defaults), then overrides,
// then --seed and --out.
advseq_status build_config(const Common& c, advseq_config** cfg) {
  advseq_status st = c.config.empty() ? advseq_config_new(cfg) : advseq_config_load(c.config.c_str(), cfg);
  if (st != ADVSEQ_OK) return st;
  for (const auto& o : c.overrides) {
    if ((st = advseq_config_set(*cfg, o.c_str())) != ADVSEQ_OK) return st;
  }
  if (c.seed >= 0 && (st = advseq_config_set_seed(*cfg, static_cast<uint64_t>(c.seed))) != ADVSEQ_OK) return st;
  if (!c.out.empty() && (st = advseq_config_set_out(*cfg, c.out.c_str())) != ADVSEQ_OK) return st;
  return ADVSEQ_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"advseq: robust sequence-to-sequence training with adversarial inputs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(advseq_version()));

  Common common;
  std::string init, checkpoint, sentence, input, hyp, ref, grid = "switches";

  auto* gen = app.add_subcommand("gen-toy", "write the configured toy task as text files");
  auto* pre = app.add_subcommand("pretrain-lm", "pretrain the source and target language models");
  auto* trn = app.add_subcommand("train", "train a translation model (clean or robust)");
  auto* atk = app.add_subcommand("attack", "perturb source sentences against a trained model");
  auto* noi = app.add_subcommand("noise", "make embedding-neighbour noisy copies of sentences");
  auto* evl = app.add_subcommand("eval", "score hypothesis files or a model's robustness curve");
  auto* abl = app.add_subcommand("ablate", "train and score the loss-term or ratio ablation grid");
  auto* cfg_cmd = app.add_subcommand("config", "print the resolved configuration");
  for (auto* cmd : {gen, pre, trn, atk, noi, evl, abl, cfg_cmd}) add_common(cmd, common);

  trn->add_option("--init", init, "checkpoint to start from (pretrained LMs or a run to resume)");
  atk->add_option("--checkpoint", checkpoint, "trained model")->required();
  atk->add_option("--sentence,-s", sentence, "sentence to attack");
  atk->add_option("--input,-i", input, "file with one sentence per line");
  noi->add_option("--checkpoint", checkpoint, "model supplying embeddings and the source LM")->required();
  noi->add_option("--input,-i", input, "file with one sentence per line")->required();
  evl->add_option("--checkpoint", checkpoint, "model whose robustness curve to compute");
  evl->add_option("--hyp", hyp, "hypothesis file");
  evl->add_option("--ref", ref, "reference file");
  abl->add_option("--grid", grid, "switches or ratios")->check(CLI::IsMember({"switches", "ratios"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), 2);
  }

  advseq_config* cfg = nullptr;
  advseq_status st = build_config(common, &cfg);
  if (st == ADVSEQ_OK) {
    if (*gen) st = advseq_gen_toy(cfg);
    else if (*pre) st = advseq_pretrain_lm(cfg);
    else if (*trn) st = advseq_train(cfg, init.c_str());
    else if (*atk) st = advseq_attack(cfg, checkpoint.c_str(), sentence.c_str(), input.c_str());
    else if (*noi) st = advseq_noise(cfg, checkpoint.c_str(), input.c_str());
    else if (*evl) st = advseq_eval(cfg, checkpoint.c_str(), hyp.c_str(), ref.c_str());
    else if (*abl) st = advseq_ablate(cfg, grid.c_str());
    else if (*cfg_cmd) std::fputs(advseq_config_json(cfg), stdout);
  }
  int code = st == ADVSEQ_OK ? 0 : report(st);
  advseq_config_free(cfg);
  return code;
}
