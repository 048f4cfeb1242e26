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

#include "app/commands.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "common/error.h"
#include "data/toy_task.h"
#include "eval/bleu.h"
#include "eval/experiments.h"
#include "eval/noise.h"
#include "train/checkpoint.h"
#include "train/trainer.h"

ADVSEQ_NAMESPACE_BEGIN

namespace fs = std::filesystem;

namespace {

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out) / name).string();
}

void ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create output directory '" + cfg.out + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path);
}

// Every command leaves the exact configuration it ran with next to its output.
void begin(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  write_text(out_path(cfg, "config.json"), config_to_json_text(cfg));
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

ExperimentSetup sized_setup(const RunConfig& cfg, const Vocab& src, const Vocab& trg) {
  ExperimentSetup s = cfg.setup;
  s.mt.src_vocab_size = src.size();
  s.mt.trg_vocab_size = trg.size();
  return s;
}

std::unique_ptr<TrainState> make_state(const ExperimentSetup& s) {
  return std::make_unique<TrainState>(s.mt, s.lm, s.train.adam, s.seed);
}

LmPretrainConfig pretrain_config(const ExperimentSetup& s) {
  LmPretrainConfig lp = s.lm_pretrain;
  lp.seed = derive_seed(s.seed, "lm.pretrain");
  return lp;
}

void save_vocabs(const RunConfig& cfg, const Corpora& data) {
  data.src_vocab.save(out_path(cfg, "src.vocab"));
  data.trg_vocab.save(out_path(cfg, "trg.vocab"));
}

std::vector<Tokens> read_input(const std::string& sentence, const std::string& input_path) {
  if (!sentence.empty() && !input_path.empty())
    fail(ErrorCode::kConfig, "give either a sentence or an input file, not both");
  if (!sentence.empty()) return {tokenize(sentence)};
  if (input_path.empty()) fail(ErrorCode::kConfig, "this command needs an input sentence or --input file");
  return read_lines(input_path);
}

// Renders a perturbed id sequence, keeping the original surface text at
// every unchanged position so unknown words survive the round trip.
Tokens render(const Tokens& original, std::span<const TokenId> before, std::span<const TokenId> after,
              const Vocab& vocab) {
  Tokens out;
  out.reserve(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    out.push_back(before[i] == after[i] ? original[i] : vocab.token(after[i]));
  }
  return out;
}

}  // namespace

LoadedModel load_model(const RunConfig& cfg, const std::string& checkpoint) {
  if (checkpoint.empty()) fail(ErrorCode::kConfig, "this command needs --checkpoint");
  if (!fs::exists(checkpoint)) fail(ErrorCode::kIo, "checkpoint '" + checkpoint + "' does not exist");
  fs::path dir = fs::path(checkpoint).parent_path();
  auto vocab_path = [&](const std::string& configured, const char* name) {
    return configured.empty() ? (dir / name).string() : configured;
  };
  LoadedModel m;
  m.src_vocab = Vocab::load(vocab_path(cfg.data.src_vocab, "src.vocab"));
  m.trg_vocab = Vocab::load(vocab_path(cfg.data.trg_vocab, "trg.vocab"));
  m.state = make_state(sized_setup(cfg, m.src_vocab, m.trg_vocab));
  load_checkpoint(checkpoint, *m.state);
  return m;
}

Corpora prepare_data(const RunConfig& cfg, const Vocab* src_vocab, const Vocab* trg_vocab) {
  Corpora c;
  const auto& d = cfg.data;
  if (d.toy) {
    auto splits = make_toy_splits(*d.toy, d.valid_size, d.test_size);
    c.train_text = std::move(splits.train);
    c.valid_text = std::move(splits.valid);
    c.test_text = std::move(splits.test);
  } else {
    auto load_pair = [](const std::string& s, const std::string& t, const char* what) {
      if (s.empty() != t.empty())
        fail(ErrorCode::kConfig, std::string("data.") + what + "_src and data." + what +
                                     "_trg must be given together");
      return s.empty() ? ParallelText{} : load_parallel_text(s, t);
    };
    c.train_text = load_pair(d.train_src, d.train_trg, "train");
    c.valid_text = load_pair(d.valid_src, d.valid_trg, "valid");
    c.test_text = load_pair(d.test_src, d.test_trg, "test");
  }

  auto vocab_for = [&](const std::string& path, const std::vector<Tokens>& side) {
    if (&side == &c.train_text.src && src_vocab) return *src_vocab;
    if (&side == &c.train_text.trg && trg_vocab) return *trg_vocab;
    if (!path.empty()) return Vocab::load(path);
    if (side.empty())
      fail(ErrorCode::kData, "no vocabulary file and no training text to build one from");
    return Vocab::build(side, d.min_count);
  };
  c.src_vocab = vocab_for(d.src_vocab, c.train_text.src);
  c.trg_vocab = vocab_for(d.trg_vocab, c.train_text.trg);
  c.train = encode_parallel(c.train_text, c.src_vocab, c.trg_vocab);
  c.valid = encode_parallel(c.valid_text, c.src_vocab, c.trg_vocab);
  c.test = encode_parallel(c.test_text, c.src_vocab, c.trg_vocab);
  return c;
}

void cmd_gen_toy(const RunConfig& cfg, const Printer& print) {
  if (!cfg.data.toy) fail(ErrorCode::kConfig, "gen-toy needs a data.toy section");
  begin(cfg);
  auto data = prepare_data(cfg);
  write_lines(out_path(cfg, "train.src"), data.train_text.src);
  write_lines(out_path(cfg, "train.trg"), data.train_text.trg);
  write_lines(out_path(cfg, "valid.src"), data.valid_text.src);
  write_lines(out_path(cfg, "valid.trg"), data.valid_text.trg);
  write_lines(out_path(cfg, "test.src"), data.test_text.src);
  write_lines(out_path(cfg, "test.trg"), data.test_text.trg);
  save_vocabs(cfg, data);
  print("wrote " + std::to_string(data.train.size()) + " train, " + std::to_string(data.valid.size()) +
        " valid, " + std::to_string(data.test.size()) + " test pairs to " + cfg.out);
}

void cmd_pretrain_lm(const RunConfig& cfg, const Printer& print) {
  begin(cfg);
  auto data = prepare_data(cfg);
  if (data.train.empty()) fail(ErrorCode::kData, "pretrain-lm needs training text");
  auto setup = sized_setup(cfg, data.src_vocab, data.trg_vocab);
  auto state = make_state(setup);
  auto [tx, ty] = pretrain_language_models(*state, data.train, pretrain_config(setup));

  std::ostringstream csv;
  csv << "step,loss_x,loss_y\n";
  for (std::size_t i = 0; i < tx.size(); ++i) csv << i + 1 << ',' << tx[i] << ',' << ty[i] << '\n';
  write_text(out_path(cfg, "lm_loss.csv"), csv.str());
  save_vocabs(cfg, data);
  save_checkpoint(*state, out_path(cfg, "lm.ckpt"));
  if (!tx.empty()) {
    print("lm pretraining: " + std::to_string(tx.size()) + " steps, final loss x " + fixed(tx.back(), 4) +
          ", y " + fixed(ty.back(), 4));
  }
  print("wrote " + out_path(cfg, "lm.ckpt"));
}

void cmd_train(const RunConfig& cfg, const std::string& init, const Printer& print) {
  begin(cfg);
  auto data = prepare_data(cfg);
  if (data.train.empty()) fail(ErrorCode::kData, "train needs training text");
  auto setup = sized_setup(cfg, data.src_vocab, data.trg_vocab);
  auto state = make_state(setup);
  if (!init.empty()) {
    if (!fs::exists(init)) fail(ErrorCode::kIo, "checkpoint '" + init + "' does not exist");
    load_checkpoint(init, *state);
  } else if (setup.train.switches.needs_lm() && setup.lm_pretrain.steps > 0) {
    pretrain_language_models(*state, data.train, pretrain_config(setup));
    print("pretrained language models for " + std::to_string(setup.lm_pretrain.steps) + " steps");
  }
  save_vocabs(cfg, data);

  // Appending keeps the log of a resumed run in one file.
  std::ofstream metrics(out_path(cfg, "metrics.jsonl"), state->step() > 0 ? std::ios::app : std::ios::trunc);
  if (!metrics) fail(ErrorCode::kIo, "cannot write " + out_path(cfg, "metrics.jsonl"));
  TrainHooks hooks;
  hooks.on_step = [&](const StepReport& r) { metrics << r.to_json() << '\n'; };
  hooks.on_checkpoint = [&](const TrainState& s) {
    metrics.flush();
    save_checkpoint(s, out_path(cfg, "ckpt-" + std::to_string(s.step()) + ".bin"));
  };
  std::vector<StepReport> reports;
  try {
    reports = train(data.train, setup.train, *state, hooks);
  } catch (...) {
    metrics.flush();
    throw;
  }
  metrics.flush();
  save_checkpoint(*state, out_path(cfg, "model.ckpt"));

  if (!reports.empty()) {
    const auto& last = reports.back();
    print("step " + std::to_string(last.step) + " loss " + fixed(last.total, 4));
  }
  if (!data.valid.empty()) print("valid BLEU " + fixed(validation_bleu(state->mt(), data.valid)));
  print("wrote " + out_path(cfg, "model.ckpt"));
}

void cmd_attack(const RunConfig& cfg, const std::string& checkpoint, const std::string& sentence,
                const std::string& input_path, const Printer& print) {
  auto lines = read_input(sentence, input_path);
  begin(cfg);
  auto model = load_model(cfg, checkpoint);
  const auto& mt = model.state->mt();

  std::vector<SentencePair> pairs;
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    TokenSeq x = model.src_vocab.encode(lines[i]);
    // No reference is given, so the attack targets the model's own output.
    TokenSeq y = mt.greedy_decode(x, 2 * static_cast<int>(x.size()) + 10);
    pairs.push_back(SentencePair::from_content(x, y));
    ids.push_back(i);
  }
  std::vector<Tokens> attacked;
  const std::size_t chunk = 64;
  for (std::size_t lo = 0; lo < pairs.size(); lo += chunk) {
    std::size_t hi = std::min(pairs.size(), lo + chunk);
    std::span<const SentencePair> part(pairs.data() + lo, hi - lo);
    std::span<const std::size_t> part_ids(ids.data() + lo, hi - lo);
    auto robust = make_robust_inputs(part, part_ids, *model.state, cfg.setup.train.adv,
                                     /*adv_source=*/true, /*adv_target=*/false,
                                     derive_seed(cfg.seed, "attack"));
    for (std::size_t k = 0; k < part.size(); ++k) {
      const auto& orig = lines[lo + k];
      auto before = std::span<const TokenId>(part[k].x).first(orig.size());
      auto after = std::span<const TokenId>(robust.pairs[k].x).first(orig.size());
      attacked.push_back(render(orig, before, after, model.src_vocab));
    }
  }
  write_lines(out_path(cfg, "attacked.src"), attacked);
  for (const auto& a : attacked) print(join_tokens(a));
}

void cmd_noise(const RunConfig& cfg, const std::string& checkpoint, const std::string& input_path,
               const Printer& print) {
  auto lines = read_input("", input_path);
  begin(cfg);
  auto model = load_model(cfg, checkpoint);
  std::vector<TokenSeq> clean;
  for (const auto& l : lines) clean.push_back(model.src_vocab.encode(l));
  auto neighbors = NeighborTable::build(model.state->mt().source_embedding(), cfg.noise.pool);
  auto noisy = make_noisy_corpus(clean, cfg.noise, neighbors, model.state->lm_x());

  std::vector<Tokens> out;
  std::int64_t changed = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out.push_back(render(lines[i], clean[i], noisy[i], model.src_vocab));
    for (std::size_t j = 0; j < clean[i].size(); ++j) changed += clean[i][j] != noisy[i][j];
  }
  write_lines(out_path(cfg, "noisy.src"), out);
  print("noised " + std::to_string(lines.size()) + " sentences at fraction " + fixed(cfg.noise.fraction) +
        ", " + std::to_string(changed) + " tokens replaced; wrote " + out_path(cfg, "noisy.src"));
}

void cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& hyp_path,
              const std::string& ref_path, const Printer& print) {
  if (!hyp_path.empty() || !ref_path.empty()) {
    if (hyp_path.empty() || ref_path.empty()) fail(ErrorCode::kConfig, "eval needs both --hyp and --ref");
    auto hyps = read_lines(hyp_path);
    auto refs = read_lines(ref_path);
    if (hyps.size() != refs.size()) {
      fail(ErrorCode::kData, "line count mismatch: " + hyp_path + " has " + std::to_string(hyps.size()) +
                                 " lines, " + ref_path + " has " + std::to_string(refs.size()));
    }
    print("BLEU " + fixed(bleu(hyps, refs)));
    return;
  }

  begin(cfg);
  auto model = load_model(cfg, checkpoint);
  auto data = prepare_data(cfg, &model.src_vocab, &model.trg_vocab);
  if (data.test.empty()) fail(ErrorCode::kData, "eval needs a test set (data.toy or data.test_*)");

  std::vector<TokenSeq> sources, refs;
  for (const auto& p : data.test) {
    sources.push_back(content_of(p.x));
    refs.push_back(content_of(p.y));
  }
  auto report = robustness_curve(model.state->mt(), sources, refs, cfg.eval.fractions, cfg.noise,
                                 model.state->lm_x());
  write_text(out_path(cfg, "robustness.csv"), report.to_csv());
  print(report.to_table("robustness of " + checkpoint));
}

void cmd_ablate(const RunConfig& cfg, const std::string& grid, const Printer& print) {
  static const std::vector<double> kRatios{0.0, 0.25, 0.5, 0.75};
  std::vector<AblationRow> rows;
  if (grid == "switches") {
    rows = switch_rows(cfg.setup.train.adv.gamma_src, cfg.setup.train.adv.gamma_trg);
  } else if (grid == "ratios") {
    rows = ratio_grid_rows(kRatios, kRatios);
  } else {
    fail(ErrorCode::kConfig, "unknown ablation grid '" + grid + "' (expected switches or ratios)");
  }
  begin(cfg);
  auto data = prepare_data(cfg);
  if (data.train.empty()) fail(ErrorCode::kData, "ablate needs training text");
  auto setup = sized_setup(cfg, data.src_vocab, data.trg_vocab);
  auto results = ablation_run(data.train, data.valid, setup, rows, print);
  write_text(out_path(cfg, "ablation.csv"), ablation_csv(results));
  print(grid == "ratios" ? ratio_grid_table(results, kRatios, kRatios) : ablation_table(results));
}

ADVSEQ_NAMESPACE_END
