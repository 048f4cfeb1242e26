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

#include "eval/experiments.h"

#include <cstdio>
#include <sstream>

#include "common/error.h"
#include "eval/bleu.h"
#include "eval/noise.h"

ADVSEQ_NAMESPACE_BEGIN

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const char* mark(bool on) { return on ? "x" : "-"; }

}  // namespace

std::vector<AblationRow> switch_rows(double gamma_src, double gamma_trg) {
  auto row = [&](std::string name, bool clean, bool src, bool trg, bool lm) {
    return AblationRow{std::move(name), LossSwitches{clean, lm, src, trg}, gamma_src, gamma_trg};
  };
  return {
      row("clean", true, false, false, false),
      row("clean+lm", true, false, false, true),
      row("clean+src+lm", true, true, false, true),
      row("clean+trg+lm", true, false, true, true),
      row("clean+src+trg", true, true, true, false),
      row("all", true, true, true, true),
  };
}

std::vector<AblationRow> ratio_grid_rows(std::span<const double> src_ratios,
                                         std::span<const double> trg_ratios) {
  std::vector<AblationRow> rows;
  for (double gs : src_ratios) {
    for (double gt : trg_ratios) {
      const bool src = gs > 0.0, trg = gt > 0.0;
      rows.push_back(AblationRow{"gamma=" + fmt("%.2f", gs) + "/" + fmt("%.2f", gt),
                                 LossSwitches{true, src || trg, src, trg}, gs, gt});
    }
  }
  return rows;
}

std::unique_ptr<TrainState> train_model(std::span<const SentencePair> corpus,
                                        const ExperimentSetup& setup, std::vector<StepReport>* trace,
                                        const TrainHooks& hooks) {
  auto state = std::make_unique<TrainState>(setup.mt, setup.lm, setup.train.adam, setup.seed);
  if (setup.train.switches.needs_lm() && setup.lm_pretrain.steps > 0) {
    LmPretrainConfig lp = setup.lm_pretrain;
    lp.seed = derive_seed(setup.seed, "lm.pretrain");
    pretrain_language_models(*state, corpus, lp);
  }
  auto reports = train(corpus, setup.train, *state, hooks);
  if (trace) *trace = std::move(reports);
  return state;
}

double validation_bleu(const Transformer& mt, std::span<const SentencePair> valid) {
  std::vector<TokenSeq> src, ref;
  for (const auto& p : valid) {
    src.push_back(content_of(p.x));
    ref.push_back(content_of(p.y));
  }
  return bleu(translate(mt, src), ref);
}

std::vector<AblationResult> ablation_run(std::span<const SentencePair> train,
                                         std::span<const SentencePair> valid,
                                         const ExperimentSetup& base,
                                         std::span<const AblationRow> rows,
                                         const ProgressFn& progress) {
  if (valid.empty()) fail(ErrorCode::kData, "ablation needs a nonempty validation set");
  std::vector<AblationResult> results;
  for (const auto& row : rows) {
    ExperimentSetup setup = base;
    setup.train.switches = row.switches;
    setup.train.adv.gamma_src = row.gamma_src;
    setup.train.adv.gamma_trg = row.gamma_trg;
    AblationResult r;
    r.row = row;
    auto state = train_model(train, setup, &r.trace);
    r.bleu = validation_bleu(state->mt(), valid);
    if (progress) progress(row.name + " bleu=" + fmt("%.2f", r.bleu));
    results.push_back(std::move(r));
  }
  return results;
}

std::string ablation_csv(std::span<const AblationResult> results) {
  std::ostringstream os;
  os << "name,clean,adv_source,adv_target,lm,gamma_src,gamma_trg,bleu\n";
  for (const auto& r : results) {
    const auto& s = r.row.switches;
    os << r.row.name << ',' << s.clean << ',' << s.adv_source << ',' << s.adv_target << ',' << s.lm
       << ',' << fmt("%.2f", r.row.gamma_src) << ',' << fmt("%.2f", r.row.gamma_trg) << ','
       << fmt("%.2f", r.bleu) << '\n';
  }
  return os.str();
}

std::string ablation_table(std::span<const AblationResult> results) {
  std::ostringstream os;
  os << "clean | x'!=x | z'!=z | lm |   BLEU\n";
  os << "------+-------+-------+----+-------\n";
  for (const auto& r : results) {
    const auto& s = r.row.switches;
    os << "  " << mark(s.clean) << "   |   " << mark(s.adv_source) << "   |   " << mark(s.adv_target)
       << "   | " << mark(s.lm) << "  | " << fmt("%6.2f", r.bleu) << '\n';
  }
  return os.str();
}

std::string ratio_grid_table(std::span<const AblationResult> results,
                             std::span<const double> src_ratios, std::span<const double> trg_ratios) {
  if (results.size() != src_ratios.size() * trg_ratios.size()) {
    fail(ErrorCode::kContract, "grid table needs one result per ratio pair");
  }
  std::ostringstream os;
  os << "src\\trg ";
  for (double t : trg_ratios) os << "| " << fmt("%6.2f", t) << ' ';
  os << '\n';
  std::size_t k = 0;
  for (double s : src_ratios) {
    os << fmt("%7.2f", s) << ' ';
    for (std::size_t j = 0; j < trg_ratios.size(); ++j) os << "| " << fmt("%6.2f", results[k++].bleu) << ' ';
    os << '\n';
  }
  return os.str();
}

ADVSEQ_NAMESPACE_END
