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

#include "train/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

namespace {

constexpr const char* kMagic = "ADVSEQ1";

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host order and must be little-endian");

struct Entry {
  std::string name;
  std::string dtype;  // f32, f64, i64, u8
  Shape shape;
  std::vector<char> bytes;
};

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "f32") return 4;
  if (dtype == "f64" || dtype == "i64") return 8;
  if (dtype == "u8") return 1;
  fail(ErrorCode::kFormat, "unknown dtype '" + dtype + "' in checkpoint");
}

Entry real_entry(const std::string& name, const Tensor& t) {
  Entry e{name, kRealDtype, t.shape(), {}};
  const auto d = t.data();
  e.bytes.resize(d.size() * sizeof(Real));
  std::memcpy(e.bytes.data(), d.data(), e.bytes.size());
  return e;
}

Entry int_entry(const std::string& name, std::int64_t v) {
  Entry e{name, "i64", {1}, std::vector<char>(8)};
  std::memcpy(e.bytes.data(), &v, 8);
  return e;
}

Entry text_entry(const std::string& name, const std::string& text) {
  Entry e{name, "u8", {static_cast<std::int64_t>(text.size())}, {}};
  e.bytes.assign(text.begin(), text.end());
  return e;
}

using EntryMap = std::map<std::string, Entry>;

EntryMap read_entries(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    fail(ErrorCode::kFormat, "'" + path + "' is not a checkpoint (bad magic)");
  }
  if (!std::getline(in, line)) fail(ErrorCode::kFormat, "checkpoint manifest truncated");
  std::size_t count = 0;
  try {
    count = std::stoull(line);
  } catch (const std::exception&) {
    fail(ErrorCode::kFormat, "checkpoint entry count '" + line + "' is not a number");
  }
  std::vector<Entry> order;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) fail(ErrorCode::kFormat, "checkpoint manifest truncated");
    std::istringstream ls(line);
    Entry e;
    std::size_t ndim = 0;
    if (!(ls >> e.name >> e.dtype >> ndim)) {
      fail(ErrorCode::kFormat, "malformed manifest line '" + line + "'");
    }
    e.shape.resize(ndim);
    for (auto& d : e.shape) {
      if (!(ls >> d) || d < 0) fail(ErrorCode::kFormat, "malformed shape for '" + e.name + "'");
    }
    order.push_back(std::move(e));
  }
  EntryMap out;
  for (auto& e : order) {
    const std::size_t n = static_cast<std::size_t>(shape_numel(e.shape)) * dtype_size(e.dtype);
    e.bytes.resize(n);
    if (!in.read(e.bytes.data(), static_cast<std::streamsize>(n))) {
      fail(ErrorCode::kFormat, "checkpoint payload truncated at '" + e.name + "'");
    }
    std::string name = e.name;
    if (!out.emplace(name, std::move(e)).second) {
      fail(ErrorCode::kFormat, "duplicate checkpoint entry '" + name + "'");
    }
  }
  return out;
}

const Entry& require(const EntryMap& entries, const std::string& name) {
  auto it = entries.find(name);
  if (it == entries.end()) fail(ErrorCode::kFormat, "checkpoint lacks entry '" + name + "'");
  return it->second;
}

// Copies a stored float tensor into `t`, converting precision if needed.
void restore(const EntryMap& entries, const std::string& name, Tensor t) {
  const Entry& e = require(entries, name);
  if (e.shape != t.shape()) {
    fail(ErrorCode::kFormat, "shape mismatch for '" + name + "': checkpoint " + shape_str(e.shape) +
                                 ", model " + shape_str(t.shape()));
  }
  auto dst = t.data();
  if (e.dtype == "f32") {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      float v;
      std::memcpy(&v, e.bytes.data() + i * 4, 4);
      dst[i] = static_cast<Real>(v);
    }
  } else if (e.dtype == "f64") {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      double v;
      std::memcpy(&v, e.bytes.data() + i * 8, 8);
      dst[i] = static_cast<Real>(v);
    }
  } else {
    fail(ErrorCode::kFormat, "entry '" + name + "' has dtype " + e.dtype + ", expected a float type");
  }
}

std::int64_t read_int(const EntryMap& entries, const std::string& name) {
  const Entry& e = require(entries, name);
  if (e.dtype != "i64" || e.bytes.size() != 8) {
    fail(ErrorCode::kFormat, "entry '" + name + "' must be a single i64");
  }
  std::int64_t v;
  std::memcpy(&v, e.bytes.data(), 8);
  return v;
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::string& path) {
  std::vector<Entry> entries;
  for (const auto& [name, t] : state.store().entries()) entries.push_back(real_entry(name, t));
  const Adam& opt = state.optimizer();
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    entries.push_back(real_entry("opt.m." + opt.params()[i].first, opt.first_moments()[i]));
    entries.push_back(real_entry("opt.v." + opt.params()[i].first, opt.second_moments()[i]));
  }
  entries.push_back(int_entry("meta.step", state.step()));
  entries.push_back(int_entry("meta.opt_step", opt.steps_taken()));
  entries.push_back(int_entry("meta.seed", static_cast<std::int64_t>(state.seed())));
  entries.push_back(int_entry("meta.lm_pretrained", state.lms_pretrained() ? 1 : 0));
  std::ostringstream rng;
  rng << state.dropout_rng().engine();
  entries.push_back(text_entry("meta.dropout_rng", rng.str()));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write checkpoint '" + path + "'");
    out << kMagic << '\n' << entries.size() << '\n';
    for (const auto& e : entries) {
      out << e.name << ' ' << e.dtype << ' ' << e.shape.size();
      for (auto d : e.shape) out << ' ' << d;
      out << '\n';
    }
    for (const auto& e : entries) out.write(e.bytes.data(), static_cast<std::streamsize>(e.bytes.size()));
    if (!out) fail(ErrorCode::kIo, "failed writing checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(ErrorCode::kIo, "cannot move checkpoint into place at '" + path + "'");
  }
}

void load_checkpoint(const std::string& path, TrainState& state) {
  const EntryMap entries = read_entries(path);
  std::size_t used = 0;
  for (const auto& [name, t] : state.store().entries()) {
    restore(entries, name, t);
    ++used;
  }
  Adam& opt = state.optimizer();
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    restore(entries, "opt.m." + opt.params()[i].first, opt.first_moments()[i]);
    restore(entries, "opt.v." + opt.params()[i].first, opt.second_moments()[i]);
    used += 2;
  }
  state.set_step(read_int(entries, "meta.step"));
  opt.set_steps_taken(read_int(entries, "meta.opt_step"));
  state.set_lms_pretrained(read_int(entries, "meta.lm_pretrained") != 0);
  const Entry& rng = require(entries, "meta.dropout_rng");
  std::istringstream rs(std::string(rng.bytes.begin(), rng.bytes.end()));
  if (!(rs >> state.dropout_rng().engine())) fail(ErrorCode::kFormat, "corrupt random state in checkpoint");
  used += 5;
  (void)read_int(entries, "meta.seed");
  if (used != entries.size()) {
    for (const auto& [name, e] : entries) {
      if (!state.store().contains(name) && name.rfind("opt.", 0) != 0 && name.rfind("meta.", 0) != 0) {
        fail(ErrorCode::kFormat, "checkpoint entry '" + name + "' has no counterpart in the model");
      }
    }
    fail(ErrorCode::kFormat, "checkpoint holds " + std::to_string(entries.size()) +
                                 " entries, model expects " + std::to_string(used));
  }
}

void load_parameters(const std::string& path, TrainState& state, const std::string& prefix) {
  const EntryMap entries = read_entries(path);
  bool any = false;
  for (const auto& [name, t] : state.store().entries()) {
    if (name.rfind(prefix, 0) != 0) continue;
    restore(entries, name, t);
    any = true;
  }
  if (!any) fail(ErrorCode::kContract, "no parameters match prefix '" + prefix + "'");
}

ADVSEQ_NAMESPACE_END
