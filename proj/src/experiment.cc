// Copyright 2026 The dprule Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dprule/experiment.h"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dprule/format.h"
#include "json.hpp"

namespace dprule {
namespace {

using json = nlohmann::json;

#define DPRULE_RETURN_IF_ERROR(expr)                  \
  do {                                                \
    if (absl::Status _st = (expr); !_st.ok()) return _st; \
  } while (0)

std::string Field(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : absl::StrCat(path, ".", std::string(key));
}

std::string Index(const std::string& path, std::size_t i) {
  return absl::StrCat(path, "[", i, "]");
}

absl::Status SchemaError(const std::string& path, absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat(path, ": ", what));
}

absl::Status CheckObject(const json& j, const std::string& path,
                         std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) {
    return SchemaError(path.empty() ? "config" : path, "expected an object");
  }
  std::set<std::string_view> allowed(keys);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      return SchemaError(Field(path, key), "unknown field");
    }
  }
  return absl::OkStatus();
}

// Looks up `key`; nullptr when absent and optional.
absl::StatusOr<const json*> Get(const json& parent, const std::string& path,
                                std::string_view key, bool required) {
  auto it = parent.find(std::string(key));
  if (it == parent.end()) {
    if (required) return SchemaError(Field(path, key), "missing required field");
    return nullptr;
  }
  return &*it;
}

absl::Status AsDouble(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) return SchemaError(path, "expected a number");
  out = j.get<double>();
  return absl::OkStatus();
}

absl::Status AsInt(const json& j, const std::string& path, int64_t& out) {
  if (!j.is_number_integer()) return SchemaError(path, "expected an integer");
  out = j.get<int64_t>();
  return absl::OkStatus();
}

absl::Status AsUint(const json& j, const std::string& path, uint64_t& out) {
  if (!j.is_number_unsigned()) {
    return SchemaError(path, "expected a nonnegative integer");
  }
  out = j.get<uint64_t>();
  return absl::OkStatus();
}

absl::Status AsString(const json& j, const std::string& path,
                      std::string& out) {
  if (!j.is_string()) return SchemaError(path, "expected a string");
  out = j.get<std::string>();
  return absl::OkStatus();
}

template <typename T, typename Conv>
absl::Status Read(const json& parent, const std::string& path,
                  std::string_view key, T& out, bool required, Conv conv) {
  auto j = Get(parent, path, key, required);
  if (!j.ok()) return j.status();
  if (*j == nullptr) return absl::OkStatus();
  return conv(**j, Field(path, key), out);
}

absl::Status ReadDouble(const json& p, const std::string& path,
                        std::string_view key, double& out,
                        bool required = false) {
  return Read(p, path, key, out, required, AsDouble);
}

absl::Status ReadInt(const json& p, const std::string& path,
                     std::string_view key, int64_t& out,
                     bool required = false) {
  return Read(p, path, key, out, required, AsInt);
}

template <typename Int>
absl::Status ReadSmallInt(const json& p, const std::string& path,
                          std::string_view key, Int& out,
                          bool required = false) {
  int64_t v = out;
  DPRULE_RETURN_IF_ERROR(ReadInt(p, path, key, v, required));
  out = static_cast<Int>(v);
  return absl::OkStatus();
}

absl::Status ReadBool(const json& p, const std::string& path,
                      std::string_view key, bool& out) {
  return Read(p, path, key, out, false,
              [](const json& j, const std::string& at, bool& o) {
                if (!j.is_boolean()) return SchemaError(at, "expected a boolean");
                o = j.get<bool>();
                return absl::OkStatus();
              });
}

template <typename T, typename Conv>
absl::Status ReadList(const json& parent, const std::string& path,
                      std::string_view key, std::vector<T>& out,
                      bool required, Conv conv) {
  auto j = Get(parent, path, key, required);
  if (!j.ok()) return j.status();
  if (*j == nullptr) return absl::OkStatus();
  const std::string at = Field(path, key);
  if (!(*j)->is_array()) return SchemaError(at, "expected an array");
  out.clear();
  for (std::size_t i = 0; i < (*j)->size(); ++i) {
    T v{};
    DPRULE_RETURN_IF_ERROR(conv((**j)[i], Index(at, i), v));
    out.push_back(std::move(v));
  }
  if (required && out.empty()) return SchemaError(at, "must not be empty");
  return absl::OkStatus();
}

absl::StatusOr<Operator> OperatorFromName(const std::string& s) {
  static const auto* names = new std::map<std::string, Operator>{
      {"!", Operator::kNot},         {"not", Operator::kNot},
      {"&", Operator::kAnd},         {"and", Operator::kAnd},
      {"|", Operator::kOr},          {"or", Operator::kOr},
      {"->", Operator::kImplies},    {"implies", Operator::kImplies},
      {"G", Operator::kAlways},      {"always", Operator::kAlways},
      {"F", Operator::kEventually},  {"eventually", Operator::kEventually},
      {"U", Operator::kUntil},       {"until", Operator::kUntil}};
  auto it = names->find(s);
  if (it == names->end()) {
    return absl::InvalidArgumentError(absl::StrCat("unknown operator '", s, "'"));
  }
  return it->second;
}

absl::StatusOr<RelOp> RelOpFromName(const std::string& s) {
  if (s == ">=") return RelOp::kGe;
  if (s == "<=") return RelOp::kLe;
  if (s == "=") return RelOp::kEq;
  return absl::InvalidArgumentError(absl::StrCat("unknown relation '", s, "'"));
}

absl::Status ParseGrammar(const json& j, const std::string& path,
                          GrammarConfig& g) {
  DPRULE_RETURN_IF_ERROR(CheckObject(
      j, path,
      {"variables", "propositions", "relops", "operators", "interval_endpoints",
       "max_depth", "intervals_parametric"}));
  DPRULE_RETURN_IF_ERROR(ReadList(
      j, path, "variables", g.real_variables, false,
      [](const json& v, const std::string& at, RealVariable& z) {
        DPRULE_RETURN_IF_ERROR(CheckObject(v, at, {"name", "lo", "hi"}));
        DPRULE_RETURN_IF_ERROR(Read(v, at, "name", z.name, true, AsString));
        DPRULE_RETURN_IF_ERROR(ReadDouble(v, at, "lo", z.lo, true));
        return ReadDouble(v, at, "hi", z.hi, true);
      }));
  DPRULE_RETURN_IF_ERROR(
      ReadList(j, path, "propositions", g.propositions, false, AsString));
  g.relops = {RelOp::kGe, RelOp::kLe};
  DPRULE_RETURN_IF_ERROR(ReadList(
      j, path, "relops", g.relops, false,
      [](const json& v, const std::string& at, RelOp& op) {
        std::string s;
        DPRULE_RETURN_IF_ERROR(AsString(v, at, s));
        auto r = RelOpFromName(s);
        if (!r.ok()) return SchemaError(at, r.status().message());
        op = *r;
        return absl::OkStatus();
      }));
  DPRULE_RETURN_IF_ERROR(ReadList(
      j, path, "operators", g.operators, true,
      [](const json& v, const std::string& at, Operator& op) {
        std::string s;
        DPRULE_RETURN_IF_ERROR(AsString(v, at, s));
        auto r = OperatorFromName(s);
        if (!r.ok()) return SchemaError(at, r.status().message());
        op = *r;
        return absl::OkStatus();
      }));
  DPRULE_RETURN_IF_ERROR(ReadList(j, path, "interval_endpoints",
                                  g.interval_endpoints, false, AsDouble));
  DPRULE_RETURN_IF_ERROR(ReadSmallInt(j, path, "max_depth", g.max_depth));
  DPRULE_RETURN_IF_ERROR(
      ReadBool(j, path, "intervals_parametric", g.intervals_parametric));
  if (auto st = g.Validate(); !st.ok()) return SchemaError(path, st.message());
  return absl::OkStatus();
}

absl::Status ParseProtocol(const json& j, const std::string& path,
                           ProtocolConfig& p) {
  DPRULE_RETURN_IF_ERROR(CheckObject(
      j, path,
      {"C_p", "tau", "gate_insertion", "max_iterations", "beta_min", "beta_max",
       "beta_tol", "param_unit"}));
  DPRULE_RETURN_IF_ERROR(ReadDouble(j, path, "C_p", p.exploration_constant));
  DPRULE_RETURN_IF_ERROR(ReadDouble(j, path, "tau", p.tau));
  DPRULE_RETURN_IF_ERROR(ReadBool(j, path, "gate_insertion", p.gate_insertion));
  DPRULE_RETURN_IF_ERROR(ReadInt(j, path, "max_iterations", p.max_iterations));
  DPRULE_RETURN_IF_ERROR(ReadDouble(j, path, "beta_min", p.allocation.beta_min));
  DPRULE_RETURN_IF_ERROR(ReadDouble(j, path, "beta_max", p.allocation.beta_max));
  DPRULE_RETURN_IF_ERROR(ReadDouble(j, path, "beta_tol", p.allocation.beta_tol));
  return ReadDouble(j, path, "param_unit", p.allocation.param_unit);
}

absl::Status ParseSignals(const json& j, const std::string& path,
                          SignalSpec& s) {
  DPRULE_RETURN_IF_ERROR(CheckObject(
      j, path,
      {"count", "length", "cadence", "positive_fraction", "satisfy_fraction",
       "max_attempts"}));
  DPRULE_RETURN_IF_ERROR(ReadSmallInt(j, path, "count", s.count));
  DPRULE_RETURN_IF_ERROR(ReadSmallInt(j, path, "length", s.length));
  DPRULE_RETURN_IF_ERROR(ReadDouble(j, path, "cadence", s.cadence));
  DPRULE_RETURN_IF_ERROR(
      ReadDouble(j, path, "positive_fraction", s.positive_fraction));
  DPRULE_RETURN_IF_ERROR(
      ReadDouble(j, path, "satisfy_fraction", s.satisfy_fraction));
  DPRULE_RETURN_IF_ERROR(ReadSmallInt(j, path, "max_attempts", s.max_attempts));
  if (auto st = s.Validate(); !st.ok()) return SchemaError(path, st.message());
  return absl::OkStatus();
}

absl::Status ParsePopulation(const json& j, const std::string& path,
                             PopulationSpec& s) {
  DPRULE_RETURN_IF_ERROR(CheckObject(
      j, path,
      {"n", "planted", "filler", "jitter", "signals", "enumeration_limit"}));
  DPRULE_RETURN_IF_ERROR(ReadInt(j, path, "n", s.n, true));
  const Vocabulary vocab = s.grammar.vocabulary();
  DPRULE_RETURN_IF_ERROR(ReadList(
      j, path, "planted", s.planted, false,
      [&](const json& v, const std::string& at, PlantedRule& r) {
        DPRULE_RETURN_IF_ERROR(CheckObject(v, at, {"rule", "prevalence"}));
        std::string text;
        DPRULE_RETURN_IF_ERROR(Read(v, at, "rule", text, true, AsString));
        auto rule = Parse(text, vocab);
        if (!rule.ok()) {
          return SchemaError(Field(at, "rule"), rule.status().message());
        }
        r.rule = *std::move(rule);
        return ReadDouble(v, at, "prevalence", r.prevalence, true);
      }));
  DPRULE_RETURN_IF_ERROR(ReadSmallInt(j, path, "filler", s.filler));
  DPRULE_RETURN_IF_ERROR(ReadDouble(j, path, "jitter", s.jitter));
  int64_t limit = static_cast<int64_t>(s.enumeration_limit);
  DPRULE_RETURN_IF_ERROR(ReadInt(j, path, "enumeration_limit", limit));
  if (limit < 1) {
    return SchemaError(Field(path, "enumeration_limit"), "must be >= 1");
  }
  s.enumeration_limit = static_cast<std::size_t>(limit);
  if (auto sig = j.find("signals"); sig != j.end()) {
    DPRULE_RETURN_IF_ERROR(ParseSignals(*sig, Field(path, "signals"), s.signals));
  }
  if (auto st = s.Validate(); !st.ok()) return SchemaError(path, st.message());
  return absl::OkStatus();
}

absl::Status ParseSweep(const json& j, const std::string& path,
                        SweepConfig& s) {
  DPRULE_RETURN_IF_ERROR(
      CheckObject(j, path, {"epsilons", "V", "thetas", "modes", "seeds"}));
  DPRULE_RETURN_IF_ERROR(ReadList(j, path, "epsilons", s.epsilons, true, AsDouble));
  DPRULE_RETURN_IF_ERROR(
      ReadList(j, path, "V", s.valid_thresholds, true, AsDouble));
  DPRULE_RETURN_IF_ERROR(ReadList(j, path, "thetas", s.thetas, true, AsDouble));
  DPRULE_RETURN_IF_ERROR(ReadList(j, path, "modes", s.modes, true, AsString));
  return ReadList(j, path, "seeds", s.seeds, true, AsUint);
}

absl::StatusOr<json> ParseJson(std::string_view text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return absl::InvalidArgumentError("malformed JSON");
  return j;
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::Status WriteFile(const std::filesystem::path& path,
                       std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write ", path.string()));
  }
  return absl::OkStatus();
}

double Mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double SampleStd(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = Mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string FileStem(const RunRecord& r) {
  std::string mode = r.point.mode;
  for (char& c : mode) {
    if (c == ':') c = '-';
  }
  return absl::StrCat("e", FormatDouble(r.point.epsilon), "_v",
                      FormatDouble(r.point.v), "_t",
                      FormatDouble(r.point.theta), "_", mode, "_s", r.seed);
}

}  // namespace

absl::Status ExperimentConfig::Validate() const {
  DPRULE_RETURN_IF_ERROR(population.Validate());
  if (sweep.epsilons.empty() || sweep.valid_thresholds.empty() ||
      sweep.thetas.empty() || sweep.modes.empty() || sweep.seeds.empty()) {
    return absl::InvalidArgumentError("sweep lists must not be empty");
  }
  if (!(tau_vote >= 0 && tau_vote <= 1)) {
    return SchemaError("tau_vote", "must be in [0, 1]");
  }
  for (std::size_t i = 0; i < sweep.modes.size(); ++i) {
    AllocationConfig a = protocol.allocation;
    if (auto st = ParseAllocationMode(sweep.modes[i], a); !st.ok()) {
      return SchemaError(Index("sweep.modes", i), st.message());
    }
  }
  for (const GridPoint& g : ExpandGrid(sweep)) {
    ProtocolConfig p = protocol;
    p.epsilon = g.epsilon;
    p.valid_threshold = g.v;
    p.theta = g.theta;
    p.num_clients = population.n;
    DPRULE_RETURN_IF_ERROR(ParseAllocationMode(g.mode, p.allocation));
    if (auto st = p.Validate(); !st.ok()) {
      return SchemaError("sweep", absl::StrCat(
                                      "epsilon=", g.epsilon, " V=", g.v,
                                      " theta=", g.theta, " mode=", g.mode,
                                      ": ", st.message()));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(std::string_view text) {
  auto j = ParseJson(text);
  if (!j.ok()) return j.status();
  DPRULE_RETURN_IF_ERROR(CheckObject(
      *j, "",
      {"seed", "output_dir", "grammar", "protocol", "population", "sweep",
       "tau_vote"}));
  ExperimentConfig cfg;
  DPRULE_RETURN_IF_ERROR(Read(*j, "", "seed", cfg.seed, false, AsUint));
  DPRULE_RETURN_IF_ERROR(
      Read(*j, "", "output_dir", cfg.output_dir, false, AsString));
  DPRULE_RETURN_IF_ERROR(ReadDouble(*j, "", "tau_vote", cfg.tau_vote));
  auto g = Get(*j, "", "grammar", true);
  if (!g.ok()) return g.status();
  DPRULE_RETURN_IF_ERROR(ParseGrammar(**g, "grammar", cfg.protocol.grammar));
  cfg.population.grammar = cfg.protocol.grammar;
  if (auto p = j->find("protocol"); p != j->end()) {
    DPRULE_RETURN_IF_ERROR(ParseProtocol(*p, "protocol", cfg.protocol));
  }
  auto pop = Get(*j, "", "population", true);
  if (!pop.ok()) return pop.status();
  DPRULE_RETURN_IF_ERROR(ParsePopulation(**pop, "population", cfg.population));
  auto sweep = Get(*j, "", "sweep", true);
  if (!sweep.ok()) return sweep.status();
  DPRULE_RETURN_IF_ERROR(ParseSweep(**sweep, "sweep", cfg.sweep));
  cfg.protocol.num_clients = cfg.population.n;
  DPRULE_RETURN_IF_ERROR(cfg.Validate());
  return cfg;
}

absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  auto cfg = ParseExperimentConfig(*text);
  if (!cfg.ok()) {
    return absl::Status(cfg.status().code(),
                        absl::StrCat(path, ": ", cfg.status().message()));
  }
  return cfg;
}

absl::StatusOr<PopulationSpec> ParsePopulationSpec(std::string_view text) {
  auto j = ParseJson(text);
  if (!j.ok()) return j.status();
  DPRULE_RETURN_IF_ERROR(CheckObject(*j, "", {"seed", "grammar", "population"}));
  PopulationSpec spec;
  DPRULE_RETURN_IF_ERROR(Read(*j, "", "seed", spec.seed, false, AsUint));
  auto g = Get(*j, "", "grammar", true);
  if (!g.ok()) return g.status();
  DPRULE_RETURN_IF_ERROR(ParseGrammar(**g, "grammar", spec.grammar));
  auto pop = Get(*j, "", "population", true);
  if (!pop.ok()) return pop.status();
  DPRULE_RETURN_IF_ERROR(ParsePopulation(**pop, "population", spec));
  return spec;
}

absl::Status ApplySeedOverride(uint64_t& seed) {
  const char* env = std::getenv("DPRULE_SEED");
  if (env == nullptr) return absl::OkStatus();
  const std::string_view s(env);
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("DPRULE_SEED is not an unsigned integer: '", env, "'"));
  }
  seed = v;
  return absl::OkStatus();
}

uint64_t ReplicateSeed(uint64_t base, uint64_t sweep_seed) {
  std::seed_seq seq{static_cast<uint32_t>(base), static_cast<uint32_t>(base >> 32),
                    static_cast<uint32_t>(sweep_seed),
                    static_cast<uint32_t>(sweep_seed >> 32)};
  uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<uint64_t>(out[1]) << 32) | out[0];
}

std::vector<GridPoint> ExpandGrid(const SweepConfig& sweep) {
  std::vector<GridPoint> out;
  for (double e : sweep.epsilons) {
    for (double v : sweep.valid_thresholds) {
      for (double t : sweep.thetas) {
        for (const std::string& m : sweep.modes) out.push_back({e, v, t, m});
      }
    }
  }
  return out;
}

absl::StatusOr<std::vector<RunRecord>> RunSweep(const ExperimentConfig& cfg,
                                                const SweepOptions& opts) {
  DPRULE_RETURN_IF_ERROR(cfg.Validate());
  const std::vector<GridPoint> grid = ExpandGrid(cfg.sweep);
  const std::size_t seeds = cfg.sweep.seeds.size();

  std::vector<Population> populations;
  for (uint64_t s : cfg.sweep.seeds) {
    PopulationSpec spec = cfg.population;
    spec.seed = ReplicateSeed(cfg.seed, s);
    auto pop = GeneratePopulation(spec);
    if (!pop.ok()) return pop.status();
    populations.push_back(*std::move(pop));
  }

  const std::size_t tasks = grid.size() * seeds;
  std::vector<RunRecord> records(tasks);
  std::vector<absl::Status> status(tasks);
  auto run_one = [&](std::size_t i) -> absl::Status {
    const GridPoint& g = grid[i / seeds];
    const std::size_t k = i % seeds;
    const Population& pop = populations[k];
    const uint64_t seed = ReplicateSeed(cfg.seed, cfg.sweep.seeds[k]);
    ProtocolConfig p = cfg.protocol;
    p.epsilon = g.epsilon;
    p.valid_threshold = g.v;
    p.theta = g.theta;
    p.num_clients = cfg.population.n;
    p.seed = seed;
    DPRULE_RETURN_IF_ERROR(ParseAllocationMode(g.mode, p.allocation));
    std::vector<ClientState> clients = MakeClients(pop.clients, g.epsilon, seed);
    auto run = DiscoverRules(p, clients);
    if (!run.ok()) return run.status();
    auto report = EvaluateRun(*run, pop.clients, g.v, pop.signals,
                              p.grammar.intervals_parametric, cfg.tau_vote);
    if (!report.ok()) return report.status();
    RunRecord& r = records[i];
    r.point = g;
    r.seed = cfg.sweep.seeds[k];
    r.report = *report;
    r.stop = run->stop;
    if (opts.keep_debug) {
      r.trace_csv = FormatTrace(run->trace);
      r.tree_dump = std::move(run->tree_dump);
      r.ruleset = FormatRuleset(run->ruleset);
    }
    return absl::OkStatus();
  };

  const int workers =
      std::max(1, std::min<int>(opts.jobs, static_cast<int>(tasks)));
  if (workers == 1) {
    for (std::size_t i = 0; i < tasks; ++i) status[i] = run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks; i = next++) {
          status[i] = run_one(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& st : status) DPRULE_RETURN_IF_ERROR(st);
  return records;
}

std::string_view ResultsHeader() {
  return "row_type,epsilon,V,theta,mode,seed,coverage,precision,rs_size,"
         "valid_found,valid_total,balanced_accuracy,f1,queries,"
         "epsilon_consumed,coverage_std,precision_std,balanced_accuracy_std,"
         "f1_std";
}

std::string FormatResultsCsv(const std::vector<RunRecord>& records,
                             std::size_t seeds_per_point) {
  std::string out = std::string(ResultsHeader()) + "\n";
  auto point = [](const GridPoint& g) {
    return absl::StrCat(FormatDouble(g.epsilon), ",", FormatDouble(g.v), ",",
                        FormatDouble(g.theta), ",", g.mode);
  };
  auto opt = [](const std::vector<double>& v, bool std_dev) {
    if (v.empty()) return std::string();
    return FormatDouble(std_dev ? SampleStd(v) : Mean(v));
  };
  if (seeds_per_point == 0) return out;
  for (std::size_t start = 0; start < records.size();
       start += seeds_per_point) {
    std::vector<double> cov, prec, size, vf, vt, ba, f1, q, eps;
    const std::size_t end = std::min(records.size(), start + seeds_per_point);
    for (std::size_t i = start; i < end; ++i) {
      const RunRecord& r = records[i];
      const EvaluationReport& e = r.report;
      std::string ba_s, f1_s;
      if (e.utility) {
        ba_s = FormatDouble(e.utility->balanced_accuracy);
        f1_s = FormatDouble(e.utility->f1);
        ba.push_back(e.utility->balanced_accuracy);
        f1.push_back(e.utility->f1);
      }
      absl::StrAppend(&out, "run,", point(r.point), ",", r.seed, ",",
                      FormatDouble(e.coverage), ",", FormatDouble(e.precision),
                      ",", e.rs_size, ",", e.valid_found, ",", e.valid_total,
                      ",", ba_s, ",", f1_s, ",", e.queries, ",",
                      FormatDouble(e.epsilon_consumed), ",,,,\n");
      cov.push_back(e.coverage);
      prec.push_back(e.precision);
      size.push_back(static_cast<double>(e.rs_size));
      vf.push_back(static_cast<double>(e.valid_found));
      vt.push_back(static_cast<double>(e.valid_total));
      q.push_back(static_cast<double>(e.queries));
      eps.push_back(e.epsilon_consumed);
    }
    absl::StrAppend(&out, "aggregate,", point(records[start].point), ",,",
                    opt(cov, false), ",", opt(prec, false), ",",
                    opt(size, false), ",", opt(vf, false), ",",
                    opt(vt, false), ",", opt(ba, false), ",", opt(f1, false),
                    ",", opt(q, false), ",", opt(eps, false), ",",
                    opt(cov, true), ",", opt(prec, true), ",", opt(ba, true),
                    ",", opt(f1, true), "\n");
  }
  return out;
}

absl::Status RunExperiment(const ExperimentConfig& cfg,
                           const ExperimentOptions& opts) {
  namespace fs = std::filesystem;
  const fs::path out = opts.output_dir.value_or(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create ", out.string(), ": ", ec.message()));
  }
  // Fail on an unwritable directory before spending time on the sweep.
  DPRULE_RETURN_IF_ERROR(WriteFile(out / "results.csv", ""));

  SweepOptions sweep_opts;
  sweep_opts.jobs = opts.jobs;
  sweep_opts.keep_debug = opts.debug;
  auto records = RunSweep(cfg, sweep_opts);
  if (!records.ok()) return records.status();
  DPRULE_RETURN_IF_ERROR(
      WriteFile(out / "results.csv",
                FormatResultsCsv(*records, cfg.sweep.seeds.size())));
  if (opts.debug) {
    const fs::path dir = out / "debug";
    fs::create_directories(dir, ec);
    if (ec) {
      return absl::PermissionDeniedError(
          absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
    }
    for (uint64_t seed : cfg.sweep.seeds) {
      PopulationSpec spec = cfg.population;
      spec.seed = ReplicateSeed(cfg.seed, seed);
      auto pop = GeneratePopulation(spec);
      if (!pop.ok()) return pop.status();
      DPRULE_RETURN_IF_ERROR(
          WriteFile(dir / absl::StrCat("clients_s", seed, ".txt"),
                    FormatClientRulesets(pop->clients)));
    }
    for (const RunRecord& r : *records) {
      const std::string stem = FileStem(r);
      DPRULE_RETURN_IF_ERROR(
          WriteFile(dir / absl::StrCat("trace_", stem, ".csv"), r.trace_csv));
      DPRULE_RETURN_IF_ERROR(
          WriteFile(dir / absl::StrCat("tree_", stem, ".tsv"), r.tree_dump));
      DPRULE_RETURN_IF_ERROR(
          WriteFile(dir / absl::StrCat("ruleset_", stem, ".tsv"), r.ruleset));
    }
  }
  return absl::OkStatus();
}

}  // namespace dprule
