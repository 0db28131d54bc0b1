// Copyright 2026 The Negotiate Authors
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

#include "negotiate/config.h"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace negotiate {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string RoleName(Role r) { return r == Role::kA ? "A" : "B"; }

Role ParseRole(const std::string& s) {
  if (s == "A" || s == "a") return Role::kA;
  if (s == "B" || s == "b") return Role::kB;
  throw std::invalid_argument("expected A or B, got '" + s + "'");
}

std::vector<std::string> SplitCommas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) parts.push_back(part);
  return parts;
}

// "0,1,2" or "0-4" or a mix.
std::vector<std::uint64_t> ParseSeedList(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& part : SplitCommas(s)) {
    const std::size_t dash = part.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(std::stoull(part));
    } else {
      const std::uint64_t lo = std::stoull(part.substr(0, dash));
      const std::uint64_t hi = std::stoull(part.substr(dash + 1));
      if (hi < lo) throw std::invalid_argument("empty seed range " + part);
      for (std::uint64_t x = lo; x <= hi; ++x) seeds.push_back(x);
    }
  }
  return seeds;
}

using Setter = std::function<void(RunConfig&, const json&)>;

template <typename T>
Setter Field(T RunConfig::*member) {
  return [member](RunConfig& c, const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw std::invalid_argument("expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("expected a string");
    }
    c.*member = v.get<T>();
  };
}

const std::map<std::string, Setter>& Setters() {
  static const std::map<std::string, Setter> setters = {
      {"experiment",
       [](RunConfig& c, const json& v) {
         c.experiment = ParseExperiment(v.get<std::string>());
       }},
      {"channel",
       [](RunConfig& c, const json& v) {
         c.channel = ParseChannel(v.get<std::string>());
       }},
      {"sociality",
       [](RunConfig& c, const json& v) {
         if (!v.is_array() || v.size() != 2) {
           throw std::invalid_argument("expected [scheme_a, scheme_b]");
         }
         c.sociality = {ParseSociality(v[0].get<std::string>()),
                        ParseSociality(v[1].get<std::string>())};
       }},
      {"episodes", Field(&RunConfig::episodes)},
      {"batch", Field(&RunConfig::batch)},
      {"eval_interval", Field(&RunConfig::eval_interval)},
      {"test_batches", Field(&RunConfig::test_batches)},
      {"final_batches", Field(&RunConfig::final_batches)},
      {"train_log_interval", Field(&RunConfig::train_log_interval)},
      {"checkpoint_interval", Field(&RunConfig::checkpoint_interval)},
      {"seeds",
       [](RunConfig& c, const json& v) {
         if (!v.is_array()) throw std::invalid_argument("expected an array");
         c.seeds.clear();
         for (const json& s : v) {
           if (!s.is_number_unsigned()) {
             throw std::invalid_argument("seeds must be nonnegative integers");
           }
           c.seeds.push_back(s.get<std::uint64_t>());
         }
       }},
      {"community_size", Field(&RunConfig::community_size)},
      {"n_prosocial", Field(&RunConfig::n_prosocial)},
      {"fixed_role",
       [](RunConfig& c, const json& v) {
         c.fixed_role = ParseRole(v.get<std::string>());
       }},
      {"fixed_sociality",
       [](RunConfig& c, const json& v) {
         c.fixed_sociality = ParseSociality(v.get<std::string>());
       }},
      {"ids", Field(&RunConfig::ids)},
      {"community_test_batches", Field(&RunConfig::community_test_batches)},
      {"embed_dim", Field(&RunConfig::embed_dim)},
      {"hidden_dim", Field(&RunConfig::hidden_dim)},
      {"id_embed_dim", Field(&RunConfig::id_embed_dim)},
      {"vocab", Field(&RunConfig::vocab)},
      {"utterance_length", Field(&RunConfig::utterance_length)},
      {"allow_dummy_symbol", Field(&RunConfig::allow_dummy_symbol)},
      {"variable_length_utterances",
       Field(&RunConfig::variable_length_utterances)},
      {"decode_closed_utterances", Field(&RunConfig::decode_closed_utterances)},
      {"lambda_term", Field(&RunConfig::lambda_term)},
      {"lambda_prop", Field(&RunConfig::lambda_prop)},
      {"lambda_utt", Field(&RunConfig::lambda_utt)},
      {"baseline_smoothing", Field(&RunConfig::baseline_smoothing)},
      {"learning_rate", Field(&RunConfig::learning_rate)},
      {"adam_beta1", Field(&RunConfig::adam_beta1)},
      {"adam_beta2", Field(&RunConfig::adam_beta2)},
      {"adam_epsilon", Field(&RunConfig::adam_epsilon)},
      {"inputs",
       [](RunConfig& c, const json& v) {
         c.inputs = v.get<std::vector<std::string>>();
       }},
      {"checkpoint", Field(&RunConfig::checkpoint)},
      {"probe_epochs", Field(&RunConfig::probe_epochs)},
      {"probe_folds", Field(&RunConfig::probe_folds)},
      {"out", Field(&RunConfig::out)},
      {"deterministic", Field(&RunConfig::deterministic)},
      {"workers", Field(&RunConfig::workers)},
  };
  return setters;
}

void Require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace

std::string_view ExperimentName(Experiment e) {
  switch (e) {
    case Experiment::kPaired:
      return "paired";
    case Experiment::kPairedFixedHorizon:
      return "paired_fixed_horizon";
    case Experiment::kCommunity:
      return "community";
    case Experiment::kAnalyze:
      return "analyze";
  }
  return "paired";
}

Experiment ParseExperiment(std::string_view name) {
  for (Experiment e : {Experiment::kPaired, Experiment::kPairedFixedHorizon,
                       Experiment::kCommunity, Experiment::kAnalyze}) {
    if (ExperimentName(e) == name) return e;
  }
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

void Validate(const RunConfig& c) {
  Require(c.episodes >= 0, "episodes", "must be nonnegative");
  Require(c.batch >= 1, "batch", "must be positive");
  Require(c.eval_interval >= 1, "eval_interval", "must be positive");
  Require(c.test_batches >= 1, "test_batches", "must be positive");
  Require(c.final_batches >= 0, "final_batches", "must be nonnegative");
  Require(c.train_log_interval >= 0, "train_log_interval",
          "must be nonnegative");
  Require(c.checkpoint_interval >= 0, "checkpoint_interval",
          "must be nonnegative");
  Require(!c.seeds.empty() || c.experiment == Experiment::kAnalyze, "seeds",
          "at least one seed is required");
  Require(c.community_size >= 1, "community_size", "must be positive");
  Require(c.n_prosocial >= 1 && c.n_prosocial <= c.community_size,
          "n_prosocial", "must be in [1, community_size]");
  Require(c.community_test_batches >= 1, "community_test_batches",
          "must be positive");
  Require(c.embed_dim >= 1, "embed_dim", "must be positive");
  Require(c.hidden_dim >= 1, "hidden_dim", "must be positive");
  Require(c.id_embed_dim >= 1, "id_embed_dim", "must be positive");
  Require(c.vocab == kVocabSize, "vocab",
          "only " + std::to_string(kVocabSize) + " is supported");
  Require(c.utterance_length == kUtteranceLength, "utterance_length",
          "only " + std::to_string(kUtteranceLength) + " is supported");
  Require(c.lambda_term >= 0, "lambda_term", "must be nonnegative");
  Require(c.lambda_prop >= 0, "lambda_prop", "must be nonnegative");
  Require(c.lambda_utt >= 0, "lambda_utt", "must be nonnegative");
  Require(c.baseline_smoothing >= 0 && c.baseline_smoothing < 1,
          "baseline_smoothing", "must be in [0, 1)");
  Require(c.learning_rate > 0, "learning_rate", "must be positive");
  Require(c.adam_beta1 >= 0 && c.adam_beta1 < 1, "adam_beta1",
          "must be in [0, 1)");
  Require(c.adam_beta2 >= 0 && c.adam_beta2 < 1, "adam_beta2",
          "must be in [0, 1)");
  Require(c.adam_epsilon > 0, "adam_epsilon", "must be positive");
  Require(c.probe_epochs >= 1, "probe_epochs", "must be positive");
  Require(c.probe_folds >= 2, "probe_folds", "must be at least 2");
  Require(!c.out.empty(), "out", "must not be empty");
  Require(c.workers >= 1, "workers", "must be positive");
}

std::string ToJson(const RunConfig& c) {
  ordered_json j;
  j["experiment"] = ExperimentName(c.experiment);
  j["channel"] = ChannelName(c.channel);
  j["sociality"] = {SocialityName(c.sociality[0]),
                    SocialityName(c.sociality[1])};
  j["episodes"] = c.episodes;
  j["batch"] = c.batch;
  j["eval_interval"] = c.eval_interval;
  j["test_batches"] = c.test_batches;
  j["final_batches"] = c.final_batches;
  j["train_log_interval"] = c.train_log_interval;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["seeds"] = c.seeds;
  j["community_size"] = c.community_size;
  j["n_prosocial"] = c.n_prosocial;
  j["fixed_role"] = RoleName(c.fixed_role);
  j["fixed_sociality"] = SocialityName(c.fixed_sociality);
  j["ids"] = c.ids;
  j["community_test_batches"] = c.community_test_batches;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["id_embed_dim"] = c.id_embed_dim;
  j["vocab"] = c.vocab;
  j["utterance_length"] = c.utterance_length;
  j["allow_dummy_symbol"] = c.allow_dummy_symbol;
  j["variable_length_utterances"] = c.variable_length_utterances;
  j["decode_closed_utterances"] = c.decode_closed_utterances;
  j["lambda_term"] = c.lambda_term;
  j["lambda_prop"] = c.lambda_prop;
  j["lambda_utt"] = c.lambda_utt;
  j["baseline_smoothing"] = c.baseline_smoothing;
  j["learning_rate"] = c.learning_rate;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["inputs"] = c.inputs;
  j["checkpoint"] = c.checkpoint;
  j["probe_epochs"] = c.probe_epochs;
  j["probe_folds"] = c.probe_folds;
  j["out"] = c.out;
  j["deterministic"] = c.deterministic;
  j["workers"] = c.workers;
  return j.dump(2);
}

RunConfig ApplyJson(const RunConfig& base, std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  RunConfig config = base;
  const auto& setters = Setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(key, "unknown key");
    try {
      it->second(config, value);
    } catch (const json::exception& e) {
      throw ConfigError(key, e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  }
  Validate(config);
  return config;
}

std::string DefaultOutputRoot() {
  const char* env = std::getenv("NEGOTIATE_OUT");
  return env != nullptr && *env != '\0' ? env : "runs";
}

ParseResult ParseCommandLine(int argc, const char* const* argv,
                             std::ostream& out, std::ostream& log) {
  CLI::App app{"Multi-agent negotiation with emergent communication"};
  std::string config_path, experiment, channel, sociality, seeds, fixed_role,
      fixed_sociality, out_dir, checkpoint;
  int episodes = 0, batch = 0, eval_interval = 0, n_prosocial = 0, workers = 0;
  bool ids = false, deterministic = false;
  std::vector<std::string> inputs;
  std::vector<std::string> sets;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--experiment", experiment,
                 "paired | paired_fixed_horizon | community | analyze");
  app.add_option("--channel", channel, "proposal | linguistic | both | none");
  app.add_option("--sociality", sociality,
                 "scheme of A,B (selfish | prosocial); one value sets both");
  app.add_option("--episodes", episodes, "training episodes");
  app.add_option("--batch", batch, "games per episode");
  app.add_option("--eval-interval", eval_interval, "episodes between tests");
  app.add_option("--seeds", seeds, "seed list, e.g. 0,1,2 or 0-4");
  app.add_option("--n-prosocial", n_prosocial, "prosocial community members");
  app.add_option("--fixed-role", fixed_role, "role of the fixed agent (A | B)");
  app.add_option("--fixed-sociality", fixed_sociality,
                 "scheme of the fixed agent");
  app.add_flag("--ids", ids, "give the fixed agent opponent IDs");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--deterministic", deterministic,
               "single worker; byte-identical outputs for a given config");
  app.add_option("--workers", workers, "seeds trained concurrently");
  app.add_option("--input", inputs, "transcript files (analyze)");
  app.add_option("--checkpoint", checkpoint, "checkpoint with an ID table");
  app.add_option("--set", sets, "key=value using JSON values, e.g. lambda_utt=0");

  ParseResult result;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    result.exit = true;
    return result;
  } catch (const CLI::ParseError& e) {
    throw ConfigError("args", e.what());
  }

  RunConfig defaults;
  defaults.out = DefaultOutputRoot();
  json file_keys = json::object();
  RunConfig config = defaults;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config", "cannot read " + config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      file_keys = json::parse(buf.str());
    } catch (const json::parse_error& e) {
      throw ConfigError("config", std::string("malformed JSON: ") + e.what());
    }
    config = ApplyJson(defaults, buf.str());
  }

  json flags = json::object();
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--experiment")) flags["experiment"] = experiment;
  if (given("--channel")) flags["channel"] = channel;
  if (given("--sociality")) {
    std::vector<std::string> parts = SplitCommas(sociality);
    if (parts.size() == 1) parts.push_back(parts[0]);
    if (parts.size() != 2) {
      throw ConfigError("sociality", "expected one or two schemes");
    }
    flags["sociality"] = parts;
  }
  if (given("--episodes")) flags["episodes"] = episodes;
  if (given("--batch")) flags["batch"] = batch;
  if (given("--eval-interval")) flags["eval_interval"] = eval_interval;
  if (given("--seeds")) {
    try {
      flags["seeds"] = ParseSeedList(seeds);
    } catch (const std::exception& e) {
      throw ConfigError("seeds", e.what());
    }
  }
  if (given("--n-prosocial")) flags["n_prosocial"] = n_prosocial;
  if (given("--fixed-role")) flags["fixed_role"] = fixed_role;
  if (given("--fixed-sociality")) flags["fixed_sociality"] = fixed_sociality;
  if (given("--ids")) flags["ids"] = ids;
  if (given("--out")) flags["out"] = out_dir;
  if (given("--deterministic")) flags["deterministic"] = deterministic;
  if (given("--workers")) flags["workers"] = workers;
  if (given("--input")) flags["inputs"] = inputs;
  if (given("--checkpoint")) flags["checkpoint"] = checkpoint;
  for (const std::string& s : sets) {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("set", "expected key=value");
    const std::string key = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::parse_error&) {
      parsed = value;  // bare strings
    }
    flags[key] = parsed;
  }

  for (const auto& [key, value] : flags.items()) {
    if (file_keys.is_object() && file_keys.contains(key) &&
        file_keys[key] != value) {
      log << "config: flag overrides file value for '" << key << "'\n";
    }
  }
  result.config = ApplyJson(config, flags.dump());
  if (result.config.deterministic) result.config.workers = 1;
  return result;
}

TrainConfig MakeTrainConfig(const RunConfig& c, std::uint64_t seed) {
  TrainConfig t;
  t.env.channel = c.channel;
  t.env.fixed_horizon = c.experiment == Experiment::kPairedFixedHorizon;
  t.env.schemes = c.sociality;
  t.env.decode_closed_utterances = c.decode_closed_utterances;
  AgentConfig agent;
  agent.embed_dim = c.embed_dim;
  agent.hidden_dim = c.hidden_dim;
  agent.id_embed_dim = c.id_embed_dim;
  agent.allow_dummy_symbol = c.allow_dummy_symbol;
  agent.variable_length_utterances = c.variable_length_utterances;
  t.agent_a = agent;
  t.agent_b = agent;
  t.episodes = c.episodes;
  t.batch_size = c.batch;
  t.eval_interval = c.eval_interval;
  t.test_batches = c.test_batches;
  t.train_log_interval = c.train_log_interval;
  t.seed = seed;
  t.entropy = {c.lambda_term, c.lambda_prop, c.lambda_utt};
  t.adam = {c.learning_rate, c.adam_beta1, c.adam_beta2, c.adam_epsilon};
  t.baseline_smoothing = c.baseline_smoothing;
  return t;
}

CommunityConfig MakeCommunityConfig(const RunConfig& c, std::uint64_t seed) {
  const TrainConfig t = MakeTrainConfig(c, seed);
  CommunityConfig cc;
  cc.community_size = c.community_size;
  cc.n_prosocial = c.n_prosocial;
  cc.fixed_role = c.fixed_role;
  cc.fixed_scheme = c.fixed_sociality;
  cc.ids_given = c.ids;
  cc.channel = c.channel;
  cc.agent = t.agent_a;
  cc.episodes = c.episodes;
  cc.batch_size = c.batch;
  cc.eval_interval = c.eval_interval;
  cc.test_batches = c.community_test_batches;
  cc.train_log_interval = c.train_log_interval;
  cc.seed = seed;
  cc.entropy = t.entropy;
  cc.adam = t.adam;
  cc.baseline_smoothing = c.baseline_smoothing;
  return cc;
}

}  // namespace negotiate
