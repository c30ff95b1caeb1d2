//
// Copyright 2026 The toolplan Authors
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
//

#include "toolplan/cli.h"

#include <cstdlib>
#include <map>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "toolplan/agents.h"
#include "toolplan/evalkit.h"

namespace toolplan {
namespace {

namespace fs = std::filesystem;

// A failure with the exit code it maps to.
struct Failure {
  int exit_code;
  std::string message;
};

Failure Usage(std::string message) { return {kExitUsage, std::move(message)}; }

Failure FromError(const Error& e) {
  return {e.code == ErrorCode::kInvalidArgument ? kExitUsage : kExitInfrastructure, e.ToString()};
}

// Values for one invocation, resolved flag > environment > config file >
// default.
class Settings {
 public:
  Status LoadConfig(const std::optional<std::string>& flag) {
    std::optional<std::string> path = flag;
    if (!path) {
      if (const char* env = std::getenv("TOOLPLAN_CONFIG"); env != nullptr && *env != '\0') path = env;
    }
    if (!path) return Status();
    TOOLPLAN_ASSIGN_OR_RETURN(std::string text, ReadFile(*path));
    file_ = Json::parse(text, nullptr, false);
    if (file_.is_discarded() || !file_.is_object()) {
      return Error(ErrorCode::kInvalidArgument, "config file is not a JSON object", *path);
    }
    config_path_ = *path;
    return Status();
  }

  std::string Get(const std::string& key, const std::optional<std::string>& flag,
                  const std::string& fallback) {
    std::string env_name = "TOOLPLAN_";
    for (char c : key) env_name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    std::string value = fallback;
    std::string source = "default";
    if (flag) {
      value = *flag;
      source = "flag";
    } else if (const char* env = std::getenv(env_name.c_str()); env != nullptr && *env != '\0') {
      value = env;
      source = "env " + env_name;
    } else if (file_.is_object() && file_.contains(key)) {
      value = file_[key].is_string() ? file_[key].get<std::string>() : file_[key].dump();
      source = "config " + config_path_;
    }
    log_.push_back(key + " = " + value + " (" + source + ")");
    return value;
  }

  const Json& file() const { return file_; }
  void Print(std::ostream& err) const {
    for (const std::string& line : log_) err << "setting " << line << "\n";
  }

 private:
  Json file_;
  std::string config_path_;
  std::vector<std::string> log_;
};

std::optional<int> ParseInt(const std::string& s) {
  try {
    size_t used = 0;
    int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

// Options shared by the commands that talk to a model.
struct RunFlags {
  std::optional<std::string> provider, cassette, config, fixture, max_steps, max_retries, out,
      answer_mode, model;
  bool force = false;
  bool verbose = false;

  void Add(CLI::App* cmd) {
    cmd->add_option("--provider", provider, "Completion provider: scripted or http");
    cmd->add_option("--cassette", cassette, "Cassette file replayed by the scripted provider");
    cmd->add_option("--config", config, "JSON config file (also TOOLPLAN_CONFIG)");
    cmd->add_option("--fixture", fixture, "Fixture database id");
    cmd->add_option("--max-steps", max_steps, "Planner turns allowed in sequential runs");
    cmd->add_option("--max-retries", max_retries, "Retries with error feedback per model call");
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--answer-mode", answer_mode, "One-step answer: summarize, last-result, collect");
    cmd->add_option("--model", model, "Model name sent to the provider and shown in reports");
    cmd->add_flag("--force", force, "Overwrite existing output");
    cmd->add_flag("--verbose", verbose, "Print resolved settings");
  }
};

struct RunSetup {
  std::unique_ptr<CompletionProvider> provider;
  std::shared_ptr<const PromptLibrary> prompts;
  std::unique_ptr<Sandbox> sandbox;
  AgentConfig agent;
  std::string fixture;
  std::string model_label;
};

std::variant<RunSetup, Failure> Setup(RunFlags& f, Settings& s, const std::string& default_answer) {
  if (Status st = s.LoadConfig(f.config); !st.ok()) return FromError(st.error());
  RunSetup setup;
  const std::string provider = s.Get("provider", f.provider, "scripted");
  const std::string cassette = s.Get("cassette", f.cassette, "");
  setup.fixture = s.Get("fixture", f.fixture, std::string(kGoldenMelody));
  const std::string steps = s.Get("max_steps", f.max_steps, "8");
  const std::string retries = s.Get("max_retries", f.max_retries, "2");
  const std::string answer = s.Get("answer_mode", f.answer_mode, default_answer);
  setup.model_label = s.Get("model", f.model, "");

  auto steps_v = ParseInt(steps);
  auto retries_v = ParseInt(retries);
  if (!steps_v || *steps_v < 1) return Usage("--max-steps must be a positive integer, got " + steps);
  if (!retries_v || *retries_v < 0) return Usage("--max-retries must be a non-negative integer, got " + retries);
  auto mode = AnswerModeFromName(answer);
  if (!mode.ok()) return Usage("unknown answer mode " + answer + "; valid: summarize, last-result, collect");
  setup.agent.max_steps = *steps_v;
  setup.agent.toolbox.max_retries = *retries_v;
  setup.agent.answer_mode = *mode;

  if (provider == "scripted") {
    if (cassette.empty()) return Usage("the scripted provider needs --cassette");
    auto session = ScriptedSession::FromFile(cassette);
    if (!session.ok()) return FromError(session.error());
    setup.provider = std::move(session).value();
  } else if (provider == "http") {
    if (!s.file().is_object() || !s.file().contains("http")) {
      return Usage("the http provider needs a config file with an \"http\" object");
    }
    auto config = HttpProviderConfig::FromJson(s.file()["http"]);
    if (!config.ok()) return Usage(config.error().ToString());
    if (setup.model_label.empty()) setup.model_label = config->model;
    setup.provider = std::make_unique<HttpProvider>(std::move(config).value());
  } else {
    return Usage("unknown provider " + provider + "; valid: scripted, http");
  }
  setup.agent.toolbox.model.provider = setup.provider->name();
  setup.agent.toolbox.model.model = setup.model_label;

  auto prompts = PromptLibrary::Shared();
  if (!prompts.ok()) return FromError(prompts.error());
  setup.prompts = *prompts;
  setup.sandbox = std::make_unique<Sandbox>(SandboxPolicy::Default());
  return setup;
}

// Creates `dir`; an existing non-empty directory needs `force`.
std::optional<Failure> PrepareOutDir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_empty(dir, ec) && !force) {
    return Usage("output directory " + dir.string() + " is not empty; pass --force to overwrite");
  }
  fs::create_directories(dir, ec);
  if (ec) return Failure{kExitInfrastructure, "cannot create " + dir.string() + ": " + ec.message()};
  return std::nullopt;
}

int Report(const Failure& f, std::ostream& err) {
  err << "error: " << f.message << "\n";
  return f.exit_code;
}

int CmdEval(RunFlags& f, const std::string& mode_name, const std::string& dataset, int parallelism,
            std::ostream& out, std::ostream& err) {
  auto mode = EvalModeFromName(mode_name);
  if (!mode.ok()) return Report(Usage(mode.error().message + " (got " + mode_name + ")"), err);
  Settings s;
  auto setup_or = Setup(f, s, "collect");
  if (f.verbose) s.Print(err);
  if (auto* fail = std::get_if<Failure>(&setup_or)) return Report(*fail, err);
  RunSetup& setup = std::get<RunSetup>(setup_or);

  auto records = LoadDataset(dataset);
  if (!records.ok()) return Report({kExitInfrastructure, records.error().ToString()}, err);
  if (records->empty()) return Report(Usage("dataset " + dataset + " has no records"), err);
  const fs::path dir = f.out ? fs::path(*f.out) : fs::path("runs") / std::string(EvalModeName(*mode));
  if (auto fail = PrepareOutDir(dir, f.force)) return Report(*fail, err);

  EvalConfig config;
  config.agent = setup.agent;
  config.model = setup.model_label;
  config.parallelism = parallelism;
  auto report = RunEval(*mode, *records, EvalEnv{setup.provider.get(), setup.prompts.get(), setup.sandbox.get()},
                        config);
  if (!report.ok()) return Report({kExitInfrastructure, report.error().ToString()}, err);
  const std::vector<EvalReport> reports = {*report};
  if (Status st = WriteReportFiles(reports, dir); !st.ok()) return Report(FromError(st.error()), err);
  out << RenderReport(reports).value();
  out << "\nreport written to " << dir.string() << "\n";
  return kExitOk;
}

int CmdAsk(RunFlags& f, const std::string& question, const std::optional<std::string>& agent_flag,
           std::ostream& out, std::ostream& err) {
  Settings s;
  auto setup_or = Setup(f, s, "collect");
  const std::string agent = s.Get("agent", agent_flag, "oa");
  if (f.verbose) s.Print(err);
  if (auto* fail = std::get_if<Failure>(&setup_or)) return Report(*fail, err);
  RunSetup& setup = std::get<RunSetup>(setup_or);
  if (agent != "oa" && agent != "sa" && agent != "react") {
    return Report(Usage("unknown agent " + agent + "; valid: oa, sa, react"), err);
  }
  auto db = LoadFixture(setup.fixture);
  if (!db.ok()) return Report(FromError(db.error()), err);

  AgentEnv env{setup.provider.get(), setup.prompts.get(), db->get(), setup.sandbox.get()};
  AgentRun run = agent == "oa"   ? RunOneStep(question, env, setup.agent)
                 : agent == "sa" ? RunSequential(question, env, setup.agent, SequentialGrammar::kStepwise)
                                 : RunSequential(question, env, setup.agent, SequentialGrammar::kReact);

  const fs::path dir = f.out ? fs::path(*f.out) : fs::path("runs") / "ask";
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path log = dir / "transcripts.jsonl";
  int64_t line = 0;
  if (auto existing = ReadTranscripts(log); existing.ok()) line = static_cast<int64_t>(existing->size());
  if (f.force) {
    (void)WriteFile(log, "");
    line = 0;
  }
  if (Status st = AppendTranscripts(log, {run.transcript}); !st.ok()) {
    return Report(FromError(st.error()), err);
  }
  if (!run.ok()) {
    err << "transcript: " << log.string() << "#" << line << "\n";
    const int code = IsInfrastructureError(run.status.error()) ? kExitInfrastructure : kExitFailed;
    return Report({code, run.status.error().ToString()}, err);
  }
  out << *run.transcript.final_answer() << "\n";
  out << "transcript: " << log.string() << "#" << line << "\n";
  return kExitOk;
}

std::string OneLine(std::string s) {
  for (char& c : s) {
    if (c == '\n') c = ' ';
  }
  return s;
}

std::string Summarize(const Json& j) {
  if (j.is_null()) return "-";
  if (j.contains("error")) {
    std::optional<Error> e = ErrorFromJson(j["error"]);
    return "error " + (e ? e->ToString() : j["error"].dump());
  }
  if (j.contains("text") && j.size() == 1) return OneLine(j["text"].get<std::string>());
  return OneLine(j.dump());
}

// Re-runs one tool turn. Empty when the turn has nothing to re-run.
std::optional<std::string> Rerun(const Json& decision, const Database* db, Sandbox& sandbox) {
  auto as_text = [](auto r) -> std::string {
    if (!r.ok()) return "error " + std::string(ErrorCodeName(r.error().code));
    return *r;
  };
  if (!decision.is_object()) return std::nullopt;
  if (decision.contains("sql") && db != nullptr) {
    auto t = db->Execute(decision["sql"].get<std::string>());
    return as_text(t.ok() ? Result<std::string>(t->ToText()) : Result<std::string>(t.error()));
  }
  if (decision.contains("code")) {
    auto v = sandbox.RunSolution(decision["code"].get<std::string>());
    return as_text(v.ok() ? Result<std::string>(v->ToString()) : Result<std::string>(v.error()));
  }
  if (decision.contains("statement")) return as_text(sandbox.RunStatement(decision["statement"].get<std::string>()));
  return std::nullopt;
}

int CmdReplay(const std::string& path, bool verify, const std::optional<std::string>& fixture_flag,
              const std::optional<std::string>& config_flag, bool verbose, std::ostream& out,
              std::ostream& err) {
  Settings s;
  if (Status st = s.LoadConfig(config_flag); !st.ok()) return Report(FromError(st.error()), err);
  const std::string fixture = s.Get("fixture", fixture_flag, std::string(kGoldenMelody));
  if (verbose) s.Print(err);
  auto transcripts = ReadTranscripts(path);
  if (!transcripts.ok()) return Report({kExitInfrastructure, transcripts.error().ToString()}, err);

  std::shared_ptr<Database> db;
  std::unique_ptr<Sandbox> sandbox;
  if (verify) {
    auto loaded = LoadFixture(fixture);
    if (!loaded.ok()) return Report(FromError(loaded.error()), err);
    db = *loaded;
    sandbox = std::make_unique<Sandbox>(SandboxPolicy::Default());
  }
  int divergences = 0;
  for (size_t k = 0; k < transcripts->size(); ++k) {
    const Transcript& t = (*transcripts)[k];
    out << "transcript " << k << ": " << OneLine(t.question()) << "\n";
    for (size_t i = 0; i < t.entries().size(); ++i) {
      const TurnRecord& turn = t.entries()[i];
      out << "  turn " << i + 1 << " [" << TurnRoleName(turn.role) << "] decision: " << Summarize(turn.decision)
          << "\n      result: " << Summarize(turn.result) << "\n";
      if (!verify || turn.role != TurnRole::kTool) continue;
      std::optional<std::string> again = Rerun(turn.decision, db.get(), *sandbox);
      if (!again) continue;
      std::string recorded = "-";
      if (turn.result.contains("text")) {
        recorded = turn.result["text"].get<std::string>();
      } else if (turn.result.contains("error")) {
        std::optional<Error> e = ErrorFromJson(turn.result["error"]);
        recorded = "error " + (e ? std::string(ErrorCodeName(e->Root().code)) : "?");
      }
      if (recorded != *again) {
        ++divergences;
        out << "      DIVERGED: now " << OneLine(*again) << "\n";
      }
    }
    out << "  final answer: " << (t.final_answer() ? OneLine(*t.final_answer()) : "-") << "\n";
    out << "  outcome: " << (t.outcome().success ? "success" : "failed " + t.outcome().reason) << "\n";
  }
  if (verify) {
    out << "divergences: " << divergences << "\n";
    if (divergences > 0) return kExitFailed;
  }
  return kExitOk;
}

int CmdTools(std::ostream& out) {
  ToolRegistry registry = ToolRegistry::Default();
  for (const ToolSpec& spec : registry.specs()) {
    out << spec.name << "\t" << spec.display_name << "\t"
        << (spec.executable ? "executable" : "catalog only") << "\t" << spec.description << "\n";
  }
  return kExitOk;
}

int CmdFixtures(const std::optional<std::string>& out_flag, bool force, std::ostream& out,
                std::ostream& err) {
  const fs::path dir = out_flag ? fs::path(*out_flag) : DataDir() / "fixtures";
  if (auto fail = PrepareOutDir(dir, force)) return Report(*fail, err);
  for (const std::string& id : KnownFixtureIds()) {
    auto fixture = BuildFixtureData(id);
    if (!fixture.ok()) return Report(FromError(fixture.error()), err);
    if (Status st = WriteFixtureFiles(*fixture, dir); !st.ok()) return Report(FromError(st.error()), err);
    out << "wrote " << (dir / id).string() << "\n";
  }
  return kExitOk;
}

int CmdRecord(const std::string& transcripts_path, const std::string& out_path, bool force,
              std::ostream& out, std::ostream& err) {
  if (fs::exists(out_path) && !force) {
    return Report(Usage(out_path + " exists; pass --force to overwrite"), err);
  }
  auto transcripts = ReadTranscripts(transcripts_path);
  if (!transcripts.ok()) return Report({kExitInfrastructure, transcripts.error().ToString()}, err);
  auto cassette = RecordCassette(*transcripts);
  if (!cassette.ok()) return Report({kExitInfrastructure, cassette.error().ToString()}, err);
  if (Status st = WriteCassette(out_path, *cassette); !st.ok()) return Report(FromError(st.error()), err);
  out << "wrote " << cassette->size() << " entries to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plan and run tool-using LLM agents; evaluate them against datasets."};
  app.name(args.empty() ? "toolplan" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  RunFlags eval_flags;
  std::string mode, dataset;
  int parallelism = 1;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a dataset under one mode");
  std::string modes;
  for (const EvalModeInfo& info : EvalModes()) modes += (modes.empty() ? "" : ", ") + std::string(info.name);
  eval->add_option("--mode", mode, "Evaluation mode: " + modes)->required();
  eval->add_option("--dataset", dataset, "Dataset file, directory or shipped name")->required();
  eval->add_option("--parallelism", parallelism, "Records evaluated at once (1 for scripted)");
  eval_flags.Add(eval);

  RunFlags ask_flags;
  std::string question;
  std::optional<std::string> agent;
  CLI::App* ask = app.add_subcommand("ask", "Answer one question with an agent");
  ask->add_option("question", question, "The question")->required();
  ask->add_option("--agent", agent, "Agent: oa (one-step), sa (sequential) or react");
  ask_flags.Add(ask);

  std::string replay_path;
  bool verify = false;
  bool replay_verbose = false;
  std::optional<std::string> replay_fixture, replay_config;
  CLI::App* replay = app.add_subcommand("replay", "Print a transcript log turn by turn");
  replay->add_option("transcripts", replay_path, "Transcript log (JSON Lines)")->required();
  replay->add_flag("--verify", verify, "Re-run tool calls against the fixture and report divergences");
  replay->add_option("--fixture", replay_fixture, "Fixture used by --verify");
  replay->add_option("--config", replay_config, "JSON config file (also TOOLPLAN_CONFIG)");
  replay->add_flag("--verbose", replay_verbose, "Print resolved settings");

  app.add_subcommand("tools", "List the tool catalog");

  std::optional<std::string> fixtures_out;
  bool fixtures_force = false;
  CLI::App* fixtures = app.add_subcommand("fixtures", "Write fixture schemas and rows to disk");
  fixtures->add_option("--out", fixtures_out, "Output directory (default <data>/fixtures)");
  fixtures->add_flag("--force", fixtures_force, "Overwrite existing output");

  std::string record_in, record_out;
  bool record_force = false;
  CLI::App* record = app.add_subcommand("record", "Turn a transcript log into a cassette");
  record->add_option("transcripts", record_in, "Transcript log (JSON Lines)")->required();
  record->add_option("--out", record_out, "Cassette file to write")->required();
  record->add_flag("--force", record_force, "Overwrite an existing cassette");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (eval->parsed()) return CmdEval(eval_flags, mode, dataset, parallelism, out, err);
  if (ask->parsed()) return CmdAsk(ask_flags, question, agent, out, err);
  if (replay->parsed()) return CmdReplay(replay_path, verify, replay_fixture, replay_config, replay_verbose, out, err);
  if (fixtures->parsed()) return CmdFixtures(fixtures_out, fixtures_force, out, err);
  if (record->parsed()) return CmdRecord(record_in, record_out, record_force, out, err);
  return CmdTools(out);
}

}  // namespace toolplan
