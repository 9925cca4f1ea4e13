// Command-line front end: corpus generation, experiments, single AL runs,
// prediction scoring, corpus statistics, and the annotation server.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dstal/al_loop.hpp"
#include "dstal/errors.hpp"
#include "dstal/experiment.hpp"
#include "dstal/metrics.hpp"
#include "dstal/service.hpp"

namespace {

using namespace dstal;

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

json stats_json(const CorpusStats& s) {
  return {{"dialogues", s.dialogues},
          {"turns", s.turns},
          {"avg_turns", s.avg_turns},
          {"avg_turns_text", s.avg_text()},
          {"max_turns", s.max_turns},
          {"min_turns", s.min_turns}};
}

std::vector<LabelRecord> read_labels(const std::string& path) { return LabelLog::read(path); }

struct GenArgs {
  std::string spec_path;
  std::string out;
  std::uint64_t seed = 0;
  SyntheticSpec spec;
};

struct AlArgs {
  std::string corpus;
  std::size_t k = 100;
  std::size_t rounds = 1;
  std::string strategy = "me";
  std::uint64_t seed = 0;
  std::string initial;
  std::string out;
  std::string csv;
  std::string labels;
  std::string predictions;
  std::string pool_split = "train";
  std::string test_split = "test";
};

int cmd_gen(GenArgs& a) {
  SyntheticSpec spec = a.spec;
  if (!a.spec_path.empty()) spec = SyntheticSpec::from_json(read_json_file(a.spec_path));
  auto synthetic = generate_synthetic(spec, a.seed);
  write_text(a.out, synthetic_to_json(synthetic).dump(1) + "\n");
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  auto doc = read_json_file(config_path);
  auto spec = ExperimentSpec::from_json(doc);
  if (!out_dir.empty()) spec.output_dir = out_dir;
  if (spec.corpus_path && spec.corpus_path->is_relative()) {
    spec.corpus_path = std::filesystem::path(config_path).parent_path() / *spec.corpus_path;
  }
  auto report = run_experiment(spec);
  std::cout << report.summary.dump(2) << "\n";
  for (const auto& cell : report.cells) {
    if (!cell.ok) return 1;
  }
  return 0;
}

int cmd_al(const AlArgs& a) {
  Corpus corpus = load_corpus(a.corpus);
  ALConfig config;
  config.k = a.k;
  config.rounds = a.rounds;
  config.strategy.kind = parse_strategy(a.strategy);
  config.master_seed = a.seed;
  if (!a.initial.empty()) {
    config.start = StartMode::warm;
    config.initial_labels = read_labels(a.initial);
  }
  const auto pool = corpus.split_indices(a.pool_split);
  if (pool.empty()) throw ValidationError("corpus has no '" + a.pool_split + "' dialogues");
  std::vector<std::size_t> test;
  for (auto i : corpus.split_indices(a.test_split)) {
    if (corpus.at(i).gold_states) test.push_back(i);
  }

  LexicalScorer scorer(corpus.ontology());
  SimulatedOracle oracle(corpus);
  EvalFn eval;
  if (!test.empty()) {
    eval = [&](const Scorer& s, std::size_t) {
      RoundEval e;
      e.test = evaluate(s, corpus, test, EvalScope::all_turns);
      return e;
    };
  }
  ALRun run = run_al(config, corpus, pool, scorer, oracle, eval);

  if (!a.csv.empty()) write_text(a.csv, run.csv());
  if (!a.labels.empty()) {
    std::string lines;
    for (const auto& r : run.labelled) lines += r.to_json().dump() + "\n";
    write_text(a.labels, lines);
  }
  if (!a.predictions.empty()) {
    std::string lines;
    for (auto i : corpus.split_indices(a.test_split)) {
      const auto& d = corpus.at(i);
      for (std::size_t t = 1; t <= d.turn_count(); ++t) {
        auto p = scorer.predict(build_history(d, t));
        lines += json{{"dialogue_id", d.id}, {"turn", t}, {"state", p.argmax_state.to_json()}}.dump() + "\n";
      }
    }
    write_text(a.predictions, lines);
  }
  json summary = run.to_json();
  if (run.labelled.empty()) {
    summary["reading_cost"] = nullptr;
  } else {
    auto rc = reading_cost(selections_of(corpus, run.labelled));
    summary["reading_cost"] = {{"mean", rc.mean}, {"stddev", rc.stddev}, {"percent", rc.percent()}};
  }
  write_text(a.out, summary.dump(2) + "\n");
  return 0;
}

int cmd_score(const std::string& corpus_path, const std::string& predictions_path) {
  Corpus corpus = load_corpus(corpus_path);
  std::ifstream in(predictions_path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + predictions_path);
  std::vector<DialogueState> predicted;
  std::vector<DialogueState> gold;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      const auto& d = corpus.find(j.at("dialogue_id").get<std::string>());
      if (!d.gold_states) throw ValidationError("dialogue " + d.id + " has no gold states");
      gold.push_back(d.gold(j.at("turn").get<std::size_t>()));
      predicted.push_back(DialogueState::from_json(j.at("state")));
    } catch (const json::exception& e) {
      throw ParseError(predictions_path + " line " + std::to_string(lineno) + ": " + e.what(), lineno);
    }
  }
  auto result = evaluate_states(predicted, gold, corpus.ontology());
  std::cout << result.to_json().dump(2) << "\n";
  return 0;
}

int cmd_stats(const std::string& corpus_path, const std::string& split) {
  Corpus corpus = load_corpus(corpus_path);
  auto stats = split.empty() ? corpus_stats(corpus) : corpus_stats(corpus, split);
  std::cout << stats_json(stats).dump(2) << "\n";
  return 0;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& corpus_path, const std::string& host, int port, const ServiceOptions& options) {
  Corpus corpus = load_corpus(corpus_path);
  AnnotationService service(corpus, options);
  HttpServer server(service, host, port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << json{{"listening", host + ":" + std::to_string(server.port())},
                    {"sessions", service.session_ids()}}
                   .dump()
            << std::endl;
  server.wait();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turn-level active learning for dialogue state tracking"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic corpus as JSON");
  gen_cmd->add_option("--spec", gen.spec_path, "Generator spec JSON (overrides the flags below)");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("-o,--out", gen.out, "Output path (default stdout)");
  gen_cmd->add_option("--dialogues", gen.spec.n_dialogues, "Train dialogues");
  gen_cmd->add_option("--validation", gen.spec.n_validation, "Validation dialogues");
  gen_cmd->add_option("--test", gen.spec.n_test, "Test dialogues");
  gen_cmd->add_option("--min-turns", gen.spec.min_turns);
  gen_cmd->add_option("--max-turns", gen.spec.max_turns);
  gen_cmd->add_option("--domains", gen.spec.domains);
  gen_cmd->add_option("--slots-per-domain", gen.spec.slots_per_domain);
  gen_cmd->add_option("--values-per-slot", gen.spec.values_per_slot);
  gen_cmd->add_option("--trailing-empty", gen.spec.trailing_empty_turns, "Politeness turns at the end");
  gen_cmd->add_option("--idle-rate", gen.spec.idle_turn_rate, "Chance a contentful turn adds no slot");

  std::string run_config;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment grid from a JSON config");
  run_cmd->add_option("config", run_config, "Experiment config JSON")->required();
  run_cmd->add_option("-o,--out", run_out, "Output directory (overrides the config)");

  AlArgs al;
  auto* al_cmd = app.add_subcommand("al", "One active-learning run with a simulated annotator");
  al_cmd->add_option("--corpus", al.corpus)->required();
  al_cmd->add_option("-k", al.k, "Dialogues per round");
  al_cmd->add_option("-r,--rounds", al.rounds, "Rounds");
  al_cmd->add_option("-s,--strategy", al.strategy, "rs | me | lc");
  al_cmd->add_option("--seed", al.seed, "Master seed");
  al_cmd->add_option("--initial", al.initial, "Warm start from a labels JSONL");
  al_cmd->add_option("--pool-split", al.pool_split);
  al_cmd->add_option("--test-split", al.test_split);
  al_cmd->add_option("-o,--out", al.out, "Run JSON (default stdout)");
  al_cmd->add_option("--csv", al.csv, "Per-round CSV");
  al_cmd->add_option("--labels", al.labels, "Labelled set as JSONL");
  al_cmd->add_option("--predictions", al.predictions, "Final predictions on the test split as JSONL");

  std::string score_corpus;
  std::string score_predictions;
  auto* score_cmd = app.add_subcommand("score", "JGA and slot accuracy of predictions against gold");
  score_cmd->add_option("--corpus", score_corpus)->required();
  score_cmd->add_option("--predictions", score_predictions)->required();

  std::string stats_corpus;
  std::string stats_split;
  auto* stats_cmd = app.add_subcommand("stats", "Dialogue and turn counts");
  stats_cmd->add_option("--corpus", stats_corpus)->required();
  stats_cmd->add_option("--split", stats_split);

  std::string serve_corpus;
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::string serve_data;
  ServiceOptions serve_options;
  auto* serve_cmd = app.add_subcommand("serve", "Annotation server");
  serve_cmd->add_option("--corpus", serve_corpus)->required();
  serve_cmd->add_option("--host", serve_host);
  serve_cmd->add_option("--port", serve_port, "0 picks a free port");
  serve_cmd->add_option("--data", serve_data, "Session directory for persistence and resume");
  serve_cmd->add_option("--token", serve_options.token, "Shared secret expected in X-Auth-Token");
  serve_cmd->add_option("--claim-timeout-ms", serve_options.claim_timeout_ms);
  serve_cmd->add_flag("--suggest", serve_options.suggest_labels, "Pre-fill tasks with the model's current prediction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*run_cmd) return cmd_run(run_config, run_out);
    if (*al_cmd) return cmd_al(al);
    if (*score_cmd) return cmd_score(score_corpus, score_predictions);
    if (*stats_cmd) return cmd_stats(stats_corpus, stats_split);
    if (*serve_cmd) {
      serve_options.persist_dir = serve_data;
      return cmd_serve(serve_corpus, serve_host, serve_port, serve_options);
    }
  } catch (const dstal::ParseError& e) {
    json err = {{"kind", e.kind()}, {"message", e.what()}};
    if (e.line()) err["line"] = e.line();
    if (!e.dialogue_id().empty()) err["dialogue_id"] = e.dialogue_id();
    std::cerr << json{{"error", err}}.dump() << "\n";
    return 1;
  } catch (const dstal::ValidationError& e) {
    json err = {{"kind", e.kind()}, {"message", e.what()}};
    if (!e.slot().empty()) err["slot"] = e.slot();
    std::cerr << json{{"error", err}}.dump() << "\n";
    return 1;
  } catch (const dstal::Error& e) {
    std::cerr << json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"kind", "error"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}
