#include "dstal/experiment.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "dstal/errors.hpp"

namespace dstal {

std::string_view to_string(Baseline baseline) {
  switch (baseline) {
    case Baseline::full_data:
      return "full_data";
    case Baseline::last_turn:
      return "last_turn";
    case Baseline::dialogue_level_random:
      return "dialogue_level_random";
    case Baseline::selected_turn:
      return "selected_turn";
  }
  return "full_data";
}

Baseline parse_baseline(std::string_view name) {
  for (auto b : {Baseline::full_data, Baseline::last_turn, Baseline::dialogue_level_random, Baseline::selected_turn}) {
    if (name == to_string(b)) return b;
  }
  throw ValidationError("unknown baseline '" + std::string(name) + "'");
}

// ------------------------------------------------------------------ spec

namespace {

bool is_al(Baseline b) { return b == Baseline::dialogue_level_random || b == Baseline::selected_turn; }

}  // namespace

void ExperimentSpec::validate() const {
  if (baselines.empty()) throw ValidationError("experiment needs at least one baseline");
  if (seeds.empty()) throw ValidationError("experiment needs at least one seed");
  if (corpus_path.has_value() == synthetic.has_value()) {
    throw ValidationError("experiment needs exactly one of \"corpus\" or \"synthetic\"");
  }
  bool needs_k = false;
  for (auto b : baselines) needs_k = needs_k || is_al(b);
  if (needs_k && k_values.empty()) throw ValidationError("AL baselines need at least one k");
  for (auto k : k_values) {
    if (k < 1) throw ValidationError("k must be at least 1");
  }
  for (auto b : baselines) {
    if (b == Baseline::selected_turn && strategies.empty()) {
      throw ValidationError("selected_turn needs at least one strategy");
    }
  }
  if (rounds && *rounds < 1) throw ValidationError("rounds must be at least 1");
  if (synthetic) synthetic->validate();
}

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  ExperimentSpec s;
  try {
    if (j.contains("corpus")) s.corpus_path = j.at("corpus").get<std::string>();
    if (j.contains("synthetic")) {
      s.synthetic = SyntheticSpec::from_json(j.at("synthetic"));
      s.synthetic_seed = j.at("synthetic").value("seed", std::uint64_t{0});
    }
    for (const auto& b : j.at("baselines")) s.baselines.push_back(parse_baseline(b.get<std::string>()));
    if (j.contains("k")) {
      const auto& k = j.at("k");
      if (k.is_array()) {
        s.k_values = k.get<std::vector<std::size_t>>();
      } else {
        s.k_values = {k.get<std::size_t>()};
      }
    }
    if (j.contains("rounds") && !j.at("rounds").is_null()) s.rounds = j.at("rounds").get<std::size_t>();
    if (j.contains("strategies")) {
      for (const auto& st : j.at("strategies")) s.strategies.push_back(parse_strategy(st.get<std::string>()));
    }
    s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    s.output_dir = j.value("output", std::string());
    if (j.contains("scorer")) s.scorer = LexicalScorerParams::from_json(j.at("scorer"));
    s.train_split = j.value("train_split", s.train_split);
    s.validation_split = j.value("validation_split", s.validation_split);
    s.test_split = j.value("test_split", s.test_split);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

// ----------------------------------------------------------------- cells

namespace {

std::string cell_name(Baseline b, std::optional<StrategyKind> strategy, std::optional<std::size_t> k,
                      std::uint64_t seed) {
  std::string name(to_string(b));
  if (strategy) name += "_" + std::string(to_string(*strategy));
  if (k) name += "_k" + std::to_string(*k);
  name += "_seed" + std::to_string(seed);
  return name;
}

std::vector<std::pair<std::string, TurnSelection>> named_selections(const Corpus& corpus,
                                                                    std::span<const LabelRecord> labelled) {
  auto sel = selections_of(corpus, labelled);
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& r : labelled) {
    if (seen.insert(r.dialogue_id).second) ids.push_back(r.dialogue_id);
  }
  std::vector<std::pair<std::string, TurnSelection>> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace_back(ids[i], sel[i]);
  return out;
}

}  // namespace

CellResult run_cell(const Corpus& corpus, const ExperimentSpec& spec, Baseline baseline,
                    std::optional<StrategyKind> strategy, std::optional<std::size_t> k, std::uint64_t seed) {
  CellResult cell;
  cell.name = cell_name(baseline, strategy, k, seed);
  cell.baseline = baseline;
  cell.strategy = strategy;
  cell.k = k;
  cell.seed = seed;

  const auto train = corpus.split_indices(spec.train_split);
  const auto test = corpus.split_indices(spec.test_split);
  const auto validation = corpus.split_indices(spec.validation_split);
  if (train.empty()) throw ValidationError("corpus has no '" + spec.train_split + "' dialogues");

  LexicalScorer scorer(corpus.ontology(), spec.scorer);
  auto eval_round = [&](const Scorer& s, std::size_t) {
    RoundEval e;
    if (!test.empty()) e.test = evaluate(s, corpus, test, EvalScope::all_turns);
    if (!validation.empty()) e.validation = evaluate(s, corpus, validation, EvalScope::last_turn);
    return e;
  };

  ALRun run;
  switch (baseline) {
    case Baseline::full_data:
    case Baseline::last_turn: {
      std::vector<TrainingInstance> instances;
      auto mode = baseline == Baseline::full_data ? InstanceMode::full() : InstanceMode::last_turn();
      for (auto i : train) {
        auto part = make_instances(corpus.at(i), mode);
        instances.insert(instances.end(), part.begin(), part.end());
        const auto& d = corpus.at(i);
        for (const auto& inst : part) {
          run.labelled.push_back(LabelRecord{d.id, inst.turn_index, inst.state, LabelSource::simulated, 0});
        }
      }
      scorer.train(instances);
      IterationRecord record;
      record.round = 1;
      record.labels = run.labelled;
      record.labelled_total = run.labelled.size();
      record.reading_cost = reading_cost(selections_of(corpus, run.labelled));
      record.eval = eval_round(scorer, 1);
      run.rounds.push_back(std::move(record));
      break;
    }
    case Baseline::dialogue_level_random:
    case Baseline::selected_turn: {
      ALConfig config;
      config.k = *k;
      config.rounds = spec.rounds.value_or((train.size() + *k - 1) / *k);
      config.master_seed = seed;
      SimulatedOracle oracle(corpus);
      if (baseline == Baseline::selected_turn) {
        config.strategy.kind = *strategy;
        run = run_al(config, corpus, train, scorer, oracle, eval_round);
      } else {
        run = dialogue_level_random_baseline(config, corpus, train, oracle);
        std::size_t upto = 0;
        for (auto& record : run.rounds) {
          upto += record.labels.size();
          scorer.reinitialize();
          scorer.train(instances_from_labels(corpus, std::span(run.labelled).first(upto)));
          record.eval = eval_round(scorer, record.round);
        }
      }
      break;
    }
  }

  cell.train_instances = run.labelled.size();
  if (!run.rounds.empty()) cell.test = run.rounds.back().eval.test;
  cell.selections = named_selections(corpus, run.labelled);
  std::vector<TurnSelection> sel;
  for (const auto& [id, s] : cell.selections) sel.push_back(s);
  if (!sel.empty()) cell.reading_cost = reading_cost(sel);
  cell.rounds_csv = run.csv();
  cell.ok = true;
  return cell;
}

// --------------------------------------------------------------- summary

namespace {

json mean_std_json(const std::vector<double>& values) {
  auto ms = mean_std(values);
  return {{"mean", ms.mean}, {"std", ms.stddev}};
}

struct GroupKey {
  Baseline baseline;
  std::optional<StrategyKind> strategy;
  std::optional<std::size_t> k;
  auto operator<=>(const GroupKey&) const = default;
};

json build_summary(const Corpus& corpus, const ExperimentSpec& spec, const CorpusStats& stats,
                   const std::vector<CellResult>& cells) {
  std::vector<GroupKey> order;
  std::map<GroupKey, std::vector<const CellResult*>> groups;
  json failures = json::array();
  for (const auto& c : cells) {
    if (!c.ok) {
      failures.push_back({{"cell", c.name}, {"error", c.error}});
      continue;
    }
    GroupKey key{c.baseline, c.strategy, c.k};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&c);
  }

  json rows = json::array();
  for (const auto& key : order) {
    const auto& members = groups[key];
    std::vector<double> jga, sa, instances;
    std::vector<double> ratios;
    std::vector<std::uint64_t> seeds;
    for (const auto* c : members) {
      seeds.push_back(c->seed);
      if (c->test) {
        jga.push_back(100.0 * c->test->jga);
        sa.push_back(100.0 * c->test->slot_accuracy);
      }
      instances.push_back(static_cast<double>(c->train_instances));
      for (const auto& [id, s] : c->selections) {
        ratios.push_back(100.0 * static_cast<double>(s.turn) / static_cast<double>(s.turn_count));
      }
    }
    json row = {{"baseline", std::string(to_string(key.baseline))},
                {"strategy", key.strategy ? json(std::string(to_string(*key.strategy))) : json(nullptr)},
                {"k", key.k ? json(*key.k) : json(nullptr)},
                {"seeds", seeds},
                {"rc_percent", mean_std_json(ratios)},
                {"train_instances", mean_std(instances).mean},
                {"data_fraction", mean_std(instances).mean / static_cast<double>(stats.turns)}};
    if (!jga.empty()) {
      row["jga_percent"] = mean_std_json(jga);
      row["sa_percent"] = mean_std_json(sa);
    }
    rows.push_back(std::move(row));
  }
  (void)corpus;
  return {{"train_corpus",
           {{"dialogues", stats.dialogues},
            {"turns", stats.turns},
            {"avg_turns", stats.avg_text()},
            {"max_turns", stats.max_turns},
            {"min_turns", stats.min_turns},
            {"last_turn_fraction", static_cast<double>(stats.dialogues) / static_cast<double>(stats.turns)}}},
          {"scorer", spec.scorer.to_json()},
          {"groups", std::move(rows)},
          {"failures", std::move(failures)}};
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, const Corpus& corpus) {
  spec.validate();
  ExperimentReport report;
  report.train_stats = corpus_stats(corpus, spec.train_split);

  for (auto baseline : spec.baselines) {
    std::vector<std::optional<std::size_t>> ks = {std::nullopt};
    std::vector<std::optional<StrategyKind>> strategies = {std::nullopt};
    if (is_al(baseline)) ks.assign(spec.k_values.begin(), spec.k_values.end());
    if (baseline == Baseline::selected_turn) strategies.assign(spec.strategies.begin(), spec.strategies.end());
    for (const auto& k : ks) {
      for (const auto& strategy : strategies) {
        for (auto seed : spec.seeds) {
          try {
            report.cells.push_back(run_cell(corpus, spec, baseline, strategy, k, seed));
          } catch (const std::exception& e) {
            CellResult failed;
            failed.name = cell_name(baseline, strategy, k, seed);
            failed.baseline = baseline;
            failed.strategy = strategy;
            failed.k = k;
            failed.seed = seed;
            failed.error = e.what();
            report.cells.push_back(std::move(failed));
          }
        }
      }
    }
  }
  report.summary = build_summary(corpus, spec, report.train_stats, report.cells);
  if (!spec.output_dir.empty()) write_report(report, spec.output_dir);
  return report;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.synthetic) {
    auto synthetic = generate_synthetic(*spec.synthetic, spec.synthetic_seed);
    return run_experiment(spec, synthetic.corpus);
  }
  auto corpus = load_corpus(*spec.corpus_path);
  return run_experiment(spec, corpus);
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "cells");
  auto open = [](const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    return out;
  };

  for (const auto& c : report.cells) {
    if (!c.ok) continue;
    auto out = open(dir / "cells" / (c.name + ".csv"));
    out << c.rounds_csv;
  }

  {
    auto out = open(dir / "summary.json");
    out << report.summary.dump(2) << '\n';
  }

  {
    auto out = open(dir / "summary.csv");
    out << "baseline,strategy,k,n_seeds,jga_mean,jga_std,sa_mean,sa_std,rc_mean,rc_std,train_instances,data_fraction\n";
    for (const auto& g : report.summary.at("groups")) {
      out << g.at("baseline").get<std::string>() << ','
          << (g.at("strategy").is_null() ? "" : g.at("strategy").get<std::string>()) << ','
          << (g.at("k").is_null() ? "" : std::to_string(g.at("k").get<std::size_t>())) << ','
          << g.at("seeds").size() << ',';
      if (g.contains("jga_percent")) {
        out << format_number(g["jga_percent"]["mean"].get<double>()) << ','
            << format_number(g["jga_percent"]["std"].get<double>()) << ','
            << format_number(g["sa_percent"]["mean"].get<double>()) << ','
            << format_number(g["sa_percent"]["std"].get<double>()) << ',';
      } else {
        out << ",,,,";
      }
      out << format_number(g["rc_percent"]["mean"].get<double>()) << ','
          << format_number(g["rc_percent"]["std"].get<double>()) << ','
          << format_number(g["train_instances"].get<double>()) << ','
          << format_number(g["data_fraction"].get<double>()) << '\n';
    }
  }

  {
    auto out = open(dir / "rc_distribution.csv");
    out << "baseline,strategy,k,seed,dialogue_id,turn,turns,ratio\n";
    for (const auto& c : report.cells) {
      if (!c.ok) continue;
      for (const auto& [id, s] : c.selections) {
        out << to_string(c.baseline) << ',' << (c.strategy ? std::string(to_string(*c.strategy)) : "") << ','
            << (c.k ? std::to_string(*c.k) : "") << ',' << c.seed << ',' << id << ',' << s.turn << ','
            << s.turn_count << ','
            << format_number(static_cast<double>(s.turn) / static_cast<double>(s.turn_count)) << '\n';
      }
    }
  }
}

}  // namespace dstal
