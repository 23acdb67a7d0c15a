// datasel: command line front end for the data selection toolkit.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "datasel/analysis.hpp"
#include "datasel/classifier.hpp"
#include "datasel/config.hpp"
#include "datasel/corpus.hpp"
#include "datasel/error.hpp"
#include "datasel/evaluation.hpp"
#include "datasel/experiment.hpp"
#include "datasel/scoring.hpp"
#include "datasel/selection.hpp"
#include "datasel/synthetic.hpp"
#include "datasel/text.hpp"

namespace fs = std::filesystem;
using namespace datasel;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return in;
}

fs::path params_path(const fs::path& curated) {
  return fs::path(curated.string() + ".params.json");
}

// Re-creates `d` over a shared label set.
Dataset relabel(const Dataset& d, const std::vector<std::string>& labels) {
  return Dataset(d.name(), d.examples(), labels);
}

std::vector<std::string> union_labels(std::initializer_list<const Dataset*> parts) {
  std::set<std::string> s;
  for (const Dataset* d : parts) s.insert(d->label_set().begin(), d->label_set().end());
  return {s.begin(), s.end()};
}

struct GenerateArgs {
  std::string spec;
  std::uint64_t seed = 0;
  std::string out;
};

void run_generate(const GenerateArgs& a) {
  SyntheticSpec spec;
  if (!a.spec.empty()) spec = parse_synthetic_spec(KeyValueConfig::load(a.spec), "");
  const SyntheticCorpus c = generate_synthetic(spec, a.seed);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_dataset(c.train, dir / "train.jsonl");
  save_dataset(c.pool, dir / "pool.jsonl");
  save_dataset(c.test_tail, dir / "test_tail.jsonl");
  {
    auto out = open_out(dir / "pool_tally.csv");
    write_histogram_csv(c.pool_tally, out);
  }
  nlohmann::ordered_json meta;
  meta["seed"] = a.seed;
  meta["num_domains"] = spec.num_domains;
  meta["head_skew"] = spec.head_skew;
  meta["pool_size"] = spec.pool_size;
  meta["train_size"] = spec.train_size;
  meta["test_size"] = spec.test_size;
  meta["duplicate_rate"] = spec.duplicate_rate;
  meta["label_noise"] = spec.label_noise;
  meta["vocab_per_domain"] = spec.vocab_per_domain;
  meta["domains_by_rank"] = c.domains_by_rank;
  meta["tail_domains"] = c.tail_domains;
  auto out = open_out(dir / "metadata.json");
  out << meta.dump(2) << '\n';
}

struct ScoreArgs {
  std::string train;
  std::string pool;
  int replicates = 5;
  TrainConfig cfg;
  std::uint64_t seed = 0;
  std::string out;
  std::string models_out;
};

void run_score(const ScoreArgs& a) {
  const Dataset train0 = load_dataset(a.train, "train");
  const Dataset pool0 = load_dataset(a.pool, "pool");
  const auto labels = union_labels({&train0, &pool0});
  const Dataset train = relabel(train0, labels);
  const Dataset pool = relabel(pool0, labels);
  a.cfg.validate();
  if (a.cfg.el2n_epoch > a.cfg.epochs) throw InvalidArgument("--el2n-epoch exceeds --epochs");
  std::vector<TrainRun> runs = train_replicate_runs(train, a.cfg, a.replicates, a.seed);
  std::vector<ClassifierModel> checkpoints;
  for (const TrainRun& r : runs) checkpoints.push_back(r.el2n_checkpoint);
  const auto records = score_pool(runs.front().final_model, checkpoints, pool);
  auto out = open_out(a.out);
  write_scores_csv(records, out);
  if (!a.models_out.empty()) {
    const fs::path dir(a.models_out);
    fs::create_directories(dir);
    save_model(runs.front().final_model, dir / "entropy_model.txt");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
      save_model(checkpoints[i], dir / ("el2n_replicate_" + std::to_string(i) + ".txt"));
    }
  }
}

struct SelectArgs {
  std::string method;
  std::string scores;
  std::string pool;
  std::string train;
  std::string size;
  std::int64_t cap = 20;
  bool unlimited_cap = false;
  double min_share = 0.005;
  El2nMixtureParams mixture;
  std::uint64_t seed = 0;
  std::string out;
};

std::int64_t parse_size(const std::string& text, std::int64_t base) {
  std::size_t used = 0;
  if (text.find_first_of(".eE") == std::string::npos) {
    const long long n = std::stoll(text, &used);
    if (used != text.size() || n < 0) throw InvalidArgument("bad --size: " + text);
    return n;
  }
  const double f = std::stod(text, &used);
  if (used != text.size() || !(f > 0.0 && f <= 1.0)) {
    throw InvalidArgument("fractional --size must be in (0, 1]: " + text);
  }
  return target_size_from_fraction(base, f);
}

void run_select(const SelectArgs& a) {
  const Dataset pool = load_dataset(a.pool, "pool");
  std::int64_t base = pool.total_multiplicity();
  if (!a.train.empty()) base = load_dataset(a.train, "train").total_multiplicity();
  const std::int64_t k = parse_size(a.size, base);
  const Strategy strategy = parse_strategy(a.method);

  std::vector<ScoreRecord> records;
  if (strategy != Strategy::random) {
    auto in = open_in(a.scores);
    records = read_scores_csv(in, pool);
  }
  CuratedDataset c;
  switch (strategy) {
    case Strategy::random:
      c = select_random(pool, k, a.seed);
      break;
    case Strategy::entropy:
      c = select_entropy_topk(records, pool, k);
      break;
    case Strategy::entropy_filtered: {
      EntropyFilterParams p;
      p.repetition_cap = a.unlimited_cap ? EntropyFilterParams::kUnlimited : a.cap;
      p.min_domain_share = a.min_share;
      c = select_entropy_filtered(records, pool, k, p);
      break;
    }
    case Strategy::el2n_mixture:
      c = select_el2n_mixture(records, pool, k, a.mixture, a.seed);
      break;
  }
  // Deterministic strategies still carry the invocation seed for the record.
  if (!c.params.seed) c.params.seed = a.seed;
  {
    auto out = open_out(a.out);
    write_curated(c, out);
  }
  auto out = open_out(params_path(a.out));
  write_curated_params(c, out);
  for (const std::string& w : c.params.warnings) std::cerr << "warning: " << w << '\n';
  if (c.shortfall) {
    std::cerr << "warning: pool supplied " << c.total_selected() << " of " << k << " instances\n";
  }
}

struct EvaluateArgs {
  std::string hyp;
  std::string baseline;
  std::string out;
  std::string markdown;
};

void run_evaluate(const EvaluateArgs& a) {
  auto in = open_in(a.hyp);
  const auto records = read_hypotheses(in);
  const EvalReport report = evaluate(records);
  std::optional<DeltaReport> delta;
  if (!a.baseline.empty()) {
    auto bin = open_in(a.baseline);
    const auto base = read_hypotheses(bin);
    delta = relative_delta(report, evaluate(base));
  }
  {
    auto out = open_out(a.out);
    write_report_csv(report, delta ? &*delta : nullptr, out);
  }
  if (!a.markdown.empty()) {
    if (!delta) throw InvalidArgument("--markdown needs --baseline");
    const std::vector<NamedDelta> rows = {
        {"baseline", relative_delta(evaluate(records), evaluate(records))},
        {fs::path(a.hyp).stem().string(), *delta}};
    auto out = open_out(a.markdown);
    write_delta_markdown(rows, out);
  }
}

struct AnalyzeArgs {
  std::vector<std::string> curated;
  std::string pool;
  std::string scores;
  std::string out;
  std::size_t top_k = 7;
  std::size_t bins = 20;
};

void run_analyze(const AnalyzeArgs& a) {
  const Dataset pool = load_dataset(a.pool, "pool");
  std::vector<CuratedDataset> sets;
  for (const std::string& path : a.curated) {
    auto sel = open_in(path);
    auto params = open_in(params_path(path));
    sets.push_back(read_curated(sel, params));
  }
  std::vector<ScoreRecord> records;
  if (!a.scores.empty()) {
    auto in = open_in(a.scores);
    records = read_scores_csv(in, pool);
  }
  AnalysisConfig cfg;
  cfg.top_k_domains = a.top_k;
  cfg.bins = a.bins;
  write_comparison(compare_strategies(sets, pool, records, cfg), a.out);
  if (!records.empty()) {
    std::vector<double> ent, nlu;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!pool[i].nlu_score) continue;
      ent.push_back(records[i].entropy_bits);
      nlu.push_back(*pool[i].nlu_score);
    }
    if (ent.size() >= 2) {
      auto out = open_out(fs::path(a.out) / "correlation.csv");
      write_correlation_csv(correlation_suite(ent, nlu), out);
    }
  }
}

void run_experiment_cmd(const std::string& config, const std::string& out_dir) {
  const ExperimentConfig cfg = parse_experiment_config(KeyValueConfig::load(config));
  fs::path dir = out_dir.empty() ? cfg.output_dir : fs::path(out_dir);
  if (dir.empty()) throw InvalidArgument("no output directory: pass --out or set output_dir");
  const ExperimentBundle bundle = run_experiment(cfg);
  write_bundle(bundle, cfg, dir);
  int failed = 0;
  for (const SeedResult& s : bundle.seeds) {
    if (!s.ok) {
      ++failed;
      std::cerr << "seed " << s.seed << " failed: " << s.error << '\n';
    }
  }
  if (failed == static_cast<int>(bundle.seeds.size())) throw Error("every seed failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-data selection toolkit: score, curate and evaluate augmentation data"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic train/pool/test corpus");
  g->add_option("--spec", gen.spec, "key = value synthetic spec (defaults if omitted)")
      ->check(CLI::ExistingFile);
  g->add_option("--seed", gen.seed, "Generator seed")->required();
  g->add_option("--out", gen.out, "Output directory")->required();

  ScoreArgs sc;
  auto* s = app.add_subcommand("score", "Score a pool with entropy and EL2N");
  s->add_option("--train", sc.train)->required()->check(CLI::ExistingFile);
  s->add_option("--pool", sc.pool)->required()->check(CLI::ExistingFile);
  s->add_option("--replicates", sc.replicates)->default_val(5)->check(CLI::PositiveNumber);
  s->add_option("--el2n-epoch", sc.cfg.el2n_epoch)->default_val(2);
  s->add_option("--epochs", sc.cfg.epochs)->default_val(10);
  s->add_option("--lr", sc.cfg.learning_rate)->default_val(0.1);
  s->add_option("--feature-dim", sc.cfg.feature_dim)->default_val(1u << 14);
  s->add_option("--seed", sc.seed, "Base replicate seed")->default_val(0);
  s->add_option("--out", sc.out, "Score CSV")->required();
  s->add_option("--models-out", sc.models_out, "Directory for the trained models");

  SelectArgs se;
  auto* sel = app.add_subcommand("select", "Curate an augmentation set from a scored pool");
  sel->add_option("--method", se.method)
      ->required()
      ->check(CLI::IsMember({"random", "entropy", "entropy-filtered", "el2n"}));
  sel->add_option("--scores", se.scores)->check(CLI::ExistingFile);
  sel->add_option("--pool", se.pool)->required()->check(CLI::ExistingFile);
  sel->add_option("--train", se.train, "Base for a fractional --size (default: pool)")
      ->check(CLI::ExistingFile);
  sel->add_option("--size", se.size, "Instance count, or a fraction in (0,1]")->required();
  sel->add_option("--cap", se.cap, "Copies allowed per unique text")->default_val(20);
  sel->add_flag("--unlimited-cap", se.unlimited_cap);
  sel->add_option("--min-share", se.min_share, "Per-domain floor share")->default_val(0.005);
  sel->add_option("--hard-frac", se.mixture.hard_fraction)->default_val(0.1);
  sel->add_option("--easy-thr", se.mixture.easy_threshold)->default_val(0.15);
  sel->add_option("--hard-thr", se.mixture.hard_threshold)->default_val(0.6);
  sel->add_option("--seed", se.seed)->required();
  sel->add_option("--out", se.out, "Curated JSONL; params go to <out>.params.json")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Compute error rates from a hypothesis file");
  e->add_option("--hyp", ev.hyp)->required()->check(CLI::ExistingFile);
  e->add_option("--baseline", ev.baseline, "Baseline hypotheses for relative deltas")
      ->check(CLI::ExistingFile);
  e->add_option("--out", ev.out)->required();
  e->add_option("--markdown", ev.markdown, "Also write a markdown delta table");

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Compare curated datasets drawn from one pool");
  a->add_option("--curated", an.curated)->required()->expected(1, -1)->check(CLI::ExistingFile);
  a->add_option("--pool", an.pool)->required()->check(CLI::ExistingFile);
  a->add_option("--scores", an.scores)->check(CLI::ExistingFile);
  a->add_option("--top-k", an.top_k)->default_val(7);
  a->add_option("--bins", an.bins)->default_val(20);
  a->add_option("--out", an.out)->required();

  std::string exp_config, exp_out;
  auto* x = app.add_subcommand("experiment", "Run the end-to-end selection experiment");
  x->add_option("--config", exp_config)->required()->check(CLI::ExistingFile);
  x->add_option("--out", exp_out, "Output directory (overrides output_dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) run_generate(gen);
    if (*s) run_score(sc);
    if (*sel) {
      if (se.method != "random" && se.scores.empty()) {
        throw InvalidArgument("--scores is required for --method " + se.method);
      }
      run_select(se);
    }
    if (*e) run_evaluate(ev);
    if (*a) run_analyze(an);
    if (*x) run_experiment_cmd(exp_config, exp_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
