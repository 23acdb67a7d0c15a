#include "datasel/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "datasel/annotator.hpp"
#include "datasel/csv.hpp"
#include "datasel/error.hpp"
#include "datasel/rng.hpp"
#include "datasel/text.hpp"

namespace datasel {

namespace {

// Stream ids for per-seed derived seeds.
constexpr std::uint64_t kReplicateStream = 100;
constexpr std::uint64_t kRetrainStream = 200;
constexpr std::uint64_t kRandomStream = 300;
constexpr std::uint64_t kMixtureStream = 400;

const std::set<std::string> kSyntheticKeys = {
    "num_domains", "head_skew", "pool_size", "train_size", "test_size",
    "duplicate_rate", "label_noise", "vocab_per_domain"};

std::set<std::string> experiment_keys() {
  std::set<std::string> keys = {
      "corpus.train_file", "corpus.pool_file", "corpus.test_file",
      "train.epochs", "train.learning_rate", "train.feature_dim", "train.el2n_epoch",
      "num_replicates", "nlu_band.lo", "nlu_band.hi", "target_fraction",
      "filter.repetition_cap", "filter.min_domain_share",
      "el2n.easy_threshold", "el2n.hard_threshold", "el2n.hard_fractions",
      "seeds", "analysis.top_k_domains", "analysis.histogram_bins", "output_dir"};
  for (const std::string& k : kSyntheticKeys) keys.insert("synthetic." + k);
  return keys;
}

std::size_t non_negative(std::int64_t v, const char* what) {
  if (v < 0) throw InvalidArgument(std::string(what) + " must be >= 0");
  return static_cast<std::size_t>(v);
}

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_real(v[i]);
  return out;
}

std::vector<HypothesisRecord> hypothesize(const ClassifierModel& model, const Annotator& annotator,
                                          const Dataset& test) {
  std::vector<HypothesisRecord> out;
  out.reserve(test.size());
  for (const Example& ex : test) {
    const DomainDistribution p = predict_proba(model, ex.text);
    const std::string& domain = model.label_set()[p.argmax()];
    Interpretation interp = annotator.annotate(ex.text, domain);
    HypothesisRecord r;
    r.example_id = ex.id;
    r.ref_domain = ex.domain;
    r.hyp_domain = domain;
    r.ref_intent = ex.intent;
    r.hyp_intent = std::move(interp.intent);
    r.ref_slots = ex.slots;
    r.hyp_slots = std::move(interp.slots);
    // Every test row stands for `count` identical utterances.
    for (std::int64_t k = 0; k < ex.count; ++k) out.push_back(r);
  }
  return out;
}

Dataset relabel(const Dataset& d, const std::vector<std::string>& labels) {
  return Dataset(d.name(), d.examples(), labels);
}

struct Corpus {
  Dataset train;
  Dataset pool;
  Dataset test;
  Annotator annotator;
};

Corpus obtain_corpus(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.uses_files()) {
    SyntheticCorpus sc = generate_synthetic(cfg.synthetic, seed);
    return Corpus{std::move(sc.train), std::move(sc.pool), std::move(sc.test_tail),
                  synthetic_annotator(cfg.synthetic)};
  }
  Dataset train = load_dataset(cfg.train_file, "train");
  Dataset pool = load_dataset(cfg.pool_file, "pool");
  Dataset test = load_dataset(cfg.test_file, "test_tail");
  std::set<std::string> labels;
  for (const Dataset* d : {&train, &pool, &test}) {
    labels.insert(d->label_set().begin(), d->label_set().end());
  }
  const std::vector<std::string> all(labels.begin(), labels.end());
  Annotator annotator = Annotator::from_dataset(train);
  return Corpus{relabel(train, all), relabel(pool, all), relabel(test, all),
                std::move(annotator)};
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedResult res;
  res.seed = seed;
  Corpus corpus = obtain_corpus(cfg, seed);
  const Dataset pool = filter_by_nlu_band(corpus.pool, cfg.nlu_band_lo, cfg.nlu_band_hi);
  res.pool_size = pool.size();
  if (pool.empty()) throw Error("no pool examples inside the NLU band");

  std::vector<TrainRun> runs = train_replicate_runs(
      corpus.train, cfg.train, cfg.num_replicates, mix_seed(seed, kReplicateStream));
  std::vector<ClassifierModel> checkpoints;
  for (TrainRun& r : runs) checkpoints.push_back(std::move(r.el2n_checkpoint));
  res.scores = score_pool(runs.front().final_model, checkpoints, pool);

  std::vector<double> ent, el, nlu;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    ent.push_back(res.scores[i].entropy_bits);
    el.push_back(res.scores[i].el2n);
    nlu.push_back(*pool[i].nlu_score);
  }
  if (pool.size() >= 2) {
    res.entropy_stats = score_stats(ent);
    res.el2n_stats = score_stats(el);
    res.correlation = correlation_suite(ent, nlu);
  }

  res.target_size = target_size_from_fraction(corpus.train.total_multiplicity(),
                                              cfg.target_fraction);
  std::vector<CuratedDataset> curated;
  curated.push_back(select_random(pool, res.target_size, mix_seed(seed, kRandomStream)));
  curated.push_back(select_entropy_topk(res.scores, pool, res.target_size));
  curated.push_back(select_entropy_filtered(res.scores, pool, res.target_size, cfg.filter));
  for (std::size_t i = 0; i < cfg.hard_fractions.size(); ++i) {
    El2nMixtureParams mp{cfg.easy_threshold, cfg.hard_threshold, cfg.hard_fractions[i]};
    curated.push_back(select_el2n_mixture(res.scores, pool, res.target_size, mp,
                                          mix_seed(seed, kMixtureStream + i)));
  }

  const std::uint64_t retrain_seed = mix_seed(seed, kRetrainStream);
  for (CuratedDataset& c : curated) {
    const Dataset extra = materialize(c, pool);
    const Dataset augmented = concat("train+" + std::string(to_string(c.strategy)),
                                     {&corpus.train, &extra});
    const ClassifierModel model = train(augmented, cfg.train, retrain_seed);
    const auto hyps = hypothesize(model, corpus.annotator, corpus.test);
    CandidateResult cand;
    cand.name = display_name(c);
    cand.report = evaluate(hyps);
    cand.curated = std::move(c);
    res.candidates.push_back(std::move(cand));
  }
  const EvalReport& baseline = res.candidates.front().report;
  for (CandidateResult& cand : res.candidates) cand.delta = relative_delta(cand.report, baseline);

  std::vector<CuratedDataset> all;
  for (const CandidateResult& c : res.candidates) all.push_back(c.curated);
  AnalysisConfig ac;
  ac.top_k_domains = cfg.top_k_domains;
  ac.bins = cfg.histogram_bins;
  res.comparison = compare_strategies(all, pool, res.scores, ac);
  res.ok = true;
  return res;
}

std::vector<AggregateDelta> aggregate(const std::vector<SeedResult>& seeds) {
  std::vector<AggregateDelta> out;
  const SeedResult* first = nullptr;
  for (const SeedResult& s : seeds) {
    if (s.ok) {
      first = &s;
      break;
    }
  }
  if (!first) return out;
  using Getter = std::optional<double> (*)(const DeltaReport&);
  const std::pair<const char*, Getter> metrics[] = {
      {"ΔSEMER%", [](const DeltaReport& d) { return d.semer; }},
      {"ΔF-SEMER%", [](const DeltaReport& d) { return d.f_semer; }},
      {"ΔDCER%", [](const DeltaReport& d) { return d.dcer; }},
      {"ΔIRER", [](const DeltaReport& d) { return d.irer; }},
  };
  for (std::size_t c = 0; c < first->candidates.size(); ++c) {
    for (const auto& [metric, get] : metrics) {
      AggregateDelta a;
      a.model = first->candidates[c].name;
      a.metric = metric;
      double sum = 0.0;
      for (const SeedResult& s : seeds) {
        if (!s.ok || c >= s.candidates.size()) continue;
        const auto v = get(s.candidates[c].delta);
        if (!v) continue;
        a.min = a.n_seeds ? std::min(a.min, *v) : *v;
        a.max = a.n_seeds ? std::max(a.max, *v) : *v;
        sum += *v;
        ++a.n_seeds;
      }
      a.mean = a.n_seeds ? sum / static_cast<double>(a.n_seeds) : 0.0;
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (uses_files()) {
    if (pool_file.empty() || test_file.empty()) {
      throw InvalidArgument("file corpus needs corpus.train_file, corpus.pool_file and corpus.test_file");
    }
  } else {
    synthetic.validate();
  }
  train.validate();
  if (num_replicates < 1) throw InvalidArgument("num_replicates must be >= 1");
  if (!(nlu_band_lo > 0.0 && nlu_band_lo <= nlu_band_hi && nlu_band_hi <= 1.0)) {
    throw InvalidArgument("nlu band requires 0 < lo <= hi <= 1");
  }
  if (!(target_fraction > 0.0)) throw InvalidArgument("target_fraction must be > 0");
  if (filter.repetition_cap < 1 || !(filter.min_domain_share >= 0.0 && filter.min_domain_share < 1.0)) {
    throw InvalidArgument("invalid entropy filter parameters");
  }
  for (double h : hard_fractions) {
    El2nMixtureParams{easy_threshold, hard_threshold, h}.validate();
  }
  if (seeds.empty()) throw InvalidArgument("at least one seed is required");
  if (histogram_bins == 0) throw InvalidArgument("analysis.histogram_bins must be > 0");
}

SyntheticSpec parse_synthetic_spec(const KeyValueConfig& kv, const std::string& prefix) {
  SyntheticSpec s;
  s.num_domains = non_negative(kv.get_int(prefix + "num_domains", static_cast<std::int64_t>(s.num_domains)), "num_domains");
  s.head_skew = kv.get_double(prefix + "head_skew", s.head_skew);
  s.pool_size = non_negative(kv.get_int(prefix + "pool_size", static_cast<std::int64_t>(s.pool_size)), "pool_size");
  s.train_size = non_negative(kv.get_int(prefix + "train_size", static_cast<std::int64_t>(s.train_size)), "train_size");
  s.test_size = non_negative(kv.get_int(prefix + "test_size", static_cast<std::int64_t>(s.test_size)), "test_size");
  s.duplicate_rate = kv.get_double(prefix + "duplicate_rate", s.duplicate_rate);
  s.label_noise = kv.get_double(prefix + "label_noise", s.label_noise);
  s.vocab_per_domain = non_negative(kv.get_int(prefix + "vocab_per_domain", static_cast<std::int64_t>(s.vocab_per_domain)), "vocab_per_domain");
  if (prefix.empty()) {
    std::set<std::string> known(kSyntheticKeys.begin(), kSyntheticKeys.end());
    kv.reject_unknown(known);
  }
  s.validate();
  return s;
}

ExperimentConfig parse_experiment_config(const KeyValueConfig& kv) {
  kv.reject_unknown(experiment_keys());
  ExperimentConfig c;
  c.synthetic = parse_synthetic_spec(kv, "synthetic.");
  c.train_file = kv.get_string("corpus.train_file", "");
  c.pool_file = kv.get_string("corpus.pool_file", "");
  c.test_file = kv.get_string("corpus.test_file", "");
  c.train.epochs = static_cast<int>(kv.get_int("train.epochs", c.train.epochs));
  c.train.learning_rate = kv.get_double("train.learning_rate", c.train.learning_rate);
  c.train.feature_dim = non_negative(kv.get_int("train.feature_dim", static_cast<std::int64_t>(c.train.feature_dim)), "train.feature_dim");
  c.train.el2n_epoch = static_cast<int>(kv.get_int("train.el2n_epoch", c.train.el2n_epoch));
  c.num_replicates = static_cast<int>(kv.get_int("num_replicates", c.num_replicates));
  c.nlu_band_lo = kv.get_double("nlu_band.lo", c.nlu_band_lo);
  c.nlu_band_hi = kv.get_double("nlu_band.hi", c.nlu_band_hi);
  c.target_fraction = kv.get_double("target_fraction", c.target_fraction);
  if (kv.get_string("filter.repetition_cap", "") == "unlimited") {
    c.filter.repetition_cap = EntropyFilterParams::kUnlimited;
  } else {
    c.filter.repetition_cap = kv.get_int("filter.repetition_cap", c.filter.repetition_cap);
  }
  c.filter.min_domain_share = kv.get_double("filter.min_domain_share", c.filter.min_domain_share);
  c.easy_threshold = kv.get_double("el2n.easy_threshold", c.easy_threshold);
  c.hard_threshold = kv.get_double("el2n.hard_threshold", c.hard_threshold);
  c.hard_fractions = kv.get_doubles("el2n.hard_fractions", c.hard_fractions);
  c.seeds = kv.get_uints("seeds", c.seeds);
  c.top_k_domains = non_negative(kv.get_int("analysis.top_k_domains", static_cast<std::int64_t>(c.top_k_domains)), "analysis.top_k_domains");
  c.histogram_bins = non_negative(kv.get_int("analysis.histogram_bins", static_cast<std::int64_t>(c.histogram_bins)), "analysis.histogram_bins");
  c.output_dir = kv.get_string("output_dir", "");
  c.validate();
  return c;
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream os;
  if (c.uses_files()) {
    os << "corpus.train_file = " << c.train_file.string() << '\n'
       << "corpus.pool_file = " << c.pool_file.string() << '\n'
       << "corpus.test_file = " << c.test_file.string() << '\n';
  } else {
    const SyntheticSpec& s = c.synthetic;
    os << "synthetic.num_domains = " << s.num_domains << '\n'
       << "synthetic.head_skew = " << format_real(s.head_skew) << '\n'
       << "synthetic.pool_size = " << s.pool_size << '\n'
       << "synthetic.train_size = " << s.train_size << '\n'
       << "synthetic.test_size = " << s.test_size << '\n'
       << "synthetic.duplicate_rate = " << format_real(s.duplicate_rate) << '\n'
       << "synthetic.label_noise = " << format_real(s.label_noise) << '\n'
       << "synthetic.vocab_per_domain = " << s.vocab_per_domain << '\n';
  }
  os << "train.epochs = " << c.train.epochs << '\n'
     << "train.learning_rate = " << format_real(c.train.learning_rate) << '\n'
     << "train.feature_dim = " << c.train.feature_dim << '\n'
     << "train.el2n_epoch = " << c.train.el2n_epoch << '\n'
     << "num_replicates = " << c.num_replicates << '\n'
     << "nlu_band.lo = " << format_real(c.nlu_band_lo) << '\n'
     << "nlu_band.hi = " << format_real(c.nlu_band_hi) << '\n'
     << "target_fraction = " << format_real(c.target_fraction) << '\n'
     << "filter.repetition_cap = "
     << (c.filter.repetition_cap == EntropyFilterParams::kUnlimited
             ? std::string("unlimited")
             : std::to_string(c.filter.repetition_cap))
     << '\n'
     << "filter.min_domain_share = " << format_real(c.filter.min_domain_share) << '\n'
     << "el2n.easy_threshold = " << format_real(c.easy_threshold) << '\n'
     << "el2n.hard_threshold = " << format_real(c.hard_threshold) << '\n'
     << "el2n.hard_fractions = " << join_reals(c.hard_fractions) << '\n'
     << "seeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? "," : "") << c.seeds[i];
  os << '\n'
     << "analysis.top_k_domains = " << c.top_k_domains << '\n'
     << "analysis.histogram_bins = " << c.histogram_bins << '\n';
  return os.str();
}

ExperimentBundle run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentBundle bundle;
  for (std::uint64_t seed : cfg.seeds) {
    try {
      bundle.seeds.push_back(run_seed(cfg, seed));
    } catch (const std::exception& e) {
      SeedResult failed;
      failed.seed = seed;
      failed.ok = false;
      failed.error = e.what();
      bundle.seeds.push_back(std::move(failed));
    }
  }
  bundle.aggregate = aggregate(bundle.seeds);
  return bundle;
}

void write_bundle(const ExperimentBundle& bundle, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "config.txt");
    out << render_config(cfg);
  }

  nlohmann::ordered_json manifest;
  manifest["seeds"] = nlohmann::ordered_json::array();
  for (const SeedResult& s : bundle.seeds) {
    nlohmann::ordered_json js;
    js["seed"] = s.seed;
    js["status"] = s.ok ? "ok" : "failed";
    if (!s.ok) {
      js["error"] = s.error;
      manifest["seeds"].push_back(std::move(js));
      continue;
    }
    js["derived_seeds"] = {{"replicate_base", mix_seed(s.seed, kReplicateStream)},
                           {"retrain", mix_seed(s.seed, kRetrainStream)},
                           {"random_selection", mix_seed(s.seed, kRandomStream)}};
    js["pool_size_in_band"] = s.pool_size;
    js["target_size"] = s.target_size;
    js["candidates"] = nlohmann::ordered_json::array();
    for (const CandidateResult& c : s.candidates) {
      nlohmann::ordered_json jc;
      jc["name"] = c.name;
      jc["strategy"] = std::string(to_string(c.curated.strategy));
      jc["selected"] = c.curated.total_selected();
      jc["shortfall"] = c.curated.shortfall;
      jc["warnings"] = c.curated.params.warnings;
      js["candidates"].push_back(std::move(jc));
    }
    manifest["seeds"].push_back(std::move(js));

    const fs::path sd = dir / ("seed_" + std::to_string(s.seed));
    fs::create_directories(sd);
    {
      auto out = open_out(sd / "scores.csv");
      write_scores_csv(s.scores, out);
    }
    {
      auto out = open_out(sd / "score_stats.csv");
      out << "score,min,max,mean,std,n_total,n_outliers_removed\n";
      for (const auto& [name, st] : {std::pair{"entropy", &s.entropy_stats},
                                     std::pair{"el2n", &s.el2n_stats}}) {
        out << name << ',' << format_real(st->min) << ',' << format_real(st->max) << ','
            << format_real(st->mean) << ',' << format_real(st->std) << ',' << st->n_total << ','
            << st->n_outliers_removed << '\n';
      }
    }
    {
      auto out = open_out(sd / "correlation.csv");
      write_correlation_csv(s.correlation, out);
    }
    std::vector<NamedDelta> rows;
    for (const CandidateResult& c : s.candidates) {
      const std::string slug = slugify(c.name);
      {
        auto out = open_out(sd / ("curated_" + slug + ".jsonl"));
        write_curated(c.curated, out);
      }
      {
        auto out = open_out(sd / ("curated_" + slug + ".params.json"));
        write_curated_params(c.curated, out);
      }
      {
        auto out = open_out(sd / ("eval_" + slug + ".csv"));
        write_report_csv(c.report, &c.delta, out);
      }
      rows.push_back({c.name, c.delta});
    }
    {
      auto out = open_out(sd / "deltas_overall.csv");
      write_overall_delta_csv(rows, out);
    }
    {
      auto out = open_out(sd / "deltas_domain.csv");
      write_domain_delta_csv(rows, out);
    }
    {
      auto out = open_out(sd / "report.md");
      out << "# Seed " << s.seed << "\n\nValues relative to the random-selection baseline.\n\n";
      write_delta_markdown(rows, out);
    }
    if (s.comparison) write_comparison(*s.comparison, sd / "analysis");
  }
  {
    auto out = open_out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "aggregate_deltas.csv");
    out << "model,metric,mean,min,max,n_seeds\n";
    for (const AggregateDelta& a : bundle.aggregate) {
      out << csv::escape(a.model) << ',' << a.metric << ',' << format_real(a.mean) << ','
          << format_real(a.min) << ',' << format_real(a.max) << ',' << a.n_seeds << '\n';
    }
  }
  {
    auto out = open_out(dir / "summary.md");
    out << "# Experiment summary\n\nMean relative delta (%) over successful seeds "
           "[min, max]; negative is better.\n\n";
    out << "| Model | ΔSEMER% | ΔF-SEMER% | ΔDCER% | ΔIRER |\n|---|---:|---:|---:|---:|\n";
    for (std::size_t i = 0; i + 3 < bundle.aggregate.size(); i += 4) {
      out << "| " << bundle.aggregate[i].model;
      for (std::size_t k = 0; k < 4; ++k) {
        const AggregateDelta& a = bundle.aggregate[i + k];
        out << " | " << format_fixed(a.mean, 2) << " [" << format_fixed(a.min, 2) << ", "
            << format_fixed(a.max, 2) << "]";
      }
      out << " |\n";
    }
  }
}

}  // namespace datasel
