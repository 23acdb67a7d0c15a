#include "datasel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "datasel/error.hpp"
#include "datasel/rng.hpp"
#include "datasel/text.hpp"

namespace datasel {

namespace {

// One selectable copy of a pool example.
struct Instance {
  std::uint32_t example;
  std::uint32_t ordinal;
};

std::vector<Instance> expand_instances(const Dataset& pool) {
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(pool.total_multiplicity()));
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::int64_t k = 0; k < pool[i].count; ++k) {
      out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k)});
    }
  }
  return out;
}

// records[i] aligned to pool[i].
std::vector<const ScoreRecord*> align_records(std::span<const ScoreRecord> records,
                                              const Dataset& pool) {
  std::vector<const ScoreRecord*> aligned(pool.size(), nullptr);
  for (const ScoreRecord& r : records) {
    const auto idx = pool.index_of(r.example_id);
    if (!idx) throw InvalidArgument("score record '" + r.example_id + "' is not in the pool");
    aligned[*idx] = &r;
  }
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    if (!aligned[i]) throw InvalidArgument("pool example '" + pool[i].id + "' has no score record");
  }
  return aligned;
}

void check_target(std::int64_t target_size) {
  if (target_size < 1) throw InvalidArgument("target_size must be >= 1");
}

CuratedDataset make_result(Strategy strategy, const Dataset& pool, std::int64_t target_size,
                           const std::vector<std::int64_t>& multiplicity) {
  CuratedDataset out;
  out.strategy = strategy;
  out.target_size = target_size;
  out.pool_name = pool.name();
  out.pool_fingerprint = pool.fingerprint();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (multiplicity[i] > 0) out.selections.push_back({pool[i].id, multiplicity[i]});
  }
  out.shortfall = out.total_selected() < target_size;
  return out;
}

// Descending entropy, then ascending id, then ordinal.
std::vector<Instance> entropy_ranking(const std::vector<const ScoreRecord*>& aligned,
                                      const Dataset& pool) {
  std::vector<Instance> ranked = expand_instances(pool);
  std::sort(ranked.begin(), ranked.end(), [&](const Instance& a, const Instance& b) {
    const double ea = aligned[a.example]->entropy_bits;
    const double eb = aligned[b.example]->entropy_bits;
    if (ea != eb) return ea > eb;
    const std::string& ia = pool[a.example].id;
    const std::string& ib = pool[b.example].id;
    if (ia != ib) return ia < ib;
    return a.ordinal < b.ordinal;
  });
  return ranked;
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::random: return "random";
    case Strategy::entropy: return "entropy";
    case Strategy::entropy_filtered: return "entropy_filtered";
    case Strategy::el2n_mixture: return "el2n_mixture";
  }
  return "random";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "random") return Strategy::random;
  if (text == "entropy") return Strategy::entropy;
  if (text == "entropy_filtered" || text == "entropy-filtered") return Strategy::entropy_filtered;
  if (text == "el2n_mixture" || text == "el2n") return Strategy::el2n_mixture;
  throw InvalidArgument("unknown strategy '" + std::string(text) + "'");
}

void EntropyFilterParams::validate(std::size_t num_domains) const {
  if (repetition_cap < 1) throw InvalidArgument("repetition cap P must be >= 1");
  if (!(min_domain_share >= 0.0 && min_domain_share < 1.0)) {
    throw InvalidArgument("minimum domain share R must be in [0,1)");
  }
  if (min_domain_share * static_cast<double>(num_domains) > 1.0 + 1e-12) {
    throw InvalidArgument("minimum domain share R times number of domains exceeds 1");
  }
}

void El2nMixtureParams::validate() const {
  if (!(easy_threshold < hard_threshold)) {
    throw InvalidArgument("easy threshold must be below hard threshold");
  }
  if (!(hard_fraction >= 0.0 && hard_fraction <= 1.0)) {
    throw InvalidArgument("hard fraction must be in [0,1]");
  }
}

std::int64_t CuratedDataset::total_selected() const {
  std::int64_t total = 0;
  for (const Selection& s : selections) total += s.multiplicity;
  return total;
}

std::string display_name(const CuratedDataset& curated) {
  switch (curated.strategy) {
    case Strategy::random: return "Random";
    case Strategy::entropy: return "Entropy";
    case Strategy::entropy_filtered: return "Entropy w/ Filters";
    case Strategy::el2n_mixture: {
      const double h = curated.params.mixture ? curated.params.mixture->hard_fraction : 0.0;
      const auto hard = static_cast<long long>(std::llround(100.0 * h));
      return "EL2N (" + std::to_string(hard) + "% Hard + " + std::to_string(100 - hard) +
             "% Easy)";
    }
  }
  return "";
}

std::int64_t target_size_from_fraction(std::int64_t base, double fraction) {
  if (!(fraction > 0.0)) throw InvalidArgument("target fraction must be > 0");
  return std::max<std::int64_t>(1, std::llround(fraction * static_cast<double>(base)));
}

CuratedDataset select_random(const Dataset& pool, std::int64_t target_size,
                             std::uint64_t seed) {
  check_target(target_size);
  std::vector<Instance> instances = expand_instances(pool);
  const auto take = std::min<std::size_t>(instances.size(), static_cast<std::size_t>(target_size));
  Rng rng(seed);
  rng.partial_shuffle(instances, take);
  std::vector<std::int64_t> mult(pool.size(), 0);
  for (std::size_t i = 0; i < take; ++i) ++mult[instances[i].example];
  CuratedDataset out = make_result(Strategy::random, pool, target_size, mult);
  out.params.seed = seed;
  return out;
}

CuratedDataset select_entropy_topk(std::span<const ScoreRecord> records,
                                   const Dataset& pool, std::int64_t target_size) {
  check_target(target_size);
  const auto aligned = align_records(records, pool);
  const std::vector<Instance> ranked = entropy_ranking(aligned, pool);
  const auto take = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(target_size));
  std::vector<std::int64_t> mult(pool.size(), 0);
  for (std::size_t i = 0; i < take; ++i) ++mult[ranked[i].example];
  return make_result(Strategy::entropy, pool, target_size, mult);
}

CuratedDataset select_entropy_filtered(std::span<const ScoreRecord> records,
                                       const Dataset& pool, std::int64_t target_size,
                                       const EntropyFilterParams& params) {
  check_target(target_size);
  const std::size_t num_domains = pool.label_set().size();
  params.validate(num_domains);
  const auto aligned = align_records(records, pool);
  const std::vector<Instance> ranked = entropy_ranking(aligned, pool);

  std::vector<char> admitted(ranked.size(), 0);
  std::unordered_map<std::string_view, std::int64_t> text_count;
  std::vector<std::int64_t> domain_count(num_domains, 0);
  std::vector<std::size_t> domain_of(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) domain_of[i] = *pool.label_index(pool[i].domain);
  std::int64_t total = 0;

  auto text_of = [&](std::size_t r) -> std::string_view { return pool[ranked[r].example].text; };
  auto admit = [&](std::size_t r) {
    admitted[r] = 1;
    ++text_count[text_of(r)];
    ++domain_count[domain_of[ranked[r].example]];
    ++total;
  };
  auto evict = [&](std::size_t r) {
    admitted[r] = 0;
    --text_count[text_of(r)];
    --domain_count[domain_of[ranked[r].example]];
    --total;
  };
  auto under_cap = [&](std::size_t r) {
    auto it = text_count.find(text_of(r));
    return it == text_count.end() || it->second < params.repetition_cap;
  };

  // Phase 1: capped scan in entropy order.
  for (std::size_t r = 0; r < ranked.size() && total < target_size; ++r) {
    if (under_cap(r)) admit(r);
  }

  std::vector<std::string> warnings;
  // Phase 2: per-domain floors.
  const auto floor_count = static_cast<std::int64_t>(
      std::ceil(params.min_domain_share * static_cast<double>(target_size) - 1e-9));
  if (floor_count > 0) {
    std::vector<std::vector<std::size_t>> by_domain(num_domains);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      by_domain[domain_of[ranked[r].example]].push_back(r);
    }
    // Eviction candidates are taken from the bottom of the ranking; a
    // domain at or below its floor never rises above it again here, so the
    // cursor only moves upward.
    std::size_t cursor = ranked.size();
    for (std::size_t d = 0; d < num_domains; ++d) {
      if (domain_count[d] >= floor_count) continue;
      for (std::size_t r : by_domain[d]) {
        if (domain_count[d] >= floor_count) break;
        if (admitted[r] || !under_cap(r)) continue;
        if (total >= target_size) {
          std::size_t victim = ranked.size();
          while (cursor > 0) {
            const std::size_t c = cursor - 1;
            const std::size_t cd = domain_of[ranked[c].example];
            if (admitted[c] && cd != d && domain_count[cd] > floor_count) {
              victim = c;
              break;
            }
            --cursor;
          }
          if (victim == ranked.size()) break;
          evict(victim);
        }
        admit(r);
      }
      if (domain_count[d] < floor_count) {
        warnings.push_back(
            "domain '" + pool.label_set()[d] + "' below floor: " +
            std::to_string(domain_count[d]) + " of " + std::to_string(floor_count) +
            " instances available");
      }
    }
  }

  std::vector<std::int64_t> mult(pool.size(), 0);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (admitted[r]) ++mult[ranked[r].example];
  }
  CuratedDataset out = make_result(Strategy::entropy_filtered, pool, target_size, mult);
  out.params.filter = params;
  out.params.warnings = std::move(warnings);
  return out;
}

CuratedDataset select_el2n_mixture(std::span<const ScoreRecord> records,
                                   const Dataset& pool, std::int64_t target_size,
                                   const El2nMixtureParams& params, std::uint64_t seed) {
  check_target(target_size);
  params.validate();
  const auto aligned = align_records(records, pool);
  std::vector<Instance> hard, easy;
  for (const Instance& inst : expand_instances(pool)) {
    const double s = aligned[inst.example]->el2n;
    if (s >= params.hard_threshold) {
      hard.push_back(inst);
    } else if (s <= params.easy_threshold) {
      easy.push_back(inst);
    }
  }
  const std::int64_t want_hard = std::llround(params.hard_fraction * static_cast<double>(target_size));
  const std::int64_t want_easy = target_size - want_hard;
  const auto n_hard = static_cast<std::int64_t>(hard.size());
  const auto n_easy = static_cast<std::int64_t>(easy.size());
  std::int64_t take_hard = std::min(want_hard, n_hard);
  std::int64_t take_easy = std::min(want_easy, n_easy);
  const std::int64_t hard_deficit = want_hard - take_hard;
  const std::int64_t easy_deficit = want_easy - take_easy;
  take_easy += std::min(hard_deficit, n_easy - take_easy);
  take_hard += std::min(easy_deficit, n_hard - take_hard);

  Rng rng(seed);
  rng.partial_shuffle(hard, static_cast<std::size_t>(take_hard));
  rng.partial_shuffle(easy, static_cast<std::size_t>(take_easy));
  std::vector<std::int64_t> mult(pool.size(), 0);
  for (std::int64_t i = 0; i < take_hard; ++i) ++mult[hard[static_cast<std::size_t>(i)].example];
  for (std::int64_t i = 0; i < take_easy; ++i) ++mult[easy[static_cast<std::size_t>(i)].example];

  CuratedDataset out = make_result(Strategy::el2n_mixture, pool, target_size, mult);
  out.params.seed = seed;
  out.params.mixture = params;
  out.params.hard_deficit = hard_deficit;
  out.params.easy_deficit = easy_deficit;
  if (hard_deficit > 0) {
    out.params.warnings.push_back("hard subset short by " + std::to_string(hard_deficit) +
                                  "; reassigned to easy");
  }
  if (easy_deficit > 0) {
    out.params.warnings.push_back("easy subset short by " + std::to_string(easy_deficit) +
                                  "; reassigned to hard");
  }
  return out;
}

double overlap_percent(const CuratedDataset& a, const CuratedDataset& b) {
  if (a.selections.empty() || b.selections.empty()) {
    throw InvalidArgument("overlap_percent: empty selection");
  }
  std::set<std::string_view> ids_a, ids_b;
  for (const Selection& s : a.selections) ids_a.insert(s.example_id);
  for (const Selection& s : b.selections) ids_b.insert(s.example_id);
  std::size_t common = 0;
  for (std::string_view id : ids_a) common += ids_b.count(id);
  return 100.0 * static_cast<double>(common) /
         static_cast<double>(std::min(ids_a.size(), ids_b.size()));
}

Dataset materialize(const CuratedDataset& curated, const Dataset& pool) {
  std::vector<Example> rows;
  rows.reserve(curated.selections.size());
  for (const Selection& s : curated.selections) {
    const auto idx = pool.index_of(s.example_id);
    if (!idx) throw InvalidArgument("selection '" + s.example_id + "' is not in the pool");
    Example ex = pool[*idx];
    ex.count = s.multiplicity;
    rows.push_back(std::move(ex));
  }
  return Dataset(std::string(to_string(curated.strategy)), std::move(rows), pool.label_set());
}

void write_curated(const CuratedDataset& curated, std::ostream& out) {
  for (const Selection& s : curated.selections) {
    nlohmann::ordered_json row;
    row["example_id"] = s.example_id;
    row["multiplicity"] = s.multiplicity;
    out << row.dump() << '\n';
  }
}

void write_curated_params(const CuratedDataset& curated, std::ostream& out) {
  nlohmann::ordered_json j;
  j["strategy"] = std::string(to_string(curated.strategy));
  j["target_size"] = curated.target_size;
  j["selected"] = curated.total_selected();
  j["shortfall"] = curated.shortfall;
  j["pool"] = {{"name", curated.pool_name}, {"fingerprint", curated.pool_fingerprint}};
  nlohmann::ordered_json p;
  const SelectionParams& sp = curated.params;
  p["seed"] = sp.seed ? nlohmann::ordered_json(*sp.seed) : nlohmann::ordered_json(nullptr);
  if (sp.filter) {
    p["repetition_cap"] = sp.filter->repetition_cap == EntropyFilterParams::kUnlimited
                              ? nlohmann::ordered_json(nullptr)
                              : nlohmann::ordered_json(sp.filter->repetition_cap);
    p["min_domain_share"] = sp.filter->min_domain_share;
  }
  if (sp.mixture) {
    p["easy_threshold"] = sp.mixture->easy_threshold;
    p["hard_threshold"] = sp.mixture->hard_threshold;
    p["hard_fraction"] = sp.mixture->hard_fraction;
    p["hard_deficit"] = sp.hard_deficit;
    p["easy_deficit"] = sp.easy_deficit;
  }
  p["warnings"] = sp.warnings;
  j["params"] = std::move(p);
  out << j.dump(2) << '\n';
}

CuratedDataset read_curated(std::istream& selections, std::istream& params) {
  CuratedDataset out;
  try {
    const nlohmann::json j = nlohmann::json::parse(params);
    out.strategy = parse_strategy(j.at("strategy").get<std::string>());
    out.target_size = j.at("target_size").get<std::int64_t>();
    out.shortfall = j.at("shortfall").get<bool>();
    out.pool_name = j.at("pool").at("name").get<std::string>();
    out.pool_fingerprint = j.at("pool").at("fingerprint").get<std::string>();
    const auto& p = j.at("params");
    if (!p.at("seed").is_null()) out.params.seed = p.at("seed").get<std::uint64_t>();
    if (p.contains("min_domain_share")) {
      EntropyFilterParams f;
      f.repetition_cap = p.at("repetition_cap").is_null()
                             ? EntropyFilterParams::kUnlimited
                             : p.at("repetition_cap").get<std::int64_t>();
      f.min_domain_share = p.at("min_domain_share").get<double>();
      out.params.filter = f;
    }
    if (p.contains("hard_fraction")) {
      El2nMixtureParams m;
      m.easy_threshold = p.at("easy_threshold").get<double>();
      m.hard_threshold = p.at("hard_threshold").get<double>();
      m.hard_fraction = p.at("hard_fraction").get<double>();
      out.params.mixture = m;
      out.params.hard_deficit = p.at("hard_deficit").get<std::int64_t>();
      out.params.easy_deficit = p.at("easy_deficit").get<std::int64_t>();
    }
    out.params.warnings = p.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("curated params: ") + e.what());
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(selections, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json row = nlohmann::json::parse(line);
      Selection s{row.at("example_id").get<std::string>(),
                  row.at("multiplicity").get<std::int64_t>()};
      if (s.multiplicity < 1) throw ParseError(line_no, "multiplicity must be >= 1");
      out.selections.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace datasel
