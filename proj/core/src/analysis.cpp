#include "datasel/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "datasel/csv.hpp"
#include "datasel/error.hpp"
#include "datasel/text.hpp"

namespace datasel {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("correlation: length mismatch");
  if (x.size() < 2) throw InvalidArgument("correlation: need at least 2 points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw InvalidArgument("correlation: non-finite input");
    }
  }
}

// Counts pairs i < j with v[i] > v[j], sorting v.
std::int64_t count_inversions(std::vector<double>& v) {
  std::vector<double> buf(v.size());
  std::int64_t inversions = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          inversions += static_cast<std::int64_t>(mid - i);
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    v.swap(buf);
  }
  return inversions;
}

template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal_to_prev) {
  std::int64_t pairs = 0, run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal_to_prev(i)) {
      ++run;
    } else {
      pairs += run * (run - 1) / 2;
      run = 1;
    }
  }
  return pairs;
}

}  // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double kendall_tau_a(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  const std::int64_t x_ties =
      tied_pairs(n, [&](std::size_t i) { return x[order[i]] == x[order[i - 1]]; });
  const std::int64_t joint_ties = tied_pairs(n, [&](std::size_t i) {
    return x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]];
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  // x-tied runs are already y-sorted, so every inversion is a discordant pair.
  const std::int64_t discordant = count_inversions(ys);
  const std::int64_t y_ties = tied_pairs(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });
  const auto total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t untied = total - x_ties - y_ties + joint_ties;
  const std::int64_t concordant_minus_discordant = untied - 2 * discordant;
  return static_cast<double>(concordant_minus_discordant) / static_cast<double>(total);
}

CorrelationReport correlation_suite(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  CorrelationReport r;
  r.n = x.size();
  r.pearson = pearson(x, y);
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  r.spearman = pearson(rx, ry);
  r.kendall_tau_a = kendall_tau_a(x, y);
  return r;
}

void write_correlation_csv(const CorrelationReport& report, std::ostream& out) {
  auto cell = [](const std::optional<double>& v) { return v ? format_real(*v) : "undefined"; };
  out << "coefficient,value,n\n";
  out << "pearson," << cell(report.pearson) << ',' << report.n << '\n';
  out << "spearman," << cell(report.spearman) << ',' << report.n << '\n';
  out << "kendall_tau_a," << format_real(report.kendall_tau_a) << ',' << report.n << '\n';
}

Histogram make_histogram(std::span<const double> values, std::span<const std::int64_t> weights,
                         double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw InvalidArgument("histogram: need bins > 0 and hi > lo");
  if (!weights.empty() && weights.size() != values.size()) {
    throw InvalidArgument("histogram: weights and values differ in length");
  }
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges.push_back(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = (values[i] - lo) / (hi - lo) * static_cast<double>(bins);
    auto b = static_cast<std::int64_t>(std::floor(t));
    b = std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(bins) - 1);
    h.counts[static_cast<std::size_t>(b)] += weights.empty() ? 1 : weights[i];
  }
  return h;
}

void write_histogram_csv(const Histogram& histogram, std::ostream& out) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
    out << format_real(histogram.edges[b]) << ',' << format_real(histogram.edges[b + 1]) << ','
        << histogram.counts[b] << '\n';
  }
}

std::string slugify(std::string_view name) {
  std::string out;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out += static_cast<char>(std::tolower(u));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

StrategyComparison compare_strategies(std::span<const CuratedDataset> curated,
                                      const Dataset& pool,
                                      std::span<const ScoreRecord> records,
                                      const AnalysisConfig& config) {
  if (curated.size() < 2) throw InvalidArgument("compare_strategies: need at least 2 datasets");
  const std::string fingerprint = pool.fingerprint();
  for (const CuratedDataset& c : curated) {
    if (c.pool_fingerprint != fingerprint) {
      throw InvalidArgument("compare_strategies: '" + display_name(c) +
                            "' was drawn from a different pool");
    }
    for (const Selection& s : c.selections) {
      if (!pool.index_of(s.example_id)) {
        throw InvalidArgument("compare_strategies: selection '" + s.example_id +
                              "' is not in the pool");
      }
    }
  }

  StrategyComparison cmp;
  std::map<std::string, int> seen;
  for (const CuratedDataset& c : curated) {
    std::string name = display_name(c);
    if (int k = seen[name]++; k > 0) name += " #" + std::to_string(k + 1);
    cmp.names.push_back(std::move(name));
  }

  const std::size_t m = curated.size();
  cmp.overlap.assign(m, std::vector<double>(m, 100.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      cmp.overlap[i][j] = cmp.overlap[j][i] = overlap_percent(curated[i], curated[j]);
    }
  }

  // Top-k domains by pool mass; ties by name.
  const DomainHistogram pool_hist = domain_histogram(pool);
  std::vector<std::pair<std::string, std::int64_t>> ranked(pool_hist.begin(), pool_hist.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < ranked.size() && i < config.top_k_domains; ++i) {
    cmp.top_domains.push_back(ranked[i].first);
  }

  std::vector<const ScoreRecord*> by_example(pool.size(), nullptr);
  for (const ScoreRecord& r : records) {
    if (auto idx = pool.index_of(r.example_id)) by_example[*idx] = &r;
  }
  const double entropy_max =
      config.entropy_max.value_or(std::log2(static_cast<double>(std::max<std::size_t>(
          2, pool.label_set().size()))));

  for (std::size_t i = 0; i < m; ++i) {
    StrategyProfile p;
    p.name = cmp.names[i];
    std::map<std::string, std::int64_t> counts;
    std::vector<double> ent, el;
    std::vector<std::int64_t> w;
    bool scored = !records.empty();
    for (const Selection& s : curated[i].selections) {
      const std::size_t idx = *pool.index_of(s.example_id);
      counts[pool[idx].domain] += s.multiplicity;
      if (scored) {
        const ScoreRecord* r = by_example[idx];
        if (!r) throw InvalidArgument("compare_strategies: no score for '" + s.example_id + "'");
        ent.push_back(r->entropy_bits);
        el.push_back(r->el2n);
        w.push_back(s.multiplicity);
      }
    }
    for (const std::string& d : cmp.top_domains) p.top_domains.emplace_back(d, counts[d]);
    if (scored) {
      p.entropy = make_histogram(ent, w, 0.0, entropy_max, config.bins);
      p.el2n = make_histogram(el, w, 0.0, config.el2n_max, config.bins);
    }
    cmp.profiles.push_back(std::move(p));
  }
  return cmp;
}

void write_overlap_csv(const StrategyComparison& comparison, std::ostream& out) {
  std::vector<std::string> header{"strategy"};
  header.insert(header.end(), comparison.names.begin(), comparison.names.end());
  out << csv::join(header) << '\n';
  for (std::size_t i = 0; i < comparison.names.size(); ++i) {
    out << csv::escape(comparison.names[i]);
    for (double v : comparison.overlap[i]) out << ',' << format_real(v);
    out << '\n';
  }
}

void write_comparison(const StrategyComparison& comparison, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& file) {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / file).string());
    return out;
  };
  {
    auto out = open("overlap.csv");
    write_overlap_csv(comparison, out);
  }
  for (const StrategyProfile& p : comparison.profiles) {
    const std::string slug = slugify(p.name);
    {
      auto out = open("domains_" + slug + ".csv");
      out << "domain,count\n";
      for (const auto& [d, c] : p.top_domains) out << csv::escape(d) << ',' << c << '\n';
    }
    if (p.entropy) {
      auto out = open("entropy_hist_" + slug + ".csv");
      write_histogram_csv(*p.entropy, out);
    }
    if (p.el2n) {
      auto out = open("el2n_hist_" + slug + ".csv");
      write_histogram_csv(*p.el2n, out);
    }
  }
}

}  // namespace datasel
