#include "datasel/evaluation.hpp"

#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "datasel/csv.hpp"
#include "datasel/error.hpp"
#include "datasel/text.hpp"

namespace datasel {

SlotAlignment align_slots(std::span<const Slot> reference, std::span<const Slot> hypothesis) {
  SlotAlignment a;
  std::vector<char> ref_used(reference.size(), 0), hyp_used(hypothesis.size(), 0);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    for (std::size_t j = 0; j < hypothesis.size(); ++j) {
      if (!hyp_used[j] && hypothesis[j] == reference[i]) {
        ref_used[i] = hyp_used[j] = 1;
        ++a.matches;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (ref_used[i]) continue;
    for (std::size_t j = 0; j < hypothesis.size(); ++j) {
      if (!hyp_used[j] && hypothesis[j].name == reference[i].name) {
        ref_used[i] = hyp_used[j] = 1;
        ++a.substitutions;
        break;
      }
    }
  }
  for (char u : ref_used) a.deletions += !u;
  for (char u : hyp_used) a.insertions += !u;
  return a;
}

ErrorTally& ErrorTally::operator+=(const ErrorTally& o) {
  records += o.records;
  domain_errors += o.domain_errors;
  intent_errors += o.intent_errors;
  interpretation_errors += o.interpretation_errors;
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_slots += o.ref_slots;
  hyp_slots += o.hyp_slots;
  return *this;
}

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double ErrorTally::semer(Direction direction) const {
  if (records == 0) throw InvalidArgument("semer: no records");
  const bool ref_side = direction == Direction::ref_as_reference;
  const std::int64_t missing = ref_side ? deletions : insertions;
  const std::int64_t slots = ref_side ? ref_slots : hyp_slots;
  return ratio(intent_errors + substitutions + missing, records + slots);
}

double ErrorTally::f_semer() const {
  return harmonic_mean(semer(Direction::ref_as_reference), semer(Direction::hyp_as_reference));
}

double ErrorTally::dcer() const {
  if (records == 0) throw InvalidArgument("dcer: no records");
  return ratio(domain_errors, records);
}

double ErrorTally::irer() const {
  if (records == 0) throw InvalidArgument("irer: no records");
  return ratio(interpretation_errors, records);
}

ErrorTally tally(const HypothesisRecord& r) {
  ErrorTally t;
  t.records = 1;
  const SlotAlignment a = align_slots(r.ref_slots, r.hyp_slots);
  const bool domain_error = r.ref_domain != r.hyp_domain;
  const bool intent_error = r.ref_intent != r.hyp_intent;
  t.domain_errors = domain_error;
  t.intent_errors = intent_error;
  t.substitutions = a.substitutions;
  t.deletions = a.deletions;
  t.insertions = a.insertions;
  t.ref_slots = static_cast<std::int64_t>(r.ref_slots.size());
  t.hyp_slots = static_cast<std::int64_t>(r.hyp_slots.size());
  t.interpretation_errors =
      domain_error || intent_error || a.substitutions + a.deletions + a.insertions > 0;
  return t;
}

ErrorTally tally(std::span<const HypothesisRecord> records) {
  ErrorTally t;
  for (const HypothesisRecord& r : records) t += tally(r);
  return t;
}

double harmonic_mean(double a, double b) {
  return a + b == 0.0 ? 0.0 : 2.0 * a * b / (a + b);
}

double semer(std::span<const HypothesisRecord> records, Direction direction) {
  if (records.empty()) throw InvalidArgument("semer: no records");
  return tally(records).semer(direction);
}

double f_semer(std::span<const HypothesisRecord> records) {
  if (records.empty()) throw InvalidArgument("f_semer: no records");
  return tally(records).f_semer();
}

double dcer(std::span<const HypothesisRecord> records, std::optional<std::string_view> domain) {
  ErrorTally t;
  for (const HypothesisRecord& r : records) {
    if (!domain || r.ref_domain == *domain) t += tally(r);
  }
  if (t.records == 0) {
    throw InvalidArgument(domain ? "dcer: no records for domain '" + std::string(*domain) + "'"
                                 : std::string("dcer: no records"));
  }
  return t.dcer();
}

namespace {

DomainTally domain_tally(std::span<const HypothesisRecord> records, std::string_view domain) {
  DomainTally dt;
  for (const HypothesisRecord& r : records) {
    if (r.ref_domain != domain && r.hyp_domain != domain) continue;
    const ErrorTally t = tally(r);
    if (r.ref_domain == domain) dt.by_ref += t;
    if (r.hyp_domain == domain) dt.by_hyp += t;
  }
  return dt;
}

double side_rate(const ErrorTally& t, std::int64_t ErrorTally::*field) {
  return t.records == 0 ? 0.0 : ratio(t.*field, t.records);
}

double balanced(const DomainTally& dt, std::int64_t ErrorTally::*field, std::string_view domain,
                const char* what) {
  if (dt.by_ref.records == 0 && dt.by_hyp.records == 0) {
    throw InvalidArgument(std::string(what) + ": domain '" + std::string(domain) +
                          "' has no support");
  }
  return harmonic_mean(side_rate(dt.by_ref, field), side_rate(dt.by_hyp, field));
}

}  // namespace

double f_dcer(std::span<const HypothesisRecord> records, std::string_view domain) {
  return balanced(domain_tally(records, domain), &ErrorTally::domain_errors, domain, "f_dcer");
}

double irer(std::span<const HypothesisRecord> records) {
  if (records.empty()) throw InvalidArgument("irer: no records");
  return tally(records).irer();
}

double f_irer(std::span<const HypothesisRecord> records, std::string_view domain) {
  return balanced(domain_tally(records, domain), &ErrorTally::interpretation_errors, domain,
                  "f_irer");
}

EvalReport report_from_tallies(const ErrorTally& counts,
                               const std::map<std::string, DomainTally>& domain_counts) {
  EvalReport rep;
  rep.counts = counts;
  rep.domain_counts = domain_counts;
  rep.overall.semer = counts.semer(Direction::ref_as_reference);
  rep.overall.f_semer = counts.f_semer();
  rep.overall.dcer = counts.dcer();
  rep.overall.irer = counts.irer();
  for (const auto& [domain, dt] : domain_counts) {
    if (dt.by_ref.records == 0) continue;
    DomainMetrics m;
    m.semer = dt.by_ref.semer(Direction::ref_as_reference);
    m.f_dcer = balanced(dt, &ErrorTally::domain_errors, domain, "f_dcer");
    m.f_irer = balanced(dt, &ErrorTally::interpretation_errors, domain, "f_irer");
    rep.per_domain.emplace(domain, m);
  }
  return rep;
}

EvalReport evaluate(std::span<const HypothesisRecord> records) {
  if (records.empty()) throw InvalidArgument("evaluate: no records");
  ErrorTally counts;
  std::map<std::string, DomainTally> domain_counts;
  for (const HypothesisRecord& r : records) {
    const ErrorTally t = tally(r);
    counts += t;
    domain_counts[r.ref_domain].by_ref += t;
    domain_counts[r.hyp_domain].by_hyp += t;
  }
  return report_from_tallies(counts, domain_counts);
}

std::optional<double> relative_delta(double candidate, double baseline) {
  if (baseline == 0.0) {
    if (candidate == 0.0) return 0.0;
    return std::nullopt;
  }
  return 100.0 * (candidate - baseline) / baseline;
}

DeltaReport relative_delta(const EvalReport& candidate, const EvalReport& baseline) {
  DeltaReport d;
  d.semer = relative_delta(candidate.overall.semer, baseline.overall.semer);
  d.f_semer = relative_delta(candidate.overall.f_semer, baseline.overall.f_semer);
  d.dcer = relative_delta(candidate.overall.dcer, baseline.overall.dcer);
  d.irer = relative_delta(candidate.overall.irer, baseline.overall.irer);
  for (const auto& [domain, cm] : candidate.per_domain) {
    auto it = baseline.per_domain.find(domain);
    if (it == baseline.per_domain.end()) continue;
    const DomainMetrics& bm = it->second;
    d.per_domain.emplace(domain, DomainDelta{relative_delta(cm.semer, bm.semer),
                                             relative_delta(cm.f_dcer, bm.f_dcer),
                                             relative_delta(cm.f_irer, bm.f_irer)});
  }
  return d;
}

namespace {

std::vector<Slot> parse_slots(const nlohmann::json& j) {
  std::vector<Slot> out;
  if (j.is_null()) return out;
  for (const auto& s : j) {
    out.push_back(Slot{s.at("name").get<std::string>(), s.at("value").get<std::string>()});
  }
  return out;
}

nlohmann::ordered_json slots_json(const std::vector<Slot>& slots) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Slot& s : slots) {
    nlohmann::ordered_json o;
    o["name"] = s.name;
    o["value"] = s.value;
    arr.push_back(std::move(o));
  }
  return arr;
}

std::string delta_cell(const std::optional<double>& v) {
  return v ? format_real(*v) : "undefined";
}

std::string delta_md(const std::optional<double>& v) {
  return v ? format_fixed(*v, 2) : "n/a";
}

}  // namespace

std::vector<HypothesisRecord> read_hypotheses(std::istream& in) {
  std::vector<HypothesisRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      HypothesisRecord r;
      r.example_id = j.at("example_id").get<std::string>();
      r.ref_domain = j.at("ref_domain").get<std::string>();
      r.hyp_domain = j.at("hyp_domain").get<std::string>();
      r.ref_intent = j.at("ref_intent").get<std::string>();
      r.hyp_intent = j.at("hyp_intent").get<std::string>();
      r.ref_slots = parse_slots(j.value("ref_slots", nlohmann::json()));
      r.hyp_slots = parse_slots(j.value("hyp_slots", nlohmann::json()));
      if (r.ref_domain.empty() || r.ref_intent.empty()) {
        throw ParseError(line_no, "reference domain and intent must be non-empty");
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

void write_hypotheses(std::span<const HypothesisRecord> records, std::ostream& out) {
  for (const HypothesisRecord& r : records) {
    nlohmann::ordered_json j;
    j["example_id"] = r.example_id;
    j["ref_domain"] = r.ref_domain;
    j["hyp_domain"] = r.hyp_domain;
    j["ref_intent"] = r.ref_intent;
    j["hyp_intent"] = r.hyp_intent;
    j["ref_slots"] = slots_json(r.ref_slots);
    j["hyp_slots"] = slots_json(r.hyp_slots);
    out << j.dump() << '\n';
  }
}

void write_report_csv(const EvalReport& report, const DeltaReport* delta, std::ostream& out) {
  auto row = [&](const char* metric, const std::string& scope, double value,
                 const std::optional<double>* d) {
    out << metric << ',' << csv::escape(scope) << ',' << format_real(value) << ',';
    if (d) out << delta_cell(*d);
    out << '\n';
  };
  out << "metric,scope,value,delta_pct\n";
  row("semer", "overall", report.overall.semer, delta ? &delta->semer : nullptr);
  row("f_semer", "overall", report.overall.f_semer, delta ? &delta->f_semer : nullptr);
  row("dcer", "overall", report.overall.dcer, delta ? &delta->dcer : nullptr);
  row("irer", "overall", report.overall.irer, delta ? &delta->irer : nullptr);
  for (const auto& [domain, m] : report.per_domain) {
    const DomainDelta* dd = nullptr;
    if (delta) {
      auto it = delta->per_domain.find(domain);
      if (it != delta->per_domain.end()) dd = &it->second;
    }
    row("semer", domain, m.semer, dd ? &dd->semer : nullptr);
    row("f_dcer", domain, m.f_dcer, dd ? &dd->f_dcer : nullptr);
    row("f_irer", domain, m.f_irer, dd ? &dd->f_irer : nullptr);
  }
}

void write_overall_delta_csv(std::span<const NamedDelta> rows, std::ostream& out) {
  out << "model,ΔSEMER%,ΔF-SEMER%,ΔDCER%,ΔIRER\n";
  for (const NamedDelta& r : rows) {
    out << csv::escape(r.model) << ',' << delta_cell(r.delta.semer) << ','
        << delta_cell(r.delta.f_semer) << ',' << delta_cell(r.delta.dcer) << ','
        << delta_cell(r.delta.irer) << '\n';
  }
}

void write_domain_delta_csv(std::span<const NamedDelta> rows, std::ostream& out) {
  out << "domain,model,ΔSEMER%,ΔF-DCER%,ΔF-IRER\n";
  std::set<std::string> domains;
  for (const NamedDelta& r : rows) {
    for (const auto& [d, _] : r.delta.per_domain) domains.insert(d);
  }
  for (const std::string& d : domains) {
    for (const NamedDelta& r : rows) {
      auto it = r.delta.per_domain.find(d);
      if (it == r.delta.per_domain.end()) continue;
      out << csv::escape(d) << ',' << csv::escape(r.model) << ','
          << delta_cell(it->second.semer) << ',' << delta_cell(it->second.f_dcer) << ','
          << delta_cell(it->second.f_irer) << '\n';
    }
  }
}

void write_delta_markdown(std::span<const NamedDelta> rows, std::ostream& out) {
  out << "| Model | ΔSEMER% | ΔF-SEMER% | ΔDCER% | ΔIRER |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (const NamedDelta& r : rows) {
    out << "| " << r.model << " | " << delta_md(r.delta.semer) << " | "
        << delta_md(r.delta.f_semer) << " | " << delta_md(r.delta.dcer) << " | "
        << delta_md(r.delta.irer) << " |\n";
  }
  out << "\n| Domain | Model | ΔSEMER% | ΔF-DCER% | ΔF-IRER |\n";
  out << "|---|---|---:|---:|---:|\n";
  std::set<std::string> domains;
  for (const NamedDelta& r : rows) {
    for (const auto& [d, _] : r.delta.per_domain) domains.insert(d);
  }
  for (const std::string& d : domains) {
    for (const NamedDelta& r : rows) {
      auto it = r.delta.per_domain.find(d);
      if (it == r.delta.per_domain.end()) continue;
      out << "| " << d << " | " << r.model << " | " << delta_md(it->second.semer) << " | "
          << delta_md(it->second.f_dcer) << " | " << delta_md(it->second.f_irer) << " |\n";
    }
  }
}

}  // namespace datasel
