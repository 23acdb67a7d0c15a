#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "datasel/corpus.hpp"

namespace datasel {

struct HypothesisRecord {
  std::string example_id;
  std::string ref_domain;
  std::string hyp_domain;
  std::string ref_intent;
  std::string hyp_intent;
  std::vector<Slot> ref_slots;
  std::vector<Slot> hyp_slots;
};

// Which side of a record plays the reference in SEMER.
enum class Direction { ref_as_reference, hyp_as_reference };

// Slot alignment counted relative to the reference side: deletions are
// reference-only slots, insertions hypothesis-only slots. Exact (name, value)
// pairs are matched first, then remaining slots with equal names pair up in
// input order as substitutions.
struct SlotAlignment {
  std::int64_t matches = 0;
  std::int64_t substitutions = 0;
  std::int64_t deletions = 0;
  std::int64_t insertions = 0;
};

SlotAlignment align_slots(std::span<const Slot> reference, std::span<const Slot> hypothesis);

// Additive error counts; every rate below is a ratio of these fields, so
// tallies of disjoint record sets can be merged with +=.
struct ErrorTally {
  std::int64_t records = 0;
  std::int64_t domain_errors = 0;
  std::int64_t intent_errors = 0;
  std::int64_t interpretation_errors = 0;  // records with any error
  std::int64_t substitutions = 0;
  std::int64_t deletions = 0;   // reference-only slots
  std::int64_t insertions = 0;  // hypothesis-only slots
  std::int64_t ref_slots = 0;
  std::int64_t hyp_slots = 0;

  ErrorTally& operator+=(const ErrorTally& other);
  bool operator==(const ErrorTally&) const = default;

  // (intent errors + slot errors) / (records + slots on the reference side).
  // Slot errors are substitutions plus the slots the reference side has that
  // the other side lacks.
  double semer(Direction direction) const;
  double f_semer() const;
  double dcer() const;
  double irer() const;
};

ErrorTally tally(const HypothesisRecord& record);
ErrorTally tally(std::span<const HypothesisRecord> records);

// 2ab / (a + b), with 0 when both are 0.
double harmonic_mean(double a, double b);

double semer(std::span<const HypothesisRecord> records, Direction direction);
double f_semer(std::span<const HypothesisRecord> records);

// Recall-based domain error; restricted to ref_domain == domain when given.
double dcer(std::span<const HypothesisRecord> records,
            std::optional<std::string_view> domain = std::nullopt);

// Harmonic mean of the recall-side (ref_domain == d) and precision-side
// (hyp_domain == d) rate; a side without support counts as 0.
double f_dcer(std::span<const HypothesisRecord> records, std::string_view domain);

double irer(std::span<const HypothesisRecord> records);
double f_irer(std::span<const HypothesisRecord> records, std::string_view domain);

struct OverallMetrics {
  double semer = 0.0;
  double f_semer = 0.0;
  double dcer = 0.0;
  double irer = 0.0;
};

struct DomainMetrics {
  double semer = 0.0;
  double f_dcer = 0.0;
  double f_irer = 0.0;
};

struct DomainTally {
  ErrorTally by_ref;  // records with ref_domain == d
  ErrorTally by_hyp;  // records with hyp_domain == d
};

// Per-domain entries cover every domain with reference support.
struct EvalReport {
  OverallMetrics overall;
  std::map<std::string, DomainMetrics> per_domain;
  ErrorTally counts;
  std::map<std::string, DomainTally> domain_counts;
};

EvalReport evaluate(std::span<const HypothesisRecord> records);

// Rebuilds rates from tallies.
EvalReport report_from_tallies(const ErrorTally& counts,
                               const std::map<std::string, DomainTally>& domain_counts);

// 100 (candidate - baseline) / baseline; nullopt when the baseline is 0 and
// the candidate is not (undefined delta). 0 when both are 0.
std::optional<double> relative_delta(double candidate, double baseline);

struct DomainDelta {
  std::optional<double> semer;
  std::optional<double> f_dcer;
  std::optional<double> f_irer;
};

struct DeltaReport {
  std::optional<double> semer;
  std::optional<double> f_semer;
  std::optional<double> dcer;
  std::optional<double> irer;
  std::map<std::string, DomainDelta> per_domain;  // domains present in both
};

DeltaReport relative_delta(const EvalReport& candidate, const EvalReport& baseline);

// JSON Lines hypothesis file.
std::vector<HypothesisRecord> read_hypotheses(std::istream& in);
void write_hypotheses(std::span<const HypothesisRecord> records, std::ostream& out);

// CSV `metric,scope,value,delta_pct`; delta_pct is empty without a
// baseline and "undefined" for undefined deltas.
void write_report_csv(const EvalReport& report, const DeltaReport* delta, std::ostream& out);

struct NamedDelta {
  std::string model;
  DeltaReport delta;
};

// Overall delta table: `model,ΔSEMER%,ΔF-SEMER%,ΔDCER%,ΔIRER`.
void write_overall_delta_csv(std::span<const NamedDelta> rows, std::ostream& out);
// Per-domain delta table: `domain,model,ΔSEMER%,ΔF-DCER%,ΔF-IRER`.
void write_domain_delta_csv(std::span<const NamedDelta> rows, std::ostream& out);
// Both tables as markdown, values at two decimals.
void write_delta_markdown(std::span<const NamedDelta> rows, std::ostream& out);

}  // namespace datasel
