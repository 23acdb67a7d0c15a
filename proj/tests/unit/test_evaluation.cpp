#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "datasel/error.hpp"
#include "datasel/evaluation.hpp"
#include "datasel/rng.hpp"
#include "test_support.hpp"

using namespace datasel;
using test::record;

namespace {

using Records = std::vector<HypothesisRecord>;

HypothesisRecord swapped(HypothesisRecord r) {
  std::swap(r.ref_domain, r.hyp_domain);
  std::swap(r.ref_intent, r.hyp_intent);
  std::swap(r.ref_slots, r.hyp_slots);
  return r;
}

Records random_records(Rng& rng, int n) {
  const char* domains[] = {"A", "B", "C"};
  const char* intents[] = {"i0", "i1"};
  const char* names[] = {"s0", "s1"};
  const char* values[] = {"v0", "v1", "v2"};
  auto slots = [&] {
    std::vector<Slot> out;
    const auto k = rng.below(4);
    for (std::uint64_t i = 0; i < k; ++i) out.push_back({names[rng.below(2)], values[rng.below(3)]});
    return out;
  };
  Records out;
  for (int i = 0; i < n; ++i) {
    out.push_back(record(domains[rng.below(3)], domains[rng.below(3)], intents[rng.below(2)],
                         intents[rng.below(2)], slots(), slots()));
  }
  return out;
}

}  // namespace

TEST_CASE("slot alignment matches exact pairs first") {
  const std::vector<Slot> ref = {{"a", "1"}, {"a", "2"}, {"b", "x"}};
  const std::vector<Slot> hyp = {{"a", "2"}, {"a", "3"}, {"c", "y"}};
  const auto al = align_slots(ref, hyp);
  CHECK(al.matches == 1);
  CHECK(al.substitutions == 1);
  CHECK(al.deletions == 1);
  CHECK(al.insertions == 1);
  const auto rev = align_slots(hyp, ref);
  CHECK(rev.substitutions == 1);
  CHECK(rev.deletions == 1);
  CHECK(rev.insertions == 1);
}

TEST_CASE("SEMER hand counts") {
  const Records perfect = {record("A", "A", "i", "i", {{"s", "v"}}, {{"s", "v"}})};
  CHECK(semer(perfect, Direction::ref_as_reference) == 0.0);
  CHECK(f_semer(perfect) == 0.0);

  // Record 1: intent error. Record 2: one value substitution. 3 reference slots.
  const Records two = {record("A", "A", "play", "stop", {{"artist", "x"}}, {{"artist", "x"}}),
                       record("A", "A", "play", "play", {{"artist", "y"}, {"song", "z"}},
                              {{"artist", "q"}, {"song", "z"}})};
  CHECK(semer(two, Direction::ref_as_reference) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(semer(two, Direction::hyp_as_reference) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(f_semer(two) == doctest::Approx(0.4).epsilon(1e-15));

  const Records deletion = {record("A", "A", "i", "i", {{"s", "v"}}, {})};
  CHECK(semer(deletion, Direction::ref_as_reference) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(semer(deletion, Direction::hyp_as_reference) == 0.0);

  CHECK_THROWS_AS(semer(Records{}, Direction::ref_as_reference), InvalidArgument);
  CHECK_THROWS_AS(f_semer(Records{}), InvalidArgument);
}

TEST_CASE("F-SEMER harmonic cases") {
  CHECK(harmonic_mean(0.2, 0.6) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(harmonic_mean(0.0, 0.0) == 0.0);
  CHECK(harmonic_mean(0.25, 0.25) == doctest::Approx(0.25));
  // Four records; one reference slot is missed, six extra slots are produced.
  // Reference-directed: 1 / (4 + 1) = 0.2. Hypothesis-directed: 6 / (4 + 6) = 0.6.
  const Records r = {record("A", "A", "i", "i", {{"s", "v"}}, {}),
                     record("A", "A", "i", "i", {}, {{"s", "1"}, {"s", "2"}, {"t", "3"}}),
                     record("A", "A", "i", "i", {}, {{"s", "4"}, {"t", "5"}, {"t", "6"}}),
                     record("A", "A", "i", "i")};
  CHECK(semer(r, Direction::ref_as_reference) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(semer(r, Direction::hyp_as_reference) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(f_semer(r) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("DCER counts") {
  Records r;
  for (int i = 0; i < 10; ++i) r.push_back(record("A", i < 3 ? "B" : "A", "i", "i"));
  CHECK(dcer(r) == doctest::Approx(0.3));
  Records d = {record("D", "D", "i", "i"), record("D", "D", "i", "i"), record("D", "D", "i", "i"),
               record("D", "X", "i", "i"), record("Y", "Y", "i", "i")};
  CHECK(dcer(d, std::string_view("D")) == doctest::Approx(0.25));
  CHECK_THROWS_AS(dcer(d, std::string_view("Z")), InvalidArgument);
  CHECK(dcer(Records{record("A", "A", "i", "j")}) == 0.0);
}

TEST_CASE("F-DCER") {
  const Records perfect = {record("D", "D", "i", "i"), record("E", "E", "i", "i")};
  CHECK(f_dcer(perfect, "D") == 0.0);
  // Recall side: 3 of 6 misrouted. Precision side: 1 of 4 wrongly routed in.
  Records r;
  for (int i = 0; i < 3; ++i) r.push_back(record("D", "D", "i", "i"));
  for (int i = 0; i < 3; ++i) r.push_back(record("D", "X", "i", "i"));
  r.push_back(record("Y", "D", "i", "i"));
  CHECK(f_dcer(r, "D") == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // Equal rates on both sides.
  Records eq;
  for (int i = 0; i < 4; ++i) eq.push_back(record("D", "D", "i", "i"));
  eq.push_back(record("D", "X", "i", "i"));
  eq.push_back(record("Y", "D", "i", "i"));
  CHECK(f_dcer(eq, "D") == doctest::Approx(0.2));
  // Only hypothesis-side support: the recall side counts as 0.
  CHECK(f_dcer(Records{record("Y", "D", "i", "i")}, "D") == 0.0);
  CHECK_THROWS_AS(f_dcer(r, "Nowhere"), InvalidArgument);
}

TEST_CASE("IRER") {
  Records r;
  for (int i = 0; i < 3; ++i) r.push_back(record("A", "A", "i", "i", {{"s", "v"}}, {{"s", "v"}}));
  for (int i = 0; i < 2; ++i) r.push_back(record("A", "A", "i", "i", {}, {{"s", "extra"}}));
  CHECK(irer(r) == doctest::Approx(0.4));
  const Records all_wrong = {record("A", "B", "i", "j", {{"s", "v"}}, {{"s", "w"}}), record("A", "A", "i", "i")};
  const Records one_wrong = {record("A", "B", "i", "i"), record("A", "A", "i", "i")};
  CHECK(irer(all_wrong) == irer(one_wrong));
  // Reference side of A is 0.5; the hypothesis side holds only a correct record.
  CHECK(f_irer(one_wrong, "A") == 0.0);
  CHECK(f_irer(one_wrong, "B") == 0.0);
  CHECK_THROWS_AS(irer(Records{}), InvalidArgument);
  CHECK_THROWS_AS(f_irer(one_wrong, "Q"), InvalidArgument);
}

TEST_CASE("per-domain IRER sides") {
  // Domain A: reference side 2 records, 1 with an error -> 0.5.
  // Hypothesis side: 2 records with hyp A, 1 with an error -> 0.5.
  const Records r = {record("A", "A", "i", "i"), record("A", "A", "i", "j"), record("B", "B", "i", "i")};
  CHECK(f_irer(r, "A") == doctest::Approx(0.5));
}

TEST_CASE("metric properties on random record sets") {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const Records r = random_records(rng, 1 + static_cast<int>(rng.below(20)));
    const double ref = semer(r, Direction::ref_as_reference);
    const double hyp = semer(r, Direction::hyp_as_reference);
    const double f = f_semer(r);
    CHECK(irer(r) >= dcer(r));
    for (double v : {ref, hyp, f, dcer(r), irer(r)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(f <= std::max(ref, hyp) + 1e-15);
    CHECK(f >= std::min(ref, hyp) - 1e-15);
    Records sw;
    for (const auto& x : r) sw.push_back(swapped(x));
    CHECK(semer(sw, Direction::ref_as_reference) == doctest::Approx(hyp).epsilon(1e-15));

    // Tallies merge additively.
    const auto cut = static_cast<std::ptrdiff_t>(rng.below(r.size() + 1));
    ErrorTally merged = tally(std::span(r.data(), static_cast<std::size_t>(cut)));
    merged += tally(std::span(r.data() + cut, r.size() - static_cast<std::size_t>(cut)));
    CHECK(merged == tally(r));
  }
}

TEST_CASE("evaluate builds overall and per-domain views") {
  Rng rng(5);
  const Records r = random_records(rng, 60);
  const EvalReport rep = evaluate(r);
  CHECK(rep.overall.semer == semer(r, Direction::ref_as_reference));
  CHECK(rep.overall.f_semer == f_semer(r));
  CHECK(rep.overall.dcer == dcer(r));
  CHECK(rep.overall.irer == irer(r));
  for (const auto& [d, m] : rep.per_domain) {
    CHECK(m.f_dcer == doctest::Approx(f_dcer(r, d)));
    CHECK(m.f_irer == doctest::Approx(f_irer(r, d)));
    Records sub;
    std::copy_if(r.begin(), r.end(), std::back_inserter(sub), [&](const auto& x) { return x.ref_domain == d; });
    CHECK(m.semer == doctest::Approx(semer(sub, Direction::ref_as_reference)));
  }
  const EvalReport again = report_from_tallies(rep.counts, rep.domain_counts);
  CHECK(again.overall.semer == rep.overall.semer);
  CHECK(again.per_domain.size() == rep.per_domain.size());
}

TEST_CASE("relative deltas") {
  CHECK(*relative_delta(0.092, 0.10) == doctest::Approx(-8.0));
  CHECK(*relative_delta(0.1, 0.1) == 0.0);
  CHECK(*relative_delta(0.0, 0.0) == 0.0);
  CHECK(!relative_delta(0.1, 0.0));
  Rng rng(1);
  const EvalReport rep = evaluate(random_records(rng, 40));
  const DeltaReport same = relative_delta(rep, rep);
  CHECK(*same.semer == 0.0);
  CHECK(*same.f_semer == 0.0);
  CHECK(*same.dcer == 0.0);
  CHECK(*same.irer == 0.0);
  for (const auto& [d, dd] : same.per_domain) {
    CHECK(*dd.semer == 0.0);
    CHECK(*dd.f_dcer == 0.0);
    CHECK(*dd.f_irer == 0.0);
  }
}

TEST_CASE("hypothesis files round-trip") {
  Rng rng(3);
  const Records r = random_records(rng, 15);
  std::stringstream ss;
  write_hypotheses(r, ss);
  const Records back = read_hypotheses(ss);
  REQUIRE(back.size() == r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(back[i].example_id == r[i].example_id);
    CHECK(back[i].hyp_slots == r[i].hyp_slots);
    CHECK(back[i].ref_intent == r[i].ref_intent);
  }
  std::istringstream bad("{\"example_id\":\"x\",\"ref_domain\":\"\"}\n");
  CHECK_THROWS_AS(read_hypotheses(bad), ParseError);
}

TEST_CASE("report and delta tables") {
  const Records base = {record("A", "B", "i", "i"), record("A", "A", "i", "i"), record("C", "C", "i", "i")};
  const Records better = {record("A", "A", "i", "i"), record("A", "A", "i", "i"), record("C", "C", "i", "i")};
  const Records worse_c = {record("A", "B", "i", "i"), record("A", "A", "i", "i"), record("C", "C", "i", "j")};
  const EvalReport b = evaluate(base);
  const DeltaReport d_better = relative_delta(evaluate(better), b);
  CHECK(*d_better.dcer == doctest::Approx(-100.0));
  const DeltaReport d_worse = relative_delta(evaluate(worse_c), b);
  CHECK(!d_worse.per_domain.at("C").semer);
  CHECK(*d_worse.per_domain.at("C").f_dcer == 0.0);

  std::ostringstream csv;
  write_report_csv(evaluate(worse_c), &d_worse, csv);
  CHECK(csv.str().rfind("metric,scope,value,delta_pct\n", 0) == 0);
  CHECK(csv.str().find("semer,C,") != std::string::npos);
  CHECK(csv.str().find("undefined") != std::string::npos);

  const std::vector<NamedDelta> rows = {{"Random", relative_delta(b, b)}, {"Better", d_better}};
  std::ostringstream overall, domain, md;
  write_overall_delta_csv(rows, overall);
  write_domain_delta_csv(rows, domain);
  write_delta_markdown(rows, md);
  CHECK(overall.str().rfind("model,ΔSEMER%,ΔF-SEMER%,ΔDCER%,ΔIRER\nRandom,0,0,0,0\n", 0) == 0);
  CHECK(domain.str().rfind("domain,model,ΔSEMER%,ΔF-DCER%,ΔF-IRER\n", 0) == 0);
  CHECK(md.str().find("| Random | 0.00 | 0.00 | 0.00 | 0.00 |") != std::string::npos);
}
