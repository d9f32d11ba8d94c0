#include <doctest.h>

#include <algorithm>

#include "ttpc/errors.hpp"
#include "ttpc/rng.hpp"
#include "ttpc/tactics.hpp"

using namespace ttpc;

TEST_CASE("tactic universe is the fixed 14-name alphabet") {
  const auto& names = tactic_canonical_names();
  CHECK(names.size() == 14);
  CHECK(std::is_sorted(names.begin(), names.end()));
  // the names from the engineered prompt's list
  CHECK(names[0] == "COLLECTION");
  CHECK(names[1] == "COMMAND_AND_CONTROL");
  CHECK(names[2] == "CREDENTIAL_ACCESS");
  CHECK(names[3] == "DEFENSE_EVASION");
  CHECK(names[4] == "DISCOVERY");
  CHECK(names[5] == "EXECUTION");
  CHECK(names[6] == "EXFILTRATION");
  CHECK(names[7] == "IMPACT");
  CHECK(names[8] == "INITIAL_ACCESS");
  CHECK(names[9] == "LATERAL_MOVEMENT");
  CHECK(names[10] == "PERSISTENCE");
  CHECK(names[11] == "PRIVILEGE_ESCALATION");
  CHECK(names[12] == "RECONNAISSANCE");
  CHECK(names[13] == "RESOURCE_DEVELOPMENT");

  for (int i = 0; i < kTacticCount; ++i) {
    CHECK(canonical_name(tactic_at(i)) == names[i]);
    CHECK(tactic_from_shortname(stix_shortname(tactic_at(i))) == tactic_at(i));
  }
}

TEST_CASE("canonicalize_tactic_name") {
  CHECK(canonicalize_tactic_name("DEFENSE_EVASION").tactic ==
        Tactic::DefenseEvasion);
  CHECK(canonicalize_tactic_name("defense-evasion").tactic ==
        Tactic::DefenseEvasion);
  CHECK(canonicalize_tactic_name("Defense Evasion").tactic ==
        Tactic::DefenseEvasion);
  CHECK(canonicalize_tactic_name("  privilege escalation ").tactic ==
        Tactic::PrivilegeEscalation);
  CHECK(canonicalize_tactic_name("Command and Control").tactic ==
        Tactic::CommandAndControl);

  auto unknown = canonicalize_tactic_name("Remote-Access");
  CHECK(!unknown.known());
  CHECK(unknown.raw == "Remote-Access");

  CHECK_THROWS_AS(canonicalize_tactic_name(""), Error);
  CHECK_THROWS_AS(canonicalize_tactic_name("   "), Error);

  SUBCASE("idempotent on canonical names") {
    for (int i = 0; i < kTacticCount; ++i) {
      auto r = canonicalize_tactic_name(canonical_name(tactic_at(i)));
      REQUIRE(r.known());
      CHECK(*r.tactic == tactic_at(i));
    }
  }
}

TEST_CASE("label vector round trips") {
  CHECK(vector_from_tactics({}).none());
  LabelVector one = vector_from_tactics({Tactic::DefenseEvasion});
  CHECK(one.count() == 1);
  CHECK(one.get(Tactic::DefenseEvasion));

  // the three-tactic DLL side-loading shape
  LabelVector three = vector_from_tactics(
      {Tactic::Persistence, Tactic::PrivilegeEscalation, Tactic::DefenseEvasion});
  CHECK(three.count() == 3);

  LabelVector impact = vector_from_tactics({Tactic::Impact});
  CHECK(tactics_from_vector(impact) == std::set<Tactic>{Tactic::Impact});
  CHECK(tactics_from_vector(LabelVector{}).empty());

  SUBCASE("property: tactics -> vector -> tactics is identity") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
      std::set<Tactic> s;
      const int n = int(rng.bounded(15));
      for (int i = 0; i < n; ++i) s.insert(tactic_at(int(rng.bounded(14))));
      CHECK(tactics_from_vector(vector_from_tactics(s)) == s);
    }
  }

  SUBCASE("from_bits validates shape") {
    CHECK_THROWS_AS(LabelVector::from_bits(std::vector<int>(13, 0)), Error);
    CHECK_THROWS_AS(LabelVector::from_bits(std::vector<int>(15, 0)), Error);
    std::vector<int> bad(14, 0);
    bad[3] = 2;
    CHECK_THROWS_AS(LabelVector::from_bits(bad), Error);
    std::vector<int> ok(14, 0);
    ok[7] = 1;
    CHECK(LabelVector::from_bits(ok).get(Tactic::Impact));
  }
}

TEST_CASE("format_label_set") {
  CHECK(format_label_set(LabelVector{}) == "NONE");
  CHECK(format_label_set(vector_from_tactics(
            {Tactic::DefenseEvasion, Tactic::LateralMovement})) ==
        "DEFENSE_EVASION, LATERAL_MOVEMENT");
}
