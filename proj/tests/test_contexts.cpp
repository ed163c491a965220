// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pvf/contexts.hpp"
#include "test_helpers.hpp"

using namespace pvf;

TEST_CASE("context set sorts by count desc then skeleton") {
  std::vector<ContextTemplate> templates = {
      {"The [X] wrote that [Y]", SlotOrder::XthenY, 3},
      {"The [X] said that [Y]", SlotOrder::XthenY, 10},
      {"The [X] felt that [Y]", SlotOrder::XthenY, 3},
  };
  ContextSet set(templates, SlotOrder::XthenY);
  REQUIRE(set.size() == 3);
  CHECK(set.templates()[0].skeleton == "The [X] said that [Y]");
  CHECK(set.templates()[1].skeleton == "The [X] felt that [Y]");
  CHECK(set.templates()[2].skeleton == "The [X] wrote that [Y]");
}

TEST_CASE("context set merges duplicate skeletons") {
  std::vector<ContextTemplate> templates = {
      {"The [X] said that [Y]", SlotOrder::XthenY, 2},
      {"The [X] said that [Y]", SlotOrder::XthenY, 5},
  };
  ContextSet set(templates, SlotOrder::XthenY);
  REQUIRE(set.size() == 1);
  CHECK(set.templates()[0].count == 7);
}

TEST_CASE("weights are count over total") {
  std::vector<ContextTemplate> templates = {
      {"The [X] said that [Y]", SlotOrder::XthenY, 2142},
      {"The [X] stated that [Y]", SlotOrder::XthenY, 856},
  };
  ContextSet set(templates, SlotOrder::XthenY);
  const auto w = set.weights();
  CHECK(w[0] == doctest::Approx(2142.0 / 2998.0).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(856.0 / 2998.0).epsilon(1e-12));

  ContextSet single({{"The [X] is [Y]", SlotOrder::XthenY, 5}},
                    SlotOrder::XthenY);
  CHECK(single.weights()[0] == 1.0);
}

TEST_CASE("skeleton validation") {
  CHECK_THROWS_AS(validate_skeleton("The [X] said"), BadTemplate);
  CHECK_THROWS_AS(validate_skeleton("[Y] and [Y] with [X]"), BadTemplate);
  CHECK_NOTHROW(validate_skeleton("The [X] said that [Y]"));
  CHECK_THROWS_AS(
      ContextSet({{"no slots here", SlotOrder::XthenY, 1}}, SlotOrder::XthenY),
      BadTemplate);
}

TEST_CASE("context set round-trips through its file format") {
  testutil::TempDir dir("pvf-contexts");
  std::vector<ContextTemplate> templates = {
      {"The [X] said that [Y]", SlotOrder::XthenY, 7},
      {"The [X] claimed that [Y]", SlotOrder::XthenY, 2},
  };
  ContextSet set(templates, SlotOrder::XthenY);
  const auto path = dir.path() / "contexts.json";
  set.save(path);
  const auto loaded = ContextSet::load(path);
  REQUIRE(loaded.size() == set.size());
  CHECK(loaded.mode() == set.mode());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(loaded.templates()[i].skeleton == set.templates()[i].skeleton);
    CHECK(loaded.templates()[i].count == set.templates()[i].count);
  }
  // byte-stable re-serialization
  const auto again = dir.path() / "contexts2.json";
  loaded.save(again);
  CHECK(testutil::read_file(path) == testutil::read_file(again));
}
