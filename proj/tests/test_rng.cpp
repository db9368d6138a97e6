#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "rfhydro/parallel.hpp"
#include "rfhydro/rng.hpp"
#include "rfhydro/types.hpp"

using namespace rfhydro;

TEST_CASE("derive_seed is deterministic and sensitive to every component") {
  CHECK(derive_seed(1, 2, 3, 4) == derive_seed(1, 2, 3, 4));
  std::set<std::uint64_t> seen{derive_seed(1, 2, 3, 4), derive_seed(2, 2, 3, 4),
                               derive_seed(1, 3, 3, 4), derive_seed(1, 2, 4, 4),
                               derive_seed(1, 2, 3, 5)};
  CHECK(seen.size() == 5);
  CHECK(seed_from_string("folds") != seed_from_string("cv"));
  CHECK(seed_from_string("") == 0xcbf29ce484222325ULL);  // FNV-1a offset basis
}

TEST_CASE("uniform draws lie in [0,1) with the right mean") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("below(n) covers [0,n) evenly") {
  Rng rng(11);
  int counts[7] = {};
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("normal draws have zero mean and unit variance") {
  Rng rng(3);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("identical seeds give identical streams") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("label and method names round trip") {
  CHECK(parse_label(to_string(Label::hydrated)) == Label::hydrated);
  CHECK(parse_label(to_string(Label::dehydrated)) == Label::dehydrated);
  CHECK(parse_method("CBDM") == Method::cbdm);
  CHECK(parse_method("hbdm") == Method::hbdm);
  CHECK_THROWS_AS(parse_method("XYZ"), ConfigError);
  CHECK_THROWS_AS(parse_label("thirsty"), ConfigError);
  CHECK(label_index(Label::dehydrated) == 1);
  CHECK(label_from_index(0) == Label::hydrated);
}

TEST_CASE("parallel_for writes every slot and is independent of worker count") {
  for (std::size_t workers : {1u, 2u, 4u}) {
    std::vector<int> out(100, -1);
    parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  }
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  for (std::size_t workers : {1u, 3u}) {
    try {
      parallel_for(50, workers, [](std::size_t i) {
        if (i == 17 || i == 31) throw std::runtime_error("task " + std::to_string(i));
      });
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "task 17");
    }
  }
}
