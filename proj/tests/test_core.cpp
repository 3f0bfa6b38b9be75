#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "rts/core.hpp"

using namespace rts;

TEST_CASE("latent rejects small dimension and non-finite entries") {
  CHECK_THROWS_AS(Latent(Eigen::VectorXd::Zero(1)), DimensionError);
  CHECK_THROWS_AS(Latent(Eigen::VectorXd()), DimensionError);
  CHECK_THROWS_AS((Latent{1.0, std::nan("")}), NonFiniteError);
  CHECK_THROWS_AS((Latent{std::numeric_limits<double>::infinity(), 0.0}), NonFiniteError);

  const Latent x{3.0, 4.0};
  CHECK(x.dim() == 2);
  CHECK(x.norm() == doctest::Approx(5.0));
  CHECK(x.dot(Latent{1.0, 1.0}) == doctest::Approx(7.0));
  CHECK(Latent::zeros(5).norm() == 0.0);
  CHECK(x == Latent{3.0, 4.0});
  CHECK_FALSE(x == Latent{3.0, 4.0, 0.0});
}

TEST_CASE("reward score must be finite and orders by value") {
  CHECK_THROWS_AS(RewardScore(std::nan("")), NonFiniteError);
  CHECK_THROWS_AS(RewardScore(-std::numeric_limits<double>::infinity()), NonFiniteError);
  CHECK(RewardScore(1.0) < RewardScore(2.0));
  CHECK(RewardScore(-0.5).value() == -0.5);
}

TEST_CASE("nfe counter is safe under concurrent adds") {
  NfeCounter nfe;
  parallel_for(64, 8, [&](std::size_t) {
    for (int i = 0; i < 1000; ++i) nfe.add();
  });
  CHECK(nfe.count() == 64000);
  nfe.add(5);
  CHECK(nfe.count() == 64005);
}

TEST_CASE("parallel_for covers every index once") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 7, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  parallel_for(0, 4, [&](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("parallel_for rethrows the failure with the smallest index") {
  for (unsigned workers : {1u, 3u, 16u}) {
    try {
      parallel_for(50, workers, [](std::size_t i) {
        if (i == 13 || i == 41) throw PreconditionError("index " + std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const PreconditionError& e) {
      CHECK(std::string(e.what()) == "index 13");
    }
  }
}
