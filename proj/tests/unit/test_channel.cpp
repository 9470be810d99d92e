#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "nomaq/channel.hpp"

using namespace nomaq;

TEST_CASE("place_users spans 50..100 m evenly") {
  const Deployment two = place_users(2);
  REQUIRE(two.distances == std::vector<double>{50.0, 100.0});
  REQUIRE(two.path_loss_exponent == 2.0);

  const Deployment three = place_users(3);
  REQUIRE(three.distances == std::vector<double>{50.0, 75.0, 100.0});

  const Deployment one = place_users(1);
  REQUIRE(one.distances == std::vector<double>{50.0});

  REQUIRE_THROWS_AS(place_users(0), std::invalid_argument);
  REQUIRE_THROWS_AS(place_users(-2), std::invalid_argument);
}

TEST_CASE("deployment validation rejects bad geometry") {
  Deployment dep;
  dep.n_users = 2;
  dep.distances = {100.0, 50.0};
  REQUIRE_THROWS_AS(validate(dep), std::invalid_argument);
  dep.distances = {0.0, 50.0};
  REQUIRE_THROWS_AS(validate(dep), std::invalid_argument);
  dep.distances = {50.0};
  REQUIRE_THROWS_AS(validate(dep), std::invalid_argument);
}

TEST_CASE("sample_channel is deterministic") {
  const Deployment dep = place_users(4);
  RandomStream a(11, 3), b(11, 3);
  const ChannelRealization ca = sample_channel(a, dep);
  const ChannelRealization cb = sample_channel(b, dep);
  REQUIRE(ca.gains == cb.gains);
}

TEST_CASE("fading has unit average power before path loss") {
  Deployment dep = place_users(2, 0.0);  // tau = 0 disables path loss
  RandomStream stream(777, 0);
  double sum = 0.0;
  const int draws = 500000;
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization ch = sample_channel(stream, dep);
    sum += std::norm(ch.gains[0]) + std::norm(ch.gains[1]);
  }
  const double mean = sum / (2.0 * draws);
  REQUIRE(mean > 0.99);
  REQUIRE(mean < 1.01);
}

TEST_CASE("path loss scales gain power by 1/d^tau") {
  Deployment dep;
  dep.n_users = 1;
  dep.distances = {100.0};
  dep.path_loss_exponent = 2.0;
  RandomStream stream(778, 0);
  double sum = 0.0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    sum += std::norm(sample_channel(stream, dep).gains[0]);
  }
  const double mean = sum / draws;
  REQUIRE(mean > 0.99e-4);
  REQUIRE(mean < 1.01e-4);
}

TEST_CASE("farther users have weaker gains on average") {
  const Deployment dep = place_users(4);
  RandomStream stream(779, 0);
  std::vector<double> sums(4, 0.0);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization ch = sample_channel(stream, dep);
    for (int k = 0; k < 4; ++k) sums[k] += std::norm(ch.gains[k]);
  }
  for (int k = 0; k + 1 < 4; ++k) {
    REQUIRE(sums[k] > sums[k + 1]);
  }
}

namespace {
ChannelRealization fixed_channel(std::vector<Complex> gains) {
  ChannelRealization ch;
  ch.deployment = place_users(static_cast<int>(gains.size()));
  ch.gains = std::move(gains);
  return ch;
}
}  // namespace

TEST_CASE("superimpose evaluates the received-signal model") {
  const PowerLevel unit = PowerLevel::from_linear_mw(1.0);

  const auto identity = fixed_channel({{1.0, 0.0}});
  const std::vector<Complex> one{{1.0, 0.0}};
  REQUIRE(superimpose(one, identity, unit, {0.0, 0.0}) == Complex{1.0, 0.0});

  const auto two = fixed_channel({{2.0, 0.0}, {1.0, 0.0}});
  const std::vector<Complex> pm{{1.0, 0.0}, {-1.0, 0.0}};
  REQUIRE(superimpose(pm, two, unit, {0.0, 0.0}) == Complex{1.0, 0.0});

  const auto dead = fixed_channel({{0.0, 0.0}, {0.0, 0.0}});
  const Complex noise{0.25, -1.5};
  REQUIRE(superimpose(pm, dead, unit, noise) == noise);

  REQUIRE_THROWS_AS(superimpose(one, two, unit, {0.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("superimpose scales with sqrt(P) and is linear in the symbols") {
  RandomStream stream(4242, 0);
  const Deployment dep = place_users(2);
  const ChannelRealization ch = sample_channel(stream, dep);
  const std::vector<Complex> s{{0.6, 0.2}, {-0.4, 0.9}};

  const PowerLevel p1 = PowerLevel::from_linear_mw(2.0);
  const PowerLevel p4 = PowerLevel::from_linear_mw(2.0 * 9.0);
  const Complex base = superimpose(s, ch, p1, {0.0, 0.0});
  const Complex scaled = superimpose(s, ch, p4, {0.0, 0.0});
  REQUIRE(std::abs(scaled - 3.0 * base) < 1e-12 * std::abs(scaled));

  const std::vector<Complex> only_a{s[0], {0.0, 0.0}};
  const std::vector<Complex> only_b{{0.0, 0.0}, s[1]};
  const Complex split = superimpose(only_a, ch, p1, {0.0, 0.0}) +
                        superimpose(only_b, ch, p1, {0.0, 0.0});
  REQUIRE(std::abs(split - base) < 1e-12);
}
