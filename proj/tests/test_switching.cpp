#include <doctest.h>

#include <limits>
#include <random>

#include "eigensens/error.hpp"
#include "eigensens/switching.hpp"
#include "support.hpp"

using namespace eigensens;

namespace {

std::set<std::size_t> obs_of(const std::vector<SwitchEvent>& events, RankPair pair,
                             std::optional<SwitchKind> kind = {}) {
  std::set<std::size_t> out;
  for (const auto& e : events) {
    if (e.pair == pair && (!kind || e.kind == *kind)) out.insert(e.obs);
  }
  return out;
}

// Base rows whose sample covariance (divisor n-1) is exactly diag(variances),
// followed by one row per entry of `spikes`: the base mean plus the given offset.
DataMatrix planted(std::uint64_t seed, std::size_t base_rows, const std::vector<double>& variances,
                   const std::vector<Eigen::VectorXd>& spikes) {
  std::mt19937_64 rng(seed);
  const auto p = static_cast<Eigen::Index>(variances.size());
  Eigen::MatrixXd z = testing::random_data(rng, base_rows, static_cast<std::size_t>(p)).values();
  z = z.rowwise() - z.colwise().mean();
  const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(base_rows - 1);
  const Eigen::MatrixXd whiten = Eigen::LLT<Eigen::MatrixXd>(cov).matrixU().solve(
      Eigen::MatrixXd::Identity(p, p));
  z = z * whiten;
  for (Eigen::Index j = 0; j < p; ++j) z.col(j) *= std::sqrt(variances[static_cast<std::size_t>(j)]);

  Eigen::MatrixXd all(static_cast<Eigen::Index>(base_rows + spikes.size()), p);
  all.topRows(static_cast<Eigen::Index>(base_rows)) = z;
  for (std::size_t k = 0; k < spikes.size(); ++k) {
    all.row(static_cast<Eigen::Index>(base_rows + k)) = spikes[k].transpose();
  }
  return DataMatrix(all);
}

// A point along coordinate k whose inclusion adds roughly `added` to that variance.
Eigen::VectorXd spike(Eigen::Index p, Eigen::Index k, double added, std::size_t n) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
  v(k) = std::sqrt(added * static_cast<double>(n));
  return v;
}

SwitchEvent event_at(std::size_t obs, std::size_t first) {
  SwitchEvent e;
  e.obs = obs;
  e.pair = RankPair::at(first);
  return e;
}

}  // namespace

TEST_CASE("fatty acids switching and near switching") {
  const std::set<std::size_t> switching{42, 57, 58, 59, 60, 91, 93};
  for (auto divisor : {Divisor::n, Divisor::n_minus_1}) {
    const Fit fit(testing::fatty_acids(), {EstimatorKind::covariance, divisor});
    const auto events = detect_switching(fit);
    CHECK(obs_of(events, {2, 3}) == switching);
    CHECK(obs_of(events, {1, 2}).empty());
    CHECK(obs_of(events, {3, 4}).empty());
    CHECK(events.size() == switching.size());
    for (const auto& e : events) {
      CHECK(e.approx_first < e.approx_second);
      CHECK(e.kind == SwitchKind::switching);
    }

    const auto near = detect_near_switch(fit, 0.1);
    const auto near23 = obs_of(near, {2, 3});
    for (std::size_t obs : {28, 90, 94, 95}) CHECK(near23.contains(obs));
    for (const auto& e : near) {
      CHECK(std::abs(e.approx_first - e.approx_second) < 0.1);
      CHECK((e.kind == SwitchKind::switching) == (e.approx_first < e.approx_second));
    }
  }
}

TEST_CASE("pair filter restricts the full scan") {
  const Fit fit(testing::fatty_acids(), {});
  const auto all = detect_switching(fit);
  for (const RankPair pair : all_pairs(7)) {
    std::vector<SwitchEvent> restricted;
    for (const auto& e : all)
      if (e.pair == pair) restricted.push_back(e);
    CHECK(detect_switching(fit, std::vector<RankPair>{pair}) == restricted);
  }
  CHECK_THROWS_AS(detect_switching(fit, std::vector<RankPair>{{2, 4}}), ConfigError);
  CHECK_THROWS_AS(detect_switching(fit, std::vector<RankPair>{{7, 8}}), ConfigError);
}

TEST_CASE("well separated spectrum has no events") {
  std::mt19937_64 rng(5);
  const Fit fit(testing::random_data(rng, 50, 4, {100.0, 10.0, 1.0, 0.1}), {});
  CHECK(detect_switching(fit).empty());
  CHECK(detect_switching_exact(fit).empty());
  CHECK(verify_exact({}, fit).empty());
  CHECK(cascade_scan(fit.data(), fit.spec(), 5).size() == 1);
  CHECK(recommend_L(fit, 2).retained == 2u);
}

TEST_CASE("planted leverage point switches the pair it props up") {
  const std::size_t base = 200;
  const DataMatrix x = planted(42, base, {9.0, 0.96, 1.0}, {spike(3, 1, 0.3, base)});
  const Fit fit(x, {});
  const auto events = detect_switching(fit);
  REQUIRE(events.size() == 1);
  CHECK(events[0].obs == base + 1);
  CHECK(events[0].pair == RankPair{2, 3});
  const auto verified = verify_exact(events, fit);
  CHECK(verified[0].verified_exact == true);
  CHECK(detect_switching_exact(fit).size() == 1);
}

TEST_CASE("near switching thresholds") {
  const Fit fit(testing::fatty_acids(), {});
  CHECK(detect_near_switch(fit, 0.0).empty());
  CHECK(detect_near_switch(fit, std::numeric_limits<double>::infinity()).size() == 96 * 6);
  CHECK_THROWS_AS(detect_near_switch(fit, -0.1), ConfigError);
}

TEST_CASE("exact verification on the fatty acids data") {
  const Fit fit(testing::fatty_acids(), {});
  const auto verified = verify_exact(detect_switching(fit), fit);
  for (const auto& e : verified) {
    CAPTURE(e.obs);
    CHECK(e.verified_exact == true);
  }
  const auto exact = detect_switching_exact(fit);
  CHECK(obs_of(exact, {2, 3}) == std::set<std::size_t>{42, 57, 58, 59, 60, 91, 93});
}

TEST_CASE("align_ranks is a permutation") {
  std::mt19937_64 rng(14);
  const Fit fit(testing::random_data(rng, 30, 5, {3, 2.9, 2, 1, 0.5}), {});
  for (std::size_t i = 0; i < fit.n(); ++i) {
    auto aligned = align_ranks(fit.eigen(), fit.loo_eigen(i));
    std::sort(aligned.begin(), aligned.end());
    for (std::size_t k = 0; k < aligned.size(); ++k) CHECK(aligned[k] == k);
  }
  CHECK(exact_inversion({1, 0, 2}, {1, 2}));
  CHECK_FALSE(exact_inversion({0, 1, 2}, {1, 2}));
}

TEST_CASE("recommend_L") {
  const Fit fit(testing::fatty_acids(), {});
  const Recommendation rec = recommend_L(fit, 2);
  CHECK(rec.retained == 3u);
  CHECK(rec.rationale.find("2 and 3") != std::string::npos);
  CHECK(rec.rationale.find("57") != std::string::npos);
  CHECK(recommend_L(fit, 1).retained == 1u);
  CHECK(recommend_L(fit, 3).retained == 3u);
  CHECK_THROWS_AS(recommend_L(fit, 7), ConfigError);
  CHECK_THROWS_AS(recommend_L(fit, 0), ConfigError);

  CHECK(recommend_L({}, 5, 2).retained == 2u);
  // Escalates past consecutive switched boundaries.
  const std::vector<SwitchEvent> stacked{event_at(4, 2), event_at(9, 3)};
  CHECK(recommend_L(stacked, 5, 2).retained == 4u);
  // Top boundary reached: fall back below the candidate.
  CHECK(recommend_L(stacked, 4, 2).retained == 1u);
  const std::vector<SwitchEvent> everywhere{event_at(1, 1), event_at(2, 2), event_at(3, 3)};
  const Recommendation none = recommend_L(everywhere, 4, 2);
  CHECK_FALSE(none.retained);
  CHECK(none.rationale.find("no stable L") != std::string::npos);
  // Near-switch events do not move the boundary.
  SwitchEvent near = event_at(5, 2);
  near.kind = SwitchKind::near_switch;
  CHECK(recommend_L({near}, 4, 2).retained == 2u);
}

TEST_CASE("property: recommendation never lands on a switched boundary") {
  std::mt19937_64 rng(71);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t p = 2 + static_cast<std::size_t>(trial % 7);
    std::vector<SwitchEvent> events;
    std::set<std::size_t> boundaries;
    for (std::size_t b = 1; b < p; ++b) {
      if (coin(rng)) {
        events.push_back(event_at(b, b));
        boundaries.insert(b);
      }
    }
    const std::size_t candidate = 1 + static_cast<std::size_t>(trial) % (p - 1);
    const Recommendation rec = recommend_L(events, p, candidate);
    if (rec.retained) {
      CHECK(*rec.retained >= 1);
      CHECK(*rec.retained < p);
      CHECK_FALSE(boundaries.contains(*rec.retained));
    } else {
      CHECK(boundaries.size() >= 1);
    }
  }
}

TEST_CASE("hybrid influence") {
  const Fit fit(testing::fatty_acids(), {});
  const std::size_t n = fit.n();

  const auto none = hybrid_influence(fit, 2, {}, Measure::benasseni);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK_FALSE(none[i].replaced);
    CHECK(*none[i].value == eif_b(fit, 2, i));
  }

  std::set<std::size_t> every;
  for (std::size_t i = 0; i < n; ++i) every.insert(i);
  const auto all = hybrid_influence(fit, 2, every, Measure::canonical);
  for (std::size_t i = 0; i < n; i += 7) {
    CHECK(all[i].replaced);
    CHECK(*all[i].value == doctest::Approx(sci(fit, 2, i)).epsilon(1e-12));
  }

  const auto flagged = flagged_rows(detect_near_switch(fit, 0.1));
  std::set<std::size_t> flags = flagged;
  for (auto r : switching_rows(detect_switching(fit))) flags.insert(r);
  reset_decomposition_count();
  const auto series = hybrid_influence(fit, 2, flags, Measure::benasseni, 3);
  CHECK(decomposition_count() == flags.size());
  for (std::size_t i = 0; i < n; ++i) {
    CAPTURE(i);
    CHECK(series[i].replaced == flags.contains(i));
    const double expected = flags.contains(i) ? sif_b(fit, 2, i) : eif_b(fit, 2, i);
    CHECK(*series[i].value == doctest::Approx(expected).epsilon(1e-12));
    CHECK((*series[i].value != *none[i].value) == flags.contains(i));
  }
  CHECK_THROWS_AS(hybrid_influence(fit, 2, {n}, Measure::benasseni), ConfigError);
}

TEST_CASE("switching report") {
  const Fit fit(testing::fatty_acids(), {});
  reset_decomposition_count();
  const SwitchReport report = switching_report(fit, {});
  CHECK(decomposition_count() == 0);
  CHECK(report.delta == 0.1);
  CHECK(report.recommendation.retained == 3u);
  CHECK(std::is_sorted(report.events.begin(), report.events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.pair, a.obs) < std::tie(b.pair, b.obs);
  }));
  CHECK(obs_of(report.events, {2, 3}, SwitchKind::switching) ==
        std::set<std::size_t>{42, 57, 58, 59, 60, 91, 93});
  const auto near = obs_of(report.events, {2, 3}, SwitchKind::near_switch);
  for (std::size_t obs : {28, 90, 94, 95}) CHECK(near.contains(obs));
  CHECK(report.approximations.size() == flagged_rows(report.events).size());
  CHECK(report.hybrid_series.empty());

  SwitchOptions options;
  options.exact = true;
  options.hybrid = true;
  options.jobs = 4;
  const SwitchReport exact = switching_report(fit, options);
  CHECK(obs_of(exact.events, {2, 3}, SwitchKind::switching) ==
        obs_of(report.events, {2, 3}, SwitchKind::switching));
  for (const auto& e : exact.events) CHECK(e.verified_exact.has_value());
  REQUIRE(exact.hybrid_series.size() == 96);
  CHECK(exact.hybrid_series[56].switching);
  CHECK(exact.hybrid_series[56].replaced);
  CHECK(exact.hybrid_series[27].near_switch);
  CHECK_FALSE(exact.hybrid_series[0].replaced);
  REQUIRE(exact.approximations.front().exact_values);
}

TEST_CASE("property: reports are deterministic across thread counts") {
  const Fit fit(testing::fatty_acids(), {});
  SwitchOptions one;
  one.hybrid = true;
  SwitchOptions many = one;
  many.jobs = 8;
  const SwitchReport a = switching_report(fit, one);
  const SwitchReport b = switching_report(fit, many);
  CHECK(a.events == b.events);
  REQUIRE(a.hybrid_series.size() == b.hybrid_series.size());
  for (std::size_t i = 0; i < a.hybrid_series.size(); ++i) {
    CHECK(a.hybrid_series[i].sif_b == b.hybrid_series[i].sif_b);
    CHECK(a.hybrid_series[i].eif_b == b.hybrid_series[i].eif_b);
  }
}

TEST_CASE("cascade on the fatty acids data") {
  const auto rounds = cascade_scan(testing::fatty_acids(), {}, 3);
  REQUIRE(rounds.size() >= 2);
  CHECK(rounds[0].rows_used == 96);
  CHECK(switching_rows(rounds[0].report.events).size() == 7);
  CHECK(rounds[1].rows_used == 89);
  std::size_t removed = 0;
  for (std::size_t k = 0; k + 1 < rounds.size(); ++k) {
    removed += switching_rows(rounds[k].report.events).size();
    CHECK(rounds[k + 1].rows_used == 96 - removed);
  }
  // Observation numbers and labels refer to the original rows.
  const DataMatrix x = testing::fatty_acids();
  for (const auto& round : rounds)
    for (const auto& e : round.report.events) CHECK(e.label == x.row_labels()[e.obs - 1]);
  CHECK_THROWS_AS(cascade_scan(x, {}, 0), ConfigError);
}

TEST_CASE("cascade uncovers a masked leverage point") {
  const std::size_t base = 400;
  // Inner props up column 2 above column 3; outer props column 3 above both.
  const std::vector<Eigen::VectorXd> spikes{spike(3, 1, 0.3, base), spike(3, 2, 0.4, base)};
  const DataMatrix x = planted(7, base, {9.0, 0.9, 1.0}, spikes);
  const auto rounds = cascade_scan(x, {}, 5);
  REQUIRE(rounds.size() == 3);
  CHECK(switching_rows(rounds[0].report.events) == std::set<std::size_t>{base + 1});
  CHECK(switching_rows(rounds[1].report.events) == std::set<std::size_t>{base});
  CHECK(switching_rows(rounds[2].report.events).empty());
  CHECK(rounds[2].rows_used == base);
}
