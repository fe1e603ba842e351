#include "eigensens/switching.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "eigensens/error.hpp"
#include "eigensens/parallel.hpp"

namespace eigensens {

namespace {

std::vector<RankPair> resolve_pairs(const Fit& fit, const std::optional<std::vector<RankPair>>& pairs) {
  if (!pairs) return all_pairs(fit.p());
  validate_pairs(*pairs, fit.p());
  std::vector<RankPair> sorted = *pairs;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return sorted;
}

// Approximated post-removal eigenvalues for every row, in row order.
std::vector<Eigen::VectorXd> approximation_table(const Fit& fit, unsigned jobs) {
  std::vector<Eigen::VectorXd> table(fit.n());
  parallel_for(fit.n(), jobs,
               [&](std::size_t row) { table[row] = approx_eigenvalues_loo(fit, row).approx_values; });
  return table;
}

SwitchEvent make_event(const Fit& fit, std::size_t row, RankPair pair, const Eigen::VectorXd& approx,
                       SwitchKind kind) {
  SwitchEvent e;
  e.obs = row + 1;
  e.label = fit.data().row_labels()[row];
  e.pair = pair;
  e.approx_first = approx(static_cast<Eigen::Index>(pair.first - 1));
  e.approx_second = approx(static_cast<Eigen::Index>(pair.second - 1));
  e.kind = kind;
  return e;
}

bool approx_inverted(const Eigen::VectorXd& approx, RankPair pair) {
  return approx(static_cast<Eigen::Index>(pair.first - 1)) <
         approx(static_cast<Eigen::Index>(pair.second - 1));
}

std::vector<SwitchEvent> switching_from_table(const Fit& fit, const std::vector<Eigen::VectorXd>& table,
                                              const std::vector<RankPair>& pairs) {
  std::vector<SwitchEvent> events;
  for (const RankPair pair : pairs) {
    for (std::size_t row = 0; row < fit.n(); ++row) {
      if (approx_inverted(table[row], pair)) {
        events.push_back(make_event(fit, row, pair, table[row], SwitchKind::switching));
      }
    }
  }
  return events;
}

std::vector<SwitchEvent> near_from_table(const Fit& fit, const std::vector<Eigen::VectorXd>& table,
                                         const std::vector<RankPair>& pairs, double delta) {
  if (std::isnan(delta) || delta < 0.0) throw ConfigError("near-switch delta must be >= 0");
  std::vector<SwitchEvent> events;
  for (const RankPair pair : pairs) {
    for (std::size_t row = 0; row < fit.n(); ++row) {
      const Eigen::VectorXd& a = table[row];
      const double gap = std::abs(a(static_cast<Eigen::Index>(pair.first - 1)) -
                                  a(static_cast<Eigen::Index>(pair.second - 1)));
      if (gap < delta) {
        const SwitchKind kind =
            approx_inverted(a, pair) ? SwitchKind::switching : SwitchKind::near_switch;
        events.push_back(make_event(fit, row, pair, a, kind));
      }
    }
  }
  return events;
}

std::vector<EigenSystem> all_loo_eigen(const Fit& fit, unsigned jobs) {
  std::vector<EigenSystem> out(fit.n());
  parallel_for(fit.n(), jobs, [&](std::size_t row) { out[row] = fit.loo_eigen(row); });
  return out;
}

void sort_events(std::vector<SwitchEvent>& events) {
  std::sort(events.begin(), events.end(), [](const SwitchEvent& a, const SwitchEvent& b) {
    return std::tie(a.pair, a.obs) < std::tie(b.pair, b.obs);
  });
}

std::string join_obs(const std::vector<std::size_t>& obs) {
  std::ostringstream out;
  for (std::size_t k = 0; k < obs.size(); ++k) out << (k ? ", " : "") << obs[k];
  return out.str();
}

}  // namespace

std::string to_string(SwitchKind kind) {
  return kind == SwitchKind::switching ? "switch" : "near_switch";
}

std::vector<RankPair> all_pairs(std::size_t p) {
  std::vector<RankPair> pairs;
  for (std::size_t j = 1; j < p; ++j) pairs.push_back(RankPair::at(j));
  return pairs;
}

void validate_pairs(const std::vector<RankPair>& pairs, std::size_t p) {
  for (const RankPair pair : pairs) {
    if (pair.first < 1 || pair.second != pair.first + 1 || pair.second > p) {
      throw ConfigError("pair " + std::to_string(pair.first) + ":" + std::to_string(pair.second) +
                        " is not an adjacent pair within 1.." + std::to_string(p));
    }
  }
}

std::vector<SwitchEvent> detect_switching(const Fit& fit,
                                          const std::optional<std::vector<RankPair>>& pairs,
                                          unsigned jobs) {
  const auto scope = resolve_pairs(fit, pairs);
  return switching_from_table(fit, approximation_table(fit, jobs), scope);
}

std::vector<SwitchEvent> detect_near_switch(const Fit& fit, double delta,
                                            const std::optional<std::vector<RankPair>>& pairs,
                                            unsigned jobs) {
  const auto scope = resolve_pairs(fit, pairs);
  return near_from_table(fit, approximation_table(fit, jobs), scope, delta);
}

std::vector<std::size_t> align_ranks(const EigenSystem& full, const EigenSystem& loo) {
  const auto p = full.size();
  if (loo.size() != p) throw ConfigError("align_ranks: decompositions differ in size");
  const Eigen::MatrixXd overlap = (full.vectors.transpose() * loo.vectors).cwiseAbs();
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  candidates.reserve(p * p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      candidates.emplace_back(overlap(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)), j, k);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
  });
  std::vector<std::size_t> aligned(p, p);
  std::vector<bool> taken(p, false);
  for (const auto& [value, j, k] : candidates) {
    if (aligned[j] == p && !taken[k]) {
      aligned[j] = k;
      taken[k] = true;
    }
  }
  return aligned;
}

bool exact_inversion(const std::vector<std::size_t>& aligned, RankPair pair) {
  return aligned.at(pair.first - 1) > aligned.at(pair.second - 1);
}

std::vector<SwitchEvent> detect_switching_exact(const Fit& fit,
                                                const std::optional<std::vector<RankPair>>& pairs,
                                                unsigned jobs) {
  const auto scope = resolve_pairs(fit, pairs);
  const auto table = approximation_table(fit, jobs);
  std::vector<std::vector<std::size_t>> aligned(fit.n());
  parallel_for(fit.n(), jobs,
               [&](std::size_t row) { aligned[row] = align_ranks(fit.eigen(), fit.loo_eigen(row)); });
  std::vector<SwitchEvent> events;
  for (const RankPair pair : scope) {
    for (std::size_t row = 0; row < fit.n(); ++row) {
      if (exact_inversion(aligned[row], pair)) {
        auto e = make_event(fit, row, pair, table[row], SwitchKind::switching);
        e.verified_exact = true;
        events.push_back(std::move(e));
      }
    }
  }
  return events;
}

std::vector<SwitchEvent> verify_exact(std::vector<SwitchEvent> events, const Fit& fit) {
  std::map<std::size_t, std::vector<std::size_t>> cache;
  for (auto& e : events) {
    auto it = cache.find(e.obs);
    if (it == cache.end()) {
      it = cache.emplace(e.obs, align_ranks(fit.eigen(), fit.loo_eigen(e.obs - 1))).first;
    }
    e.verified_exact = exact_inversion(it->second, e.pair);
  }
  return events;
}

Recommendation recommend_L(const std::vector<SwitchEvent>& events, std::size_t p,
                           std::size_t candidate) {
  if (candidate < 1 || candidate >= p) {
    throw ConfigError("candidate L=" + std::to_string(candidate) + " must lie in 1.." +
                      std::to_string(p - 1));
  }
  std::map<std::size_t, std::vector<std::size_t>> switched;  // boundary -> observations
  for (const auto& e : events) {
    if (e.kind == SwitchKind::switching) switched[e.pair.first].push_back(e.obs);
  }
  const auto describe = [&](std::size_t boundary) {
    return "eigenvalues " + std::to_string(boundary) + " and " + std::to_string(boundary + 1) +
           " switch when removing observation(s) " + join_obs(switched.at(boundary));
  };

  Recommendation rec;
  rec.candidate = candidate;
  if (!switched.contains(candidate)) {
    rec.retained = candidate;
    rec.rationale = "no switching between eigenvalues " + std::to_string(candidate) + " and " +
                    std::to_string(candidate + 1) + "; candidate kept";
    return rec;
  }

  std::vector<std::string> crossed{describe(candidate)};
  for (std::size_t l = candidate + 1; l < p; ++l) {
    if (!switched.contains(l)) {
      rec.retained = l;
      break;
    }
    crossed.push_back(describe(l));
  }
  if (!rec.retained) {
    crossed.resize(1);
    for (std::size_t l = candidate - 1; l >= 1; --l) {
      if (!switched.contains(l)) {
        rec.retained = l;
        break;
      }
      crossed.push_back(describe(l));
    }
  }

  std::ostringstream text;
  for (std::size_t k = 0; k < crossed.size(); ++k) text << (k ? "; " : "") << crossed[k];
  if (rec.retained) {
    text << "; retaining L=" << *rec.retained
         << (*rec.retained > candidate ? " keeps both eigenvectors of each switched pair"
                                       : " drops both eigenvectors of the switched pair");
  } else {
    text << "; every boundary 1.." << p - 1 << " carries switching, no stable L";
  }
  rec.rationale = text.str();
  return rec;
}

Recommendation recommend_L(const Fit& fit, std::size_t candidate) {
  return recommend_L(detect_switching(fit), fit.p(), candidate);
}

std::vector<InfluenceRecord> hybrid_records(const Fit& fit, std::size_t retained,
                                            const std::set<std::size_t>& flagged_rows,
                                            unsigned jobs) {
  for (const auto row : flagged_rows) fit.require_row(row);
  std::vector<InfluenceRecord> records(fit.n());
  parallel_for(fit.n(), jobs, [&](std::size_t row) {
    InfluenceRecord rec = empirical_record(fit, retained, row);
    if (flagged_rows.contains(row)) {
      add_sample_measures(rec, fit, fit.loo_eigen(row));
      rec.replaced = true;
    }
    records[row] = std::move(rec);
  });
  return records;
}

std::vector<HybridValue> hybrid_influence(const Fit& fit, std::size_t retained,
                                          const std::set<std::size_t>& flagged_rows,
                                          Measure measure, unsigned jobs) {
  const auto records = hybrid_records(fit, retained, flagged_rows, jobs);
  std::vector<HybridValue> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    HybridValue v;
    v.obs = rec.obs;
    v.replaced = rec.replaced;
    v.notes = rec.notes;
    if (measure == Measure::benasseni) {
      v.value = rec.replaced ? rec.sif_b : rec.eif_b;
    } else {
      v.value = rec.replaced ? rec.sci : rec.scia;
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::set<std::size_t> switching_rows(const std::vector<SwitchEvent>& events) {
  std::set<std::size_t> rows;
  for (const auto& e : events) {
    if (e.kind == SwitchKind::switching) rows.insert(e.obs - 1);
  }
  return rows;
}

std::set<std::size_t> flagged_rows(const std::vector<SwitchEvent>& events) {
  std::set<std::size_t> rows;
  for (const auto& e : events) rows.insert(e.obs - 1);
  return rows;
}

SwitchReport switching_report(const Fit& fit, const SwitchOptions& options) {
  const auto scope = resolve_pairs(fit, options.pairs);
  const auto table = approximation_table(fit, options.jobs);

  std::vector<SwitchEvent> switches;
  std::vector<std::vector<std::size_t>> aligned;
  std::vector<EigenSystem> loo;
  if (options.exact) {
    loo = all_loo_eigen(fit, options.jobs);
    aligned.resize(fit.n());
    for (std::size_t row = 0; row < fit.n(); ++row) aligned[row] = align_ranks(fit.eigen(), loo[row]);
    for (const RankPair pair : scope) {
      for (std::size_t row = 0; row < fit.n(); ++row) {
        if (exact_inversion(aligned[row], pair)) {
          switches.push_back(make_event(fit, row, pair, table[row], SwitchKind::switching));
        }
      }
    }
  } else {
    switches = switching_from_table(fit, table, scope);
  }

  std::map<std::pair<RankPair, std::size_t>, SwitchEvent> merged;
  for (auto& e : switches) merged.emplace(std::make_pair(e.pair, e.obs), e);
  for (auto& e : near_from_table(fit, table, scope, options.delta)) {
    // The switching decision belongs to the detection mode, not the approximation.
    if (options.exact) e.kind = SwitchKind::near_switch;
    merged.emplace(std::make_pair(e.pair, e.obs), e);
  }

  SwitchReport report;
  report.delta = options.delta;
  for (auto& [key, e] : merged) {
    if (options.exact) e.verified_exact = exact_inversion(aligned[e.obs - 1], e.pair);
    report.events.push_back(e);
  }
  sort_events(report.events);

  report.recommendation = recommend_L(report.events, fit.p(), options.candidate);

  for (const auto row : flagged_rows(report.events)) {
    LooEigenApprox a;
    a.obs = row + 1;
    a.approx_values = table[row];
    if (options.exact) a.exact_values = loo[row].values;
    report.approximations.push_back(std::move(a));
  }

  if (options.hybrid) {
    std::vector<SwitchEvent> scoped;
    for (const auto& e : report.events) {
      if (options.pairs || e.pair == RankPair::at(options.candidate)) scoped.push_back(e);
    }
    report.hybrid_series = hybrid_records(fit, options.candidate, flagged_rows(scoped), options.jobs);
    for (const auto& e : scoped) {
      auto& rec = report.hybrid_series[e.obs - 1];
      (e.kind == SwitchKind::switching ? rec.switching : rec.near_switch) = true;
    }
  }
  return report;
}

std::vector<CascadeRound> cascade_scan(const DataMatrix& data, EstimatorSpec spec,
                                       std::size_t max_rounds, const SwitchOptions& options) {
  if (max_rounds < 1) throw ConfigError("cascade_scan needs max_rounds >= 1");
  std::vector<CascadeRound> rounds;
  std::set<std::size_t> removed;  // original 0-based rows
  for (std::size_t round = 1; round <= max_rounds; ++round) {
    std::vector<std::size_t> original;
    for (std::size_t row = 0; row < data.rows(); ++row) {
      if (!removed.contains(row)) original.push_back(row);
    }
    if (original.size() < 3) {
      throw DataError("cascade round " + std::to_string(round) + " would leave " +
                      std::to_string(original.size()) + " observations; at least 3 are needed");
    }
    const Fit fit(drop_rows(data, {removed.begin(), removed.end()}), spec);
    SwitchReport report = switching_report(fit, options);
    const auto switched = switching_rows(report.events);

    for (auto& e : report.events) e.obs = original[e.obs - 1] + 1;
    for (auto& a : report.approximations) a.obs = original[a.obs - 1] + 1;
    for (auto& r : report.hybrid_series) r.obs = original[r.obs - 1] + 1;
    rounds.push_back({round, original.size(), std::move(report)});

    if (switched.empty()) break;
    for (const auto row : switched) removed.insert(original[row]);
  }
  return rounds;
}

}  // namespace eigensens
