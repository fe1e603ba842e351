#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eigensens/eigen_system.hpp"
#include "eigensens/fit.hpp"
#include "eigensens/influence.hpp"
#include "eigensens/subspace_diag.hpp"

namespace eigensens {

enum class SwitchKind { switching, near_switch };

std::string to_string(SwitchKind kind);

/// One observation whose removal reorders (or nearly reorders) a pair of
/// adjacent eigenvalues, judged on the rank-indexed approximations.
struct SwitchEvent {
  std::size_t obs = 0;  // 1-based, in the numbering of the original data
  std::string label;
  RankPair pair;
  double approx_first = 0.0;   // approximated lambda_{first,(i)}
  double approx_second = 0.0;  // approximated lambda_{second,(i)}
  SwitchKind kind = SwitchKind::switching;
  std::optional<bool> verified_exact;

  friend bool operator==(const SwitchEvent&, const SwitchEvent&) = default;
};

/// Every adjacent pair (1,2), ..., (p-1,p).
std::vector<RankPair> all_pairs(std::size_t p);

/// Throws ConfigError unless every pair is adjacent and within 1..p.
void validate_pairs(const std::vector<RankPair>& pairs, std::size_t p);

/// Events with approx_first < approx_second, sorted by (pair, obs).
/// Uses no decompositions beyond the full-data one held by `fit`.
std::vector<SwitchEvent> detect_switching(const Fit& fit,
                                          const std::optional<std::vector<RankPair>>& pairs = {},
                                          unsigned jobs = 1);

/// Events with |approx_first - approx_second| < delta. An event that is also an
/// inversion is reported with kind `switching`. delta must be >= 0.
std::vector<SwitchEvent> detect_near_switch(const Fit& fit, double delta,
                                            const std::optional<std::vector<RankPair>>& pairs = {},
                                            unsigned jobs = 1);

/// For each full-data rank j, the rank of the leave-one-out eigenvector it is
/// matched to. Matching is greedy on |eta_j^T eta_{k,(i)}|, largest overlap
/// first, so the result is a permutation.
std::vector<std::size_t> align_ranks(const EigenSystem& full, const EigenSystem& loo);

/// True when the aligned leave-one-out ranks of pair.first and pair.second are inverted.
bool exact_inversion(const std::vector<std::size_t>& aligned, RankPair pair);

/// Switch events decided by exact leave-one-out decompositions (n of them).
/// approx_* fields still carry the approximations; verified_exact is true.
std::vector<SwitchEvent> detect_switching_exact(
    const Fit& fit, const std::optional<std::vector<RankPair>>& pairs = {}, unsigned jobs = 1);

/// Returns the events with verified_exact set from one exact decomposition per
/// distinct observation.
std::vector<SwitchEvent> verify_exact(std::vector<SwitchEvent> events, const Fit& fit);

struct Recommendation {
  std::size_t candidate = 0;
  std::optional<std::size_t> retained;  // empty when every boundary switches
  std::string rationale;
};

/// Moves the candidate off any boundary carrying a switch event: upward first
/// (keeping both switched directions), stopping below p; downward otherwise.
Recommendation recommend_L(const std::vector<SwitchEvent>& events, std::size_t p,
                           std::size_t candidate);
Recommendation recommend_L(const Fit& fit, std::size_t candidate);

enum class Measure { benasseni, canonical };

struct HybridValue {
  std::size_t obs = 0;  // 1-based
  std::optional<double> value;
  bool replaced = false;
  std::vector<std::string> notes;
};

/// Empirical and, for flagged rows, sample subspace measures. Exactly one
/// leave-one-out decomposition per flagged row; `replaced` marks those.
std::vector<InfluenceRecord> hybrid_records(const Fit& fit, std::size_t retained,
                                            const std::set<std::size_t>& flagged_rows,
                                            unsigned jobs = 1);

/// EIF_B (or SCIA) everywhere except flagged rows (0-based), which carry SIF_B (or SCI).
std::vector<HybridValue> hybrid_influence(const Fit& fit, std::size_t retained,
                                          const std::set<std::size_t>& flagged_rows,
                                          Measure measure, unsigned jobs = 1);

struct SwitchOptions {
  std::size_t candidate = 2;
  double delta = 0.1;
  std::optional<std::vector<RankPair>> pairs;
  bool exact = false;   // decide switching with exact decompositions
  // Attach the SIF-replaced influence series. Rows are flagged by events on
  // `pairs` when given, otherwise on the retained boundary (candidate, candidate + 1).
  bool hybrid = false;
  unsigned jobs = 1;
};

struct SwitchReport {
  std::vector<SwitchEvent> events;  // switching and near-switch, sorted by (pair, obs)
  Recommendation recommendation;
  std::vector<LooEigenApprox> approximations;  // one per flagged observation
  std::vector<InfluenceRecord> hybrid_series;  // when requested
  double delta = 0.1;
};

SwitchReport switching_report(const Fit& fit, const SwitchOptions& options);

/// Rows flagged by switching (not near-switch) events, 0-based.
std::set<std::size_t> switching_rows(const std::vector<SwitchEvent>& events);
/// Rows flagged by any event, 0-based.
std::set<std::size_t> flagged_rows(const std::vector<SwitchEvent>& events);

struct CascadeRound {
  std::size_t round = 1;
  std::size_t rows_used = 0;
  SwitchReport report;  // observation numbers refer to the original data
};

/// Round 1 reports on `data`; each later round removes every observation that
/// switched so far and reports again. Stops when a round has no switching or
/// after `max_rounds`. Throws DataError if fewer than 3 rows would remain.
std::vector<CascadeRound> cascade_scan(const DataMatrix& data, EstimatorSpec spec,
                                       std::size_t max_rounds, const SwitchOptions& options = {});

}  // namespace eigensens
