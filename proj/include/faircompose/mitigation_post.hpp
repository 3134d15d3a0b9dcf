#pragma once

#include <span>
#include <string>
#include <vector>

#include "faircompose/core.hpp"
#include "faircompose/mitigation_in.hpp"

namespace faircompose {

// Post-processors are fitted on validation scores and applied to test
// scores; all three are deterministic, including the derandomized
// calibrated-odds mixing.

/// Reject-option band: inside [threshold - margin, threshold + margin] the
/// unprivileged group gets the favorable outcome and the privileged group
/// the unfavorable one; outside, the plain threshold rule applies.
struct RocBand {
  double threshold = 0.5;
  double margin = 0.0;
  double di_low = 0.8;
  double di_high = 1.25;
  bool feasible = true;  // false: no band met the DI bounds, closest-to-1 fallback
};

/// Exhaustive search over thresholds {0.01..0.99} x margins {0.01..0.25};
/// among bands whose validation DI falls within the bounds, picks the one
/// maximizing balanced accuracy (ties: smaller margin, then threshold).
RocBand roc_fit(std::span<const double> scores, std::span<const int> labels,
                std::span<const int> groups, double di_low = 0.8, double di_high = 1.25);

std::vector<int> roc_apply(std::span<const double> scores, std::span<const int> groups,
                           const RocBand& band);

enum class CostMode { Fpr, Fnr, Weighted };
const char* to_string(CostMode mode);
CostMode parse_cost_mode(const std::string& name);

/// Calibrated-odds mixing: with probability p (per group) the score is
/// replaced by the group base rate. Derandomized by flagging the p-fraction
/// of group instances whose scores are closest to the base rate.
struct CeoMix {
  double p_priv = 0.0;
  double p_unpriv = 0.0;
  double base_rate_priv = 0.0;
  double base_rate_unpriv = 0.0;
  CostMode mode = CostMode::Weighted;
  double threshold = 0.5;  // decision threshold inherited from the wrapped model
  bool calibration_warning = false;
};

/// Grid search p in {0, 0.01, ..., 1} per group for the pair equalizing the
/// generalized cost across groups (within cost_tol) at minimal error.
/// Throws a Fit error when no pair meets the tolerance.
CeoMix ceodds_fit(std::span<const double> scores, std::span<const int> labels,
                  std::span<const int> groups, CostMode mode, double threshold,
                  double cost_tol = 0.02);

std::vector<double> ceodds_mix_scores(std::span<const double> scores,
                                      std::span<const int> groups, const CeoMix& mix);
std::vector<int> ceodds_apply(std::span<const double> scores,
                              std::span<const int> groups, const CeoMix& mix);

struct GroupThresholds {
  double t_priv = 0.5;
  double t_unpriv = 0.5;
  ConstraintKind constraint = ConstraintKind::DemographicParity;
  double achieved_gap = 0.0;  // validation constraint gap of the chosen pair
  bool feasible = true;
};

/// Exhaustive 99x99 per-group threshold search maximizing validation
/// balanced accuracy subject to the constraint gap <= tol. Ties break toward
/// the smaller unprivileged then privileged threshold; if no pair is
/// feasible the minimal-gap pair is returned flagged.
GroupThresholds threshopt_fit(std::span<const double> scores, std::span<const int> labels,
                              std::span<const int> groups, ConstraintKind constraint,
                              double tol = 0.02);

std::vector<int> threshopt_apply(std::span<const double> scores,
                                 std::span<const int> groups, const GroupThresholds& gt);

}  // namespace faircompose
