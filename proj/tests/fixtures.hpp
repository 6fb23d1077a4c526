#pragma once

#include <string>
#include <vector>

#include "metareg/io/csv.hpp"
#include "metareg/model_spec.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) {
  return std::string(METAREG_TEST_DATA_DIR) + "/" + name;
}

inline const std::vector<std::string>& il2ra_levels() {
  static const std::vector<std::string> levels{"basiliximab", "daclizumab"};
  return levels;
}

/// Liver transplant IL-2RA trials with the two-group (one mean per antibody)
/// design, half-normal(0.5) heterogeneity prior and uniform coefficient prior.
/// `counts` selects the raw 2x2 tables instead of the rounded log odds ratios.
inline metareg::RegressionProblem crins(bool counts = false) {
  using namespace metareg;
  const auto table = counts ? io::read_study_csv(data_path("crins_counts.csv"), io::Measure::log_odds_ratio)
                            : io::read_study_csv(data_path("crins.csv"), io::Measure::precomputed);
  RegressionProblem p;
  p.dataset = table.dataset;
  p.design = build_indicator_design(table.raw.text_column("IL2RA"), IndicatorCoding::group_means,
                                    il2ra_levels());
  p.tau_prior = TauPrior::half_normal(0.5);
  return p;
}

inline metareg::RegressionProblem crins_intercept_only(bool counts = false) {
  auto p = crins(counts);
  p.design = metareg::DesignMatrix::intercept(p.k());
  return p;
}

inline std::vector<std::string> crins_groups() {
  return metareg::io::read_csv(data_path("crins.csv")).text_column("IL2RA");
}

}  // namespace fixtures
