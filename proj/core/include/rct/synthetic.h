#ifndef RCT_SYNTHETIC_H_
#define RCT_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "rct/data_ingest.h"

namespace rct {

struct SyntheticConfig {
  std::size_t n_rows = 2000;
  double positive_rate = 0.36;
  // Scale of the logistic noise on the latent risk; larger is harder.
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
};

// A relapse-style cohort: demographics, disease history, treatment, imaging
// and lab fields, some of them partly missing. Labels come from a latent
// logistic risk score; exactly round(positive_rate * n_rows) rows with the
// highest noisy risk are positive.
TabularDataset make_synthetic_cohort(const SyntheticConfig& config);

// The dataset as CSV (label column "relapse") and the matching manifest.
std::string synthetic_csv(const TabularDataset& ds);
std::string synthetic_manifest();

}  // namespace rct

#endif  // RCT_SYNTHETIC_H_
