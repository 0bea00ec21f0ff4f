#pragma once

#include <cstdint>
#include <vector>

#include "otsmooth/solver.hpp"

// Piecewise-linear baseline generator. Instead of smoothing the potential it
// interpolates between the codes of the d+1 cells whose Monte-Carlo centers
// are nearest to the noise point, with inverse-distance weights, after an
// angle screen: the cosine similarity between the nearest cell's code and
// each other candidate code is compared against a threshold theta_hat, and
// the point is rejected when every candidate cosine exceeds it. Candidates
// that pass (cosine <= theta_hat) are kept alongside the nearest cell.

namespace otsmooth {

struct CellCenters {
  Eigen::MatrixXd centers;          // n x d; rows of empty cells are NaN
  std::vector<std::int64_t> counts; // Monte-Carlo hits per cell
  std::int64_t mc_total = 0;

  bool has(Index i) const { return counts[static_cast<size_t>(i)] > 0; }
  Index non_empty() const;
};

struct BaselineConfig {
  double theta_hat = 1.0;  // in (0, 1]
  std::int64_t mc_samples_for_centers = 1000000;
  std::uint64_t seed = 0;
};

// Mean position of the noise samples that landed in each argmax cell,
// estimated from cfg.mc_samples_for_centers uniform draws. Cells that were
// never hit are flagged empty and excluded from neighbor searches. Same
// block-wise determinism contract as estimate_cell_masses.
CellCenters estimate_cell_centers(const PotentialModel& model,
                                  const NoiseSpec& noise,
                                  const BaselineConfig& cfg);

struct BaselineSample {
  bool accepted = false;
  Eigen::RowVectorXd point;       // valid only when accepted
  bool zero_code_warning = false; // a zero code forced cosine := 1
};

// One noise point -> one (possibly rejected) output. Uses the
// min(d+1, #non-empty) nearest non-empty centers in ascending Euclidean
// distance (lowest index on ties). A noise point sitting exactly on a center
// returns that cell's code (the infinite-weight limit). With a single
// candidate there are no angles to screen, so the point is accepted as the
// nearest code.
BaselineSample baseline_generate(const Eigen::RowVectorXd& x,
                                 const PotentialModel& model,
                                 const CellCenters& centers,
                                 const BaselineConfig& cfg);

struct BaselineBatch {
  SampleBatch points;            // accepted outputs, in draw order
  std::int64_t draws = 0;        // noise points consumed
  double rejection_rate = 0.0;   // rejected / draws
  bool shortfall = false;        // budget exhausted before m acceptances
  std::int64_t zero_code_warnings = 0;
};

// Draws noise sequentially from one substream of `seed` until m points are
// accepted or the draw budget is spent (default 100 * m).
BaselineBatch baseline_generate_batch(const PotentialModel& model,
                                      const CellCenters& centers,
                                      const BaselineConfig& cfg,
                                      std::int64_t m, std::uint64_t seed,
                                      std::int64_t draw_budget = -1);

}  // namespace otsmooth
