#pragma once

#include <optional>
#include <string>

#include "otsmooth/baseline.hpp"
#include "otsmooth/datasets.hpp"
#include "otsmooth/mmd.hpp"
#include "otsmooth/solver.hpp"

// File formats. All writers are deterministic: fixed field order, fixed
// number formatting, no timestamps, so identical inputs produce byte-identical
// files.

namespace otsmooth {

// Shortest-exact decimal is not used for the model file; values are printed
// with %.17g so they parse back to the same double.
std::string format_double17(double v);

// Model JSON: {"n": ..., "d": ..., "codes": [[...], ...], "heights": [...],
// "epsilon": <number or null>} in exactly that field order.
void write_model_json(const std::string& path, const PotentialModel& model);
PotentialModel read_model_json(const std::string& path);

// Plain CSV, one point per row, %.17g columns. The optional header row is
// "x1,...,xd".
void write_batch_csv(const std::string& path, const SampleBatch& batch,
                     bool header = false);
SampleBatch read_batch_csv(const std::string& path);

// Dataset CSV = batch CSV preceded by '#' comment lines carrying the mixture
// description, e.g.  # mixture_spec {...json...}
void write_dataset_csv(const std::string& path, const SampleBatch& batch,
                       const MixtureSpec& spec);
struct DatasetFile {
  SampleBatch points;
  std::optional<MixtureSpec> spec;
};
DatasetFile read_dataset_csv(const std::string& path);

// Fit trace JSON; the gradient-norm history is downsampled to at most 1000
// points (fixed stride, last value always kept).
void write_trace_json(const std::string& path, const FitTrace& trace);

void write_test_report_json(const std::string& path, const TestReport& report);
void write_mode_report_json(const std::string& path, const ModeReport& report);
void write_tune_result_json(const std::string& path, const TuneResult& result,
                            const TuneConfig& cfg);
void write_baseline_summary_json(const std::string& path,
                                 const BaselineBatch& batch,
                                 const BaselineConfig& cfg);

// Scatter plot of observed (orange, drawn first) and generated (green, on
// top) points on the fixed viewport [-1.1, 1.1]^2. Byte-identical for
// identical inputs.
void write_scatter_svg(const std::string& path, const SampleBatch& observed,
                       const SampleBatch& generated);

}  // namespace otsmooth
