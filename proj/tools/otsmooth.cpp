// Command-line front end: dataset synthesis, height-vector fitting, smoothed
// generation, epsilon tuning, the piecewise-linear baseline, and coverage
// reports. Every run writes a <primary-output>.manifest.json recording the
// resolved parameters so results can be reproduced exactly.

#include <cctype>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "otsmooth/baseline.hpp"
#include "otsmooth/datasets.hpp"
#include "otsmooth/generator.hpp"
#include "otsmooth/io.hpp"
#include "otsmooth/mmd.hpp"
#include "otsmooth/parallel.hpp"
#include "otsmooth/rng.hpp"
#include "otsmooth/solver.hpp"

namespace {

using namespace otsmooth;

std::string jstr(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> params;  // values as JSON
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

void write_manifest(const std::string& primary_out, const Manifest& m,
                    double duration_seconds) {
  std::string doc = "{\n";
  doc += "  \"command\": " + jstr(m.command) + ",\n";
  doc += "  \"parameters\": {";
  for (size_t i = 0; i < m.params.size(); ++i) {
    if (i) doc += ", ";
    doc += jstr(m.params[i].first) + ": " + m.params[i].second;
  }
  doc += "},\n";
  doc += "  \"seed\": " + std::to_string(m.seed) + ",\n";
  doc += "  \"threads\": " + std::to_string(m.threads) + ",\n";
  doc += "  \"inputs\": [";
  for (size_t i = 0; i < m.inputs.size(); ++i) {
    if (i) doc += ", ";
    doc += jstr(m.inputs[i]);
  }
  doc += "],\n  \"outputs\": [";
  for (size_t i = 0; i < m.outputs.size(); ++i) {
    if (i) doc += ", ";
    doc += jstr(m.outputs[i]);
  }
  doc += "],\n";
  doc += "  \"duration_seconds\": " + format_double17(duration_seconds) + "\n";
  doc += "}\n";
  std::ofstream out(primary_out + ".manifest.json");
  require(out.is_open(), "cannot write " + primary_out + ".manifest.json");
  out << doc;
}

// "model.json" + "_trace.json" -> "model_trace.json"; unknown extensions just
// get the tail appended.
std::string with_tail(const std::string& path, const std::string& tail) {
  for (const std::string ext : {".json", ".csv"})
    if (path.size() > ext.size() &&
        path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
      return path.substr(0, path.size() - ext.size()) + tail;
  return path + tail;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      size_t used = 0;
      grid.push_back(std::stod(cell, &used));
      while (used < cell.size() &&
             std::isspace(static_cast<unsigned char>(cell[used])))
        ++used;
      require(used == cell.size(), "");
    } catch (const std::exception&) {
      throw InvalidInputError("malformed grid entry: " + cell);
    }
  }
  require(!grid.empty(), "empty epsilon grid");
  return grid;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Semi-discrete optimal-transport toolkit: fits a max-affine potential "
      "to latent codes, samples its smoothed transport map, tunes the "
      "smoothing bound by a kernel two-sample test, and runs the "
      "piecewise-linear baseline for comparison."};
  app.require_subcommand(1);
  app.footer(
      "Exit codes:\n"
      "  0  success\n"
      "  2  invalid input (bad flags, malformed or missing files)\n"
      "  3  solver did not converge\n"
      "  4  epsilon search left unbracketed by the grid");

  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--seed", seed, "Master RNG seed")
      ->envname("OTSMOOTH_SEED");
  app.add_option("--threads", threads,
                 "Worker threads (0 = hardware concurrency); the numeric "
                 "output is thread-count independent");

  int rc = 0;

  // dataset ------------------------------------------------------------
  auto* cmd_dataset = app.add_subcommand(
      "dataset", "Synthesize a ring or grid Gaussian-mixture dataset");
  cmd_dataset->fallthrough();
  std::string ds_kind;
  std::int64_t ds_n = 256;
  std::string ds_out;
  cmd_dataset->add_option("kind", ds_kind, "ring or grid")
      ->required()
      ->check(CLI::IsMember({"ring", "grid"}));
  cmd_dataset->add_option("-n,--samples", ds_n, "Dataset size")->capture_default_str();
  cmd_dataset->add_option("--out", ds_out, "Output CSV (default <kind>.csv)");
  cmd_dataset->callback([&] {
    Timer timer;
    set_max_threads(threads);
    if (ds_out.empty()) ds_out = ds_kind + ".csv";
    DatasetResult ds =
        ds_kind == "ring" ? make_ring(ds_n, seed) : make_grid(ds_n, seed);
    write_dataset_csv(ds_out, ds.points, ds.spec);
    Manifest m{"dataset",
               {{"kind", jstr(ds_kind)}, {"n", std::to_string(ds_n)}},
               seed,
               max_threads(),
               {},
               {ds_out}};
    write_manifest(ds_out, m, timer.seconds());
  });

  // fit ----------------------------------------------------------------
  auto* cmd_fit = app.add_subcommand(
      "fit", "Fit the height vector so every cell carries equal mass");
  cmd_fit->fallthrough();
  std::string fit_data, fit_out = "model.json", fit_trace;
  SolverConfig fit_cfg;
  cmd_fit->add_option("data", fit_data, "Training dataset CSV")->required();
  cmd_fit->add_option("--out", fit_out, "Output model JSON")->capture_default_str();
  cmd_fit->add_option("--trace-out", fit_trace,
                      "Fit trace JSON (default <out>_trace.json)");
  cmd_fit->add_option("--lr", fit_cfg.learning_rate, "Adam step size")->capture_default_str();
  cmd_fit->add_option("--mc-init", fit_cfg.initial_mc_samples,
                      "Initial Monte-Carlo draws per iteration")->capture_default_str();
  cmd_fit->add_option("--patience", fit_cfg.patience,
                      "Stalled iterations before the draw count doubles")->capture_default_str();
  cmd_fit->add_option("--grad-tol", fit_cfg.grad_norm_tol,
                      "Gradient-norm stopping tolerance")->capture_default_str();
  cmd_fit->add_option("--max-iters", fit_cfg.max_iterations,
                      "Iteration budget")->capture_default_str();
  cmd_fit->callback([&] {
    Timer timer;
    set_max_threads(threads);
    if (fit_trace.empty()) fit_trace = with_tail(fit_out, "_trace.json");
    DatasetFile df = read_dataset_csv(fit_data);
    require(df.points.rows() >= 1, fit_data + ": no data rows");
    LatentCodes codes = LatentCodes::from_points(df.points);
    fit_cfg.seed = seed;
    NoiseSpec noise{static_cast<int>(codes.d()), seed};
    FitResult fit = fit_height_vector(codes, TargetMasses::uniform(codes.n()),
                                      noise, fit_cfg);
    write_model_json(fit_out, PotentialModel::make(codes, fit.heights));
    write_trace_json(fit_trace, fit.trace);
    if (!fit.trace.converged) {
      std::cerr << "fit: gradient norm " << fit.trace.final_grad_norm
                << " did not reach " << fit_cfg.grad_norm_tol << " within "
                << fit_cfg.max_iterations << " iterations\n";
      rc = 3;
    }
    Manifest m{"fit",
               {{"lr", format_double17(fit_cfg.learning_rate)},
                {"mc_init", std::to_string(fit_cfg.initial_mc_samples)},
                {"patience", std::to_string(fit_cfg.patience)},
                {"grad_tol", format_double17(fit_cfg.grad_norm_tol)},
                {"max_iters", std::to_string(fit_cfg.max_iterations)},
                {"converged", fit.trace.converged ? "true" : "false"}},
               seed,
               max_threads(),
               {fit_data},
               {fit_out, fit_trace}};
    write_manifest(fit_out, m, timer.seconds());
  });

  // generate -----------------------------------------------------------
  auto* cmd_generate = app.add_subcommand(
      "generate", "Sample the smoothed transport map of a fitted model");
  cmd_generate->fallthrough();
  std::string gen_model, gen_out = "generated.csv";
  double gen_eps = 0.0;
  std::int64_t gen_m = 256;
  bool gen_header = false;
  cmd_generate->add_option("model", gen_model, "Model JSON")->required();
  auto* gen_eps_opt = cmd_generate->add_option(
      "--epsilon", gen_eps,
      "Smoothing bound (defaults to the model's stored value)");
  cmd_generate->add_option("-m,--samples", gen_m, "Samples to generate")->capture_default_str();
  cmd_generate->add_option("--out", gen_out, "Output CSV")->capture_default_str();
  cmd_generate->add_flag("--csv-header", gen_header,
                         "Write an x1,...,xd header row");
  cmd_generate->callback([&] {
    Timer timer;
    set_max_threads(threads);
    PotentialModel model = read_model_json(gen_model);
    double eps;
    if (gen_eps_opt->count() > 0) {
      eps = gen_eps;
    } else {
      require(model.smoothing.has_value(),
              gen_model + " stores no epsilon; pass --epsilon");
      eps = model.smoothing->epsilon;
    }
    model.smoothing = SmoothingConfig::from_epsilon(eps, model.n());
    NoiseSpec noise{static_cast<int>(model.d()), seed};
    SampleBatch batch = generate_batch(model, noise, gen_m);
    write_batch_csv(gen_out, batch, gen_header);
    Manifest m{"generate",
               {{"epsilon", format_double17(eps)},
                {"m", std::to_string(gen_m)},
                {"csv_header", gen_header ? "true" : "false"}},
               seed,
               max_threads(),
               {gen_model},
               {gen_out}};
    write_manifest(gen_out, m, timer.seconds());
  });

  // tune ---------------------------------------------------------------
  auto* cmd_tune = app.add_subcommand(
      "tune", "Search the epsilon whose generated batch matches the data "
              "at significance alpha");
  cmd_tune->fallthrough();
  std::string tune_model, tune_data, tune_out = "tune.json", tune_batch;
  std::string tune_grid = "1e-6,1e-5,1e-4,1e-3,1e-2,0.1,1,10,100";
  TuneConfig tune_cfg;
  bool tune_header = false;
  cmd_tune->add_option("model", tune_model, "Model JSON")->required();
  cmd_tune->add_option("data", tune_data, "Observed dataset CSV")->required();
  cmd_tune->add_option("--alpha", tune_cfg.alpha, "Significance level")->capture_default_str();
  cmd_tune->add_option("--delta", tune_cfg.delta, "p-value tolerance")->capture_default_str();
  cmd_tune->add_option("--grid", tune_grid,
                       "Comma-separated ascending epsilon grid")->capture_default_str();
  cmd_tune->add_option("--permutations", tune_cfg.permutations,
                       "Permutations per test")->capture_default_str();
  cmd_tune->add_option("--max-refinements", tune_cfg.max_refinements,
                       "Bracket subdivision rounds")->capture_default_str();
  cmd_tune->add_option("--out", tune_out, "Search log JSON")->capture_default_str();
  cmd_tune->add_option("--batch-out", tune_batch,
                       "Generated batch CSV (default <out>_generated.csv)");
  cmd_tune->add_flag("--csv-header", tune_header,
                     "Write an x1,...,xd header row");
  cmd_tune->callback([&] {
    Timer timer;
    set_max_threads(threads);
    if (tune_batch.empty()) tune_batch = with_tail(tune_out, "_generated.csv");
    PotentialModel model = read_model_json(tune_model);
    DatasetFile df = read_dataset_csv(tune_data);
    tune_cfg.epsilon_grid = parse_grid(tune_grid);
    tune_cfg.seed = seed;
    NoiseSpec noise{static_cast<int>(model.d()), seed};
    TuneResult res =
        tune_epsilon(model.codes, model.heights, noise, df.points, tune_cfg);
    write_tune_result_json(tune_out, res, tune_cfg);

    Manifest m{"tune",
               {{"alpha", format_double17(tune_cfg.alpha)},
                {"delta", format_double17(tune_cfg.delta)},
                {"grid", jstr(tune_grid)},
                {"permutations", std::to_string(tune_cfg.permutations)},
                {"max_refinements", std::to_string(tune_cfg.max_refinements)},
                {"epsilon_opt", format_double17(res.epsilon_opt)},
                {"p_value", format_double17(res.report.p_value)}},
               seed,
               max_threads(),
               {tune_model, tune_data},
               {tune_out}};

    if (res.status == TuneStatus::unbracketed_above ||
        res.status == TuneStatus::unbracketed_below) {
      std::cerr << "tune: every p-value stayed "
                << (res.status == TuneStatus::unbracketed_above ? "above"
                                                                : "below")
                << " alpha; widen the grid "
                << (res.status == TuneStatus::unbracketed_above
                        ? "upward\n"
                        : "downward\n");
      rc = 4;
      write_manifest(tune_out, m, timer.seconds());
      return;
    }
    // Final batch at the chosen epsilon, from the substream after the last
    // trial so it is independent of every batch the search consumed.
    model.smoothing =
        SmoothingConfig::from_epsilon(res.epsilon_opt, model.n());
    NoiseSpec gen_noise{
        static_cast<int>(model.d()),
        derive_seed(tune_cfg.seed, StreamTag::tune,
                    static_cast<std::uint64_t>(res.trials.size()))};
    SampleBatch batch = generate_batch(model, gen_noise, df.points.rows());
    write_batch_csv(tune_batch, batch, tune_header);
    if (res.status == TuneStatus::not_within_tolerance)
      std::cerr << "tune: refinements exhausted; reporting the closest "
                   "p-value "
                << res.report.p_value << " at epsilon " << res.epsilon_opt
                << "\n";
    m.outputs.push_back(tune_batch);
    write_manifest(tune_out, m, timer.seconds());
  });

  // baseline -----------------------------------------------------------
  auto* cmd_baseline = app.add_subcommand(
      "baseline",
      "Piecewise-linear generation with angle-threshold rejection");
  cmd_baseline->fallthrough();
  std::string bl_model, bl_out = "baseline.csv", bl_summary;
  BaselineConfig bl_cfg;
  std::int64_t bl_m = 256;
  bool bl_header = false;
  cmd_baseline->add_option("model", bl_model, "Model JSON")->required();
  cmd_baseline
      ->add_option("--theta-hat", bl_cfg.theta_hat,
                   "Cosine rejection threshold in (0, 1]")
      ->required();
  cmd_baseline->add_option("-m,--samples", bl_m, "Accepted samples to collect")->capture_default_str();
  cmd_baseline->add_option("--out", bl_out, "Output CSV")->capture_default_str();
  cmd_baseline->add_option("--summary-out", bl_summary,
                           "Summary JSON (default <out>_summary.json)");
  cmd_baseline->add_flag("--csv-header", bl_header,
                         "Write an x1,...,xd header row");
  cmd_baseline->callback([&] {
    Timer timer;
    set_max_threads(threads);
    if (bl_summary.empty()) bl_summary = with_tail(bl_out, "_summary.json");
    PotentialModel model = read_model_json(bl_model);
    bl_cfg.seed = seed;
    NoiseSpec noise{static_cast<int>(model.d()), seed};
    CellCenters centers = estimate_cell_centers(model, noise, bl_cfg);
    BaselineBatch batch =
        baseline_generate_batch(model, centers, bl_cfg, bl_m, seed);
    write_batch_csv(bl_out, batch.points, bl_header);
    write_baseline_summary_json(bl_summary, batch, bl_cfg);
    if (batch.shortfall)
      std::cerr << "baseline: draw budget exhausted after "
                << batch.points.rows() << " of " << bl_m << " samples\n";
    Manifest m{"baseline",
               {{"theta_hat", format_double17(bl_cfg.theta_hat)},
                {"m", std::to_string(bl_m)},
                {"rejection_rate", format_double17(batch.rejection_rate)}},
               seed,
               max_threads(),
               {bl_model},
               {bl_out, bl_summary}};
    write_manifest(bl_out, m, timer.seconds());
  });

  // report -------------------------------------------------------------
  auto* cmd_report = app.add_subcommand(
      "report", "Mode coverage report and scatter overlay for a generated "
                "batch against its dataset");
  cmd_report->fallthrough();
  std::string rp_data, rp_gen, rp_svg = "report.svg", rp_json = "report.json";
  cmd_report->add_option("data", rp_data, "Dataset CSV (with mixture header)")
      ->required();
  cmd_report->add_option("generated", rp_gen, "Generated batch CSV")
      ->required();
  cmd_report->add_option("--svg-out", rp_svg, "Scatter overlay SVG")->capture_default_str();
  cmd_report->add_option("--json-out", rp_json, "Mode report JSON")->capture_default_str();
  cmd_report->callback([&] {
    Timer timer;
    set_max_threads(threads);
    DatasetFile df = read_dataset_csv(rp_data);
    require(df.spec.has_value(),
            rp_data + " lacks the mixture_spec header line");
    SampleBatch gen = read_batch_csv(rp_gen);
    ModeReport rep = mode_report(gen, *df.spec);
    write_mode_report_json(rp_json, rep);
    write_scatter_svg(rp_svg, df.points, gen);
    Manifest m{"report",
               {{"modes_covered", std::to_string(rep.modes_covered)},
                {"mixture_fraction",
                 format_double17(rep.mixture_fraction)}},
               seed,
               max_threads(),
               {rp_data, rp_gen},
               {rp_json, rp_svg}};
    write_manifest(rp_json, m, timer.seconds());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
