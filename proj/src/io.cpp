#include "otsmooth/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace otsmooth {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require(out.is_open(), "cannot write " + path);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  require(in.is_open(), "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& text, const std::string& path) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInputError(path + ": " + e.what());
  }
}

// Writers build the document by hand so field order and number formatting
// (%.17g) are pinned down; nlohmann is used on the reading side only.
void append_row(std::string& out, const Eigen::RowVectorXd& row) {
  out += '[';
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    if (c) out += ',';
    out += format_double17(row(c));
  }
  out += ']';
}

std::string vector_json(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double17(v(i));
  }
  out += ']';
  return out;
}

std::string matrix_json(const Eigen::MatrixXd& m) {
  std::string out = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out += ',';
    append_row(out, m.row(r));
  }
  out += ']';
  return out;
}

double field_double(const json& j, const char* key, const std::string& path) {
  require(j.contains(key), path + ": missing field " + key);
  require(j[key].is_number(), path + ": field " + key + " must be a number");
  return j[key].get<double>();
}

// Indices 0, stride, 2*stride, ... plus the final element, giving at most
// 1000 entries for any history length.
std::vector<size_t> downsample_indices(size_t len) {
  std::vector<size_t> idx;
  if (len == 0) return idx;
  const size_t stride = (len + 998) / 999;
  for (size_t i = 0; i < len; i += stride) idx.push_back(i);
  if (idx.back() != len - 1) idx.push_back(len - 1);
  return idx;
}

}  // namespace

std::string format_double17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_model_json(const std::string& path, const PotentialModel& model) {
  std::string doc = "{\n";
  doc += "  \"n\": " + std::to_string(model.n()) + ",\n";
  doc += "  \"d\": " + std::to_string(model.d()) + ",\n";
  doc += "  \"codes\": " + matrix_json(model.codes.points) + ",\n";
  doc += "  \"heights\": " + vector_json(model.heights) + ",\n";
  doc += "  \"epsilon\": ";
  doc += model.smoothing ? format_double17(model.smoothing->epsilon) : "null";
  doc += "\n}\n";
  open_out(path) << doc;
}

PotentialModel read_model_json(const std::string& path) {
  const json j = parse_json(slurp(path), path);
  require(j.is_object(), path + ": expected a JSON object");
  for (const char* key : {"n", "d", "codes", "heights", "epsilon"})
    require(j.contains(key), path + ": missing field " + std::string(key));

  const auto n = j["n"].get<Eigen::Index>();
  const auto d = j["d"].get<Eigen::Index>();
  require(n >= 1 && d >= 1, path + ": n and d must be positive");
  require(j["codes"].is_array() &&
              j["codes"].size() == static_cast<size_t>(n),
          path + ": codes must hold n rows");

  Eigen::MatrixXd codes(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j["codes"][static_cast<size_t>(r)];
    require(row.is_array() && row.size() == static_cast<size_t>(d),
            path + ": code rows must hold d numbers");
    for (Eigen::Index c = 0; c < d; ++c)
      codes(r, c) = row[static_cast<size_t>(c)].get<double>();
  }
  require(j["heights"].is_array() &&
              j["heights"].size() == static_cast<size_t>(n),
          path + ": heights must hold n numbers");
  Eigen::VectorXd heights(n);
  for (Eigen::Index i = 0; i < n; ++i)
    heights(i) = j["heights"][static_cast<size_t>(i)].get<double>();

  std::optional<SmoothingConfig> smoothing;
  if (!j["epsilon"].is_null())
    smoothing =
        SmoothingConfig::from_epsilon(field_double(j, "epsilon", path), n);
  try {
    return PotentialModel::make(LatentCodes::from_points(std::move(codes)),
                                std::move(heights), smoothing);
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(path + ": " + e.what());
  }
}

void write_batch_csv(const std::string& path, const SampleBatch& batch,
                     bool header) {
  std::string doc;
  if (header) {
    for (Eigen::Index c = 0; c < batch.cols(); ++c) {
      if (c) doc += ',';
      doc += 'x' + std::to_string(c + 1);
    }
    doc += '\n';
  }
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    for (Eigen::Index c = 0; c < batch.cols(); ++c) {
      if (c) doc += ',';
      doc += format_double17(batch(r, c));
    }
    doc += '\n';
  }
  open_out(path) << doc;
}

namespace {

// Shared by the two CSV readers: parses data rows, skipping '#' comments and
// at most one leading header row. Comment lines are handed to `on_comment`.
template <typename CommentFn>
SampleBatch read_csv_rows(const std::string& path, CommentFn on_comment) {
  std::ifstream in(path);
  require(in.is_open(), "cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  bool saw_data = false;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      on_comment(line);
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool bad = false;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) bad = true;
      } catch (const std::exception&) {
        bad = true;
      }
      if (bad) break;
    }
    if (bad) {
      // A single non-numeric row before any data is the optional header.
      if (!saw_data && rows.empty()) continue;
      throw InvalidInputError(path + ":" + std::to_string(lineno) +
                              ": malformed number");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidInputError(path + ":" + std::to_string(lineno) +
                              ": inconsistent column count");
    rows.push_back(std::move(row));
    saw_data = true;
  }

  SampleBatch batch(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c)
      batch(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
  return batch;
}

constexpr const char* kSpecPrefix = "# mixture_spec ";

}  // namespace

SampleBatch read_batch_csv(const std::string& path) {
  return read_csv_rows(path, [](const std::string&) {});
}

void write_dataset_csv(const std::string& path, const SampleBatch& batch,
                       const MixtureSpec& spec) {
  std::string doc = kSpecPrefix;
  doc += "{\"mode_centers\":" + matrix_json(spec.mode_centers);
  doc += ",\"mode_std\":" + format_double17(spec.mode_std);
  doc += ",\"n_samples\":" + std::to_string(spec.n_samples);
  doc += ",\"seed\":" + std::to_string(spec.seed);
  doc += "}\n";
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    for (Eigen::Index c = 0; c < batch.cols(); ++c) {
      if (c) doc += ',';
      doc += format_double17(batch(r, c));
    }
    doc += '\n';
  }
  open_out(path) << doc;
}

DatasetFile read_dataset_csv(const std::string& path) {
  DatasetFile out;
  std::string spec_line;
  out.points = read_csv_rows(path, [&](const std::string& comment) {
    if (comment.rfind(kSpecPrefix, 0) == 0)
      spec_line = comment.substr(std::string(kSpecPrefix).size());
  });
  if (spec_line.empty()) return out;

  const json j = parse_json(spec_line, path);
  MixtureSpec spec;
  require(j.contains("mode_centers") && j["mode_centers"].is_array(),
          path + ": mixture_spec needs mode_centers");
  const auto k = static_cast<Eigen::Index>(j["mode_centers"].size());
  require(k >= 1, path + ": mixture_spec needs at least one mode");
  const auto d =
      static_cast<Eigen::Index>(j["mode_centers"][0].size());
  spec.mode_centers.resize(k, d);
  for (Eigen::Index r = 0; r < k; ++r) {
    const json& row = j["mode_centers"][static_cast<size_t>(r)];
    require(row.is_array() && row.size() == static_cast<size_t>(d),
            path + ": ragged mode_centers");
    for (Eigen::Index c = 0; c < d; ++c)
      spec.mode_centers(r, c) = row[static_cast<size_t>(c)].get<double>();
  }
  spec.mode_std = field_double(j, "mode_std", path);
  if (j.contains("n_samples")) spec.n_samples = j["n_samples"].get<std::int64_t>();
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  out.spec = std::move(spec);
  return out;
}

void write_trace_json(const std::string& path, const FitTrace& trace) {
  const auto idx = downsample_indices(trace.grad_norm_history.size());
  std::string doc = "{\n";
  doc += "  \"iterations\": " + std::to_string(trace.iterations) + ",\n";
  doc += "  \"converged\": " + std::string(trace.converged ? "true" : "false") + ",\n";
  doc += "  \"final_grad_norm\": " + format_double17(trace.final_grad_norm) + ",\n";
  doc += "  \"mc_samples_final\": " + std::to_string(trace.mc_samples_final) + ",\n";
  doc += "  \"mc_cap_hit\": " + std::string(trace.mc_cap_hit ? "true" : "false") + ",\n";
  doc += "  \"history_iterations\": [";
  for (size_t i = 0; i < idx.size(); ++i) {
    if (i) doc += ',';
    doc += std::to_string(idx[i] + 1);  // iteration counter is 1-based
  }
  doc += "],\n  \"grad_norm_history\": [";
  for (size_t i = 0; i < idx.size(); ++i) {
    if (i) doc += ',';
    doc += format_double17(trace.grad_norm_history[idx[i]]);
  }
  doc += "],\n  \"mc_samples_history\": [";
  for (size_t i = 0; i < idx.size(); ++i) {
    if (i) doc += ',';
    doc += std::to_string(
        idx[i] < trace.mc_samples_history.size()
            ? trace.mc_samples_history[idx[i]]
            : 0);
  }
  doc += "]\n}\n";
  open_out(path) << doc;
}

void write_test_report_json(const std::string& path,
                            const TestReport& report) {
  std::string doc = "{\n";
  doc += "  \"statistic\": " + format_double17(report.statistic) + ",\n";
  doc += "  \"p_value\": " + format_double17(report.p_value) + ",\n";
  doc += "  \"permutations\": " + std::to_string(report.permutations) + ",\n";
  doc += "  \"sigma_used\": " + format_double17(report.sigma_used) + ",\n";
  doc += "  \"seed\": " + std::to_string(report.seed) + "\n";
  doc += "}\n";
  open_out(path) << doc;
}

void write_mode_report_json(const std::string& path,
                            const ModeReport& report) {
  std::string doc = "{\n";
  doc += "  \"modes_covered\": " + std::to_string(report.modes_covered) + ",\n";
  doc += "  \"per_mode_counts\": [";
  for (size_t i = 0; i < report.per_mode_counts.size(); ++i) {
    if (i) doc += ',';
    doc += std::to_string(report.per_mode_counts[i]);
  }
  doc += "],\n";
  doc += "  \"high_quality_fraction\": " +
         format_double17(report.high_quality_fraction) + ",\n";
  doc += "  \"mixture_fraction\": " +
         format_double17(report.mixture_fraction) + "\n";
  doc += "}\n";
  open_out(path) << doc;
}

namespace {

const char* tune_status_name(TuneStatus s) {
  switch (s) {
    case TuneStatus::ok: return "ok";
    case TuneStatus::not_within_tolerance: return "not_within_tolerance";
    case TuneStatus::unbracketed_above: return "unbracketed_above";
    case TuneStatus::unbracketed_below: return "unbracketed_below";
  }
  return "unknown";
}

}  // namespace

void write_tune_result_json(const std::string& path, const TuneResult& result,
                            const TuneConfig& cfg) {
  std::string doc = "{\n";
  doc += "  \"status\": \"" + std::string(tune_status_name(result.status)) + "\",\n";
  doc += "  \"epsilon_opt\": " + format_double17(result.epsilon_opt) + ",\n";
  doc += "  \"alpha\": " + format_double17(cfg.alpha) + ",\n";
  doc += "  \"delta\": " + format_double17(cfg.delta) + ",\n";
  doc += "  \"permutations\": " + std::to_string(cfg.permutations) + ",\n";
  doc += "  \"report\": {\"statistic\": " + format_double17(result.report.statistic);
  doc += ", \"p_value\": " + format_double17(result.report.p_value);
  doc += ", \"permutations\": " + std::to_string(result.report.permutations);
  doc += ", \"sigma_used\": " + format_double17(result.report.sigma_used);
  doc += ", \"seed\": " + std::to_string(result.report.seed) + "},\n";
  doc += "  \"trials\": [\n";
  for (size_t i = 0; i < result.trials.size(); ++i) {
    const TuneTrial& t = result.trials[i];
    doc += "    {\"epsilon\": " + format_double17(t.epsilon);
    doc += ", \"statistic\": " + format_double17(t.statistic);
    doc += ", \"p_value\": " + format_double17(t.p_value);
    doc += ", \"seed\": " + std::to_string(t.seed) + "}";
    if (i + 1 < result.trials.size()) doc += ',';
    doc += '\n';
  }
  doc += "  ]\n}\n";
  open_out(path) << doc;
}

void write_baseline_summary_json(const std::string& path,
                                 const BaselineBatch& batch,
                                 const BaselineConfig& cfg) {
  std::string doc = "{\n";
  doc += "  \"theta_hat\": " + format_double17(cfg.theta_hat) + ",\n";
  doc += "  \"mc_samples_for_centers\": " +
         std::to_string(cfg.mc_samples_for_centers) + ",\n";
  doc += "  \"accepted\": " + std::to_string(batch.points.rows()) + ",\n";
  doc += "  \"draws\": " + std::to_string(batch.draws) + ",\n";
  doc += "  \"rejection_rate\": " + format_double17(batch.rejection_rate) + ",\n";
  doc += "  \"shortfall\": " + std::string(batch.shortfall ? "true" : "false") + ",\n";
  doc += "  \"zero_code_warnings\": " +
         std::to_string(batch.zero_code_warnings) + "\n";
  doc += "}\n";
  open_out(path) << doc;
}

namespace {

std::string svg_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void append_points(std::string& doc, const SampleBatch& batch,
                   const char* fill) {
  doc += "  <g fill=\"";
  doc += fill;
  doc += "\" fill-opacity=\"0.75\">\n";
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    // SVG y runs downward; negate to keep the mathematical orientation.
    doc += "    <circle cx=\"" + svg_coord(batch(r, 0)) + "\" cy=\"" +
           svg_coord(-batch(r, 1)) + "\" r=\"0.015\"/>\n";
  }
  doc += "  </g>\n";
}

}  // namespace

void write_scatter_svg(const std::string& path, const SampleBatch& observed,
                       const SampleBatch& generated) {
  require(observed.rows() == 0 || observed.cols() == 2,
          "scatter plots are 2D only");
  require(generated.rows() == 0 || generated.cols() == 2,
          "scatter plots are 2D only");
  std::string doc =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
      "viewBox=\"-1.1 -1.1 2.2 2.2\">\n";
  doc += "  <rect x=\"-1.1\" y=\"-1.1\" width=\"2.2\" height=\"2.2\" "
         "fill=\"#ffffff\"/>\n";
  append_points(doc, observed, "#e6862d");   // observed: orange, below
  append_points(doc, generated, "#2d9e4f");  // generated: green, on top
  doc += "</svg>\n";
  open_out(path) << doc;
}

}  // namespace otsmooth
