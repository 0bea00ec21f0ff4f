#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "otsmooth/io.hpp"
#include "test_util.hpp"

// End-to-end checks of the command-line binary, located via the OTSMOOTH_BIN
// environment variable the test harness sets.

using namespace otsmooth;
namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("OTSMOOTH_BIN");
  REQUIRE_MESSAGE(b != nullptr, "OTSMOOTH_BIN must point at the binary");
  return b;
}

fs::path scratch() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("otsmooth_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string where(const std::string& name) {
  return (scratch() / name).string();
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.is_open(), ("missing file: " + path).c_str());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Small centered-height model fixture written through the library writers.
std::string ring_model(const std::string& name, Eigen::Index n,
                       std::optional<double> epsilon) {
  auto ring = make_ring(n, 5);
  std::optional<SmoothingConfig> sc;
  if (epsilon) sc = SmoothingConfig::from_epsilon(*epsilon, n);
  auto model = PotentialModel::make(LatentCodes::from_points(ring.points),
                                    Eigen::VectorXd::Zero(n), sc);
  const std::string path = where(name);
  write_model_json(path, model);
  return path;
}

}  // namespace

TEST_CASE("cli: help and bad invocations") {
  CHECK(run("--help") == 0);
  CHECK(run("generate --help") == 0);
  CHECK(run("") == 2);                    // a subcommand is required
  CHECK(run("--no-such-flag") == 2);
  CHECK(run("dataset torus") == 2);       // kind must be ring or grid
  CHECK(run("generate " + where("no_such_model.json")) == 2);
}

TEST_CASE("cli: dataset synthesis with manifest") {
  const std::string out = where("ring64.csv");
  REQUIRE(run("--seed 11 dataset ring -n 64 --out " + out) == 0);
  DatasetFile df = read_dataset_csv(out);
  CHECK(df.points.rows() == 64);
  REQUIRE(df.spec.has_value());
  CHECK(df.spec->mode_centers.rows() == 8);
  REQUIRE(fs::exists(out + ".manifest.json"));
  auto manifest = nlohmann::json::parse(slurp(out + ".manifest.json"));
  CHECK(manifest["command"] == "dataset");
  CHECK(manifest["seed"] == 11);
  CHECK(manifest["outputs"][0] == out);

  const std::string again = where("ring64_again.csv");
  REQUIRE(run("--seed 11 dataset ring -n 64 --out " + again) == 0);
  CHECK(slurp(out) == slurp(again));

  const std::string other = where("ring64_other.csv");
  REQUIRE(run("--seed 12 dataset ring -n 64 --out " + other) == 0);
  CHECK(slurp(out) != slurp(other));
}

TEST_CASE("cli: seed env fallback matches the flag") {
  const std::string by_flag = where("seed_flag.csv");
  REQUIRE(run("--seed 77 dataset grid -n 50 --out " + by_flag) == 0);

  const std::string by_env = where("seed_env.csv");
  ::setenv("OTSMOOTH_SEED", "77", 1);
  REQUIRE(run("dataset grid -n 50 --out " + by_env) == 0);
  ::unsetenv("OTSMOOTH_SEED");
  CHECK(slurp(by_flag) == slurp(by_env));
}

TEST_CASE("cli: fit a one-point dataset exactly") {
  const std::string data = where("one_point.csv");
  std::ofstream(data) << "0.25,0.5\n";
  const std::string model_path = where("one_point_model.json");
  REQUIRE(run("fit " + data + " --out " + model_path) == 0);

  PotentialModel model = read_model_json(model_path);
  CHECK(model.n() == 1);
  CHECK(model.heights(0) == 0.0);
  CHECK_FALSE(model.smoothing.has_value());

  auto trace = nlohmann::json::parse(slurp(where("one_point_model_trace.json")));
  CHECK(trace["converged"] == true);
  CHECK(trace["final_grad_norm"].get<double>() == 0.0);
}

TEST_CASE("cli: fit that cannot converge exits 3 but writes the model") {
  const std::string data = where("two_point.csv");
  std::ofstream(data) << "0.5,0.5\n0.6,0.4\n";
  const std::string model_path = where("two_point_model.json");
  CHECK(run("fit " + data + " --out " + model_path + " --max-iters 1") == 3);
  CHECK(fs::exists(model_path));
  auto trace = nlohmann::json::parse(slurp(where("two_point_model_trace.json")));
  CHECK(trace["converged"] == false);
  CHECK(trace["iterations"] == 1);
}

TEST_CASE("cli: generate from a model") {
  const std::string model_path = ring_model("gen_model.json", 8, std::nullopt);
  const std::string out = where("generated7.csv");
  REQUIRE(run("--seed 3 generate " + model_path + " --epsilon 0.5 -m 7 --out " +
              out) == 0);
  SampleBatch batch = read_batch_csv(out);
  CHECK(batch.rows() == 7);
  CHECK(batch.cols() == 2);

  // Negative epsilon, missing epsilon, and m = 0 paths.
  CHECK(run("generate " + model_path + " --epsilon -1 -m 4 --out " +
            where("neg.csv")) == 2);
  CHECK(run("generate " + model_path + " -m 4 --out " + where("noeps.csv")) ==
        2);
  const std::string empty = where("empty_gen.csv");
  REQUIRE(run("generate " + model_path + " --epsilon 0.5 -m 0 --out " + empty) ==
          0);
  CHECK(read_batch_csv(empty).rows() == 0);

  // A stored epsilon is used when the flag is absent.
  const std::string stored = ring_model("gen_model_eps.json", 8, 0.25);
  const std::string out2 = where("generated_stored.csv");
  REQUIRE(run("--seed 3 generate " + stored + " -m 5 --out " + out2) == 0);
  CHECK(read_batch_csv(out2).rows() == 5);

  // Header flag.
  const std::string with_header = where("generated_header.csv");
  REQUIRE(run("--seed 3 generate " + model_path +
              " --epsilon 0.5 -m 2 --csv-header --out " + with_header) == 0);
  CHECK(slurp(with_header).rfind("x1,x2\n", 0) == 0);
}

TEST_CASE("cli: thread count does not change the generated bytes") {
  const std::string model_path = ring_model("thr_model.json", 8, std::nullopt);
  const std::string one = where("thr_one.csv");
  const std::string def = where("thr_def.csv");
  REQUIRE(run("--seed 9 --threads 1 generate " + model_path +
              " --epsilon 0.1 -m 300 --out " + one) == 0);
  REQUIRE(run("--seed 9 generate " + model_path +
              " --epsilon 0.1 -m 300 --out " + def) == 0);
  CHECK(slurp(one) == slurp(def));
}

TEST_CASE("cli: unbracketed tune exits 4 with a search log") {
  const std::string data = where("tune_data.csv");
  REQUIRE(run("--seed 21 dataset ring -n 16 --out " + data) == 0);
  DatasetFile df = read_dataset_csv(data);
  auto model = PotentialModel::make(LatentCodes::from_points(df.points),
                                    Eigen::VectorXd::Zero(16), std::nullopt);
  const std::string model_path = where("tune_model.json");
  write_model_json(model_path, model);

  const std::string out = where("tune_result.json");
  CHECK(run("--seed 21 tune " + model_path + " " + data +
            " --grid 1e-6 --permutations 50 --out " + out) == 4);
  auto j = nlohmann::json::parse(slurp(out));
  CHECK(j["status"] == "unbracketed_above");
  CHECK(j["trials"].size() == 1);

  CHECK(run("tune " + model_path + " " + data + " --grid 1,0.5 --out " +
            where("bad_grid.json")) == 2);
}

TEST_CASE("cli: baseline generation and summary") {
  const std::string model_path = ring_model("bl_model.json", 8, std::nullopt);
  const std::string out = where("baseline16.csv");
  REQUIRE(run("--seed 4 baseline " + model_path + " --theta-hat 1 -m 16 --out " +
              out) == 0);
  CHECK(read_batch_csv(out).rows() == 16);
  auto j = nlohmann::json::parse(slurp(where("baseline16_summary.json")));
  CHECK(j["rejection_rate"].get<double>() == 0.0);
  CHECK(j["accepted"] == 16);
  CHECK(j["shortfall"] == false);

  CHECK(run("baseline " + model_path + " --theta-hat 0 -m 4 --out " +
            where("bl_bad.csv")) == 2);
  CHECK(run("baseline " + model_path + " -m 4 --out " + where("bl_miss.csv")) ==
        2);  // --theta-hat is required
}

TEST_CASE("cli: coverage report with scatter overlay") {
  const std::string data = where("report_data.csv");
  REQUIRE(run("--seed 6 dataset ring -n 64 --out " + data) == 0);
  const std::string model_path = ring_model("report_model.json", 8, std::nullopt);
  const std::string gen = where("report_gen.csv");
  REQUIRE(run("--seed 6 generate " + model_path + " --epsilon 0.01 -m 64 --out " +
              gen) == 0);

  const std::string svg = where("report.svg");
  const std::string rj = where("report.json");
  REQUIRE(run("report " + data + " " + gen + " --svg-out " + svg +
              " --json-out " + rj) == 0);
  auto j = nlohmann::json::parse(slurp(rj));
  CHECK(j["modes_covered"].get<int>() >= 1);
  CHECK(j["per_mode_counts"].size() == 8);
  const std::string svg_text = slurp(svg);
  CHECK(svg_text.find("viewBox=\"-1.1 -1.1 2.2 2.2\"") != std::string::npos);

  const std::string svg2 = where("report2.svg");
  REQUIRE(run("report " + data + " " + gen + " --svg-out " + svg2 +
              " --json-out " + where("report2.json")) == 0);
  CHECK(svg_text == slurp(svg2));

  // Plain batch CSVs carry no mixture description to report against.
  CHECK(run("report " + gen + " " + gen + " --svg-out " + where("bad.svg") +
            " --json-out " + where("bad.json")) == 2);
}
