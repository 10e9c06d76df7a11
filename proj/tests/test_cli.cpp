// End-to-end checks of the cfid binary: subcommand wiring, file formats,
// exit codes and determinism. The binary path comes from the build system.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "cfid_cli_test";

int run(const std::string& args, std::string* output = nullptr) {
  const fs::path out_file = kWork / "cmd_output.txt";
  const std::string cmd =
      std::string(CFID_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Fixture {
  Fixture() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "generate, train, identify, register, evaluate, inspect") {
  // small corpus: 4 drivers, short sequences, cheap training settings
  std::string out;
  int rc = run("generate --preset easy4 --out " + (kWork / "corpus").string() +
                   " --seed 9 --sequences 12",
               &out);
  REQUIRE(rc == 0);
  CHECK(fs::exists(kWork / "corpus" / "D1" / "seq_0000.csv"));
  CHECK(fs::exists(kWork / "corpus" / "specs.json"));
  const json gen_cfg = json::parse(slurp(kWork / "corpus" / "resolved_config.json"));
  CHECK_FALSE(gen_cfg.at("tool_version").get<std::string>().empty());
  CHECK(gen_cfg.at("command") == "generate");

  rc = run("--version", &out);
  CHECK(rc == 0);
  CHECK(out.find(gen_cfg.at("tool_version").get<std::string>()) != std::string::npos);

  // train twice into separate directories: outputs must be byte-identical
  const std::string train_args =
      " --M 2 --Q 4 --T 15 --outer 3 --inner 4 --final-em 10 --seed 4 --data " +
      (kWork / "corpus").string();
  rc = run("train --out " + (kWork / "run1").string() + train_args, &out);
  REQUIRE(rc == 0);
  rc = run("train --out " + (kWork / "run2").string() + train_args, &out);
  REQUIRE(rc == 0);
  for (const char* name : {"model.json", "trace.csv", "contributions.csv", "features.csv"})
    CHECK(slurp(kWork / "run1" / name) == slurp(kWork / "run2" / name));
  CHECK(fs::exists(kWork / "run1" / "trace.svg"));
  CHECK(fs::exists(kWork / "run1" / "resolved_config.json"));
  CHECK(fs::exists(kWork / "run1" / "summary.json"));

  const std::string model = (kWork / "run1" / "model.json").string();

  // identify one of D2's own sequences; at these seeds the prediction is
  // correct (full-sequence evidence on a well-separated preset)
  rc = run("identify --model " + model + " " +
               (kWork / "corpus" / "D2" / "seq_0003.csv").string(),
           &out);
  REQUIRE(rc == 0);
  const json ident = json::parse(out);
  CHECK(ident.at("predicted").get<std::string>() == "D2");
  CHECK(ident.at("scores").size() == 4);
  CHECK(ident.at("n_sequences").get<int>() >= 1);

  // register a fresh driver from D4-like data
  rc = run("generate --preset easy4 --out " + (kWork / "newdriver_all").string() +
               " --seed 77 --sequences 6",
           &out);
  REQUIRE(rc == 0);
  fs::create_directories(kWork / "newdriver" / "DX");
  for (const auto& e : fs::directory_iterator(kWork / "newdriver_all" / "D4"))
    fs::copy_file(e.path(), kWork / "newdriver" / "DX" / e.path().filename());

  rc = run("register --model " + model + " --data " + (kWork / "newdriver").string() +
               " --id DX --out " + (kWork / "model_dx.json").string(),
           &out);
  REQUIRE(rc == 0);

  // the input model is untouched and the update only adds a profile
  CHECK(slurp(kWork / "run1" / "model.json") == slurp(kWork / "run2" / "model.json"));
  const json m0 = json::parse(slurp(kWork / "run1" / "model.json"));
  const json m1 = json::parse(slurp(kWork / "model_dx.json"));
  CHECK(m1.at("profiles").size() == 5);
  CHECK(m1.at("profiles").contains("DX"));
  CHECK(m0.at("A") == m1.at("A"));
  CHECK(m0.at("states") == m1.at("states"));
  CHECK(m0.at("standardizer") == m1.at("standardizer"));
  for (const auto& [id, omega] : m0.at("profiles").items())
    CHECK(m1.at("profiles").at(id) == omega);

  // identify with the updated model reports the new driver in the scores
  rc = run("identify --model " + (kWork / "model_dx.json").string() + " --dir " +
               (kWork / "newdriver" / "DX").string(),
           &out);
  REQUIRE(rc == 0);
  CHECK(json::parse(out).at("scores").contains("DX"));

  // evaluate writes a hash-named report directory with confusion and curve
  rc = run("evaluate --model " + model + " --data " + (kWork / "corpus").string() +
               " --out " + (kWork / "reports").string() + " --n 1 --n 3",
           &out);
  REQUIRE(rc == 0);
  fs::path report_dir;
  for (const auto& e : fs::directory_iterator(kWork / "reports"))
    if (e.is_directory()) report_dir = e.path();
  REQUIRE(!report_dir.empty());
  CHECK(fs::exists(report_dir / "confusion_n1.csv"));
  CHECK(fs::exists(report_dir / "confusion_n3.csv"));
  CHECK(fs::exists(report_dir / "accuracy.csv"));
  CHECK(fs::exists(report_dir / "accuracy.svg"));
  CHECK(fs::exists(report_dir / "resolved_config.json"));

  // inspect prints profiles and contributions
  rc = run("inspect --model " + model, &out);
  REQUIRE(rc == 0);
  CHECK(out.find("feature contributions") != std::string::npos);
  CHECK(out.find("driver profiles") != std::string::npos);
  CHECK(out.find("harmonic_mean_ttc") != std::string::npos);

  // a run directory reproduces itself: --config resolved_config.json
  rc = run("train --config " + (kWork / "run1" / "resolved_config.json").string() +
               " --data " + (kWork / "corpus").string() + " --out " +
               (kWork / "run3").string(),
           &out);
  REQUIRE(rc == 0);
  CHECK(slurp(kWork / "run1" / "model.json") == slurp(kWork / "run3" / "model.json"));
  CHECK(slurp(kWork / "run1" / "trace.csv") == slurp(kWork / "run3" / "trace.csv"));
}

TEST_CASE_FIXTURE(Fixture, "sweep subcommand writes grid reports") {
  std::string out;
  int rc = run("generate --preset easy4 --out " + (kWork / "corpus").string() +
                   " --seed 2 --sequences 8",
               &out);
  REQUIRE(rc == 0);

  std::ofstream grid(kWork / "grid.json");
  grid << R"({"axes":[{"name":"Q","values":[2,4]}],"repetitions":1,"seed":5})";
  grid.close();

  rc = run("sweep --grid " + (kWork / "grid.json").string() + " --data " +
               (kWork / "corpus").string() + " --train-fraction 0.75 --out " +
               (kWork / "reports").string() +
               " --M 2 --T 15 --outer 1 --inner 3 --final-em 5",
           &out);
  REQUIRE(rc == 0);
  fs::path report_dir;
  for (const auto& e : fs::directory_iterator(kWork / "reports"))
    if (e.is_directory()) report_dir = e.path();
  REQUIRE(!report_dir.empty());
  const std::string csv = slurp(report_dir / "sweep.csv");
  CHECK(csv.find("train_accuracy") != std::string::npos);
  CHECK(csv.find("test_accuracy") != std::string::npos);
  CHECK(fs::exists(report_dir / "sweep.svg"));
}

TEST_CASE_FIXTURE(Fixture, "exit codes distinguish validation from success") {
  std::string out;
  CHECK(run("identify --model /nonexistent.json input.csv", &out) == 2);
  CHECK(out.find("error: validation:") != std::string::npos);

  CHECK(run("generate --preset bogus --out " + (kWork / "x").string(), &out) == 2);

  // unknown flags and missing subcommands are validation failures
  CHECK(run("--definitely-not-a-flag", &out) == 2);
  CHECK(run("train --data /nonexistent --out " + (kWork / "y").string(), &out) == 2);

  // corrupt model file
  std::ofstream bad(kWork / "bad.json");
  bad << "{\"format\": \"other\"}";
  bad.close();
  CHECK(run("inspect --model " + (kWork / "bad.json").string(), &out) == 2);
}
