#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfid/report.hpp"

using namespace cfid;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TmpDir {
  fs::path path = fs::temp_directory_path() / "cfid_report_test";
  TmpDir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("trace CSV carries the documented columns and rows") {
  TmpDir tmp;
  TrainingTrace trace;
  trace.rows = {{0, 10.5, 0.4, 0.05, true}, {1, 9.25, 0.5, 0.055, true},
                {2, 9.5, 0.5, 0.0275, false}};
  write_trace_csv(tmp.path / "trace.csv", trace);
  const std::string text = slurp(tmp.path / "trace.csv");
  CHECK(text.rfind("iter,loss,train_acc,lr,is_best\n", 0) == 0);
  CHECK(text.find("\n0,10.5,") != std::string::npos);
  CHECK(text.find(",1\n") != std::string::npos);
  CHECK(text.find(",0\n") != std::string::npos);

  write_trace_svg(tmp.path / "trace.svg", trace);
  const std::string svg = slurp(tmp.path / "trace.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("contribution and confusion reports") {
  TmpDir tmp;
  Vector8 c;
  c << 0.5, 0.0, 0.25, 0.0, 0.0, 1.0, 0.25, 0.0;
  write_contributions_csv(tmp.path / "c.csv", c);
  const std::string text = slurp(tmp.path / "c.csv");
  CHECK(text.find("harmonic_mean_ttc,1\n") != std::string::npos);
  write_contributions_svg(tmp.path / "c.svg", c);
  CHECK(slurp(tmp.path / "c.svg").find("<rect") != std::string::npos);

  ConfusionMatrix cm;
  cm.labels = {"D1", "D2"};
  cm.counts = Eigen::MatrixXi(2, 2);
  cm.counts << 8, 2, 3, 7;
  write_confusion_csv(tmp.path / "cm.csv", cm);
  const std::string cmtext = slurp(tmp.path / "cm.csv");
  CHECK(cmtext.find("D1,8,2,0.8000") != std::string::npos);
  CHECK(cmtext.find("D2,3,7,0.7000") != std::string::npos);
}

TEST_CASE("hash_hex is stable and content-sensitive") {
  CHECK(hash_hex("abc") == hash_hex("abc"));
  CHECK(hash_hex("abc") != hash_hex("abd"));
  CHECK(hash_hex("").size() == 16);
}

TEST_CASE("sweep report layout mirrors the accuracy tables") {
  TmpDir tmp;
  SweepResult result;
  result.spec.axes = {{"Q", {8.0, 16.0}}, {"M", {2.0, 4.0}}};
  result.spec.repetitions = 1;
  for (double q : {8.0, 16.0})
    for (double m : {2.0, 4.0}) {
      SweepCell cell;
      cell.coords = {q, m};
      cell.train_accs = {0.5 + 0.01 * q};
      cell.test_accs = {0.4 + 0.01 * m};
      result.cells.push_back(cell);
    }
  write_sweep_csv(tmp.path / "sweep.csv", result);
  const std::string text = slurp(tmp.path / "sweep.csv");
  CHECK(text.find("train_accuracy") != std::string::npos);
  CHECK(text.find("test_accuracy") != std::string::npos);
  CHECK(text.find("Q\\M,2,4") != std::string::npos);
  write_sweep_svg(tmp.path / "sweep.svg", result);
  CHECK(slurp(tmp.path / "sweep.svg").find("mean test accuracy") != std::string::npos);
}
