#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "opgd/cli.hpp"
#include "opgd/io.hpp"
#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace opgd;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

const std::string kVowel = std::string(OPGD_DATA_DIR) + "/vowel_train.csv";

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string value_of(const std::string& report, const std::string& key) {
  std::istringstream in(report);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  return {};
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::size_t count_fields(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("opgd_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("fit then predict reproduces the training error") {
  TempDir dir;
  const Run fit = run({"fit", "--data", kVowel, "--labels", "y", "--group", "speaker", "--dim", "2",
                       "--max-iters", "40", "--out", dir / "model.json"});
  REQUIRE(fit.code == cli::kOk);
  CHECK(fs::exists(dir / "model.json"));
  CHECK(fs::exists(dir / "model.json.manifest.json"));
  const Run pred = run({"predict", "--data", kVowel, "--labels", "y", "--group", "speaker", "--model",
                        dir / "model.json", "--out", dir / "pred.csv"});
  REQUIRE(pred.code == cli::kOk);
  const std::string trained = value_of(fit.out, "training_error");
  CHECK_FALSE(trained.empty());
  CHECK(value_of(pred.out, "error") == trained);
  const auto rows = lines(dir / "pred.csv");
  CHECK(rows.size() == 529);
  CHECK(count_fields(rows[0]) == 12);
  CHECK(rows[0].rfind("label,p_1,", 0) == 0);
}

TEST_CASE("features writes coordinates with the requested width") {
  TempDir dir;
  for (const std::string method : {"opgd", "lda", "save"}) {
    const std::string out = dir / method;
    const Run r = run({"features", "--data", kVowel, "--labels", "y", "--group", "speaker", "--dim", "2",
                       "--method", method, "--max-iters", "20", "--out", out});
    REQUIRE(r.code == cli::kOk);
    const auto coords = lines(fs::path(out) / "coordinates.csv");
    CHECK(coords.size() == 529);
    CHECK(coords[0] == "v1,v2,label");
    CHECK(count_fields(coords[10]) == 3);
    const auto proj = lines(fs::path(out) / "projection.csv");
    CHECK(proj.size() == 11);
    CHECK(fs::exists(fs::path(out) / "manifest.json"));
    CHECK(fs::exists(fs::path(out) / "model.json") == (method == "opgd"));
  }
}

TEST_CASE("cluster writes labels and metrics") {
  TempDir dir;
  const ts::Labeled syn = ts::three_cluster_synthetic(7);
  {
    std::ofstream f(dir / "syn.csv");
    f << "a,b,c,d,e,truth\n";
    for (Index i = 0; i < syn.X.rows(); ++i) {
      for (Index j = 0; j < 5; ++j) f << io::format_double(syn.X(i, j)) << ",";
      f << syn.y[static_cast<std::size_t>(i)] << "\n";
    }
  }
  const Run r = run({"cluster", "--data", dir / "syn.csv", "--labels", "truth", "--k", "3", "--dim", "2", "--out",
                     dir / "clu"});
  REQUIRE(r.code == cli::kOk);
  CHECK_FALSE(value_of(r.out, "ari_enhanced").empty());
  CHECK_FALSE(value_of(r.out, "nmi_enhanced").empty());
  const auto labels = lines(dir / "clu/labels.csv");
  CHECK(labels.size() == 151);
  CHECK(labels[0] == "initial,enhanced,truth");
  for (const char* f : {"gmm.json", "projected_gmm.json", "projection.csv", "coordinates.csv", "metrics.csv"})
    CHECK(fs::exists(fs::path(dir / "clu") / f));

  const Run again = run({"cluster", "--data", dir / "syn.csv", "--labels", "truth", "--gmm", dir / "clu/gmm.json",
                         "--dim", "2", "--out", dir / "clu2"});
  CHECK(again.code == cli::kOk);
  CHECK(io::read_file(dir / "clu/labels.csv") == io::read_file(dir / "clu2/labels.csv"));
}

TEST_CASE("evaluate writes a results table") {
  TempDir dir;
  const Run r = run({"evaluate", "--data", kVowel, "--labels", "y", "--group", "speaker", "--method", "lda,rda",
                     "--repeats", "2", "--seed", "1", "--out", dir / "ev"});
  REQUIRE(r.code == cli::kOk);
  const auto rows = lines(dir / "ev/results.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "protocol,repeat,method,hyper,selection_error,test_error");
  CHECK(rows[1].rfind("split,0,lda,", 0) == 0);
}

TEST_CASE("gradcheck passes on its random suite") {
  const Run r = run({"gradcheck", "--instances", "25", "--seed", "3"});
  CHECK(r.code == cli::kOk);
  CHECK(std::stod(value_of(r.out, "max_rel_error")) < 1e-5);
  const cli::GradcheckReport rep = cli::gradcheck_suite(25, 3, 1e-5);
  CHECK(rep.failures == 0);
  CHECK(rep.cluster_failures == 0);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(run({}).code == cli::kConfig);
  CHECK(run({"frobnicate"}).code == cli::kConfig);
  CHECK(run({"fit", "--data", kVowel, "--labels", "y", "--out", dir / "m.json"}).code == cli::kConfig);
  CHECK(run({"fit", "--data", kVowel, "--labels", "y", "--dim", "99", "--out", dir / "m.json"}).code ==
        cli::kConfig);
  CHECK(run({"fit", "--data", kVowel, "--labels", "nope", "--dim", "2", "--out", dir / "m.json"}).code ==
        cli::kConfig);
  CHECK(run({"fit", "--data", dir / "missing.csv", "--labels", "y", "--dim", "2", "--out", dir / "m.json"}).code ==
        cli::kData);
  {
    std::ofstream f(dir / "bad.csv");
    f << "a,b,y\n1,2,1\n1,x,2\n";
  }
  const Run bad = run({"fit", "--data", dir / "bad.csv", "--labels", "y", "--dim", "1", "--out", dir / "m.json"});
  CHECK(bad.code == cli::kData);
  CHECK(bad.err.find("line 3") != std::string::npos);
  {
    std::ofstream f(dir / "collinear.csv");
    f << "a,b,y\n";
    for (int i = 0; i < 20; ++i) f << i << "," << 2 * i << "," << (i % 2) << "\n";
  }
  CHECK(run({"features", "--data", dir / "collinear.csv", "--labels", "y", "--dim", "1", "--method", "save", "--out",
             dir / "f"})
            .code == cli::kNumerical);
  {
    std::ofstream f(dir / "garbage.json");
    f << "{ not json";
  }
  CHECK(run({"predict", "--data", kVowel, "--labels", "y", "--model", dir / "garbage.json", "--out", dir / "p.csv"})
            .code == cli::kData);
  CHECK_FALSE(fs::exists(dir / "m.json"));
}
