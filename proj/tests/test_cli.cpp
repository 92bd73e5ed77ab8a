#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "advtex_cli_test";

int run(const std::string& args, std::string* err = nullptr) {
  const fs::path log = kWork / "stderr.txt";
  const std::string cmd = std::string(ADVTEX_CLI) + " " + args + " >" + (kWork / "stdout.txt").string() + " 2>" + log.string();
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *err = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& rel) { return (kWork / rel).string(); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    ASSERT_EQ(run("gen-corpus --out " + path("corpus") + " --objects 2"), 0);
    ASSERT_EQ(run("train --corpus " + path("corpus") + " --out " + path("w.bin") + " --epochs 1"), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(kWork); }

  static std::string scene() { return path("corpus/cube_checker_red.scene.json"); }
};

}  // namespace

TEST_F(Cli, CorpusAndWeightsAreWritten) {
  EXPECT_TRUE(fs::exists(path("corpus/corpus.json")));
  EXPECT_TRUE(fs::exists(path("corpus/cube_checker_orange.obj")));
  EXPECT_TRUE(fs::exists(path("corpus/gen-corpus.manifest.json")));
  EXPECT_TRUE(fs::exists(path("w.bin")));
  EXPECT_TRUE(fs::exists(path("w.bin.manifest.json")));
}

TEST_F(Cli, UsageErrorsExitTwo) {
  std::string err;
  EXPECT_EQ(run("attack --bogus-flag", &err), 2);
  EXPECT_NE(err.find("code=Usage"), std::string::npos) << err;
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("attack --scene " + scene()), 2);  // missing --weights and --out
}

TEST_F(Cli, InvalidInputsExitThree) {
  std::string err;
  EXPECT_EQ(run("attack --scene " + scene() + " --weights " + path("w.bin") + " --epsilon 2 --out " + path("a"), &err), 3);
  EXPECT_NE(err.find("InvalidArgument"), std::string::npos) << err;

  auto doc = nlohmann::json::parse(std::ifstream(scene()));
  doc["unexpected"] = true;
  const fs::path bad = kWork / "corpus" / "bad.scene.json";
  std::ofstream(bad) << doc.dump();
  EXPECT_EQ(run("render --scene " + bad.string() + " --renderer surrogate --out " + path("bad.png"), &err), 3);
  EXPECT_NE(err.find("InvalidConfig"), std::string::npos) << err;
}

TEST_F(Cli, OverwriteIsRefusedWithoutForce) {
  std::string err;
  EXPECT_EQ(run("gen-corpus --out " + path("corpus") + " --objects 2", &err), 4);
  EXPECT_NE(err.find("--force"), std::string::npos) << err;
  EXPECT_EQ(run("gen-corpus --out " + path("corpus2") + " --objects 1"), 0);
  EXPECT_EQ(run("gen-corpus --out " + path("corpus2") + " --objects 1 --force"), 0);
}

TEST_F(Cli, AttackEvaluateReport) {
  ASSERT_EQ(run("attack --scene " + scene() + " --weights " + path("w.bin") + " --steps 3 --out " + path("att")), 0);
  fs::path report;
  for (const auto& e : fs::directory_iterator(kWork / "att")) {
    if (e.path().string().ends_with(".report.json")) report = e.path();
  }
  ASSERT_FALSE(report.empty());
  const auto bundle = nlohmann::json::parse(std::ifstream(report));
  ASSERT_TRUE(bundle.contains("surrogate"));
  ASSERT_TRUE(bundle.contains("target"));
  EXPECT_EQ(bundle["surrogate"]["config"]["steps"], 3);
  EXPECT_EQ(bundle["surrogate"]["loss_trajectory"].size(), 3u);

  std::string stem = report.filename().string();
  stem = stem.substr(0, stem.size() - std::string(".report.json").size());
  const std::string texture = (kWork / "att" / (stem + ".png")).string();
  ASSERT_TRUE(fs::exists(texture));
  ASSERT_EQ(run("evaluate --scene " + scene() + " --weights " + path("w.bin") + " --texture " + texture +
                " --renderer surrogate --out " + path("eval.json")),
            0);
  const auto eval = nlohmann::json::parse(std::ifstream(path("eval.json")));
  EXPECT_EQ(eval["accuracy"], bundle["surrogate"]["metrics"]["a_after"]);

  ASSERT_EQ(run("report --in " + path("att") + " --out " + path("rep")), 0);
  std::ifstream table(path("rep/table.csv"));
  std::string header;
  std::getline(table, header);
  EXPECT_EQ(header.rfind("object,renderer,", 0), 0u);
  EXPECT_TRUE(fs::exists(path("rep/scatter.csv")));
}

TEST_F(Cli, RenderWritesAPng) {
  ASSERT_EQ(run("render --scene " + scene() + " --renderer target --view 5 --out " + path("view.png")), 0);
  EXPECT_TRUE(fs::exists(path("view.png")));
}
