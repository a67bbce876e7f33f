#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "probemb/checkpoint.hpp"
#include "probemb/embedding_io.hpp"

namespace fs = std::filesystem;

namespace probemb {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "probemb");
  std::ostringstream out, err;
  const int code = cli::cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("probemb_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    const Result r = run({"gen-synth", "--out", (dir_ / "syn").string(), "--objects", "80",
                          "--heldout", "20", "--dim", "8", "--seed", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string p(const std::string& rel) { return (dir_ / rel).string(); }

  static std::vector<std::string> train_args(const std::string& out, const std::string& dist = "vmf",
                                             const std::string& variant = "asym-text") {
    return {"train",   "--text-emb", p("syn/text.emb"), "--image-emb", p("syn/image.emb"),
            "--pairs", p("syn/pairs.tsv"), "--out", p(out), "--dist", dist, "--variant", variant,
            "--epochs", "2", "--batch-size", "64", "--hidden", "16", "--seed", "3"};
  }

  static inline fs::path dir_;
};

TEST_F(Cli, NoSubcommandIsUsageError) {
  const Result r = run({});
  EXPECT_EQ(r.code, cli::kValidation);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run({"train", "--bogus"}).code, cli::kValidation);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kValidation);
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, cli::kOk); }

TEST_F(Cli, Selftest) {
  const Result r = run({"selftest"});
  EXPECT_EQ(r.code, cli::kOk) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, MissingInputIsIoError) {
  auto args = train_args("x.avlm");
  args[2] = p("syn/missing.emb");
  const Result r = run(args);
  EXPECT_EQ(r.code, cli::kIo);
  EXPECT_NE(r.err.find("missing.emb"), std::string::npos);
}

TEST_F(Cli, CorruptInputIsIoError) {
  std::ofstream(p("junk.emb")) << "JUNKJUNKJUNKJUNKJUNKJUNK";
  auto args = train_args("x.avlm");
  args[2] = p("junk.emb");
  const Result r = run(args);
  EXPECT_EQ(r.code, cli::kIo);
  EXPECT_NE(r.err.find("not an EMB1 file"), std::string::npos);
}

TEST_F(Cli, InvalidValuesAreValidationErrors) {
  EXPECT_EQ(run(train_args("x.avlm", "cauchy")).code, cli::kValidation);
  EXPECT_EQ(run(train_args("x.avlm", "gauss", "sym")).code, cli::kValidation);
  auto args = train_args("x.avlm");
  args[args.size() - 5] = "1";  // batch size
  EXPECT_EQ(run(args).code, cli::kValidation);
}

TEST_F(Cli, TrainEvalPipeline) {
  ASSERT_EQ(run(train_args("m.avlm")).code, cli::kOk);
  const Result e = run({"eval", "--model", p("m.avlm"), "--text-emb", p("syn/heldout_text.emb"),
                        "--image-emb", p("syn/heldout_image.emb"), "--pairs",
                        p("syn/heldout_pairs.tsv"), "--report", p("r.json"), "--bins", "4",
                        "--group-stats"});
  ASSERT_EQ(e.code, cli::kOk) << e.err;
  const auto j = nlohmann::json::parse(slurp(p("r.json")));
  for (const char* k : {"overall_recall1_t2i", "overall_recall1_i2t", "per_bin_recall_t2i",
                        "per_bin_recall_i2t", "spearman_t2i", "spearman_i2t", "r2_t2i", "r2_i2t",
                        "n_bins", "group_stats"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(j["n_bins"], 4);
  EXPECT_EQ(j["per_bin_recall_t2i"].size(), 4u);
  EXPECT_TRUE(j["group_stats"].contains("level=0"));
}

TEST_F(Cli, TrainingIsReproducible) {
  ASSERT_EQ(run(train_args("a.avlm", "ps", "sym")).code, cli::kOk);
  ASSERT_EQ(run(train_args("b.avlm", "ps", "sym")).code, cli::kOk);
  EXPECT_EQ(slurp(p("a.avlm")), slurp(p("b.avlm")));
}

TEST_F(Cli, EvalDimensionMismatchIsValidationError) {
  ASSERT_EQ(run(train_args("m2.avlm")).code, cli::kOk);
  write_embeddings(p("wide.emb"), Matrix::Ones(4, 9));
  const Result e = run({"eval", "--model", p("m2.avlm"), "--text-emb", p("wide.emb"), "--image-emb",
                        p("wide.emb"), "--pairs", p("syn/pairs.tsv"), "--report", p("r2.json")});
  EXPECT_EQ(e.code, cli::kValidation);
}

TEST_F(Cli, RetrieveListsTopK) {
  ASSERT_EQ(run(train_args("m3.avlm")).code, cli::kOk);
  const Result r = run({"retrieve", "--model", p("m3.avlm"), "--direction", "t2i", "--queries",
                        p("syn/text.emb"), "--embeddings", p("syn/image.emb"), "--query-index", "5",
                        "--top-k", "3"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 4);  // header + 3
  EXPECT_EQ(run({"retrieve", "--model", p("m3.avlm"), "--direction", "sideways", "--embeddings",
                 p("syn/image.emb")})
                .code,
            cli::kValidation);
  EXPECT_EQ(run({"retrieve", "--model", p("m3.avlm"), "--embeddings", p("syn/image.emb"),
                 "--query-index", "100000"})
                .code,
            cli::kValidation);
}

TEST_F(Cli, ClassifyWithRules) {
  ASSERT_EQ(run(train_args("m4.avlm")).code, cli::kOk);
  const Matrix classes = read_embeddings(p("syn/text.emb")).topRows(6);
  write_embeddings(p("classes.emb"), classes);
  const Result none = run({"classify", "--model", p("m4.avlm"), "--image-emb", p("syn/image.emb"),
                           "--class-emb", p("classes.emb"), "--rule", "none"});
  ASSERT_EQ(none.code, cli::kOk) << none.err;
  EXPECT_EQ(none.out.find("REJECT"), std::string::npos);
  const Result thr = run({"classify", "--model", p("m4.avlm"), "--image-emb", p("syn/image.emb"),
                          "--class-emb", p("classes.emb"), "--rule", "threshold", "--threshold",
                          "1e300"});
  ASSERT_EQ(thr.code, cli::kOk);
  EXPECT_NE(thr.out.find("REJECT"), std::string::npos);
  EXPECT_EQ(run({"classify", "--model", p("m4.avlm"), "--image-emb", p("syn/image.emb"),
                 "--class-emb", p("classes.emb"), "--rule", "dummy"})
                .code,
            cli::kValidation);
}

}  // namespace
}  // namespace probemb
