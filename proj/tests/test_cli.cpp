#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

// Runs the CLI with `args`, capturing stdout and stderr together.
CliRun cli(const std::string& args) {
  const std::string cmd = std::string(HITMATCH_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("hitmatch_cli_" + std::to_string(::getpid()) + "_" +
           ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  CliRun gen(const std::string& prefix, const std::string& extra = "") {
    return cli("gen --ads 4000 --features 300 --nnz 30000 --queries 40 --qnnz 12 --seed 5 --out " +
               path(prefix) + " " + extra);
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, GenWritesFilesAndSummary) {
  const CliRun r = gen("w", "--towers 8 --requests 5 --depth 6");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("nnz=30000"), std::string::npos) << r.out;
  for (const char* ext : {".matrix", ".queries", ".towers", ".requests"}) {
    EXPECT_TRUE(fs::exists(path(std::string("w") + ext))) << ext;
  }
}

TEST_F(Cli, GenMissingFlagIsUsageError) {
  const CliRun r = cli("gen --ads 10 --features 10 --nnz 5 --queries 1 --qnnz 1 --out " + path("x"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("--seed"), std::string::npos) << r.out;
  EXPECT_NE(cli("").code, 0);
  EXPECT_NE(cli("frobnicate").code, 0);
}

TEST_F(Cli, GenIsReproducible) {
  ASSERT_EQ(gen("a").code, 0);
  ASSERT_EQ(gen("b").code, 0);
  EXPECT_EQ(slurp(path("a.matrix")), slurp(path("b.matrix")));
  EXPECT_EQ(slurp(path("a.queries")), slurp(path("b.queries")));
}

TEST_F(Cli, BuildRoundTripsTinyMatrix) {
  {
    std::ofstream t(path("tiny.tsv"));
    t << "0\t0\n0\t2\n1\t1\n2\t0\n2\t1\n2\t3\n";
  }
  const CliRun b = cli("build --matrix " + path("tiny.tsv") + " --out " + path("tiny.hmix"));
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_NE(b.out.find("build_ms "), std::string::npos);
  EXPECT_NE(b.out.find("ads=6 blocks=4"), std::string::npos) << b.out;
  // Exact agreement with the text source on every 2-feature query of M = 4.
  ASSERT_EQ(cli("gen --ads 3 --features 4 --nnz 6 --queries 30 --qnnz 2 --seed 1 --int-weights "
                "--out " + path("q")).code,
            0);
  const CliRun v = cli("verify --index " + path("tiny.hmix") + " --queries " + path("q.queries") +
                    " --matrix " + path("tiny.tsv") + " --rel 0 --abs 0");
  EXPECT_EQ(v.code, 0) << v.out;
}

TEST_F(Cli, BuildEmptyMatrix) {
  {
    std::ofstream t(path("empty.tsv"));
    t << "# hitmatch-matrix 10 4\n";
  }
  const CliRun b = cli("build --matrix " + path("empty.tsv") + " --out " + path("empty.hmix"));
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_NE(b.out.find("ads=0 blocks=0"), std::string::npos) << b.out;
  EXPECT_EQ(fs::file_size(path("empty.hmix")), 16u + 9 * (4 + 4 * 5));
}

TEST_F(Cli, VerifyPassesOnConformingBuild) {
  ASSERT_EQ(gen("w").code, 0);
  ASSERT_EQ(cli("build --matrix " + path("w.matrix") + " --out " + path("w.hmix")).code, 0);
  const CliRun v = cli("verify --index " + path("w.hmix") + " --queries " + path("w.queries") +
                    " --matrix " + path("w.matrix") + " --threads 2");
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_EQ(v.out.rfind("PASS", 0), 0u) << v.out;
}

TEST_F(Cli, VerifyIntegerWorkloadIsExact) {
  ASSERT_EQ(gen("w", "--int-weights").code, 0);
  ASSERT_EQ(cli("build --matrix " + path("w.matrix") + " --out " + path("w.hmix")).code, 0);
  const CliRun v = cli("verify --index " + path("w.hmix") + " --queries " + path("w.queries") +
                    " --rel 0 --abs 0");
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_NE(v.out.find("max_abs_err=0 "), std::string::npos) << v.out;
}

TEST_F(Cli, VerifyFailsOnCorruptedSnapshot) {
  // Every query holds all 300 features, so any damaged block is scored.
  ASSERT_EQ(cli("gen --ads 4000 --features 300 --nnz 30000 --queries 3 --qnnz 300 --seed 5 "
                "--int-weights --out " + path("w")).code,
            0);
  ASSERT_EQ(cli("build --matrix " + path("w.matrix") + " --out " + path("w.hmix")).code, 0);
  std::string bytes = slurp(path("w.hmix"));

  // Structural damage: key offsets of group 0 become decreasing.
  std::string broken = bytes;
  broken[24] = broken[25] = broken[26] = '\xff';
  std::ofstream(path("broken.hmix"), std::ios::binary) << broken;
  const CliRun a = cli("verify --index " + path("broken.hmix") + " --queries " + path("w.queries"));
  EXPECT_NE(a.code, 0);
  EXPECT_EQ(a.out.rfind("FAIL", 0), 0u) << a.out;

  // Silent damage: the first group-0 block now names a different ad.
  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(bytes[at + k]);
    return v;
  };
  const std::size_t m = u32(12);
  const std::size_t blocks = u32(16);
  ASSERT_GT(blocks, 0u);
  const std::size_t header_at = 20 + 4 * (m + 1);
  const std::size_t value_at = header_at + 4 * blocks;
  const std::uint32_t h = u32(header_at) >> 8;
  std::string shifted = bytes;
  const auto old_res = static_cast<unsigned char>(bytes[value_at]);
  bool changed = false;
  for (unsigned bit = 0; bit < 8 && !changed; ++bit) {
    const unsigned res = old_res ^ (1u << bit);
    if (h * 256 + res < 4000) {
      shifted[value_at] = static_cast<char>(res);
      changed = true;
    }
  }
  ASSERT_TRUE(changed);
  std::ofstream(path("shifted.hmix"), std::ios::binary) << shifted;
  const CliRun b = cli("verify --index " + path("shifted.hmix") + " --queries " + path("w.queries") +
                    " --matrix " + path("w.matrix"));
  EXPECT_NE(b.code, 0) << b.out;
  EXPECT_EQ(b.out.rfind("FAIL", 0), 0u) << b.out;
}

TEST_F(Cli, QueryWritesTopK) {
  ASSERT_EQ(gen("w", "--towers 4").code, 0);
  ASSERT_EQ(cli("build --matrix " + path("w.matrix") + " --out " + path("w.hmix")).code, 0);
  const CliRun q = cli("query --index " + path("w.hmix") + " --queries " + path("w.queries") +
                    " --k 3 --towers " + path("w.towers") + " --out " + path("top.csv"));
  ASSERT_EQ(q.code, 0) << q.out;
  std::istringstream csv(slurp(path("top.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "query,rank,ad_id,score");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 40u * 3);
  EXPECT_NE(cli("query --index " + path("w.hmix") + " --queries " + path("w.queries") +
                " --k 0").code,
            0);
}

TEST_F(Cli, BenchCsvShape) {
  ASSERT_EQ(gen("w").code, 0);
  ASSERT_EQ(cli("build --matrix " + path("w.matrix") + " --out " + path("w.hmix")).code, 0);
  const CliRun r = cli("bench --index " + path("w.hmix") + " --queries " + path("w.queries") +
                    " --baseline csc,dense --iters 3 --csv " + path("b.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("iters=3"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("amort@1e5_us"), std::string::npos) << r.out;
  std::istringstream csv(slurp(path("b.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "method,preprocess_ms,qps,p50_us,p99_us");
  std::vector<std::string> methods;
  while (std::getline(csv, line)) {
    std::istringstream row(line);
    std::string method, cell;
    std::getline(row, method, ',');
    methods.push_back(method);
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    ASSERT_EQ(cells.size(), 4u) << line;
    EXPECT_GE(cells[0], 0.0);
    EXPECT_GT(cells[1], 0.0);
  }
  EXPECT_EQ(methods, (std::vector<std::string>{"indexed", "csc", "dense"}));

  EXPECT_NE(cli("bench --queries " + path("w.queries")).code, 0);
  EXPECT_NE(cli("bench --index " + path("w.hmix") + " --matrix " + path("w.matrix") +
                " --queries " + path("w.queries")).code,
            0);
  EXPECT_NE(cli("bench --index " + path("w.hmix") + " --queries " + path("w.queries") +
                " --baseline cusparse").code,
            0);
}

TEST_F(Cli, LossCheck) {
  ASSERT_EQ(gen("w", "--requests 60 --depth 30").code, 0);
  const CliRun mul = cli("losscheck --requests " + path("w.requests") + " --op mul");
  const CliRun add = cli("losscheck --requests " + path("w.requests") + " --op add");
  ASSERT_EQ(mul.code, 0) << mul.out;
  ASSERT_EQ(add.code, 0) << add.out;
  auto loss_of = [](const std::string& s) {
    const auto at = s.find("loss=");
    return std::stod(s.substr(at + 5));
  };
  EXPECT_NE(loss_of(mul.out), loss_of(add.out));
  EXPECT_NE(cli("losscheck --requests " + path("w.requests") + " --op xor").code, 0);
}

TEST_F(Cli, LossCheckTwoItemSanity) {
  {
    std::ofstream r(path("d2.requests"));
    r << "2\n0 0 1 3\n1 0 2 1\n";
  }
  const CliRun run = cli("losscheck --requests " + path("d2.requests"));
  ASSERT_EQ(run.code, 0) << run.out;
  // Tied scores: log(2) * |dNDCG| (1 - 1/log2 3) * |dValue| 2.
  const auto at = run.out.find("loss=");
  EXPECT_NEAR(std::stod(run.out.substr(at + 5)), 0.511640, 1e-5) << run.out;
  EXPECT_NE(run.out.find("mean_ndcg=1 "), std::string::npos) << run.out;
}
