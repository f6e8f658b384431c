#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "sketchreg/cli/cli.hpp"
#include "sketchreg/data.hpp"
#include "sketchreg/error.hpp"
#include "sketchreg/report_io.hpp"
#include "sketchreg/sketch_io.hpp"

namespace sketchreg::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int rc = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sketchreg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path at(const std::string& name) const { return dir_ / name; }

  Result run(const std::vector<std::string>& args, const std::string& env = "") const {
    std::string cmd = "cd " + quote(dir_.string()) + " && " + env + " " + quote(SKETCHREG_BIN);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " >" + quote(at(".out").string()) + " 2>" + quote(at(".err").string());
    const int status = std::system(cmd.c_str());
    Result r;
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(at(".out"));
    r.err = slurp(at(".err"));
    return r;
  }

  void simulate(const std::string& name, int n, int d, int seed = 1) const {
    const Result r = run({"simulate", "--n", std::to_string(n), "--d", std::to_string(d), "--sigma", "1",
                          "--seed", std::to_string(seed), "--output", name});
    ASSERT_EQ(r.rc, 0) << r.err;
  }

  void write_csv(const std::string& name, const DenseMatrix& m) const {
    io::write_matrix_csv(at(name), m);
  }

  fs::path dir_;
};

TEST_F(Cli, ExitCodesAreDistinct) {
  simulate("d.csv", 100, 3);
  EXPECT_EQ(run({"sketch", "--input", "d.csv", "--method", "cw", "--k", "16", "--output", "s.skrg"}).rc,
            kExitOk);
  EXPECT_EQ(run({"sketch", "--input", "d.csv", "--method", "nope", "--k", "16", "--output", "x"}).rc,
            kExitContract);
  EXPECT_EQ(run({"sketch", "--input", "d.csv", "--method", "cw", "--epsilon", "0.9", "--output", "x"}).rc,
            kExitContract);
  const Result missing = run({"sketch", "--input", "absent.csv", "--method", "cw", "--k", "16", "--output", "x"});
  EXPECT_EQ(missing.rc, kExitIo);
  EXPECT_NE(missing.err.find("absent.csv"), std::string::npos) << missing.err;

  DenseMatrix collinear = DenseMatrix::Ones(20, 3);
  for (Eigen::Index i = 0; i < 20; ++i) collinear(i, 2) = double(i);
  write_csv("c.csv", collinear);
  ASSERT_EQ(run({"sketch", "--input", "c.csv", "--method", "cw", "--k", "32", "--output", "c.skrg"}).rc, 0);
  const Result singular = run({"posterior", "--sketch", "c.skrg", "--output", "p.csv"});
  EXPECT_EQ(singular.rc, kExitNumerical) << singular.err;
  EXPECT_EQ(run({}).rc, kExitContract);
  EXPECT_EQ(run({"--help"}).rc, kExitOk);
}

TEST_F(Cli, UnitMapping) {
  EXPECT_EQ(exit_code_for(ContractError("x")), kExitContract);
  EXPECT_EQ(exit_code_for(MergeError("x")), kExitContract);
  EXPECT_EQ(exit_code_for(DomainError("x")), kExitContract);
  EXPECT_EQ(exit_code_for(IoError("x")), kExitIo);
  EXPECT_EQ(exit_code_for(NumericalError("x")), kExitNumerical);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), kExitFailure);
}

TEST_F(Cli, EpsilonAndKAreExclusive) {
  simulate("d.csv", 50, 2);
  const Result r = run({"sketch", "--input", "d.csv", "--method", "rad", "--epsilon", "0.2", "--k", "8",
                        "--output", "s.skrg"});
  EXPECT_EQ(r.rc, kExitContract);
  EXPECT_EQ(run({"sketch", "--input", "d.csv", "--method", "rad", "--output", "s.skrg"}).rc, kExitContract);
}

TEST_F(Cli, SrhtNeedsRowCount) {
  simulate("d.csv", 50, 2);
  const Result r = run({"sketch", "--input", "d.csv", "--method", "srht", "--k", "8", "--output", "s.skrg"});
  EXPECT_EQ(r.rc, kExitContract);
  EXPECT_NE(r.err.find("--n-hint"), std::string::npos) << r.err;
  EXPECT_EQ(run({"sketch", "--input", "d.csv", "--method", "srht", "--k", "8", "--n-hint", "50", "--output",
                 "s.skrg"}).rc,
            0);
  ASSERT_EQ(run({"simulate", "--n", "50", "--d", "2", "--sigma", "1", "--format", "bin", "--output", "d.skdt"}).rc,
            0);
  EXPECT_EQ(run({"sketch", "--input", "d.skdt", "--method", "srht", "--k", "8", "--output", "b.skrg"}).rc, 0);
}

TEST_F(Cli, GramIgnoresEpsilonWithWarning) {
  simulate("d.csv", 60, 4);
  const Result r = run({"sketch", "--input", "d.csv", "--method", "gram", "--epsilon", "0.1", "--output", "g.skrg"});
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_NE(r.out.find("k=4\n"), std::string::npos) << r.out;
}

TEST_F(Cli, CwSizingWithIntercept) {
  simulate("d.csv", 2000, 50);
  const Result r = run({"sketch", "--input", "d.csv", "--method", "cw", "--epsilon", "0.1", "--add-intercept",
                        "--output", "s.skrg"});
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_NE(r.out.find("k=16384\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("d_total=52\n"), std::string::npos) << r.out;
  const Result r2 = run({"sketch", "--input", "d.csv", "--method", "cw", "--epsilon", "0.2", "--add-intercept",
                         "--output", "s2.skrg"});
  EXPECT_NE(r2.out.find("k=4096\n"), std::string::npos) << r2.out;
}

TEST_F(Cli, RerunsAreByteIdentical) {
  simulate("d.csv", 300, 3, 5);
  for (const std::string m : {"rad", "srht", "cw", "gram"}) {
    const std::vector<std::string> args{"sketch", "--input", "d.csv", "--method", m, "--k", "32",
                                        "--n-hint", "300", "--seed", "77", "--output", m + ".a.skrg"};
    ASSERT_EQ(run(args).rc, 0);
    std::vector<std::string> again = args;
    again.back() = m + ".b.skrg";
    ASSERT_EQ(run(again).rc, 0);
    EXPECT_EQ(slurp(at(m + ".a.skrg")), slurp(at(m + ".b.skrg"))) << m;
  }
}

TEST_F(Cli, ManifestReplaysBitIdentically) {
  simulate("d.csv", 400, 3, 9);
  ASSERT_EQ(run({"sketch", "--input", "d.csv", "--method", "cw", "--k", "64", "--seed", "3", "--output",
                 "s.skrg"}).rc,
            0);
  ASSERT_EQ(run({"posterior", "--sketch", "s.skrg", "--output", "p.csv"}).rc, 0);
  for (const std::string out : {"d.csv", "s.skrg", "p.csv"}) {
    const auto man = nlohmann::json::parse(slurp(at(out + ".manifest.json")));
    EXPECT_TRUE(man.contains("timings_ms"));
    EXPECT_TRUE(man["timings_ms"].contains("read"));
    EXPECT_TRUE(man["timings_ms"].contains("sketch"));
    EXPECT_TRUE(man["timings_ms"].contains("solve"));
    ASSERT_FALSE(man["outputs"].empty());
    std::vector<std::string> argv = man["argv"].get<std::vector<std::string>>();
    argv.erase(argv.begin());
    std::map<std::string, std::string> before;
    for (const auto& o : man["outputs"]) before[o] = slurp(at(o.get<std::string>()));
    ASSERT_EQ(run(argv).rc, 0) << out;
    for (const auto& [path, bytes] : before) EXPECT_EQ(slurp(at(path)), bytes) << path;
  }
  const auto sk = nlohmann::json::parse(slurp(at("s.skrg.manifest.json")));
  EXPECT_EQ(sk["seed"], 3);
  EXPECT_EQ(sk["flags"]["--k"], "64");
  EXPECT_EQ(sk["inputs"][0]["fnv1a64"].get<std::string>().size(), 16u);
}

TEST_F(Cli, MergeOfPartitionsEqualsWholeStream) {
  std::mt19937_64 rng(2);
  const DenseMatrix data = oracle::gaussian_matrix(400, 4, rng);
  write_csv("all.csv", data);
  for (int p = 0; p < 4; ++p) write_csv("p" + std::to_string(p) + ".csv", data.middleRows(100 * p, 100));
  for (const std::string m : {"rad", "srht", "cw", "gram"}) {
    ASSERT_EQ(run({"sketch", "--input", "all.csv", "--method", m, "--k", "16", "--n-hint", "400", "--seed",
                   "4", "--output", m + ".whole.skrg"}).rc,
              0);
    std::vector<std::string> merge_args{"merge"};
    for (int p = 0; p < 4; ++p) {
      const std::string out = m + ".p" + std::to_string(p) + ".skrg";
      ASSERT_EQ(run({"sketch", "--input", "p" + std::to_string(p) + ".csv", "--method", m, "--k", "16",
                     "--n-hint", "400", "--row-offset", std::to_string(100 * p), "--seed", "4", "--output",
                     out}).rc,
                0);
      merge_args.push_back(out);
    }
    merge_args.insert(merge_args.end(), {"--output", m + ".merged.skrg"});
    ASSERT_EQ(run(merge_args).rc, 0);
    const SketchBuilder whole = io::read_sketch(at(m + ".whole.skrg"));
    const SketchBuilder merged = io::read_sketch(at(m + ".merged.skrg"));
    EXPECT_EQ(merged.rows_seen(), 400u);
    EXPECT_LE(oracle::relative_error(merged.finalize(), whole.finalize()), 1e-12) << m;
  }
}

TEST_F(Cli, MergeSingleInputAndMismatch) {
  simulate("d.csv", 100, 2);
  ASSERT_EQ(run({"sketch", "--input", "d.csv", "--method", "cw", "--k", "8", "--seed", "1", "--output", "a.skrg"}).rc, 0);
  ASSERT_EQ(run({"sketch", "--input", "d.csv", "--method", "cw", "--k", "8", "--seed", "2", "--output", "b.skrg"}).rc, 0);
  ASSERT_EQ(run({"merge", "a.skrg", "--output", "m.skrg"}).rc, 0);
  EXPECT_EQ(io::read_sketch(at("m.skrg")).finalize(), io::read_sketch(at("a.skrg")).finalize());
  const Result bad = run({"merge", "a.skrg", "b.skrg", "--output", "x.skrg"});
  EXPECT_EQ(bad.rc, kExitContract);
  EXPECT_FALSE(fs::exists(at("x.skrg")));
}

TEST_F(Cli, ThreadedSketchMatchesSingleThread) {
  simulate("d.csv", 20000, 3);
  ASSERT_EQ(run({"sketch", "--input", "d.csv", "--method", "rad", "--k", "64", "--output", "one.skrg"}).rc, 0);
  ASSERT_EQ(run({"sketch", "--input", "d.csv", "--method", "rad", "--k", "64", "--output", "four.skrg"},
                "SKETCHREG_THREADS=4").rc,
            0);
  EXPECT_LE(oracle::relative_error(io::read_sketch(at("four.skrg")).finalize(),
                                   io::read_sketch(at("one.skrg")).finalize()),
            1e-12);
  EXPECT_EQ(run({"sketch", "--input", "d.csv", "--method", "rad", "--k", "64", "--output", "x.skrg"},
                "SKETCHREG_THREADS=zero").rc,
            kExitContract);
}

TEST_F(Cli, PosteriorMatchesOlsOnUnsketchedData) {
  std::mt19937_64 rng(3);
  const DenseMatrix x = oracle::gaussian_matrix(30, 3, rng);
  const DenseVector y = x * DenseVector::Ones(3) + 0.3 * DenseVector(oracle::gaussian_matrix(30, 1, rng));
  DenseMatrix joined(30, 4);
  joined << x, y;
  // An identity sketch: the sketch file stores [X, Y] itself, padded with
  // zero rows to a power-of-two bucket count.
  DenseMatrix padded = DenseMatrix::Zero(32, 4);
  padded.topRows(30) = joined;
  const SketchBuilder identity = SketchBuilder::restore(SketchMethod::Cw, 4, 32, 0, 30, hashing::SketchSeed(0), padded);
  io::write_sketch(at("id.skrg"), identity);
  const Result r = run({"posterior", "--sketch", "id.skrg", "--output", "p.csv"});
  ASSERT_EQ(r.rc, 0) << r.err;
  const DenseVector beta = oracle::qr_ols(x, y);
  std::istringstream in(slurp(at("p.csv")));
  std::string line;
  std::getline(in, line);
  for (Eigen::Index j = 0; j < 3; ++j) {
    ASSERT_TRUE(std::getline(in, line));
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    EXPECT_NEAR(std::stod(line.substr(a + 1, b - a - 1)), beta[j], 1e-12) << line;
  }
  const double sigma = (x * beta - y).norm() / std::sqrt(30.0);
  EXPECT_NEAR(std::stod(r.out.substr(r.out.find("sigma=") + 6)), sigma, 1e-12);
  EXPECT_NE(r.out.find("sigma_estimated=true"), std::string::npos);
  const DenseMatrix cov = io::read_matrix_csv(at("p.cov.csv"));
  EXPECT_LE(oracle::relative_error(cov, sigma * sigma * oracle::gauss_jordan_inverse(x.transpose() * x)), 1e-9);
}

TEST_F(Cli, PosteriorWithDominantPrior) {
  simulate("d.csv", 200, 2);
  ASSERT_EQ(run({"sketch", "--input", "d.csv", "--method", "cw", "--k", "32", "--output", "s.skrg"}).rc, 0);
  write_csv("m.csv", (DenseMatrix(2, 1) << 7.0, -4.0).finished());
  write_csv("S.csv", 1e7 * DenseMatrix::Identity(2, 2));
  const Result r = run({"posterior", "--sketch", "s.skrg", "--prior", "gaussian", "--prior-mean", "m.csv",
                        "--prior-s", "S.csv", "--sigma", "1", "--output", "p.csv"});
  ASSERT_EQ(r.rc, 0) << r.err;
  const std::string p = slurp(at("p.csv"));
  std::istringstream in(p);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_NEAR(std::stod(line.substr(line.find(',') + 1)), 7.0, 1e-5) << p;
  EXPECT_EQ(run({"posterior", "--sketch", "s.skrg", "--prior", "gaussian", "--output", "p.csv"}).rc, kExitContract);
}

TEST_F(Cli, VerifyIdentitySketchSatisfiesEverything) {
  simulate("d.csv", 300, 3);
  const Result r = run({"verify", "--data", "d.csv", "--epsilon", "0.1"});
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_NE(r.out.find("embedding.pass=true"), std::string::npos) << r.out;
  for (const std::string b : {"lemma1", "lemma2", "theorem1"}) {
    EXPECT_NE(r.out.find(b + ".satisfied=true"), std::string::npos) << b << "\n" << r.out;
  }
  const auto lhs = r.out.find("lemma2.lhs=");
  EXPECT_NEAR(std::stod(r.out.substr(lhs + 11)), 0.0, 1e-18);
}

TEST_F(Cli, VerifyRadAtTargetDimension) {
  simulate("d.csv", 4000, 50);
  ASSERT_EQ(run({"sketch", "--input", "d.csv", "--method", "rad", "--epsilon", "0.1", "--add-intercept",
                 "--output", "s.skrg"}).rc,
            0);
  const Result r = run({"verify", "--data", "d.csv", "--add-intercept", "--sketch", "s.skrg", "--epsilon", "0.1",
                        "--json"});
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["embedding"]["pass"], true) << j["embedding"]["deviation"];
}

TEST_F(Cli, VerifyReportsGramBlowUp) {
  std::mt19937_64 rng(4);
  DenseVector s(3);
  s << 1.0, 1e-3, 1e-6;
  const DenseMatrix x = oracle::with_singular_values(500, s, rng);
  DenseMatrix joined(500, 4);
  joined << x, x * DenseVector::Ones(3) + 1e-3 * DenseVector(oracle::gaussian_matrix(500, 1, rng));
  write_csv("bad.csv", joined);
  const Result r = run({"verify", "--data", "bad.csv", "--instability", "--json"});
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["instability"]["gram_squares_condition"], true) << r.out;
  EXPECT_NEAR(j["instability"]["kappa_x"].get<double>(), 1e6, 1e2);
}

TEST_F(Cli, SimulateReproducibleAndStreamsBinary) {
  simulate("a.csv", 500, 4, 8);
  simulate("b.csv", 500, 4, 8);
  EXPECT_EQ(slurp(at("a.csv")), slurp(at("b.csv")));
  EXPECT_EQ(slurp(at("a.csv.beta.csv")), slurp(at("b.csv.beta.csv")));
  ASSERT_EQ(run({"simulate", "--n", "500", "--d", "4", "--sigma", "1", "--seed", "8", "--format", "bin",
                 "--output", "a.skdt"}).rc,
            0);
  const DenseMatrix from_csv = collect(*read_csv(at("a.csv"), false));
  EXPECT_EQ(read_binary_matrix(at("a.skdt")), from_csv);
  EXPECT_EQ(from_csv.cols(), 5);
}

TEST_F(Cli, UpdateStreamMatchesRowSketch) {
  std::mt19937_64 rng(5);
  const DenseMatrix data = oracle::gaussian_matrix(40, 3, rng);
  write_csv("rows.csv", data);
  std::vector<UpdateTriple> ups;
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      ups.push_back({std::uint64_t(i), std::uint64_t(j), 2.0 * data(i, j)});
      ups.push_back({std::uint64_t(i), std::uint64_t(j), -data(i, j)});
    }
  std::shuffle(ups.begin(), ups.end(), rng);
  write_updates(at("u.txt"), ups);
  for (const std::string m : {"rad", "srht", "cw"}) {
    ASSERT_EQ(run({"sketch", "--input", "rows.csv", "--method", m, "--k", "8", "--n-hint", "40", "--output",
                   m + ".rows.skrg"}).rc,
              0);
    const Result r = run({"sketch", "--input", "u.txt", "--format", "updates", "--d-total", "3", "--method", m,
                          "--k", "8", "--n-hint", "40", "--output", m + ".ups.skrg"});
    ASSERT_EQ(r.rc, 0) << r.err;
    EXPECT_LE(oracle::relative_error(io::read_sketch(at(m + ".ups.skrg")).finalize(),
                                     io::read_sketch(at(m + ".rows.skrg")).finalize()),
              1e-12)
        << m;
  }
}

TEST_F(Cli, BenchEmitsTimingTable) {
  const Result r = run({"bench", "--methods", "cw,gram", "--sizes", "2000,4000", "--d", "5", "--repeats", "1"});
  ASSERT_EQ(r.rc, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "method,n,d_total,k,read_ms,sketch_ms,ratio_to_previous");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

}  // namespace
}  // namespace sketchreg::cli
