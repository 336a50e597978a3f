#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"

namespace rtucker {
namespace {

namespace fs = std::filesystem;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "rtucker");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("rtucker_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

TEST_F(Cli, GenReciprocalSum) {
    const Result r = run({"gen", "--family", "reciprocal-sum", "--dims", "4", "4", "4", "-o", path("a.txt")});
    ASSERT_EQ(r.code, 0) << r.err;
    const DenseTensor t = std::get<DenseTensor>(load_tensor(path("a.txt")));
    EXPECT_EQ(t.size(), 64u);
    EXPECT_EQ(t[0], 1.0 / 3.0);
}

TEST_F(Cli, GenIsDeterministic) {
    for (const char* name : {"x.txt", "y.txt"})
        ASSERT_EQ(run({"gen", "--family", "random-sparse", "--dims", "10", "10", "10", "--nnz", "25", "--seed", "4",
                       "-o", path(name)})
                      .code,
                  0);
    EXPECT_EQ(slurp(path("x.txt")), slurp(path("y.txt")));
    ASSERT_EQ(run({"gen", "--family", "tucker-noise", "--dims", "6", "6", "6", "--core", "2", "2", "2", "--snr", "10",
                   "-o", path("n.txt")})
                  .code,
              0);
}

TEST_F(Cli, DecomposeFullRankIsExact) {
    run({"gen", "--family", "log-reciprocal", "--dims", "5", "4", "3", "-o", path("a.txt")});
    const Result r = run({"decompose", "-i", path("a.txt"), "-r", "5", "4", "3", "-a", "hosvd"});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(r.out.rfind("rlne=", 0), 0u);
    const double rl = std::stod(r.out.substr(5, r.out.find(' ') - 5));
    EXPECT_LE(rl, 1e-10);
    EXPECT_NE(r.out.find(" fit="), std::string::npos);
    EXPECT_NE(r.out.find(" time_s="), std::string::npos);
}

TEST_F(Cli, DecomposeSameSeedSameFiles) {
    run({"gen", "--family", "reciprocal-sum", "--dims", "12", "12", "12", "-o", path("a.txt")});
    const std::string before = slurp(path("a.txt"));
    for (const char* out : {"o1", "o2"})
        ASSERT_EQ(run({"decompose", "-i", path("a.txt"), "-r", "3", "--seed", "8", "-o", path(out)}).code, 0);
    for (const char* f : {"core", "factor_1", "factor_2", "factor_3"})
        EXPECT_EQ(slurp(dir / "o1" / f), slurp(dir / "o2" / f)) << f;
    EXPECT_EQ(before, slurp(path("a.txt")));
    EXPECT_NE(slurp(dir / "o1" / "metrics").find("algorithm=tucker-svd"), std::string::npos);
}

TEST_F(Cli, DecomposeEveryAlgorithmAndOrder) {
    run({"gen", "--family", "random-sparse", "--dims", "10", "9", "8", "--nnz", "60", "-o", path("s.txt")});
    for (const auto& [alg, name] : algorithm_names())
        EXPECT_EQ(run({"decompose", "-i", path("s.txt"), "-r", "3", "-a", name}).code, 0) << name;
    EXPECT_EQ(run({"decompose", "-i", path("s.txt"), "-r", "3", "--order", "3", "1", "2"}).code, 0);
    EXPECT_EQ(run({"decompose", "-i", path("s.txt"), "-r", "3", "--order", "1", "1", "2"}).code, 2);
}

TEST_F(Cli, ExitCodes) {
    run({"gen", "--family", "reciprocal-sum", "--dims", "4", "4", "4", "-o", path("a.txt")});
    Result r = run({"decompose", "-i", path("a.txt"), "-r", "2", "-a", "bogus"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("kr-tucker"), std::string::npos);
    EXPECT_EQ(run({"decompose", "-i", path("a.txt"), "-r", "5"}).code, 3);
    EXPECT_EQ(run({"decompose", "-i", path("a.txt"), "-r", "2", "2"}).code, 2);
    EXPECT_EQ(run({"decompose", "-i", path("missing.txt"), "-r", "2"}).code, 2);
    EXPECT_EQ(run({"decompose", "-r", "2"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"gen", "--family", "nope", "--dims", "3", "-o", path("b.txt")}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);

    std::ofstream(path("bad.txt")) << "dense 3\n2 2 2\n1\n2\nthree\n";
    r = run({"decompose", "-i", path("bad.txt"), "-r", "1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("value"), std::string::npos);
    EXPECT_NE(r.err.find(":5:"), std::string::npos);
}

TEST_F(Cli, BenchMinimalConfig) {
    std::ofstream(path("cfg")) << "families=reciprocal-sum\nalgorithms=tucker-svd\nranks=3\nseeds=0\nsize=10\nrepeats=1\n";
    const Result r = run({"bench", "-c", path("cfg"), "-o", path("out")});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(dir / "out" / "results.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
    EXPECT_TRUE(fs::exists(dir / "out" / "plots" / "reciprocal-sum.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "plots" / "reciprocal-sum_rlne.svg"));
}

TEST_F(Cli, BenchRerunMatchesApartFromTime) {
    std::ofstream(path("cfg")) << "families=reciprocal-sum,random-sparse\nalgorithms=tucker-svd,kr-tucker\nranks=2,3\n"
                                  "seeds=0-1\nsize=10\nnnz=40\nrepeats=1\n";
    ASSERT_EQ(run({"bench", "-c", path("cfg"), "-o", path("o1")}).code, 0);
    ASSERT_EQ(run({"bench", "-c", path("cfg"), "-o", path("o2")}).code, 0);
    auto strip = [](const std::string& csv) {
        std::istringstream in(csv);
        std::string line, out;
        while (std::getline(in, line)) {
            std::size_t pos = 0;
            for (int k = 0; k < 7; ++k) pos = line.find(',', pos) + 1;
            const std::size_t end = line.find(',', pos);
            out += line.substr(0, pos) + line.substr(end) + '\n';
        }
        return out;
    };
    EXPECT_EQ(strip(slurp(dir / "o1" / "results.csv")), strip(slurp(dir / "o2" / "results.csv")));
}

TEST_F(Cli, BenchInvariantFailureIsNonZero) {
    std::ofstream(path("cfg")) << "ranks=3\nsize=10\nrepeats=1\nfault_injection=inequality13\n";
    const Result r = run({"bench", "-c", path("cfg"), "-o", path("out")});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("violation"), std::string::npos);
    std::ofstream(path("cfg2")) << "ranks=3\nsize=10\ncolour=red\n";
    EXPECT_EQ(run({"bench", "-c", path("cfg2"), "-o", path("out")}).code, 2);
}

TEST_F(Cli, ProbeReportsDegenerateCase) {
    const Result r = run({"probe", "--family", "exact-rank", "--dims", "12", "12", "12", "-r", "3", "--trials", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("degenerate=true"), std::string::npos);
}

TEST_F(Cli, ProbePrintsQuantiles) {
    run({"gen", "--family", "reciprocal-sum", "--dims", "15", "15", "15", "-o", path("a.txt")});
    const Result r = run({"probe", "-i", path("a.txt"), "-r", "3", "--trials", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* key : {"ratio_min=", "ratio_median=", "ratio_max=", "success_fraction=", "deltas="})
        EXPECT_NE(r.out.find(key), std::string::npos) << key;
}

}  // namespace
}  // namespace rtucker
