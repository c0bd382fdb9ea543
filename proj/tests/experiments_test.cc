#include "nsslab/experiments.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "nsslab/errors.h"

namespace nsslab::experiments {
namespace {

namespace fs = std::filesystem;

Config FromText(const std::string& text, const fs::path& base = fs::temp_directory_path()) {
  std::istringstream in(text);
  return Config::Parse(in, "mem.ini", base);
}

std::string ErrorOf(const std::string& text) {
  try {
    FromText(text);
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nsslab_experiments_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(ConfigTest, ParsesTypedValues) {
  const auto c = FromText(
      "; comment\n[experiment]\nname = lqr-scalar\n[problem]\na = 1 2; 3, 4\nb = 0.5, -1\n"
      "[mc]\npaths = 100\ndt = 1e-3\nmaster_seed = 18446744073709551615\n");
  EXPECT_EQ(c.name(), "lqr-scalar");
  EXPECT_EQ(c.Count("mc.paths", 1), 100u);
  EXPECT_DOUBLE_EQ(c.Positive("mc.dt", 1.0), 1e-3);
  EXPECT_EQ(c.Seed("mc.master_seed", 0), 18446744073709551615ull);
  EXPECT_EQ(c.Reals("problem.b", {}), (std::vector<double>{0.5, -1}));
  Mat expected(2, 2);
  expected << 1, 2, 3, 4;
  EXPECT_EQ(c.Matrix("problem.a", Mat()), expected);
  EXPECT_EQ(c.Real("mc.horizon", 7.0), 7.0);
  EXPECT_EQ(c.Text("output.dir", "fallback"), "fallback");
}

TEST(ConfigTest, SyntaxErrorsCarryLineNumbers) {
  const std::string msg = ErrorOf("[experiment]\nname = ou-sanity\n[mc\npaths = 3\n");
  EXPECT_NE(msg.find("mem.ini:3"), std::string::npos) << msg;
}

TEST(ConfigTest, UnknownKeysAndSectionsAreRejected) {
  EXPECT_NE(ErrorOf("[experiment]\nname = x\n[mc]\nbogus = 1\n").find("mc.bogus"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[experiment]\nname = x\n[extra]\nk = 1\n").find("[extra]"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[mc]\npaths = 1\n").find("experiment.name"), std::string::npos);
}

TEST(ConfigTest, BadValuesNameTheKey) {
  const auto c = FromText(
      "[experiment]\nname = x\n[mc]\npaths = 0\ndt = -1\nepsilon = abc\n[problem]\na = 1 2; 3\n");
  for (const auto& [key, call] : std::vector<std::pair<std::string, std::function<void()>>>{
           {"mc.paths", [&] { c.Count("mc.paths", 1); }},
           {"mc.dt", [&] { c.Positive("mc.dt", 1.0); }},
           {"mc.epsilon", [&] { c.Real("mc.epsilon", 1.0); }},
           {"problem.a", [&] { c.Matrix("problem.a", Mat()); }},
       }) {
    try {
      call();
      ADD_FAILURE() << key;
    } catch (const ConfigurationError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  }
}

TEST(ConfigTest, FilesResolveAgainstConfigDirectory) {
  const fs::path dir = Scratch("files");
  fs::create_directories(dir);
  std::ofstream(dir / "m.txt") << "A 1 1\n1\n";
  const auto c = FromText("[experiment]\nname = x\n[problem]\nmatrices = m.txt\ndataset = nope.csv\n",
                          dir);
  EXPECT_EQ(c.File("problem.matrices"), dir / "m.txt");
  EXPECT_THROW(c.File("problem.dataset"), ConfigurationError);
  EXPECT_THROW(c.File("problem.absent"), ConfigurationError);
}

TEST(RegistryTest, ListsEveryExperimentOnOneLineEach) {
  const std::string text = RegistryText();
  EXPECT_EQ(text, RegistryText());
  std::istringstream in(text);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    EXPECT_GT(line.size(), 30u);
    ++lines;
  }
  EXPECT_GE(lines, 10u);
  for (const char* name :
       {"ou-sanity", "quadratic-overdamped", "quadratic-underdamped", "logistic-overdamped",
        "logistic-underdamped", "lqr-po-overdamped", "lqr-po-underdamped", "gain-sweep",
        "certify-dissipation", "pl-envelope"})
    EXPECT_NE(text.find(std::string(name) + " "), std::string::npos) << name;
}

TEST(ValidateTest, UnknownExperimentListsRegistry) {
  try {
    Validate(FromText("[experiment]\nname = nope\n"));
    FAIL();
  } catch (const ConfigurationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("unknown experiment 'nope'"), std::string::npos);
    EXPECT_NE(msg.find("certify-dissipation"), std::string::npos);
  }
}

TEST(ValidateTest, RangesAndFiles) {
  EXPECT_THROW(Validate(FromText("[experiment]\nname = ou-sanity\n[mc]\nepsilon = 1.5\n")),
               ConfigurationError);
  EXPECT_THROW(Validate(FromText("[experiment]\nname = ou-sanity\n[noise]\nintensities = 1, -2\n")),
               ConfigurationError);
  EXPECT_THROW(Validate(FromText("[experiment]\nname = pl-envelope\n[problem]\nkind = logistic\n")),
               ConfigurationError);
  EXPECT_THROW(
      Validate(FromText("[experiment]\nname = pl-envelope\n[problem]\ndataset = missing.csv\n")),
      ConfigurationError);
  EXPECT_NO_THROW(Validate(FromText("[experiment]\nname = lqr-scalar\n")));
}

TEST(RunExperimentTest, ScalarLqrReportsClosedForm) {
  const fs::path out = Scratch("lqr_scalar");
  RunOptions opts;
  opts.out_dir = out;
  const auto report = experiments::Run(FromText("[experiment]\nname = lqr-scalar\n[problem]\na = 1\nf = 1\n"
                                   "q = 1\nr = 1\n"),
                          opts);
  EXPECT_TRUE(report.passed());
  bool found = false;
  for (const auto& c : report.checks) {
    EXPECT_EQ(c.criterion, 4);
    if (c.name == "optimal cost J2*") {
      found = true;
      EXPECT_NE(c.detail.find("closed form 2.41421356237309"), std::string::npos) << c.detail;
    }
  }
  EXPECT_TRUE(found);
  const std::string summary = Slurp(out / "summary.txt");
  EXPECT_NE(summary.find("PASS [4] optimal cost J2*"), std::string::npos);
  EXPECT_NE(summary.find("RESULT PASS"), std::string::npos);
  for (const auto& a : report.artifacts) EXPECT_TRUE(fs::exists(out / a)) << a;
}

TEST(RunExperimentTest, NonUnitScalarLqr) {
  RunOptions opts;
  opts.out_dir = Scratch("lqr_scalar_general");
  const auto report = experiments::Run(FromText("[experiment]\nname = lqr-scalar\n[problem]\na = -0.5\nf = 2\n"
                                   "q = 3\nr = 0.5\n"),
                          opts);
  EXPECT_TRUE(report.passed());
}

TEST(RunExperimentTest, ArtifactsIndependentOfThreadsAndRepeatable) {
  const std::string text = "[experiment]\nname = gain-sweep\n[mc]\nprobes = 30\nmaster_seed = 3\n";
  RunOptions a, b, c;
  a.out_dir = Scratch("sweep_a");
  a.threads = 1;
  b.out_dir = Scratch("sweep_b");
  b.threads = 4;
  c.out_dir = Scratch("sweep_c");
  c.threads = 1;
  const auto ra = experiments::Run(FromText(text), a);
  experiments::Run(FromText(text), b);
  experiments::Run(FromText(text), c);
  ASSERT_FALSE(ra.artifacts.empty());
  for (const auto& art : ra.artifacts) {
    EXPECT_EQ(Slurp(*a.out_dir / art), Slurp(*b.out_dir / art)) << art;
    EXPECT_EQ(Slurp(*a.out_dir / art), Slurp(*c.out_dir / art)) << art;
  }
}

TEST(RunExperimentTest, SeedOverrideChangesSamples) {
  const std::string text = "[experiment]\nname = gain-sweep\n[mc]\nprobes = 10\n";
  RunOptions a, b;
  a.out_dir = Scratch("seed_a");
  b.out_dir = Scratch("seed_b");
  b.seed_override = 99;
  const auto ra = experiments::Run(FromText(text), a);
  experiments::Run(FromText(text), b);
  EXPECT_NE(Slurp(*a.out_dir / ra.artifacts[0]), Slurp(*b.out_dir / ra.artifacts[0]));
}

TEST(SummaryTest, Format) {
  Report r{"demo", {{"first", 3, true, "ok"}, {"second", 0, false, "bad"}}, {"n"}, {"x.csv"}};
  std::ostringstream out;
  WriteSummary(r, out);
  EXPECT_EQ(out.str(),
            "experiment demo\nPASS [3] first: ok\nFAIL [-] second: bad\nnote: n\n"
            "artifact: x.csv\nRESULT FAIL\n");
  EXPECT_FALSE(r.passed());
}

}  // namespace
}  // namespace nsslab::experiments
