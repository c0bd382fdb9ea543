#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "nsslab/errors.h"
#include "nsslab/experiments.h"

namespace ex = nsslab::experiments;
namespace fs = std::filesystem;

namespace {

const std::map<int, std::string> kCriteria{
    {1, "OU stationary law"},
    {2, "generator exactness"},
    {3, "dissipation certificates"},
    {4, "LQR scalar closed form"},
    {5, "LQR K-PL sampling"},
    {6, "logistic suite"},
    {7, "phi-ladder"},
    {8, "NSS gain-curve behaviour"},
    {9, "scNSS contrast"},
    {10, "determinism across thread counts"},
    {11, "underdamped convergence"},
};

std::string ReadAll(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Tally {
  int passed = 0;
  int failed = 0;
  std::vector<std::string> failures;
  void Add(bool pass, const std::string& what) {
    if (pass) {
      ++passed;
    } else {
      ++failed;
      failures.push_back(what);
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runs every shipped config and prints one line per acceptance criterion"};
  std::string configs = NSSLAB_SOURCE_DIR "/configs";
  std::string out = "acceptance_out";
  int threads = 8;
  app.add_option("--configs", configs, "Directory of .ini configs")->check(CLI::ExistingDirectory);
  app.add_option("--out", out, "Scratch directory for artifacts");
  app.add_option("--threads", threads, "Thread count for the determinism rerun")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(configs))
    if (entry.path().extension() == ".ini") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::map<int, Tally> tally;
  for (const auto& file : files) {
    try {
      const auto config = ex::Config::Load(file);
      const std::string name = config.name();
      std::cerr << "running " << name << "\n";
      ex::RunOptions serial;
      serial.out_dir = fs::path(out) / "threads1" / name;
      serial.threads = 1;
      const auto report = ex::Run(config, serial);
      for (const auto& c : report.checks)
        if (c.criterion > 0) tally[c.criterion].Add(c.pass, name + ": " + c.name + ": " + c.detail);

      ex::RunOptions parallel;
      parallel.out_dir = fs::path(out) / ("threads" + std::to_string(threads)) / name;
      parallel.threads = threads;
      const auto rerun = ex::Run(config, parallel);
      std::size_t csvs = 0;
      for (const auto& artifact : report.artifacts) {
        if (fs::path(artifact).extension() != ".csv") continue;
        ++csvs;
        const bool same =
            ReadAll(*serial.out_dir / artifact) == ReadAll(*parallel.out_dir / artifact);
        tally[10].Add(same, name + ": " + artifact + " differs between 1 and " +
                                std::to_string(threads) + " threads");
      }
      tally[10].Add(csvs > 0 && rerun.artifacts == report.artifacts,
                    name + ": artifact sets differ or contain no CSV");
    } catch (const std::exception& e) {
      for (const auto& [id, title] : kCriteria) tally[id].Add(false, file.string() + ": " + e.what());
    }
  }

  bool all = true;
  for (const auto& [id, title] : kCriteria) {
    const auto& t = tally[id];
    const bool pass = t.failed == 0 && t.passed > 0;
    all = all && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " " << id << " " << title << " (" << t.passed
              << " checks passed, " << t.failed << " failed)\n";
  }
  for (const auto& [id, t] : tally)
    for (const auto& f : t.failures) std::cout << "  criterion " << id << ": " << f << "\n";
  return all ? 0 : 1;
}
