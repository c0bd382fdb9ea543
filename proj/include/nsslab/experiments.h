#pragma once

// Configuration-driven experiments: INI configs, the experiment registry,
// and runners that write CSV artifacts plus a pass/fail summary.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "nsslab/types.h"

namespace nsslab::experiments {

/// Sections and keys:
///   [experiment] name
///   [problem]    kind, a, b, f, q, r, dataset, matrices, instances, envelope_dirs,
///                seed
///   [dynamics]   type, mode, eta, c, delta, x0, horizon
///   [noise]      shape, intensities, scan_intensities, t_on, t_off
///   [mc]         paths, dt, horizon, master_seed, epsilon, threads, kappa,
///                export_paths, scan_paths, probes
///   [output]     dir
/// Relative file paths resolve against the config file's directory.
class Config {
 public:
  /// ConfigurationError with "file:line" for syntax errors and
  /// "file: section.key" for unknown keys.
  static Config Load(const std::filesystem::path& path);
  static Config Parse(std::istream& in, const std::string& source,
                      const std::filesystem::path& base_dir);

  const std::string& source() const { return source_; }
  std::string name() const;

  bool Has(const std::string& key) const;
  std::string Text(const std::string& key, const std::string& fallback) const;
  double Real(const std::string& key, double fallback) const;
  /// Real that must be > 0.
  double Positive(const std::string& key, double fallback) const;
  /// Integer that must be >= 1.
  std::size_t Count(const std::string& key, std::size_t fallback) const;
  std::uint64_t Seed(const std::string& key, std::uint64_t fallback) const;
  /// Comma-separated list.
  std::vector<double> Reals(const std::string& key, const std::vector<double>& fallback) const;
  /// Rows separated by ';', entries by ',' or spaces.
  Mat Matrix(const std::string& key, const Mat& fallback) const;
  /// Resolved path; ConfigurationError if missing or not an existing file.
  std::filesystem::path File(const std::string& key) const;

  void Set(const std::string& key, const std::string& value);

 private:
  Config(boost::property_tree::ptree tree, std::string source, std::filesystem::path base_dir);
  std::string Raw(const std::string& key) const;
  [[noreturn]] void Fail(const std::string& key, const std::string& what) const;

  boost::property_tree::ptree tree_;
  std::string source_;
  std::filesystem::path base_dir_;
};

struct Check {
  std::string name;
  /// Acceptance criterion this check evidences (0 for none).
  int criterion = 0;
  bool pass = false;
  std::string detail;
};

struct Report {
  std::string experiment;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  /// File names written into the output directory.
  std::vector<std::string> artifacts;
  bool passed() const;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed_override;
};

struct ExperimentInfo {
  std::string name;
  /// One line: the mathematical statement the experiment exercises.
  std::string statement;
};

const std::vector<ExperimentInfo>& Registry();
/// One line per experiment: "name  statement".
std::string RegistryText();

/// Registry membership, numeric ranges and referenced files.
void Validate(const Config& config);

/// Runs the named experiment, writes artifacts and summary.txt into the
/// output directory (config output.dir, default out/<name>).
Report Run(const Config& config, const RunOptions& options = {});

/// "PASS|FAIL [criterion] name: detail" lines followed by notes.
void WriteSummary(const Report& report, std::ostream& out);

}  // namespace nsslab::experiments
