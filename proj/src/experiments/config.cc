#include <boost/property_tree/ini_parser.hpp>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nsslab/errors.h"
#include "nsslab/experiments.h"

namespace nsslab::experiments {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& Schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"experiment", {"name"}},
      {"problem",
       {"kind", "a", "b", "f", "q", "r", "dataset", "matrices", "instances", "envelope_dirs",
        "seed"}},
      {"dynamics", {"type", "mode", "eta", "c", "delta", "x0", "horizon"}},
      {"noise", {"shape", "intensities", "scan_intensities", "t_on", "t_off"}},
      {"mc",
       {"paths", "dt", "horizon", "master_seed", "epsilon", "threads", "kappa", "export_paths",
        "scan_paths", "probes"}},
      {"output", {"dir"}},
  };
  return schema;
}

std::string Trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::optional<double> ToReal(const std::string& text) {
  const std::string t = Trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(Trim(item));
  return out;
}

}  // namespace

Config::Config(pt::ptree tree, std::string source, std::filesystem::path base_dir)
    : tree_(std::move(tree)), source_(std::move(source)), base_dir_(std::move(base_dir)) {}

Config Config::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config " + path.string());
  return Parse(in, path.string(), path.parent_path());
}

Config Config::Parse(std::istream& in, const std::string& source,
                     const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.line() << ": " << e.message();
    throw ConfigurationError(msg.str());
  }
  const auto& schema = Schema();
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (body.empty()) throw ConfigurationError(source + ": key '" + section + "' outside a section");
    if (it == schema.end()) throw ConfigurationError(source + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key))
        throw ConfigurationError(source + ": unknown key " + section + "." + key);
  }
  Config cfg(std::move(tree), source, base_dir);
  if (!cfg.Has("experiment.name")) throw ConfigurationError(source + ": missing experiment.name");
  return cfg;
}

std::string Config::name() const { return Raw("experiment.name"); }

bool Config::Has(const std::string& key) const {
  return static_cast<bool>(tree_.get_optional<std::string>(key));
}

std::string Config::Raw(const std::string& key) const {
  return Trim(tree_.get<std::string>(key));
}

void Config::Fail(const std::string& key, const std::string& what) const {
  throw ConfigurationError(source_ + ": " + key + ": " + what);
}

std::string Config::Text(const std::string& key, const std::string& fallback) const {
  return Has(key) ? Raw(key) : fallback;
}

double Config::Real(const std::string& key, double fallback) const {
  if (!Has(key)) return fallback;
  const auto v = ToReal(Raw(key));
  if (!v) Fail(key, "expected a number, got '" + Raw(key) + "'");
  return *v;
}

double Config::Positive(const std::string& key, double fallback) const {
  const double v = Real(key, fallback);
  if (!(v > 0.0)) Fail(key, "must be positive");
  return v;
}

std::size_t Config::Count(const std::string& key, std::size_t fallback) const {
  if (!Has(key)) return fallback;
  const std::string raw = Raw(key);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc() || ptr != raw.data() + raw.size() || raw.empty())
    Fail(key, "expected a positive integer, got '" + raw + "'");
  if (v < 1) Fail(key, "must be at least 1");
  return v;
}

std::uint64_t Config::Seed(const std::string& key, std::uint64_t fallback) const {
  if (!Has(key)) return fallback;
  const std::string raw = Raw(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc() || ptr != raw.data() + raw.size() || raw.empty())
    Fail(key, "expected an unsigned integer, got '" + raw + "'");
  return v;
}

std::vector<double> Config::Reals(const std::string& key,
                                  const std::vector<double>& fallback) const {
  if (!Has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : Split(Raw(key), ',')) {
    const auto v = ToReal(item);
    if (!v) Fail(key, "expected a comma-separated list of numbers");
    out.push_back(*v);
  }
  if (out.empty()) Fail(key, "empty list");
  return out;
}

Mat Config::Matrix(const std::string& key, const Mat& fallback) const {
  if (!Has(key)) return fallback;
  std::vector<std::vector<double>> rows;
  for (const auto& row : Split(Raw(key), ';')) {
    std::vector<double> entries;
    std::string cleaned = row;
    for (char& c : cleaned)
      if (c == ',') c = ' ';
    std::istringstream in(cleaned);
    std::string tok;
    while (in >> tok) {
      const auto v = ToReal(tok);
      if (!v) Fail(key, "bad matrix entry '" + tok + "'");
      entries.push_back(*v);
    }
    rows.push_back(std::move(entries));
  }
  if (rows.empty() || rows[0].empty()) Fail(key, "empty matrix");
  Mat m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) Fail(key, "ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::filesystem::path Config::File(const std::string& key) const {
  if (!Has(key)) Fail(key, "required file path is missing");
  std::filesystem::path p = Raw(key);
  if (p.is_relative()) p = base_dir_ / p;
  if (!std::filesystem::is_regular_file(p)) Fail(key, "no such file " + p.string());
  return p;
}

void Config::Set(const std::string& key, const std::string& value) { tree_.put(key, value); }

}  // namespace nsslab::experiments
