#pragma once
// Command-line driver: config resolution, run manifests, CSV and JSON outputs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "topoarray/units.hpp"

namespace topo::cli {

enum ExitCode { kOk = 0, kInternal = 1, kConfigError = 2, kNumericalError = 3, kIoError = 4 };

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr const char* kFormatVersion = "1";

// Hands out config values with defaults and records each one, so resolved()
// holds every key the run used.
class Resolver {
 public:
  explicit Resolver(Config in) : in_(in), out_(std::move(in)) {}
  double num(const std::string& k);
  double num(const std::string& k, double def);
  long integer(const std::string& k, long def);
  bool flag(const std::string& k, bool def);
  std::string str(const std::string& k, const std::string& def);
  std::vector<double> list(const std::string& k);
  std::vector<double> list(const std::string& k, const std::string& def);
  // "start:stop:step" or an explicit list
  std::vector<double> times(const std::string& k, const std::string& def);
  bool has(const std::string& k) const { return in_.has(k); }
  const Config& resolved() const { return out_; }

 private:
  Config in_, out_;
};

// Physical keys with their defaults, then derive_params on the result.
PhysicalParams resolve_physics(Resolver& r);

struct Column {
  std::string name, unit;  // unit "-" for dimensionless or labels
};

class Table {
 public:
  Table(std::string kind, std::vector<Column> cols) : kind_(std::move(kind)), cols_(std::move(cols)) {}
  void add(std::vector<std::string> row);
  size_t rows() const { return rows_.size(); }
  // First line: "# topoarray:<kind> v<format> run_id=<id> units: name[unit] ...",
  // then the comma-separated header and rows.
  std::string render(const std::string& run_id) const;
  void write(const std::filesystem::path& p, const std::string& run_id) const;

  static std::string num(double v);
  static std::string integer(long v);

 private:
  std::string kind_;
  std::vector<Column> cols_;
  std::vector<std::vector<std::string>> rows_;
};

struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> eps_scale;
  std::filesystem::path out_dir = ".";
};

struct RunResult {
  std::string run_id;
  std::vector<std::string> files;  // written, relative to out_dir
  nlohmann::json summary;
  nlohmann::json manifest;
};

const std::vector<std::string>& subcommands();

// Runs one subcommand and writes its outputs plus one manifest line appended
// to manifests.jsonl. `inputs` are hashed into the manifest.
// Throws ConfigError, NumericalError or IoError.
RunResult run(const std::string& subcommand, const Config& cfg, const Flags& flags,
              const std::vector<std::filesystem::path>& inputs = {});

std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::filesystem::path& p);

// argv front end; returns an ExitCode.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace topo::cli
