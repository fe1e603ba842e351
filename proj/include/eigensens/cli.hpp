#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eigensens/dataset.hpp"
#include "eigensens/eigen_system.hpp"

namespace eigensens::cli {

enum class Mode { approx, exact, hybrid };
enum class OutputFormat { json, csv };

struct RunConfig {
  std::filesystem::path input;
  std::optional<std::string> label_column;
  bool header = true;
  EstimatorSpec spec;
  std::size_t retained = 2;
  double delta = 0.1;
  std::optional<std::vector<RankPair>> pairs;
  Mode mode = Mode::approx;
  OutputFormat format = OutputFormat::json;
  std::optional<std::filesystem::path> out;
  int precision = 6;
  unsigned jobs = 1;
  std::size_t cascade_rounds = 1;
};

/// Throws ConfigError on values no dataset could satisfy.
void validate(const RunConfig& config);

/// "2:3,3:4" -> {(2,3), (3,4)}. Throws ConfigError on malformed text.
std::vector<RankPair> parse_pairs(const std::string& text);

// Each command writes its primary document to config.out (or `out` when unset);
// CSV output with a path also writes companion tables next to it. Warnings go to `err`.
void cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_influence(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_switching(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full command line (without argv[0]). Returns the process exit code:
/// 0 success, 1 data error, 2 configuration error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eigensens::cli
