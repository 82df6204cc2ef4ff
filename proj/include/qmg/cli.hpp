#pragma once

#include "qmg/history.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmg::cli {

enum class Mode { Classical, Qmg, TinyQuantum, Tables, Figures };

class InvalidSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exit statuses of `run`.
enum Status : int {
  kOk = 0,
  kConvergenceFailure = 1,
  kInvalidSpec = 2,
  kCheckFailed = 3,
};

struct RunSpec {
  Mode mode = Mode::Qmg;
  int dimension = 1;
  int case_id = 1;
  /// Elements per direction; empty means the reference mesh of the case.
  std::vector<int> elements;
  /// Grid levels 𝓛 + 1; empty means as many as the mesh allows.
  std::optional<int> levels;
  /// V-cycles 𝒱 + 1; empty means as many as ε̃ ≤ tolerance needs.
  std::optional<int> cycles;
  int nu = 6;
  CopyPolicy copies{};
  double pessimism = 1.0;
  double tolerance = 1e-10;
  int max_cycles = 200;
  /// Power-iteration tolerance for ζ_i outside tiny-quantum mode.
  double norm_tolerance = 1e-6;
  std::filesystem::path out_dir = "qmg_out";
  int threads = 1;

  /// Throws InvalidSpecError.
  void validate() const;
  ProblemCase problem() const;
  std::array<int, 2> mesh() const;
};

Mode parse_mode(const std::string& text);
std::string to_string(Mode mode);
/// "T", "T-1" or a non-negative integer.
CopyPolicy parse_copies(const std::string& text);
std::string copies_to_string(const CopyPolicy& copies);

/// Runs one spec and writes its artifacts below `spec.out_dir`. Invalid
/// specs write nothing.
int run(const RunSpec& spec, std::ostream& log);

/// Command-line entry point: flags, optional config file, QMG_THREADS.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qmg::cli
