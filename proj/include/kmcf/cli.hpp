#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace kmcf::cli {

using Complex = std::complex<double>;

/// Bad flags or literals; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses "a+bi", "a-bi", "bi", "a", "i", "-i" (j is accepted for i).
Complex parse_complex(std::string_view text);
std::string format_complex(Complex c);

/// start:stop:count, inclusive at both ends; a bare number is a single value.
struct GridAxis {
  double start = 0.0;
  double stop = 0.0;
  int count = 1;

  static GridAxis parse(std::string_view text);
  std::vector<double> values() const;
  std::string to_string() const;
  bool operator==(const GridAxis&) const = default;
};

/// "{1,3}", "1,3", "{}" or "" (1-based).
std::vector<int> parse_subset(std::string_view text);

/// Fully resolved job: every default is filled in, so the canonical JSON
/// form round-trips exactly.
struct JobConfig {
  std::string command;
  std::string gcm;  ///< file path, or inline JSON ({"matrix": ...} or a bare matrix)
  int height = 0;
  int degree = 0;
  int max_length = 0;
  double tol = 1e-9;
  double tail_target = 1e-8;
  std::string format = "json";
  std::string out;  ///< empty: standard output

  bool coroot_height = false;                       // roots
  std::optional<std::vector<int>> coset;            // weyl, poincare
  std::optional<std::vector<int>> check_macdonald;  // correction
  bool inverse = false;                             // correction

  std::optional<Complex> t;       // eval, verify
  std::vector<Complex> z;         // eval, verify
  std::vector<double> pairings;   // classify
  std::optional<std::vector<int>> chart;
  std::string form = "product";   // product | sum
  bool atlas = false;
  int max_word = 3;
  std::vector<std::vector<int>> words;

  GridAxis t_re, t_im;            // grid
  std::vector<GridAxis> z_re, z_im;
  int threads = 1;

  std::uint64_t seed = 1;         // check
  int points = 5;

  nlohmann::json to_json() const;
  static JobConfig from_json(const nlohmann::json& j);
  bool operator==(const JobConfig&) const = default;
};

/// Parses argv (argv[0] is the program name). Throws UsageError, or returns
/// nullopt after printing help to `out`.
std::optional<JobConfig> parse_args(int argc, const char* const* argv, std::ostream& out);

/// Executes a job. Returns 0, 1 after a domain error or a failed check
/// (structured JSON on `err`), or 2 for a usage error.
int run(const JobConfig& job, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kmcf::cli
