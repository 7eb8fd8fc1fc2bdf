#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmcf/weyl.hpp"

namespace kmcf {

using Complex = std::complex<double>;

/// (t, h) with h given by its coweight coordinates z_i = <h, a_i^vee>.
struct SpectralPoint {
  Complex t;
  std::vector<Complex> z;

  std::vector<double> imag_pairings() const;
  nlohmann::json to_json() const;
};

/// e^{2 pi i sum_i m_i z_i}.
Complex exponential(std::span<const std::int64_t> coroot, std::span<const Complex> z);

/// s_i acting on pairings: p_j -> p_j - A(j, i) p_i.
void reflect_pairings(const Gcm& gcm, int i, std::span<Complex> z);
void reflect_pairings(const Gcm& gcm, int i, std::span<double> p);
/// w = s_{word[0]} ... s_{word[k-1]} acting on pairings (rightmost letter first).
std::vector<Complex> apply_word(const Gcm& gcm, std::span<const int> word, std::span<const Complex> z);
std::vector<double> apply_word(const Gcm& gcm, std::span<const int> word, std::span<const double> p);

enum class FacetStatus { Interior, NotInteriorInfiniteStabilizer, Unresolved };
std::string_view to_string(FacetStatus s);

struct FacetDescriptor {
  /// Reflections in the order applied; the input equals apply_word(word, representative).
  std::vector<int> word;
  IndexSet subset;
  std::vector<double> representative;
  FacetStatus status = FacetStatus::Unresolved;

  nlohmann::json to_json() const;
};

/// Reduces pairings into the closed dominant chamber, pivoting on the
/// smallest index with p_i < -tol.
FacetDescriptor classify(const Gcm& gcm, std::span<const double> pairings, double tol = 1e-9, int max_iter = 10000);

struct AnalyticOptions {
  int height = 40;  ///< product cutoff on coroot height
  int length = 20;  ///< sum cutoff on Weyl length
  double tail_target = 1e-8;
  double tol = 1e-9;
  int max_iter = 10000;
  double denominator_guard = 1e-12;
  /// |t| must stay below r_est * (1 - radius_margin).
  double radius_margin = 0.02;
  /// Length and element cap of the counting enumeration behind r_est.
  int radius_length = 60;
  std::size_t radius_elements = 200'000;
  /// eval_C_X averages over a circle of this radius (in every z_i) when Im z
  /// is within wall_radius / 4 of a wall.
  double wall_radius = 0.02;
  int wall_nodes = 32;
  /// Permutes the root product and the Weyl summation order.
  std::optional<std::uint64_t> shuffle_seed;
};

struct ConvergenceReport {
  /// Value with the Weyl sum cut at length k, for k = 0..L.
  std::vector<Complex> partial_by_length;
  /// Relative bound on the omitted product factors (coroot height > H).
  double product_tail = 0.0;
  bool product_tail_rigorous = true;
  /// Sum tail envelope A * B * rho^{L+1} / (1 - rho), rho = r1 / min(r_est, 1).
  double r1 = 0.0;
  double rho = 0.0;
  double sum_tail_constant = 0.0;  ///< A * B
  std::size_t exceptional_roots = 0;  ///< |S|
  bool exceptional_set_complete = true;
  std::vector<double> sum_tail_envelope;  ///< indexed by L
  double sum_tail = 0.0;
  double tail_estimate = 0.0;
  bool tail_target_met = true;
  double min_denominator = 0.0;
  bool near_pole = false;
  /// Sum form only: factors of roots beyond height H kept because w sends
  /// them negative or to height <= H.
  std::size_t deep_images = 0;
  bool reduced = false;
  std::vector<int> reduction_word;
  /// Nodes of the wall circle average, 0 when evaluated directly.
  int wall_nodes = 0;
  double wall_radius = 0.0;
  std::string form;

  nlohmann::json to_json() const;
};

struct Evaluation {
  Complex value;
  ConvergenceReport report;
};

struct WordCheck {
  std::vector<int> word;
  bool in_parabolic = false;  ///< word support is contained in X
  std::optional<Complex> value;
  double deviation = 0.0;
  std::optional<nlohmann::json> error;
};

struct InvarianceReport {
  Complex base_value;
  std::vector<WordCheck> words;
  double max_deviation_parabolic = 0.0;  ///< over words in W_X
  double max_deviation_full = 0.0;       ///< over all words
  std::size_t failures = 0;

  nlohmann::json to_json() const;
};

struct AtlasResult {
  FacetDescriptor facet;
  IndexSet chart;
  Evaluation evaluation;
  std::vector<std::pair<IndexSet, Complex>> other_charts;
  double max_chart_deviation = 0.0;
  bool charts_agree = true;

  nlohmann::json to_json() const;
};

/// Evaluators for C(t, h) and C_X(t, h) over tables built once per GCM. All
/// methods are const and safe to call concurrently.
class Analytic {
 public:
  explicit Analytic(const Gcm& gcm, AnalyticOptions options = {});

  const Gcm& gcm() const { return gcm_; }
  const AnalyticOptions& options() const { return options_; }
  const RootTable& roots() const { return tables_.first; }
  const WeylTable& weyl() const { return tables_.second; }
  /// Radius of convergence of W(t), estimated from a counting enumeration.
  double radius() const { return radius_; }
  const PoincareSeries& growth() const { return growth_; }

  /// Product form, after moving Im z into the dominant chamber.
  Evaluation eval_C(const SpectralPoint& p) const;
  /// sum_w prod_b (1 - t q_{w b}) / (1 - q_{w b}) at the given point, no reduction.
  Evaluation eval_C_sumform(const SpectralPoint& p) const;
  /// W_X(t) * sum_{w in W^X} prod_{Phi(w)} (t - q) / (1 - t q) * prod_{b > 0, b not in w Phi_X} (1 - t q) / (1 - q),
  /// at the point of the closed chamber in the orbit. Near walls the value is
  /// the mean over a small circle around the point.
  Evaluation eval_C_X(const SpectralPoint& p, IndexSet x) const;
  /// W_X(t) * sum_{w in W^X} prod_{a in Phi_+ - Phi_X} (1 - t q_{w a}) / (1 - q_{w a}), no reduction.
  Evaluation eval_C_X_sumform(const SpectralPoint& p, IndexSet x) const;

  /// Compares the evaluator at p against p moved by each word. X empty uses
  /// the unreduced sum form, otherwise eval_C_X.
  InvarianceReport verify_invariance(const SpectralPoint& p, IndexSet x,
                                     const std::vector<std::vector<int>>& words) const;

  /// Picks the minimal chart X containing the point and evaluates there;
  /// cross-checks every other W-finite chart containing it.
  AtlasResult continuation_atlas(const SpectralPoint& p, double agreement_tol = 1e-6) const;

  /// Exact W_X(t) coefficients.
  std::vector<std::uint64_t> parabolic_poincare(IndexSet x) const;
  /// All words of length <= k (one per element), in enumeration order.
  std::vector<std::vector<int>> words_up_to(int k) const;

 private:
  struct Located {
    std::vector<Complex> reduced;  ///< a point of Gamma_X in the same W-orbit
    std::vector<int> word;
  };
  void check_point(const SpectralPoint& p) const;
  void check_subset(IndexSet x) const;
  Located locate(const SpectralPoint& p, IndexSet x) const;
  Evaluation product_form(const SpectralPoint& p, IndexSet x, const Located& where) const;
  Evaluation wall_average(const SpectralPoint& p, IndexSet x, const Located& where) const;
  void fill_tails(ConvergenceReport& rep, const SpectralPoint& p, IndexSet x, const std::vector<Complex>& reduced,
                  Complex scale, Complex value) const;
  std::vector<std::size_t> order(std::size_t n, std::uint64_t salt) const;

  Gcm gcm_;
  AnalyticOptions options_;
  std::pair<RootTable, WeylTable> tables_;
  std::optional<RootTable> tail_roots_;  ///< coroot height <= 2H, for the C_X product tail
  PoincareSeries growth_;
  double radius_;
  std::vector<std::size_t> inverse_;  ///< index of w^{-1} in the Weyl table
};

}  // namespace kmcf
