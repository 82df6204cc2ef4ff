#pragma once

#include "qmg/fem.hpp"
#include "qmg/linalg.hpp"

#include <array>
#include <compare>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qmg {

class InvalidConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MgConfig {
  /// 𝓛 + 1 grids; level 0 is the finest.
  int num_levels = 2;
  /// Total V-cycles (𝒱 + 1).
  int num_cycles = 1;
  /// ν; every level does ν − 1 pre- and ν − 1 post-smoothing steps.
  int nu = 2;
  /// σ dividing the fine system. 0 selects 1.05·λ_max(A⁰).
  double smoother_scale = 0.0;
  /// s in I^{L+1}_L = s·(I^L_{L+1})ᵀ. 0 selects 2^(2−d).
  double restriction_weight = 0.0;

  int coarsest_level() const { return num_levels - 1; }
  void validate() const;
};

struct GridLevel {
  /// σ-scaled Galerkin operator A^L.
  SparseMatrix A;
  /// I^L_{L+1}: level L+1 → level L. Empty on the coarsest level.
  SparseMatrix prolongation;
  /// I^{L+1}_L: level L → level L+1. Empty on the coarsest level.
  SparseMatrix restriction;
  std::array<int, 2> elements{0, 1};

  Index size() const { return A.rows(); }
};

struct GridHierarchy {
  std::vector<GridLevel> levels;
  /// σ-scaled fine right-hand side f.
  Vector rhs;
  double sigma = 1.0;
  double restriction_weight = 1.0;
  int dimension = 1;

  int coarsest_level() const { return static_cast<int>(levels.size()) - 1; }
  Index dofs(int level) const { return levels.at(level).size(); }
  Index finest_dofs() const { return dofs(0); }
};

/// Largest level count the system's grid can be coarsened to.
int max_levels(const AssembledSystem& system);

/// Linear interpolation from `coarse_elements` to 2·`coarse_elements`
/// elements, restricted to the free nodes of each grid.
SparseMatrix prolongation_1d(int coarse_elements, BoundaryKind low, BoundaryKind high);

GridHierarchy build_hierarchy(const AssembledSystem& system, const MgConfig& config);

/// One Richardson sweep on the scaled system: (I − A)v + f.
inline Vector smooth_step(const SparseMatrix& A, const Vector& v, const Vector& f) {
  if (A.rows() != v.size() || A.cols() != v.size() || f.size() != v.size()) {
    throw std::invalid_argument("smooth_step: dimension mismatch");
  }
  return v - A * v + f;
}

/// (V, L, v) address of a multigrid iterate.
struct IterateKey {
  int cycle = 0;
  int level = 0;
  int step = 0;
  auto operator<=>(const IterateKey&) const = default;
};

struct ResidualRecord {
  Vector fine;        ///< r^L_V = f^L − A^L v
  Vector restricted;  ///< I^{L+1}_L r^L_V
};

/// Every iterate and residual of a multigrid run plus its per-cycle error.
struct CycleTrace {
  bool record_iterates = true;
  std::map<IterateKey, Vector> iterates;
  std::map<std::pair<int, int>, ResidualRecord> residuals;
  /// ε̃ after each cycle, relative to the initial error.
  std::vector<double> epsilon;
  double initial_error = 0.0;

  const Vector& iterate(int cycle, int level, int step) const {
    return iterates.at({cycle, level, step});
  }
};

/// One V-cycle from `v0` with right-hand side `f` (both on the finest grid).
/// Iterates are stored in `trace` under cycle index `cycle` when recording.
Vector v_cycle(const GridHierarchy& hierarchy, const Vector& v0, const Vector& f,
               const MgConfig& config, CycleTrace& trace, int cycle = 0);

struct SolveOptions {
  bool record_iterates = true;
  /// Above this size the reference is a deeply converged V-cycle run rather
  /// than a sparse direct solve.
  Index direct_solve_limit = 20000;
  int reference_extra_cycles = 200;
};

struct SolveResult {
  Vector solution;
  CycleTrace trace;
  /// u* used for ε̃.
  Vector reference;
};

/// Reference solution of the scaled fine system.
Vector reference_solution(const GridHierarchy& hierarchy, const MgConfig& config,
                          const SolveOptions& options = {});

SolveResult solve(const GridHierarchy& hierarchy, const MgConfig& config, const Vector& v0,
                  const SolveOptions& options = {});

SolveResult solve(const AssembledSystem& system, const MgConfig& config, const Vector& v0,
                  const SolveOptions& options = {});

/// Smallest cycle count with ε̃ ≤ tolerance, starting from `v0`.
int cycles_to_tolerance(const GridHierarchy& hierarchy, const MgConfig& config, const Vector& v0,
                        double tolerance, int max_cycles, const SolveOptions& options = {});

/// CSV rows `cycle_index,epsilon_tilde`, header included.
void write_convergence_csv(const CycleTrace& trace, std::ostream& out);

}  // namespace qmg
