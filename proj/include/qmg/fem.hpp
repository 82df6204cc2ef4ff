#pragma once

#include "qmg/linalg.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace qmg {

class InvalidProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BoundaryKind { Dirichlet, Neumann };

/// Boundary kinds of the four sides of the unit square (or the two ends of
/// the unit interval, which use only `left` and `right`).
struct BoundarySides {
  BoundaryKind left = BoundaryKind::Dirichlet;
  BoundaryKind right = BoundaryKind::Dirichlet;
  BoundaryKind bottom = BoundaryKind::Dirichlet;
  BoundaryKind top = BoundaryKind::Dirichlet;
};

/// One of the seven benchmark Poisson problems: 1D Cases 1–2, 2D Cases 1–5.
struct ProblemCase {
  int dimension = 1;
  int case_id = 1;
  double domain_length = 1.0;
  double forcing = 1.0;

  void validate() const;
  BoundarySides sides() const;
  /// Neumann flux on the right end in 1D (u'(L) = 1 for Case 2); all 2D
  /// Neumann data is zero.
  double neumann_flux_right() const;
};

/// Free-dof Galerkin system of −∇²u = −f with Dirichlet dofs eliminated.
struct AssembledSystem {
  ProblemCase problem;
  SparseMatrix matrix;
  Vector rhs;
  /// Elements per direction (second entry is 1 in 1D).
  std::array<int, 2> elements{0, 1};
  /// Free nodes per direction (second entry is 1 in 1D).
  std::array<int, 2> grid_shape{0, 1};
  std::vector<std::array<double, 2>> dof_coords;

  Index free_dof_count() const { return rhs.size(); }
};

/// Dirichlet data g(x, y); the benchmark cases use g = 0.
using DirichletData = std::function<double(double, double)>;

AssembledSystem assemble_1d(int n_elements, const ProblemCase& problem);

AssembledSystem assemble_2d(int nx_elements, int ny_elements, const ProblemCase& problem,
                            const DirichletData& dirichlet = {});

/// Closed-form solution of u'' = 1 on (0, 1) for the 1D cases.
double exact_solution_1d(const ProblemCase& problem, double x);

/// Indices of the nodes 0..n_elements that survive Dirichlet elimination
/// along one direction.
std::vector<int> free_nodes(int n_elements, BoundaryKind low, BoundaryKind high);

/// Element counts reproducing the published grid for each benchmark case.
std::array<int, 2> reference_elements(const ProblemCase& problem);

/// Writes the matrix and right-hand side in Matrix Market coordinate format.
void write_matrix_market(const AssembledSystem& system, std::ostream& matrix_out,
                         std::ostream& rhs_out);

}  // namespace qmg
