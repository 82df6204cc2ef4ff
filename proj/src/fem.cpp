#include "qmg/fem.hpp"

#include <ostream>
#include <string>

namespace qmg {

namespace {

constexpr BoundaryKind D = BoundaryKind::Dirichlet;
constexpr BoundaryKind N = BoundaryKind::Neumann;

void require_power_of_two(int n, const char* what) {
  if (n < 1 || !is_power_of_two(n)) {
    throw InvalidProblemError(std::string(what) + " must be a power of two, got " +
                              std::to_string(n));
  }
}

}  // namespace

void ProblemCase::validate() const {
  const bool ok = (dimension == 1 && case_id >= 1 && case_id <= 2) ||
                  (dimension == 2 && case_id >= 1 && case_id <= 5);
  if (!ok) {
    throw InvalidProblemError("unknown problem case: dimension " + std::to_string(dimension) +
                              ", case " + std::to_string(case_id));
  }
  if (!(domain_length > 0.0)) throw InvalidProblemError("domain length must be positive");
}

BoundarySides ProblemCase::sides() const {
  validate();
  if (dimension == 1) return case_id == 1 ? BoundarySides{D, D, D, D} : BoundarySides{D, N, D, D};
  switch (case_id) {
    case 1: return {D, D, D, D};
    case 2: return {D, D, D, N};
    case 3: return {D, D, N, N};
    case 4: return {D, N, D, N};
    default: return {D, N, N, N};
  }
}

double ProblemCase::neumann_flux_right() const {
  return dimension == 1 && case_id == 2 ? 1.0 : 0.0;
}

std::vector<int> free_nodes(int n_elements, BoundaryKind low, BoundaryKind high) {
  std::vector<int> nodes;
  nodes.reserve(n_elements + 1);
  for (int k = 0; k <= n_elements; ++k) {
    if (k == 0 && low == D) continue;
    if (k == n_elements && high == D) continue;
    nodes.push_back(k);
  }
  return nodes;
}

AssembledSystem assemble_1d(int n_elements, const ProblemCase& problem) {
  problem.validate();
  if (problem.dimension != 1) throw InvalidProblemError("assemble_1d needs a 1D case");
  require_power_of_two(n_elements, "element count");

  const BoundarySides bc = problem.sides();
  const double h = problem.domain_length / n_elements;
  const std::vector<int> nodes = free_nodes(n_elements, bc.left, bc.right);
  std::vector<int> dof_of(n_elements + 1, -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) dof_of[nodes[i]] = static_cast<int>(i);

  const auto n_free = static_cast<Index>(nodes.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * n_elements);
  Vector rhs = Vector::Zero(n_free);
  for (int e = 0; e < n_elements; ++e) {
    const int local[2] = {e, e + 1};
    for (int a = 0; a < 2; ++a) {
      const int ra = dof_of[local[a]];
      if (ra < 0) continue;
      rhs[ra] -= problem.forcing * h / 2.0;
      for (int b = 0; b < 2; ++b) {
        const int cb = dof_of[local[b]];
        if (cb < 0) continue;  // homogeneous Dirichlet: nothing to move to the rhs
        triplets.emplace_back(ra, cb, (a == b ? 1.0 : -1.0) / h);
      }
    }
  }
  if (bc.right == N) rhs[dof_of[n_elements]] += problem.neumann_flux_right();

  AssembledSystem system;
  system.problem = problem;
  system.matrix.resize(n_free, n_free);
  system.matrix.setFromTriplets(triplets.begin(), triplets.end());
  system.rhs = std::move(rhs);
  system.elements = {n_elements, 1};
  system.grid_shape = {static_cast<int>(n_free), 1};
  system.dof_coords.reserve(nodes.size());
  for (int k : nodes) system.dof_coords.push_back({k * h, 0.0});
  return system;
}

AssembledSystem assemble_2d(int nx_elements, int ny_elements, const ProblemCase& problem,
                            const DirichletData& dirichlet) {
  problem.validate();
  if (problem.dimension != 2) throw InvalidProblemError("assemble_2d needs a 2D case");
  require_power_of_two(nx_elements, "x element count");
  require_power_of_two(ny_elements, "y element count");

  const BoundarySides bc = problem.sides();
  const double hx = problem.domain_length / nx_elements;
  const double hy = problem.domain_length / ny_elements;
  const std::vector<int> fx = free_nodes(nx_elements, bc.left, bc.right);
  const std::vector<int> fy = free_nodes(ny_elements, bc.bottom, bc.top);
  const int nfx = static_cast<int>(fx.size());
  const int nfy = static_cast<int>(fy.size());

  // node (i, j) -> free dof, x index fastest; -1 marks Dirichlet nodes
  std::vector<int> x_rank(nx_elements + 1, -1), y_rank(ny_elements + 1, -1);
  for (int i = 0; i < nfx; ++i) x_rank[fx[i]] = i;
  for (int j = 0; j < nfy; ++j) y_rank[fy[j]] = j;
  auto dof_of = [&](int i, int j) {
    return (x_rank[i] < 0 || y_rank[j] < 0) ? -1 : y_rank[j] * nfx + x_rank[i];
  };

  // Q4 element integrals on an hx×hy rectangle with 2×2 Gauss quadrature.
  constexpr int corner_x[4] = {0, 1, 1, 0};
  constexpr int corner_y[4] = {0, 0, 1, 1};
  const double gauss = 1.0 / std::sqrt(3.0);
  Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
  Eigen::Vector4d fe = Eigen::Vector4d::Zero();
  for (double xi : {-gauss, gauss}) {
    for (double eta : {-gauss, gauss}) {
      Eigen::Vector4d shape, dx, dy;
      for (int a = 0; a < 4; ++a) {
        const double sx = corner_x[a] ? 1.0 : -1.0;
        const double sy = corner_y[a] ? 1.0 : -1.0;
        shape[a] = 0.25 * (1 + sx * xi) * (1 + sy * eta);
        dx[a] = 0.25 * sx * (1 + sy * eta) * (2.0 / hx);
        dy[a] = 0.25 * sy * (1 + sx * xi) * (2.0 / hy);
      }
      const double jac = hx * hy / 4.0;
      ke += jac * (dx * dx.transpose() + dy * dy.transpose());
      fe += jac * shape;
    }
  }

  const Index n_free = static_cast<Index>(nfx) * nfy;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(16 * static_cast<std::size_t>(nx_elements) * ny_elements);
  Vector rhs = Vector::Zero(n_free);
  for (int ey = 0; ey < ny_elements; ++ey) {
    for (int ex = 0; ex < nx_elements; ++ex) {
      int node_i[4], node_j[4], dof[4];
      for (int a = 0; a < 4; ++a) {
        node_i[a] = ex + corner_x[a];
        node_j[a] = ey + corner_y[a];
        dof[a] = dof_of(node_i[a], node_j[a]);
      }
      for (int a = 0; a < 4; ++a) {
        if (dof[a] < 0) continue;
        rhs[dof[a]] -= problem.forcing * fe[a];
        for (int b = 0; b < 4; ++b) {
          if (dof[b] >= 0) {
            triplets.emplace_back(dof[a], dof[b], ke(a, b));
          } else if (dirichlet) {
            rhs[dof[a]] -= ke(a, b) * dirichlet(node_i[b] * hx, node_j[b] * hy);
          }
        }
      }
    }
  }

  AssembledSystem system;
  system.problem = problem;
  system.matrix.resize(n_free, n_free);
  system.matrix.setFromTriplets(triplets.begin(), triplets.end());
  system.matrix.prune(0.0);
  system.rhs = std::move(rhs);
  system.elements = {nx_elements, ny_elements};
  system.grid_shape = {nfx, nfy};
  system.dof_coords.reserve(static_cast<std::size_t>(n_free));
  for (int j : fy) {
    for (int i : fx) system.dof_coords.push_back({i * hx, j * hy});
  }
  return system;
}

double exact_solution_1d(const ProblemCase& problem, double x) {
  problem.validate();
  if (problem.dimension != 1) throw InvalidProblemError("exact solution is 1D only");
  const double f = problem.forcing;
  const double length = problem.domain_length;
  if (problem.case_id == 1) return 0.5 * f * x * (x - length);
  return 0.5 * f * x * x + (problem.neumann_flux_right() - f * length) * x;
}

std::array<int, 2> reference_elements(const ProblemCase& problem) {
  problem.validate();
  if (problem.dimension == 1) return {8192, 1};
  switch (problem.case_id) {
    case 1: return {128, 128};
    case 2:
    case 3: return {128, 64};
    default: return {64, 64};
  }
}

void write_matrix_market(const AssembledSystem& system, std::ostream& matrix_out,
                         std::ostream& rhs_out) {
  const SparseMatrix& A = system.matrix;
  matrix_out << "%%MatrixMarket matrix coordinate real general\n";
  matrix_out << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  matrix_out.precision(17);
  for (Index r = 0; r < A.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(A, r); it; ++it) {
      matrix_out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
  rhs_out << "%%MatrixMarket matrix array real general\n";
  rhs_out << system.rhs.size() << " 1\n";
  rhs_out.precision(17);
  for (Index i = 0; i < system.rhs.size(); ++i) rhs_out << system.rhs[i] << '\n';
}

}  // namespace qmg
