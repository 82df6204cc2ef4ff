#include "qmg/multigrid.hpp"

#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <ostream>
#include <string>

namespace qmg {

namespace {

struct Direction {
  int elements;
  BoundaryKind low;
  BoundaryKind high;
};

std::vector<Direction> directions(const AssembledSystem& system) {
  const BoundarySides bc = system.problem.sides();
  std::vector<Direction> dirs{{system.elements[0], bc.left, bc.right}};
  if (system.problem.dimension == 2) dirs.push_back({system.elements[1], bc.bottom, bc.top});
  return dirs;
}

bool coarsenable(const Direction& d, int times) {
  const int factor = 1 << times;
  if (d.elements % factor != 0) return false;
  return !free_nodes(d.elements / factor, d.low, d.high).empty();
}

}  // namespace

void MgConfig::validate() const {
  if (num_levels < 2) throw InvalidConfigError("num_levels must be at least 2");
  if (num_cycles < 1) throw InvalidConfigError("num_cycles must be at least 1");
  if (nu < 2) throw InvalidConfigError("nu must be at least 2");
  if (smoother_scale < 0.0) throw InvalidConfigError("smoother_scale must be non-negative");
  if (restriction_weight < 0.0) throw InvalidConfigError("restriction_weight must be non-negative");
}

int max_levels(const AssembledSystem& system) {
  const auto dirs = directions(system);
  int times = 0;
  while (true) {
    bool ok = true;
    for (const auto& d : dirs) ok = ok && coarsenable(d, times + 1);
    if (!ok) break;
    ++times;
  }
  return times + 1;
}

SparseMatrix prolongation_1d(int coarse_elements, BoundaryKind low, BoundaryKind high) {
  const int fine_elements = 2 * coarse_elements;
  const std::vector<int> fine = free_nodes(fine_elements, low, high);
  const std::vector<int> coarse = free_nodes(coarse_elements, low, high);
  std::vector<int> fine_rank(fine_elements + 1, -1);
  for (std::size_t i = 0; i < fine.size(); ++i) fine_rank[fine[i]] = static_cast<int>(i);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(3 * coarse.size());
  for (std::size_t c = 0; c < coarse.size(); ++c) {
    const int node = 2 * coarse[c];
    const int col = static_cast<int>(c);
    if (fine_rank[node] >= 0) triplets.emplace_back(fine_rank[node], col, 1.0);
    if (node - 1 >= 0 && fine_rank[node - 1] >= 0) triplets.emplace_back(fine_rank[node - 1], col, 0.5);
    if (node + 1 <= fine_elements && fine_rank[node + 1] >= 0) {
      triplets.emplace_back(fine_rank[node + 1], col, 0.5);
    }
  }
  SparseMatrix P(static_cast<Index>(fine.size()), static_cast<Index>(coarse.size()));
  P.setFromTriplets(triplets.begin(), triplets.end());
  return P;
}

GridHierarchy build_hierarchy(const AssembledSystem& system, const MgConfig& config) {
  config.validate();
  const int available = max_levels(system);
  if (config.num_levels > available) {
    throw InvalidConfigError("grid supports at most " + std::to_string(available) +
                             " levels, requested " + std::to_string(config.num_levels));
  }

  // Checkerboard seed: the top stiffness modes oscillate node to node, so the
  // all-ones vector would be nearly orthogonal to them.
  PowerIterationOptions lambda_options;
  lambda_options.tolerance = 1e-6;
  lambda_options.seed.resize(system.free_dof_count());
  for (int j = 0; j < system.grid_shape[1]; ++j) {
    for (int i = 0; i < system.grid_shape[0]; ++i) {
      lambda_options.seed[j * system.grid_shape[0] + i] = ((i + j) % 2 == 0) ? 1.0 : -1.0;
    }
  }
  const double lambda_max = operator_norm(system.matrix, lambda_options).value;
  double sigma = 1.05 * lambda_max;
  if (config.smoother_scale > 0.0) {
    if (config.smoother_scale < lambda_max) {
      throw InvalidConfigError("smoother_scale " + std::to_string(config.smoother_scale) +
                               " is below the largest eigenvalue estimate " +
                               std::to_string(lambda_max));
    }
    sigma = config.smoother_scale;
  }
  const int dim = system.problem.dimension;
  const double weight = config.restriction_weight > 0.0 ? config.restriction_weight
                                                        : std::pow(2.0, 2 - dim);

  GridHierarchy hierarchy;
  hierarchy.sigma = sigma;
  hierarchy.restriction_weight = weight;
  hierarchy.dimension = dim;
  hierarchy.rhs = system.rhs / sigma;
  hierarchy.levels.resize(config.num_levels);
  hierarchy.levels[0].A = system.matrix / sigma;
  hierarchy.levels[0].elements = system.elements;

  auto dirs = directions(system);
  for (int level = 0; level + 1 < config.num_levels; ++level) {
    GridLevel& fine = hierarchy.levels[level];
    GridLevel& coarse = hierarchy.levels[level + 1];
    for (auto& d : dirs) d.elements /= 2;
    SparseMatrix P = prolongation_1d(dirs[0].elements, dirs[0].low, dirs[0].high);
    if (dim == 2) {
      const SparseMatrix Py = prolongation_1d(dirs[1].elements, dirs[1].low, dirs[1].high);
      SparseMatrix Pxy = Eigen::kroneckerProduct(Py, P);
      P = std::move(Pxy);
    }
    fine.prolongation = P;
    fine.restriction = SparseMatrix(weight * P.transpose());
    coarse.A = SparseMatrix(fine.restriction * (fine.A * fine.prolongation));
    coarse.elements = {dirs[0].elements, dim == 2 ? dirs[1].elements : 1};
  }
  return hierarchy;
}

namespace {

class CycleRunner {
 public:
  CycleRunner(const GridHierarchy& hierarchy, const MgConfig& config, CycleTrace& trace, int cycle)
      : hierarchy_(hierarchy), config_(config), trace_(trace), cycle_(cycle) {}

  Vector run(int level, Vector v, const Vector& f) {
    const GridLevel& grid = hierarchy_.levels[level];
    const int nu = config_.nu;
    record(level, 0, v);
    for (int step = 1; step <= nu - 1; ++step) {
      v = smooth_step(grid.A, v, f);
      record(level, step, v);
    }
    if (level == hierarchy_.coarsest_level()) {
      v = smooth_step(grid.A, v, f);
    } else {
      Vector residual = f - grid.A * v;
      Vector restricted = grid.restriction * residual;
      const Vector correction =
          run(level + 1, Vector::Zero(hierarchy_.dofs(level + 1)), restricted);
      v = v + grid.prolongation * correction;
      if (trace_.record_iterates) {
        trace_.residuals[{cycle_, level}] = {std::move(residual), std::move(restricted)};
      }
    }
    record(level, nu, v);
    for (int step = nu + 1; step <= 2 * nu - 1; ++step) {
      v = smooth_step(grid.A, v, f);
      record(level, step, v);
    }
    return v;
  }

 private:
  void record(int level, int step, const Vector& v) {
    if (trace_.record_iterates) trace_.iterates[{cycle_, level, step}] = v;
  }

  const GridHierarchy& hierarchy_;
  const MgConfig& config_;
  CycleTrace& trace_;
  int cycle_;
};

double error_scale(const Vector& v0, const Vector& reference) {
  const double e0 = (v0 - reference).norm();
  if (e0 > 0.0) return e0;
  const double r = reference.norm();
  return r > 0.0 ? r : 1.0;
}

}  // namespace

Vector v_cycle(const GridHierarchy& hierarchy, const Vector& v0, const Vector& f,
               const MgConfig& config, CycleTrace& trace, int cycle) {
  if (v0.size() != hierarchy.finest_dofs() || f.size() != hierarchy.finest_dofs()) {
    throw std::invalid_argument("v_cycle: vectors must live on the finest grid");
  }
  if (config.num_levels != static_cast<int>(hierarchy.levels.size())) {
    throw InvalidConfigError("v_cycle: config level count does not match the hierarchy");
  }
  return CycleRunner(hierarchy, config, trace, cycle).run(0, v0, f);
}

Vector reference_solution(const GridHierarchy& hierarchy, const MgConfig& config,
                          const SolveOptions& options) {
  const Index n = hierarchy.finest_dofs();
  if (n <= options.direct_solve_limit) {
    const Eigen::SparseMatrix<double> A = hierarchy.levels[0].A;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("reference factorization failed");
    return ldlt.solve(hierarchy.rhs);
  }
  CycleTrace scratch;
  scratch.record_iterates = false;
  Vector v = Vector::Zero(n);
  const int cycles = config.num_cycles + options.reference_extra_cycles;
  for (int c = 0; c < cycles; ++c) v = v_cycle(hierarchy, v, hierarchy.rhs, config, scratch, c);
  return v;
}

SolveResult solve(const GridHierarchy& hierarchy, const MgConfig& config, const Vector& v0,
                  const SolveOptions& options) {
  config.validate();
  SolveResult result;
  result.reference = reference_solution(hierarchy, config, options);
  result.trace.record_iterates = options.record_iterates;
  const double scale = error_scale(v0, result.reference);
  result.trace.initial_error = (v0 - result.reference).norm();

  Vector v = v0;
  double previous = (v0 - result.reference).norm() / scale;
  for (int cycle = 0; cycle < config.num_cycles; ++cycle) {
    v = v_cycle(hierarchy, v, hierarchy.rhs, config, result.trace, cycle);
    const double eps = (v - result.reference).norm() / scale;
    if (!std::isfinite(eps) || (previous > 0.0 && eps > 10.0 * previous)) {
      throw DivergenceError("multigrid diverged at cycle " + std::to_string(cycle) +
                            ": relative error " + std::to_string(eps) + " after " +
                            std::to_string(previous));
    }
    result.trace.epsilon.push_back(eps);
    previous = eps;
  }
  result.solution = std::move(v);
  return result;
}

SolveResult solve(const AssembledSystem& system, const MgConfig& config, const Vector& v0,
                  const SolveOptions& options) {
  return solve(build_hierarchy(system, config), config, v0, options);
}

int cycles_to_tolerance(const GridHierarchy& hierarchy, const MgConfig& config, const Vector& v0,
                        double tolerance, int max_cycles, const SolveOptions& options) {
  const Vector reference = reference_solution(hierarchy, config, options);
  const double scale = error_scale(v0, reference);
  CycleTrace scratch;
  scratch.record_iterates = false;
  Vector v = v0;
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    v = v_cycle(hierarchy, v, hierarchy.rhs, config, scratch, cycle);
    if ((v - reference).norm() / scale <= tolerance) return cycle + 1;
  }
  throw DivergenceError("relative error did not reach " + std::to_string(tolerance) + " within " +
                        std::to_string(max_cycles) + " cycles");
}

void write_convergence_csv(const CycleTrace& trace, std::ostream& out) {
  out << "cycle_index,epsilon_tilde\n";
  out.precision(17);
  for (std::size_t i = 0; i < trace.epsilon.size(); ++i) out << i << ',' << trace.epsilon[i] << '\n';
}

}  // namespace qmg
