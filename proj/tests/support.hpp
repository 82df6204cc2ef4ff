#pragma once

#include "qmg/fem.hpp"
#include "qmg/linalg.hpp"

#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/KroneckerProduct>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace qmg::testing {

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

inline double rel_diff(const SparseMatrix& a, const SparseMatrix& b) {
  return rel_diff(Matrix(a), Matrix(b));
}

/// 1D P1 stiffness, mass and load (∫φ_i) on n uniform elements over
/// (0, length), all n + 1 nodes, no boundary treatment.
struct Line {
  Matrix K, M;
  Vector load;
};

inline Line p1_line(int n, double length = 1.0) {
  const double h = length / n;
  Line l{Matrix::Zero(n + 1, n + 1), Matrix::Zero(n + 1, n + 1), Vector::Zero(n + 1)};
  for (int e = 0; e < n; ++e) {
    l.K.block(e, e, 2, 2) += (Matrix(2, 2) << 1, -1, -1, 1).finished() / h;
    l.M.block(e, e, 2, 2) += (Matrix(2, 2) << 2, 1, 1, 2).finished() * h / 6.0;
    l.load.segment(e, 2).array() += h / 2.0;
  }
  return l;
}

inline Matrix select(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

inline Vector select(const Vector& v, const std::vector<int>& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

/// Free-dof Q4 stiffness of a tensor grid: Ky ⊗ Mx + My ⊗ Kx (x fastest).
inline Matrix q4_kronecker(int nx, int ny, const BoundarySides& s) {
  const Line lx = p1_line(nx), ly = p1_line(ny);
  const auto fx = free_nodes(nx, s.left, s.right);
  const auto fy = free_nodes(ny, s.bottom, s.top);
  const Matrix Kx = select(lx.K, fx), Mx = select(lx.M, fx);
  const Matrix Ky = select(ly.K, fy), My = select(ly.M, fy);
  return Matrix(Eigen::kroneckerProduct(Ky, Mx)) + Matrix(Eigen::kroneckerProduct(My, Kx));
}

inline Vector q4_load(int nx, int ny, const BoundarySides& s) {
  const Vector wx = select(p1_line(nx).load, free_nodes(nx, s.left, s.right));
  const Vector wy = select(p1_line(ny).load, free_nodes(ny, s.bottom, s.top));
  return Eigen::kroneckerProduct(wy, wx);
}

inline Vector direct_solve(const SparseMatrix& A, const Vector& b) {
  const Eigen::SparseMatrix<double> colmajor = A;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(colmajor);
  return ldlt.solve(b);
}

inline AssembledSystem assemble(int dim, int case_id, int ex, int ey = 1) {
  return dim == 1 ? assemble_1d(ex, ProblemCase{1, case_id})
                  : assemble_2d(ex, ey, ProblemCase{2, case_id});
}

/// Reduced meshes used wherever a test sweeps all seven cases.
struct ReducedCase {
  int dim, case_id, ex, ey;
};

inline const std::vector<ReducedCase>& reduced_cases() {
  static const std::vector<ReducedCase> cases{
      {1, 1, 256, 1}, {1, 2, 256, 1}, {2, 1, 32, 32}, {2, 2, 32, 16},
      {2, 3, 32, 16}, {2, 4, 16, 16}, {2, 5, 16, 16},
  };
  return cases;
}

inline std::string label(const ReducedCase& c) {
  return std::to_string(c.dim) + "D case " + std::to_string(c.case_id);
}

/// Fresh empty directory below the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("qmg_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace qmg::testing
