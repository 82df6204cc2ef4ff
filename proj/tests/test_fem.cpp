#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace qmg;
using namespace qmg::testing;

TEST_SUITE("fem") {

TEST_CASE("problem cases and their boundary sides") {
  CHECK_THROWS_AS(ProblemCase({1, 3}).validate(), InvalidProblemError);
  CHECK_THROWS_AS(ProblemCase({2, 6}).validate(), InvalidProblemError);
  CHECK_THROWS_AS(ProblemCase({3, 1}).validate(), InvalidProblemError);
  CHECK_THROWS_AS(assemble_1d(6, {1, 1}), InvalidProblemError);

  using K = BoundaryKind;
  const auto s3 = ProblemCase{2, 3}.sides();
  CHECK(s3.left == K::Dirichlet);
  CHECK(s3.right == K::Dirichlet);
  CHECK(s3.bottom == K::Neumann);
  CHECK(s3.top == K::Neumann);
  CHECK(ProblemCase{1, 2}.sides().right == K::Neumann);
  CHECK(ProblemCase{1, 2}.neumann_flux_right() == 1.0);
  CHECK(ProblemCase{2, 5}.neumann_flux_right() == 0.0);
}

TEST_CASE("free nodes drop Dirichlet ends only") {
  using K = BoundaryKind;
  CHECK(free_nodes(4, K::Dirichlet, K::Dirichlet) == std::vector<int>{1, 2, 3});
  CHECK(free_nodes(4, K::Dirichlet, K::Neumann) == std::vector<int>{1, 2, 3, 4});
  CHECK(free_nodes(2, K::Neumann, K::Neumann) == std::vector<int>{0, 1, 2});
}

TEST_CASE("1D stiffness and load match the closed form") {
  const int n = 8;
  const double h = 1.0 / n;
  const auto s1 = assemble_1d(n, {1, 1});
  REQUIRE(s1.free_dof_count() == n - 1);
  const Matrix A = s1.matrix;
  for (int i = 0; i < n - 1; ++i) {
    CHECK(A(i, i) == doctest::Approx(2.0 / h).epsilon(1e-15));
    if (i + 1 < n - 1) CHECK(A(i, i + 1) == doctest::Approx(-1.0 / h).epsilon(1e-15));
    CHECK(s1.rhs[i] == doctest::Approx(-h).epsilon(1e-15));
  }
  const auto s2 = assemble_1d(n, {1, 2});
  REQUIRE(s2.free_dof_count() == n);
  CHECK(s2.matrix.coeff(n - 1, n - 1) == doctest::Approx(1.0 / h));
  CHECK(s2.rhs[n - 1] == doctest::Approx(-h / 2 + 1.0));
}

TEST_CASE("1D solutions are nodally exact") {
  for (int case_id : {1, 2}) {
    for (int n : {8, 64, 1024}) {
      CAPTURE(case_id);
      CAPTURE(n);
      const auto sys = assemble_1d(n, {1, case_id});
      const Vector u = direct_solve(sys.matrix, sys.rhs);
      double worst = 0.0;
      for (Index i = 0; i < u.size(); ++i) {
        worst = std::max(worst, std::abs(u[i] - exact_solution_1d(sys.problem, sys.dof_coords[i][0])));
      }
      CHECK(worst <= 1e-10);
    }
  }
}

TEST_CASE("Q4 stiffness equals the Kronecker tensor form for every 2D case") {
  for (int case_id = 1; case_id <= 5; ++case_id) {
    CAPTURE(case_id);
    const ProblemCase problem{2, case_id};
    const auto sys = assemble_2d(8, 4, problem);
    const Matrix oracle = q4_kronecker(8, 4, problem.sides());
    REQUIRE(sys.matrix.rows() == oracle.rows());
    CHECK(rel_diff(Matrix(sys.matrix), oracle) <= 1e-12);
    CHECK((sys.rhs + q4_load(8, 4, problem.sides())).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("Q4 patch test reproduces bilinear Dirichlet data") {
  auto g = [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y + 0.5 * x * y; };
  const ProblemCase problem{2, 1, 1.0, 0.0};
  for (auto [nx, ny] : {std::pair{8, 8}, std::pair{16, 4}}) {
    const auto sys = assemble_2d(nx, ny, problem, g);
    const Vector u = direct_solve(sys.matrix, sys.rhs);
    double worst = 0.0;
    for (Index i = 0; i < u.size(); ++i) {
      worst = std::max(worst, std::abs(u[i] - g(sys.dof_coords[i][0], sys.dof_coords[i][1])));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("assembled systems are symmetric positive definite") {
  for (const auto& c : reduced_cases()) {
    CAPTURE(label(c));
    const auto sys = assemble(c.dim, c.case_id, c.ex, c.ey);
    const Matrix A = sys.matrix;
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::SparseMatrix<double> colmajor = sys.matrix;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(colmajor);
    REQUIRE(ldlt.info() == Eigen::Success);
    CHECK(ldlt.vectorD().minCoeff() > 0.0);
  }
}

TEST_CASE("reference meshes give the published grid sizes") {
  const std::vector<std::tuple<int, int, Index, Index>> expected{
      {1, 1, 8191, 1}, {1, 2, 8192, 1}, {2, 1, 127, 127}, {2, 2, 127, 64},
      {2, 3, 127, 65}, {2, 4, 64, 64},  {2, 5, 64, 65},
  };
  for (const auto& [dim, case_id, nx, ny] : expected) {
    CAPTURE(dim);
    CAPTURE(case_id);
    const auto e = reference_elements({dim, case_id});
    const auto sys = assemble(dim, case_id, e[0], e[1]);
    CHECK(sys.grid_shape[0] == nx);
    CHECK(sys.grid_shape[1] == ny);
    CHECK(sys.free_dof_count() == nx * ny);
  }
}

TEST_CASE("matrix market output") {
  const auto sys = assemble_1d(4, {1, 1});
  std::ostringstream m, r;
  write_matrix_market(sys, m, r);
  CHECK(m.str().rfind("%%MatrixMarket matrix coordinate real", 0) == 0);
  CHECK(m.str().find("3 3 7") != std::string::npos);
  CHECK(r.str().find("3 1") != std::string::npos);
}

}  // TEST_SUITE
