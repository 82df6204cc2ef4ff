#include "qmg/analysis.hpp"
#include "qmg/block_encoding.hpp"

#include "support.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>

using namespace qmg;
using namespace qmg::testing;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

MgConfig config(int levels, int cycles, int nu) {
  MgConfig c;
  c.num_levels = levels;
  c.num_cycles = cycles;
  c.nu = nu;
  return c;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

bool monotone(const std::vector<double>& eps) {
  for (std::size_t i = 1; i < eps.size(); ++i) {
    if (eps[i] > eps[i - 1]) return false;
  }
  return true;
}

double spectral_norm(const Matrix& m) { return Eigen::BDCSVD<Matrix>(m).singularValues()[0]; }

Verdict table_reproduction() {
  Verdict v;
  int cells = 0;
  std::string mismatches;
  for (const auto& row : reproduce_tables()) {
    for (const auto& cell : row.cells) {
      ++cells;
      if (cell.match()) continue;
      v.pass = false;
      mismatches += " [" + row.row.label() + " " + cell.column + ": published " +
                    std::to_string(cell.published) + ", computed " + std::to_string(cell.computed) + "]";
    }
  }
  v.detail = std::to_string(cells) + " cells";
  if (!v.pass) v.detail += ", mismatches:" + mismatches;
  return v;
}

Verdict oracle_equivalence() {
  struct Run {
    int dim, case_id, ex, ey;
  };
  const std::vector<Run> runs{{1, 1, 1024, 1}, {1, 2, 512, 1}, {1, 1, 256, 1}, {1, 2, 256, 1},
                              {2, 1, 32, 32},  {2, 2, 32, 16}, {2, 3, 32, 16}, {2, 4, 32, 32},
                              {2, 5, 32, 32}};
  Verdict v;
  double worst = 0.0;
  Index blocks = 0;
  for (const Run& r : runs) {
    const auto sys = assemble(r.dim, r.case_id, r.ex, r.ey);
    const int levels = std::min(max_levels(sys), r.dim == 1 ? 9 : 5);
    for (int cycles : {1, 3}) {
      const MgConfig cfg = config(levels, cycles, 3);
      const GridHierarchy h = build_hierarchy(sys, cfg);
      const Vector v0 = Vector::LinSpaced(h.finest_dofs(), -1.0, 1.0);
      const SolveResult classical = solve(h, cfg, v0);
      const QmgRun run = run_qmg(h, cfg, v0);
      const OracleDeviation d = oracle_deviation(run.x, classical.trace);
      worst = std::max(worst, d.worst);
      blocks += d.blocks_checked;
      if (d.blocks_checked != run.indexer.final_index() + 1 || d.worst > 1e-12) v.pass = false;
    }
  }
  v.detail = std::to_string(runs.size() * 2) + " runs, " + std::to_string(blocks) +
             " blocks, worst relative deviation " + fmt(worst);
  return v;
}

Verdict lemma5() {
  Verdict v;
  double min_p = 1.0;
  int runs = 0, above_09 = 0;
  for (const auto& c : reduced_cases()) {
    const auto sys = assemble(c.dim, c.case_id, c.ex, c.ey);
    MgConfig cfg = config(max_levels(sys), 1, 6);
    const GridHierarchy h = build_hierarchy(sys, cfg);
    const Vector v0 = Vector::Zero(h.finest_dofs());
    cfg.num_cycles = cycles_to_tolerance(h, cfg, v0, 1e-10, 60);
    const SolveResult classical = solve(h, cfg, v0, {.record_iterates = false});
    if (!monotone(classical.trace.epsilon)) continue;
    const QmgRun run = run_qmg(h, cfg, v0, CopyPolicy::same_as_t());
    const SuccessReport r = index_probability(run.x, initial_guess_error(h, cfg, v0));
    ++runs;
    min_p = std::min(min_p, r.p_index);
    if (r.p_index > 0.9) ++above_09;
    if (r.p_index < r.lemma5_bound) v.pass = false;
  }
  if (runs != static_cast<int>(reduced_cases().size())) v.pass = false;
  v.detail = std::to_string(runs) + " monotone runs, min p_index " + fmt(min_p) + ", " +
             std::to_string(above_09) + " above 0.9";
  return v;
}

Verdict lemma6() {
  Verdict v;
  int runs = 0, skipped = 0;
  double min_margin = 1.0;
  for (const auto& c : reduced_cases()) {
    const auto sys = assemble(c.dim, c.case_id, c.ex, c.ey);
    MgConfig cfg = config(max_levels(sys), 1, 6);
    const GridHierarchy h = build_hierarchy(sys, cfg);
    const Vector exact = reference_solution(h, cfg);
    const Vector direction =
        Vector::LinSpaced(exact.size(), -3.0, 3.0).array().sin().matrix().normalized();
    for (double rho : {0.1, 0.5, 0.9}) {
      const Vector v0 = exact + rho * exact.norm() * direction;
      cfg.num_cycles = cycles_to_tolerance(h, cfg, v0, 1e-10, 60);
      const SolveResult classical = solve(h, cfg, v0, {.record_iterates = false});
      if (!monotone(classical.trace.epsilon)) {
        ++skipped;
        continue;
      }
      const InitialGuessError g = initial_guess_error(h, cfg, v0);
      const QmgRun run = run_qmg(h, cfg, v0);
      const SuccessReport r = index_probability(run.x, g);
      ++runs;
      if (std::abs(g.error_norm / g.solution_norm - rho) > 1e-9 || !r.lemma6_bound) {
        v.pass = false;
        continue;
      }
      min_margin = std::min(min_margin, r.p_index - *r.lemma6_bound);
      if (r.p_index < *r.lemma6_bound) v.pass = false;
    }
  }
  if (runs == 0) v.pass = false;
  v.detail = std::to_string(runs) + " monotone runs (" + std::to_string(skipped) +
             " non-monotone skipped), min p_index - bound " + fmt(min_margin);
  return v;
}

Verdict convergence() {
  struct Run {
    std::string name;
    AssembledSystem sys;
    int levels, limit;
  };
  const std::vector<Run> runs{{"1D case 1 8192", assemble_1d(8192, {1, 1}), 0, 32},
                              {"2D case 1 128x128", assemble_2d(128, 128, {2, 1}), 7, 52}};
  Verdict v;
  for (const Run& r : runs) {
    const MgConfig cfg = config(r.levels ? r.levels : max_levels(r.sys), r.limit, 6);
    const SolveResult res = solve(r.sys, cfg, Vector::Zero(r.sys.free_dof_count()), {.record_iterates = false});
    const auto& eps = res.trace.epsilon;
    std::size_t reached = 0;
    while (reached < eps.size() && eps[reached] > 1e-10) ++reached;
    const bool ok = reached < eps.size();
    const std::vector<double> head(eps.begin(), eps.begin() + std::min(reached + 1, eps.size()));
    const bool mono = monotone(head);
    if (!ok || !mono) v.pass = false;
    if (!v.detail.empty()) v.detail += "; ";
    v.detail += r.name + ": " + (ok ? std::to_string(reached + 1) + " cycles" : "not reached") +
                " (limit " + std::to_string(r.limit) + "), " + (mono ? "monotone" : "NOT monotone");
  }
  return v;
}

Verdict tiny_end_to_end_check() {
  Verdict v;
  double worst_dir = 0.0, worst_prob = 0.0;
  int runs = 0;
  for (int elements : {4, 8}) {
    for (int cycles : {1, 2}) {
      const auto sys = assemble_1d(elements, {1, 1});
      const TinyQuantumReport r = tiny_end_to_end(sys, config(2, cycles, 2));
      const double gap = std::abs(r.probability_statevector - r.probability_formula) / r.probability_formula;
      worst_dir = std::max(worst_dir, r.direction_residual);
      worst_prob = std::max(worst_prob, gap);
      ++runs;
      if (r.direction_residual > 1e-10 || gap > 1e-12) v.pass = false;
    }
  }
  v.detail = std::to_string(runs) + " runs, worst direction residual " + fmt(worst_dir) +
             ", worst relative probability gap " + fmt(worst_prob);
  return v;
}

Verdict block_encoding_suite() {
  Verdict v;
  std::mt19937 rng(20240611);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> size(1, 16);
  std::uniform_real_distribution<double> slack(1.0, 3.0);
  auto random = [&](Index n) {
    Matrix m(n, n);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };
  double worst_orth = 0.0, worst_prob = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = size(rng);
    const Matrix a = random(n);
    const BlockEncoding enc = dilate(a, (trial % 5 == 0 ? 1.0 : slack(rng)) * spectral_norm(a));
    Vector b(n);
    for (Index i = 0; i < n; ++i) b[i] = normal(rng);
    b.normalize();
    const double expected = (a * b).squaredNorm() / (enc.alpha * enc.alpha);
    worst_orth = std::max(worst_orth, orthogonality_residual(enc));
    worst_prob = std::max(worst_prob, std::abs(project_ancilla_zero(enc, b).squaredNorm() - expected));
  }
  double worst_product = 0.0;
  for (Index n = 1; n <= 8; ++n) {
    const Matrix a = random(n), b = random(n);
    const BlockEncoding ab = compose(dilate(a, 1.5 * spectral_norm(a)), dilate(b, spectral_norm(b)));
    worst_product = std::max(worst_product,
                             (ab.unitary.topLeftCorner(n, n) * ab.alpha - a * b).cwiseAbs().maxCoeff());
    worst_orth = std::max(worst_orth, orthogonality_residual(ab));
  }
  // one-ancilla factors: 1 + ceil(log2 j) + 1
  const bool ancillas = compressed_ancillas(1, 2) == 3 && compressed_ancillas(1, 4) == 4 &&
                        compressed_ancillas(1, 8) == 5;
  v.pass = worst_orth <= 1e-10 && worst_prob <= 1e-12 && worst_product <= 1e-10 && ancillas;
  v.detail = "orthogonality " + fmt(worst_orth) + ", probability " + fmt(worst_prob) + ", product " +
             fmt(worst_product) + ", ancilla formula " + (ancillas ? "ok" : "wrong");
  return v;
}

Verdict fem_suite() {
  double galerkin = 0.0;
  for (const auto& c : reduced_cases()) {
    const auto sys = assemble(c.dim, c.case_id, c.ex, c.ey);
    const GridHierarchy h = build_hierarchy(sys, config(max_levels(sys), 1, 2));
    for (int L = 0; L < h.coarsest_level(); ++L) {
      const auto& g = h.levels[L];
      galerkin = std::max(galerkin, rel_diff(h.levels[L + 1].A, SparseMatrix(g.restriction * g.A * g.prolongation)));
    }
  }
  double nodal = 0.0;
  for (int case_id : {1, 2}) {
    for (int n : {8, 64, 1024}) {
      const auto sys = assemble_1d(n, {1, case_id});
      const Vector u = direct_solve(sys.matrix, sys.rhs);
      for (Index i = 0; i < u.size(); ++i) {
        nodal = std::max(nodal, std::abs(u[i] - exact_solution_1d(sys.problem, sys.dof_coords[i][0])));
      }
    }
  }
  double patch = 0.0;
  auto g = [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y + 0.5 * x * y; };
  for (auto [nx, ny] : {std::pair{8, 8}, std::pair{16, 4}}) {
    const auto sys = assemble_2d(nx, ny, {2, 1, 1.0, 0.0}, g);
    const Vector u = direct_solve(sys.matrix, sys.rhs);
    for (Index i = 0; i < u.size(); ++i) {
      patch = std::max(patch, std::abs(u[i] - g(sys.dof_coords[i][0], sys.dof_coords[i][1])));
    }
  }
  return {galerkin <= 1e-12 && nodal <= 1e-10 && patch <= 1e-10,
          "Galerkin " + fmt(galerkin) + ", 1D nodal " + fmt(nodal) + ", 2D patch " + fmt(patch)};
}

Verdict qubit_trend() {
  std::vector<AssembledSystem> sweep;
  for (int n = 32; n <= 8192; n *= 2) sweep.push_back(assemble_1d(n, {1, 1}));
  const auto series = qubit_multiple_series(sweep, config(2, 1, 6));
  const QubitPoint& first = series.front();
  const QubitPoint& last = series.back();
  return {last.ratio <= first.ratio, "ratio " + fmt(first.ratio) + " at N=" + std::to_string(first.N) +
                                         ", " + fmt(last.ratio) + " at N=" + std::to_string(last.N)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"table reproduction", table_reproduction},
      {"oracle equivalence", oracle_equivalence},
      {"lemma 5 bound", lemma5},
      {"lemma 6 bound", lemma6},
      {"convergence", convergence},
      {"tiny quantum end-to-end", tiny_end_to_end_check},
      {"block-encoding suite", block_encoding_suite},
      {"FEM suite", fem_suite},
      {"qubit-multiple trend", qubit_trend},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << v.detail
              << " [" << fmt(secs) << " s]" << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
