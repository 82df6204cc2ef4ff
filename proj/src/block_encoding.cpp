#include "qmg/block_encoding.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace qmg {

namespace {

constexpr double kNormSlack = 1e-12;

}  // namespace

BlockEncoding dilate(const Matrix& A, double alpha) {
  if (A.rows() != A.cols()) throw std::invalid_argument("dilate: matrix must be square");
  if (!(alpha > 0.0)) throw std::invalid_argument("dilate: alpha must be positive");
  const Index n = A.rows();
  Eigen::BDCSVD<Matrix> svd(A / alpha, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector sigma = svd.singularValues();
  if (n > 0 && sigma[0] > 1.0 + kNormSlack) {
    throw std::invalid_argument("dilate: alpha " + std::to_string(alpha) +
                                " is below the spectral norm " + std::to_string(sigma[0] * alpha));
  }
  const Vector s = sigma.cwiseMin(1.0);
  const Vector c = (Vector::Ones(n) - s.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  const Matrix& W = svd.matrixU();
  const Matrix& V = svd.matrixV();

  BlockEncoding enc;
  enc.alpha = alpha;
  enc.ancillas = 1;
  enc.matrix = A;
  enc.unitary.resize(2 * n, 2 * n);
  enc.unitary.topLeftCorner(n, n) = W * s.asDiagonal() * V.transpose();
  enc.unitary.topRightCorner(n, n) = W * c.asDiagonal() * W.transpose();
  enc.unitary.bottomLeftCorner(n, n) = V * c.asDiagonal() * V.transpose();
  enc.unitary.bottomRightCorner(n, n) = -V * s.asDiagonal() * W.transpose();
  return enc;
}

double orthogonality_residual(const BlockEncoding& enc) {
  const Matrix gram = enc.unitary.transpose() * enc.unitary;
  return max_abs(Matrix(gram - Matrix::Identity(gram.rows(), gram.cols())));
}

double top_left_residual(const BlockEncoding& enc) {
  const Index n = enc.system_dim();
  return max_abs(Matrix(enc.alpha * enc.unitary.topLeftCorner(n, n) - enc.matrix));
}

Vector project_ancilla_zero(const BlockEncoding& enc, const Vector& b) {
  const Index n = enc.system_dim();
  if (b.size() != n) throw std::invalid_argument("project_ancilla_zero: dimension mismatch");
  Vector state = Vector::Zero(enc.unitary.rows());
  state.head(n) = b;
  return (enc.unitary * state).head(n);
}

EncodedProduct apply_encoded(const BlockEncoding& enc, const Vector& b) {
  if (b.size() != enc.system_dim()) throw std::invalid_argument("apply_encoded: dimension mismatch");
  if (std::abs(b.norm() - 1.0) > 1e-10) throw std::invalid_argument("apply_encoded: b must be a unit vector");
  const Vector ab = enc.matrix * b;
  const double norm = ab.norm();
  EncodedProduct result;
  result.success_prob = norm * norm / (enc.alpha * enc.alpha);
  if (norm > 0.0) result.post_state = ab / norm;
  return result;
}

BlockEncoding compose(const BlockEncoding& outer, const BlockEncoding& inner) {
  if (outer.system_dim() != inner.system_dim()) {
    throw std::invalid_argument("compose: system dimensions differ");
  }
  const Index n = outer.system_dim();
  const Index ka = Index{1} << outer.ancillas;  // outer register size
  const Index kb = Index{1} << inner.ancillas;  // inner register size
  const Index dim = ka * kb * n;
  // basis index = (ib·ka + ia)·n + s
  auto index = [&](Index ib, Index ia, Index s) { return (ib * ka + ia) * n + s; };

  Matrix lifted_outer = Matrix::Zero(dim, dim);  // acts on (ia, s)
  Matrix lifted_inner = Matrix::Zero(dim, dim);  // acts on (ib, s)
  for (Index ib = 0; ib < kb; ++ib) {
    for (Index ia = 0; ia < ka; ++ia) {
      for (Index s = 0; s < n; ++s) {
        const Index col = index(ib, ia, s);
        for (Index ra = 0; ra < ka; ++ra) {
          for (Index r = 0; r < n; ++r) {
            lifted_outer(index(ib, ra, r), col) = outer.unitary(ra * n + r, ia * n + s);
          }
        }
        for (Index rb = 0; rb < kb; ++rb) {
          for (Index r = 0; r < n; ++r) {
            lifted_inner(index(rb, ia, r), col) = inner.unitary(rb * n + r, ib * n + s);
          }
        }
      }
    }
  }
  BlockEncoding product;
  product.alpha = outer.alpha * inner.alpha;
  product.ancillas = outer.ancillas + inner.ancillas;
  product.matrix = outer.matrix * inner.matrix;
  product.unitary = lifted_outer * lifted_inner;
  return product;
}

int compressed_ancillas(int max_ancillas, Index factors) {
  if (factors < 1) throw std::invalid_argument("compressed_ancillas: need at least one factor");
  return max_ancillas + ceil_log2(static_cast<unsigned long long>(factors)) + 1;
}

EncodingProduct product_encoding(const std::vector<BlockEncoding>& factors) {
  EncodingProduct product;
  product.factors = static_cast<Index>(factors.size());
  if (factors.empty()) return product;
  const Index n = factors.front().system_dim();
  int max_a = 0;
  for (const auto& f : factors) {
    if (f.system_dim() != n) throw std::invalid_argument("product_encoding: dimension mismatch");
    product.Z *= f.alpha;
    product.naive_ancillas += f.ancillas;
    max_a = std::max(max_a, f.ancillas);
  }
  product.compressed_ancillas = compressed_ancillas(max_a, product.factors);
  return product;
}

TinyQuantumReport tiny_end_to_end(const AssembledSystem& system, const MgConfig& config,
                                  const TinyQuantumOptions& options) {
  if (!(options.pessimism >= 1.0)) throw std::invalid_argument("pessimism must be at least 1");
  const GridHierarchy hierarchy = build_hierarchy(system, config);
  const BlockIndexer indexer = BlockIndexer::from_config(config, options.copies);
  const Index state_dim = 2 * indexer.block_count() * hierarchy.finest_dofs();
  if (state_dim > options.max_state_dim) {
    throw DimensionCapError("statevector dimension " + std::to_string(state_dim) +
                            " exceeds the cap " + std::to_string(options.max_state_dim));
  }
  if (state_dim / 2 > options.max_block_dim) {
    throw DimensionCapError("operator dimension " + std::to_string(state_dim / 2) +
                            " exceeds the cap " + std::to_string(options.max_block_dim));
  }

  const Vector v0 = Vector::Zero(hierarchy.finest_dofs());
  TinyQuantumReport report(run_qmg(hierarchy, config, v0, options.copies));
  const HistoryVector& x = report.run.x;
  const HistoryVector initial = build_initial_state(v0, hierarchy, indexer);
  report.block_count = indexer.block_count();
  report.finest_dim = hierarchy.finest_dofs();
  report.state_dim = state_dim;

  Vector state = initial.to_dense();
  const double input_norm = state.norm();
  state /= input_norm;

  double log_z = 0.0;
  for (const auto& scheduled : report.run.schedule) {
    for (const auto& op : expand_final_copies(scheduled)) {
      const Matrix M = dense_operator(op, hierarchy, x);
      Eigen::BDCSVD<Matrix> svd(M);
      const double alpha = options.pessimism * svd.singularValues()[0];
      const BlockEncoding enc = dilate(M, alpha);
      report.max_orthogonality_residual =
          std::max(report.max_orthogonality_residual, orthogonality_residual(enc));
      report.max_top_left_residual = std::max(report.max_top_left_residual, top_left_residual(enc));
      state = project_ancilla_zero(enc, state);
      report.alphas.push_back(alpha);
      log_z += std::log(alpha);
      ++report.operations;
    }
  }
  report.Z = std::exp(log_z);
  report.log10_Z = log_z / std::log(10.0);
  report.probability_statevector = state.squaredNorm();
  report.probability_formula =
      x.squared_norm() / (report.Z * report.Z * input_norm * input_norm);

  const Vector emulated = x.to_dense();
  report.direction_residual =
      (state / state.norm() - emulated / emulated.norm()).cwiseAbs().maxCoeff();
  report.projected_state = std::move(state);
  return report;
}

}  // namespace qmg
