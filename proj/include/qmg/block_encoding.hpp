#pragma once

#include "qmg/history.hpp"
#include "qmg/linalg.hpp"

#include <optional>
#include <utility>
#include <stdexcept>
#include <vector>

namespace qmg {

/// (alpha, ancillas)-block-encoding of a real square matrix: the top-left
/// block of the orthogonal `unitary` is matrix/alpha.
struct BlockEncoding {
  double alpha = 1.0;
  int ancillas = 1;
  Matrix matrix;
  Matrix unitary;

  Index system_dim() const { return matrix.rows(); }
};

/// Single-ancilla dilation built from the SVD A/α = WΣVᵀ:
///
///     U = [ WΣVᵀ       W√(I−Σ²)Wᵀ ]
///         [ V√(I−Σ²)Vᵀ   −VΣWᵀ    ]
BlockEncoding dilate(const Matrix& A, double alpha);

/// ‖UᵀU − I‖_max.
double orthogonality_residual(const BlockEncoding& enc);

/// ‖U₀₀·alpha − A‖_max where U₀₀ is the all-ancillas-zero block.
double top_left_residual(const BlockEncoding& enc);

/// Unnormalized system part of U(|0^a⟩ ⊗ b) on the ancilla-zero branch.
Vector project_ancilla_zero(const BlockEncoding& enc, const Vector& b);

struct EncodedProduct {
  double success_prob = 0.0;
  /// Ab/‖Ab‖; empty when Ab = 0.
  std::optional<Vector> post_state;
};

/// Success probability ‖Ab‖²/α² of measuring the ancillas in |0⟩ and the
/// resulting normalized state. `b` must be a unit vector.
EncodedProduct apply_encoded(const BlockEncoding& enc, const Vector& b);

/// (I ⊗ U_A)(I ⊗ U_B): an (αβ, a + b)-block-encoding of AB, built explicitly.
/// Register order is [ancillas of B | ancillas of A | system].
BlockEncoding compose(const BlockEncoding& outer, const BlockEncoding& inner);

/// Ancillas of the compressed product of `factors` encodings whose largest
/// individual ancilla count is `max_ancillas`.
int compressed_ancillas(int max_ancillas, Index factors);

struct EncodingProduct {
  Index factors = 0;
  double Z = 1.0;
  int naive_ancillas = 0;
  int compressed_ancillas = 0;
};

/// Resource accounting for the product of `factors` (no unitary is built).
EncodingProduct product_encoding(const std::vector<BlockEncoding>& factors);

class DimensionCapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TinyQuantumOptions {
  CopyPolicy copies{};
  double pessimism = 1.0;
  /// Largest statevector (system plus live ancilla) the simulation accepts.
  Index max_state_dim = Index{1} << 22;
  /// Largest dense operator (rows of the block matrix) formed per operation.
  Index max_block_dim = 1024;
};

struct TinyQuantumReport {
  explicit TinyQuantumReport(QmgRun r) : run(std::move(r)) {}

  Index block_count = 0;
  Index finest_dim = 0;
  Index state_dim = 0;
  Index operations = 0;
  double Z = 1.0;
  double log10_Z = 0.0;
  std::vector<double> alphas;
  /// ‖projected‖² of the normalized input after every operation.
  double probability_statevector = 0.0;
  /// ‖x‖² / (Z²‖x_in‖²).
  double probability_formula = 0.0;
  /// max |x̂_statevector − x̂_emulated| over all entries (unit vectors).
  double direction_residual = 0.0;
  double max_orthogonality_residual = 0.0;
  double max_top_left_residual = 0.0;
  Vector projected_state;
  QmgRun run;
};

/// Dilates every operation of the schedule with α_i = pessimism·‖Op_i‖₂,
/// applies the dilated unitaries to |0⟩|x̂_in⟩ and keeps the ancilla-zero
/// branch. Each operation owns a fresh ancilla that no later operation
/// touches, so projecting after every step equals projecting the whole
/// product onto |0…0⟩; the simulation therefore carries one live ancilla.
TinyQuantumReport tiny_end_to_end(const AssembledSystem& system, const MgConfig& config,
                                  const TinyQuantumOptions& options = {});

}  // namespace qmg
