#pragma once

#include "qmg/linalg.hpp"
#include "qmg/multigrid.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace qmg {

/// How many copies of the final iterate trail the history vector.
struct CopyPolicy {
  enum class Kind { BlockCount, BlockCountMinusOne, Explicit };
  Kind kind = Kind::BlockCount;
  Index count = 0;  ///< used by Kind::Explicit

  static CopyPolicy same_as_t() { return {}; }
  static CopyPolicy t_minus_one() { return {Kind::BlockCountMinusOne, 0}; }
  static CopyPolicy exactly(Index c) { return {Kind::Explicit, c}; }

  Index resolve(Index total_blocks) const;
};

/// Block arithmetic of the history vector for 𝒱 + 1 cycles over 𝓛 + 1
/// levels with ν − 1 smoothing steps per side.
class BlockIndexer {
 public:
  BlockIndexer(int max_cycle, int coarsest_level, int nu, CopyPolicy copies = {});

  static BlockIndexer from_config(const MgConfig& config, CopyPolicy copies = {});

  int max_cycle() const { return max_cycle_; }
  int coarsest_level() const { return coarsest_level_; }
  int nu() const { return nu_; }

  /// T_V: blocks contributed by one V-cycle.
  Index blocks_per_cycle() const { return blocks_per_cycle_; }
  /// T: index of the final iterate (blocks 0..T hold the multigrid history).
  Index final_index() const { return final_index_; }
  /// c: virtual copies of the final iterate.
  Index copy_count() const { return copies_; }
  const CopyPolicy& copy_policy() const { return policy_; }
  /// T + c + 1.
  Index block_count() const { return final_index_ + copies_ + 1; }

  /// Block of iterate (V, L, v) on the way down. v = ν addresses the residual
  /// (or, on the coarsest level, the extra relaxation) and v = ν + 1 the
  /// restricted residual.
  Index pre(int cycle, int level, int step) const;
  /// Block of iterate (V, L, v), ν ≤ v ≤ 2ν − 1, on the way up.
  Index post(int cycle, int level, int step) const;

 private:
  void check_cycle_level(int cycle, int level) const;

  int max_cycle_;
  int coarsest_level_;
  int nu_;
  Index blocks_per_cycle_;
  Index final_index_;
  Index copies_;
  CopyPolicy policy_;
};

/// What a stored block of the history vector holds.
struct BlockSlot {
  enum class Kind { Iterate, Residual, RestrictedResidual };
  Kind kind = Kind::Iterate;
  int cycle = 0;
  int level = 0;
  int step = 0;
  /// Grid whose dimension the block has.
  int storage_level = 0;
};

std::string_view to_string(BlockSlot::Kind kind);

/// Slot descriptions of blocks 0..T. The block shared by consecutive cycles is
/// described by the earlier cycle's final iterate.
std::vector<BlockSlot> block_layout(const BlockIndexer& indexer);

/// The classical trace entry a block must equal.
const Vector& expected_block(const CycleTrace& trace, const BlockSlot& slot);

struct OracleDeviation {
  /// max over blocks 0..T of ‖x_i − trace_i‖ / ‖trace_i‖ (absolute when
  /// the trace entry is zero).
  double worst = 0.0;
  Index worst_block = -1;
  Index blocks_checked = 0;
};

class HistoryVector;
/// Compares every stored block with the classical trace. The trace must have
/// been recorded with `record_iterates`.
OracleDeviation oracle_deviation(const HistoryVector& x, const CycleTrace& trace);

enum class BlockState : std::uint8_t { Empty, Preloaded, Written };

/// Blocks 0..T at native grid size plus c virtual copies of block T.
class HistoryVector {
 public:
  HistoryVector(const BlockIndexer& indexer, std::vector<Index> level_dims);

  const BlockIndexer& indexer() const { return indexer_; }
  Index finest_dim() const { return level_dims_.front(); }
  Index level_dim(int level) const { return level_dims_.at(level); }
  /// (T + c + 1)·N.
  Index logical_length() const { return indexer_.block_count() * finest_dim(); }

  /// Native-size block i for 0 ≤ i ≤ T + c; copies alias block T.
  const Vector& block(Index i) const;
  int storage_level(Index i) const;
  BlockState state(Index i) const;
  Index applied_copies() const { return applied_copies_; }

  /// Block i zero-padded to the finest dimension.
  Vector materialize(Index i) const;
  double block_squared_norm(Index i) const { return block(i).squaredNorm(); }
  /// ‖x‖² including the virtual copies.
  double squared_norm() const;
  /// The fully padded vector; only sensible at tiny scale.
  Vector to_dense() const;

 private:
  friend HistoryVector build_initial_state(const Vector&, const GridHierarchy&,
                                           const BlockIndexer&);
  friend struct OperationApplier;

  void check_index(Index i) const;

  BlockIndexer indexer_;
  std::vector<Index> level_dims_;
  std::vector<Vector> blocks_;
  std::vector<int> storage_levels_;
  std::vector<BlockState> states_;
  Index applied_copies_ = 0;
};

enum class OpKind { PreSmooth, Residual, Restrict, ResidualCopy, PostSmooth, Prolong, FinalCopy };

std::string_view to_string(OpKind kind);

/// Operator multiplying a source block.
enum class Payload {
  Smoother,      ///< R_L = I − A_L
  NegStiffness,  ///< −A_L
  Restriction,   ///< I^{L+1}_L
  Prolongation,  ///< I^L_{L+1}
  Identity,
};

struct OpSource {
  Index block = 0;
  Payload payload = Payload::Identity;
  /// Level of the payload: A_L/R_L act on L, Restriction maps L → L+1,
  /// Prolongation maps L+1 → L, Identity acts on the source block's level.
  int level = 0;
};

/// target ← Σ payload·source (+ target, when the target carries a preload).
struct BlockOperation {
  OpKind kind = OpKind::PreSmooth;
  std::vector<OpSource> sources;
  Index target = 0;
  /// Level of the target block.
  int level = 0;
  /// Whether the identity term keeps the target's preloaded content.
  bool accumulate_target = false;
  /// Repetitions; FinalCopy is stored once with multiplicity c.
  Index multiplicity = 1;
};

Vector apply_payload(const GridHierarchy& hierarchy, Payload payload, int level, const Vector& v);
Vector apply_payload_transpose(const GridHierarchy& hierarchy, Payload payload, int level,
                               const Vector& v);
/// Input and output dimension of a payload.
std::pair<Index, Index> payload_shape(const GridHierarchy& hierarchy, Payload payload, int level);

/// Blocks preloaded with f: the fine pre-smoothing, residual and
/// post-smoothing targets of every cycle.
std::vector<Index> forcing_blocks(const BlockIndexer& indexer);

HistoryVector build_initial_state(const Vector& v0, const GridHierarchy& hierarchy,
                                  const BlockIndexer& indexer);

/// The V-cycle as a sequence of block operations, in execution order.
std::vector<BlockOperation> build_schedule(const BlockIndexer& indexer);

/// The c final copies as individual operations targeting T+1..T+c.
std::vector<BlockOperation> expand_final_copies(const BlockOperation& op);

class ScheduleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

void apply_operation(HistoryVector& x, const BlockOperation& op, const GridHierarchy& hierarchy);

struct QmgRun {
  GridHierarchy hierarchy;
  BlockIndexer indexer;
  std::vector<BlockOperation> schedule;
  HistoryVector x;
  /// ‖x_in‖² of the initial state.
  double initial_squared_norm = 0.0;
};

QmgRun run_qmg(const GridHierarchy& hierarchy, const MgConfig& config, const Vector& v0,
               CopyPolicy copies = {});
QmgRun run_qmg(const AssembledSystem& system, const MgConfig& config, const Vector& v0,
               CopyPolicy copies = {});

/// ‖Op‖₂ of the full block operator (shift terms plus identity on every other
/// block) by power iteration on the blocks the operation touches.
NormEstimate structured_norm(const BlockOperation& op, const GridHierarchy& hierarchy,
                             const PowerIterationOptions& options = {});

/// Dense (T + c + 1)·N square matrix of one operation (multiplicity 1).
Matrix dense_operator(const BlockOperation& op, const GridHierarchy& hierarchy,
                      const HistoryVector& layout);

/// CSV `block_index,level,kind,norm` for blocks 0..T + c.
void write_block_norms_csv(const HistoryVector& x, std::ostream& out);

/// Selected native blocks as: u64 block count, then per block u64 index,
/// u64 length and `length` float64 values, all little-endian.
void write_blocks_binary(const HistoryVector& x, const std::vector<Index>& indices,
                         std::ostream& out);

struct DumpedBlock {
  Index index = 0;
  Vector values;
};

std::vector<DumpedBlock> read_blocks_binary(std::istream& in);

}  // namespace qmg
