#include "qmg/history.hpp"

#include <bit>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <tuple>

namespace qmg {

Index CopyPolicy::resolve(Index total_blocks) const {
  switch (kind) {
    case Kind::BlockCount: return total_blocks;
    case Kind::BlockCountMinusOne: return std::max<Index>(total_blocks - 1, 0);
    case Kind::Explicit:
      if (count < 0) throw std::invalid_argument("copy count must be non-negative");
      return count;
  }
  return total_blocks;
}

BlockIndexer::BlockIndexer(int max_cycle, int coarsest_level, int nu, CopyPolicy copies)
    : max_cycle_(max_cycle), coarsest_level_(coarsest_level), nu_(nu), policy_(copies) {
  if (max_cycle < 0) throw std::invalid_argument("max cycle index must be non-negative");
  if (coarsest_level < 1) throw std::invalid_argument("need at least two grid levels");
  if (nu < 2) throw std::invalid_argument("nu must be at least 2");
  const Index L = coarsest_level, n = nu, V = max_cycle;
  blocks_per_cycle_ = 2 * (L + 1) * n + 2 * L - 1;
  final_index_ = V * blocks_per_cycle_ + 2 * L * n + 2 * L + 2 * n - 1;
  copies_ = copies.resolve(final_index_);
}

BlockIndexer BlockIndexer::from_config(const MgConfig& config, CopyPolicy copies) {
  config.validate();
  return BlockIndexer(config.num_cycles - 1, config.coarsest_level(), config.nu, copies);
}

void BlockIndexer::check_cycle_level(int cycle, int level) const {
  if (cycle < 0 || cycle > max_cycle_ || level < 0 || level > coarsest_level_) {
    throw std::out_of_range("block index: cycle " + std::to_string(cycle) + ", level " +
                            std::to_string(level) + " out of range");
  }
}

Index BlockIndexer::pre(int cycle, int level, int step) const {
  check_cycle_level(cycle, level);
  const int last = level < coarsest_level_ ? nu_ + 1 : nu_;
  if (step < 0 || step > last) {
    throw std::out_of_range("pre-smoothing step " + std::to_string(step) + " out of range");
  }
  return static_cast<Index>(cycle) * blocks_per_cycle_ + static_cast<Index>(level) * (nu_ + 2) + step;
}

Index BlockIndexer::post(int cycle, int level, int step) const {
  check_cycle_level(cycle, level);
  if (step < nu_ || step > 2 * nu_ - 1) {
    throw std::out_of_range("post-smoothing step " + std::to_string(step) + " out of range");
  }
  return static_cast<Index>(cycle) * blocks_per_cycle_ +
         2 * static_cast<Index>(coarsest_level_) * (nu_ + 1) - static_cast<Index>(level) * nu_ + step;
}

std::string_view to_string(BlockSlot::Kind kind) {
  switch (kind) {
    case BlockSlot::Kind::Iterate: return "iterate";
    case BlockSlot::Kind::Residual: return "residual";
    case BlockSlot::Kind::RestrictedResidual: return "restricted_residual";
  }
  return "?";
}

std::vector<BlockSlot> block_layout(const BlockIndexer& ix) {
  std::vector<BlockSlot> slots(static_cast<std::size_t>(ix.final_index() + 1));
  std::vector<bool> seen(slots.size(), false);
  auto put = [&](Index i, BlockSlot slot) {
    if (seen[i]) return;
    seen[i] = true;
    slots[i] = slot;
  };
  const int nu = ix.nu();
  using K = BlockSlot::Kind;
  for (int V = 0; V <= ix.max_cycle(); ++V) {
    for (int L = 0; L <= ix.coarsest_level(); ++L) {
      for (int v = 0; v <= nu - 1; ++v) put(ix.pre(V, L, v), {K::Iterate, V, L, v, L});
      if (L < ix.coarsest_level()) {
        put(ix.pre(V, L, nu), {K::Residual, V, L, nu, L});
        put(ix.pre(V, L, nu + 1), {K::RestrictedResidual, V, L, nu + 1, L + 1});
      }
    }
    for (int L = ix.coarsest_level(); L >= 0; --L) {
      for (int v = nu; v <= 2 * nu - 1; ++v) put(ix.post(V, L, v), {K::Iterate, V, L, v, L});
    }
  }
  // Block V·T_V is the final iterate of cycle V−1; re-label it as such.
  for (int V = 1; V <= ix.max_cycle(); ++V) {
    slots[ix.pre(V, 0, 0)] = {K::Iterate, V - 1, 0, 2 * nu - 1, 0};
  }
  return slots;
}

const Vector& expected_block(const CycleTrace& trace, const BlockSlot& slot) {
  switch (slot.kind) {
    case BlockSlot::Kind::Iterate: return trace.iterate(slot.cycle, slot.level, slot.step);
    case BlockSlot::Kind::Residual: return trace.residuals.at({slot.cycle, slot.level}).fine;
    case BlockSlot::Kind::RestrictedResidual:
      return trace.residuals.at({slot.cycle, slot.level}).restricted;
  }
  throw std::logic_error("unknown slot kind");
}

HistoryVector::HistoryVector(const BlockIndexer& indexer, std::vector<Index> level_dims)
    : indexer_(indexer), level_dims_(std::move(level_dims)) {
  if (static_cast<int>(level_dims_.size()) != indexer.coarsest_level() + 1) {
    throw std::invalid_argument("history vector needs one dimension per level");
  }
  const auto slots = block_layout(indexer);
  blocks_.reserve(slots.size());
  storage_levels_.reserve(slots.size());
  for (const auto& slot : slots) {
    blocks_.push_back(Vector::Zero(level_dims_[slot.storage_level]));
    storage_levels_.push_back(slot.storage_level);
  }
  states_.assign(slots.size(), BlockState::Empty);
}

void HistoryVector::check_index(Index i) const {
  if (i < 0 || i >= indexer_.block_count()) {
    throw std::out_of_range("block " + std::to_string(i) + " outside the history vector");
  }
}

const Vector& HistoryVector::block(Index i) const {
  check_index(i);
  return blocks_[std::min(i, indexer_.final_index())];
}

int HistoryVector::storage_level(Index i) const {
  check_index(i);
  return storage_levels_[std::min(i, indexer_.final_index())];
}

BlockState HistoryVector::state(Index i) const {
  check_index(i);
  if (i > indexer_.final_index()) {
    return i - indexer_.final_index() <= applied_copies_ ? BlockState::Written : BlockState::Empty;
  }
  return states_[i];
}

Vector HistoryVector::materialize(Index i) const {
  const Vector& b = block(i);
  Vector padded = Vector::Zero(finest_dim());
  if (i > indexer_.final_index() && i - indexer_.final_index() > applied_copies_) return padded;
  padded.head(b.size()) = b;
  return padded;
}

double HistoryVector::squared_norm() const {
  double total = 0.0;
  for (const auto& b : blocks_) total += b.squaredNorm();
  return total + static_cast<double>(applied_copies_) * blocks_.back().squaredNorm();
}

Vector HistoryVector::to_dense() const {
  const Index n = finest_dim();
  Vector dense = Vector::Zero(logical_length());
  for (Index i = 0; i < indexer_.block_count(); ++i) dense.segment(i * n, n) = materialize(i);
  return dense;
}

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::PreSmooth: return "pre_smooth";
    case OpKind::Residual: return "residual";
    case OpKind::Restrict: return "restrict";
    case OpKind::ResidualCopy: return "residual_copy";
    case OpKind::PostSmooth: return "post_smooth";
    case OpKind::Prolong: return "prolong";
    case OpKind::FinalCopy: return "final_copy";
  }
  return "?";
}

Vector apply_payload(const GridHierarchy& h, Payload payload, int level, const Vector& v) {
  const GridLevel& grid = h.levels.at(level);
  switch (payload) {
    case Payload::Smoother: return v - grid.A * v;
    case Payload::NegStiffness: return -(grid.A * v);
    case Payload::Restriction: return grid.restriction * v;
    case Payload::Prolongation: return grid.prolongation * v;
    case Payload::Identity: return v;
  }
  throw std::logic_error("unknown payload");
}

Vector apply_payload_transpose(const GridHierarchy& h, Payload payload, int level, const Vector& v) {
  const GridLevel& grid = h.levels.at(level);
  switch (payload) {
    case Payload::Smoother: return v - grid.A.transpose() * v;
    case Payload::NegStiffness: return -(grid.A.transpose() * v);
    case Payload::Restriction: return grid.restriction.transpose() * v;
    case Payload::Prolongation: return grid.prolongation.transpose() * v;
    case Payload::Identity: return v;
  }
  throw std::logic_error("unknown payload");
}

std::pair<Index, Index> payload_shape(const GridHierarchy& h, Payload payload, int level) {
  const GridLevel& grid = h.levels.at(level);
  switch (payload) {
    case Payload::Restriction: return {grid.restriction.cols(), grid.restriction.rows()};
    case Payload::Prolongation: return {grid.prolongation.cols(), grid.prolongation.rows()};
    default: return {grid.size(), grid.size()};
  }
}

std::vector<Index> forcing_blocks(const BlockIndexer& ix) {
  std::vector<Index> blocks;
  const int nu = ix.nu();
  for (int V = 0; V <= ix.max_cycle(); ++V) {
    for (int v = 1; v <= nu; ++v) blocks.push_back(ix.pre(V, 0, v));
    for (int v = nu + 1; v <= 2 * nu - 1; ++v) blocks.push_back(ix.post(V, 0, v));
  }
  return blocks;
}

HistoryVector build_initial_state(const Vector& v0, const GridHierarchy& hierarchy,
                                  const BlockIndexer& indexer) {
  if (indexer.coarsest_level() != hierarchy.coarsest_level()) {
    throw std::invalid_argument("indexer and hierarchy disagree on the level count");
  }
  const Index n = hierarchy.finest_dofs();
  if (v0.size() != n || hierarchy.rhs.size() != n) {
    throw std::invalid_argument("initial guess and forcing must live on the finest grid");
  }
  std::vector<Index> dims;
  for (int L = 0; L <= hierarchy.coarsest_level(); ++L) dims.push_back(hierarchy.dofs(L));
  HistoryVector x(indexer, std::move(dims));
  x.blocks_[0] = v0;
  x.states_[0] = BlockState::Written;
  for (Index i : forcing_blocks(indexer)) {
    x.blocks_[i] = hierarchy.rhs;
    x.states_[i] = BlockState::Preloaded;
  }
  return x;
}

std::vector<BlockOperation> build_schedule(const BlockIndexer& ix) {
  const int nu = ix.nu();
  const int coarsest = ix.coarsest_level();
  std::set<Index> preloaded;
  for (Index i : forcing_blocks(ix)) preloaded.insert(i);

  std::vector<BlockOperation> ops;
  auto emit = [&](OpKind kind, Index target, int level, std::vector<OpSource> sources) {
    BlockOperation op;
    op.kind = kind;
    op.target = target;
    op.level = level;
    op.sources = std::move(sources);
    op.accumulate_target = preloaded.count(target) > 0;
    if (kind == OpKind::ResidualCopy) preloaded.insert(target);
    ops.push_back(std::move(op));
  };

  for (int V = 0; V <= ix.max_cycle(); ++V) {
    for (int L = 0; L <= coarsest; ++L) {
      for (int v = 1; v <= nu - 1; ++v) {
        emit(OpKind::PreSmooth, ix.pre(V, L, v), L, {{ix.pre(V, L, v - 1), Payload::Smoother, L}});
      }
      if (L == coarsest) {
        // no residual on the coarsest grid: one more relaxation seeds the
        // post-smoothing chain
        emit(OpKind::PreSmooth, ix.pre(V, L, nu), L, {{ix.pre(V, L, nu - 1), Payload::Smoother, L}});
        continue;
      }
      emit(OpKind::Residual, ix.pre(V, L, nu), L, {{ix.pre(V, L, nu - 1), Payload::NegStiffness, L}});
      const Index restricted = ix.pre(V, L, nu + 1);
      emit(OpKind::Restrict, restricted, L + 1, {{ix.pre(V, L, nu), Payload::Restriction, L}});
      for (int v = 1; v <= nu; ++v) {
        emit(OpKind::ResidualCopy, ix.pre(V, L + 1, v), L + 1, {{restricted, Payload::Identity, L + 1}});
      }
      for (int v = nu + 1; v <= 2 * nu - 1; ++v) {
        emit(OpKind::ResidualCopy, ix.post(V, L + 1, v), L + 1, {{restricted, Payload::Identity, L + 1}});
      }
    }
    for (int L = coarsest; L >= 0; --L) {
      for (int v = nu + 1; v <= 2 * nu - 1; ++v) {
        emit(OpKind::PostSmooth, ix.post(V, L, v), L, {{ix.post(V, L, v - 1), Payload::Smoother, L}});
      }
      if (L > 0) {
        emit(OpKind::Prolong, ix.post(V, L - 1, nu), L - 1,
             {{ix.post(V, L, 2 * nu - 1), Payload::Prolongation, L - 1},
              {ix.pre(V, L - 1, nu - 1), Payload::Identity, L - 1}});
      }
    }
  }
  if (ix.copy_count() > 0) {
    BlockOperation copy;
    copy.kind = OpKind::FinalCopy;
    copy.target = ix.final_index() + 1;
    copy.level = 0;
    copy.sources = {{ix.final_index(), Payload::Identity, 0}};
    copy.multiplicity = ix.copy_count();
    ops.push_back(std::move(copy));
  }
  return ops;
}

std::vector<BlockOperation> expand_final_copies(const BlockOperation& op) {
  if (op.kind != OpKind::FinalCopy) return {op};
  std::vector<BlockOperation> copies;
  for (Index j = 0; j < op.multiplicity; ++j) {
    BlockOperation single = op;
    single.multiplicity = 1;
    single.target = op.target + j;
    single.sources = {{op.target + j - 1, Payload::Identity, 0}};
    copies.push_back(std::move(single));
  }
  return copies;
}

struct OperationApplier {
  static void apply(HistoryVector& x, const BlockOperation& op, const GridHierarchy& h) {
    const Index T = x.indexer_.final_index();
    if (op.kind == OpKind::FinalCopy) {
      if (x.states_[T] != BlockState::Written) throw ScheduleError("final copy before final iterate");
      const Index first = op.target - T;
      if (first != x.applied_copies_ + 1) throw ScheduleError("final copies applied out of order");
      if (x.applied_copies_ + op.multiplicity > x.indexer_.copy_count()) {
        throw ScheduleError("more final copies than the history vector holds");
      }
      x.applied_copies_ += op.multiplicity;
      return;
    }
    if (op.target <= 0 || op.target > T) {
      throw ScheduleError("operation target " + std::to_string(op.target) + " out of range");
    }
    const BlockState before = x.states_[op.target];
    if (before == BlockState::Written) {
      throw ScheduleError("block " + std::to_string(op.target) + " written twice");
    }
    if (op.kind == OpKind::ResidualCopy && before != BlockState::Empty) {
      throw ScheduleError("residual copy into non-empty block " + std::to_string(op.target));
    }
    if (op.accumulate_target != (before == BlockState::Preloaded)) {
      throw ScheduleError("operation on block " + std::to_string(op.target) +
                          " disagrees with its preload state");
    }
    const Index target_dim = x.blocks_[op.target].size();
    Vector sum;
    for (const OpSource& src : op.sources) {
      const Vector& in = x.blocks_.at(src.block);
      const auto [cols, rows] = payload_shape(h, src.payload, src.level);
      if (in.size() != cols || rows != target_dim) {
        throw std::invalid_argument("payload dimension mismatch for block " +
                                    std::to_string(src.block));
      }
      Vector term = apply_payload(h, src.payload, src.level, in);
      if (sum.size() == 0) {
        sum = std::move(term);
      } else {
        sum += term;
      }
    }
    if (before == BlockState::Preloaded) sum += x.blocks_[op.target];
    x.blocks_[op.target] = std::move(sum);
    x.states_[op.target] =
        op.kind == OpKind::ResidualCopy ? BlockState::Preloaded : BlockState::Written;
  }
};

void apply_operation(HistoryVector& x, const BlockOperation& op, const GridHierarchy& hierarchy) {
  OperationApplier::apply(x, op, hierarchy);
}

QmgRun run_qmg(const GridHierarchy& hierarchy, const MgConfig& config, const Vector& v0,
               CopyPolicy copies) {
  BlockIndexer indexer = BlockIndexer::from_config(config, copies);
  HistoryVector x = build_initial_state(v0, hierarchy, indexer);
  const double initial = x.squared_norm();
  std::vector<BlockOperation> schedule = build_schedule(indexer);
  for (const auto& op : schedule) apply_operation(x, op, hierarchy);
  return {hierarchy, indexer, std::move(schedule), std::move(x), initial};
}

QmgRun run_qmg(const AssembledSystem& system, const MgConfig& config, const Vector& v0,
               CopyPolicy copies) {
  return run_qmg(build_hierarchy(system, config), config, v0, copies);
}

namespace {

struct TouchedBlocks {
  std::vector<Index> dims;  // per source, then the target
  Index total = 0;
};

TouchedBlocks touched(const BlockOperation& op, const GridHierarchy& h) {
  TouchedBlocks t;
  for (const auto& src : op.sources) t.dims.push_back(payload_shape(h, src.payload, src.level).first);
  t.dims.push_back(payload_shape(h, op.sources.front().payload, op.sources.front().level).second);
  for (Index d : t.dims) t.total += d;
  return t;
}

}  // namespace

NormEstimate structured_norm(const BlockOperation& op, const GridHierarchy& h,
                             const PowerIterationOptions& options) {
  if (op.sources.empty()) return {1.0, 0};
  const TouchedBlocks t = touched(op, h);
  const std::size_t n_src = op.sources.size();
  const Index target_dim = t.dims.back();
  auto forward = [&](const Vector& in) -> Vector {
    Vector out(t.total);
    Vector target = op.accumulate_target ? Vector(in.tail(target_dim)) : Vector::Zero(target_dim);
    Index offset = 0;
    for (std::size_t s = 0; s < n_src; ++s) {
      const Vector piece = in.segment(offset, t.dims[s]);
      out.segment(offset, t.dims[s]) = piece;
      target += apply_payload(h, op.sources[s].payload, op.sources[s].level, piece);
      offset += t.dims[s];
    }
    out.tail(target_dim) = target;
    return out;
  };
  auto backward = [&](const Vector& in) -> Vector {
    Vector out(t.total);
    const Vector target = in.tail(target_dim);
    Index offset = 0;
    for (std::size_t s = 0; s < n_src; ++s) {
      out.segment(offset, t.dims[s]) =
          in.segment(offset, t.dims[s]) +
          apply_payload_transpose(h, op.sources[s].payload, op.sources[s].level, target);
      offset += t.dims[s];
    }
    out.tail(target_dim) = op.accumulate_target ? target : Vector(Vector::Zero(target_dim));
    return out;
  };
  NormEstimate estimate = power_norm(forward, backward, t.total, options);
  // identity on the untouched blocks
  estimate.value = std::max(estimate.value, 1.0);
  return estimate;
}

OracleDeviation oracle_deviation(const HistoryVector& x, const CycleTrace& trace) {
  const auto slots = block_layout(x.indexer());
  OracleDeviation d;
  for (Index i = 0; i <= x.indexer().final_index(); ++i) {
    const Vector& expected = expected_block(trace, slots[i]);
    const Vector& got = x.block(i);
    if (expected.size() != got.size()) {
      throw std::logic_error("oracle_deviation: block " + std::to_string(i) + " has the wrong size");
    }
    const double scale = expected.norm();
    const double dev = scale > 0.0 ? (got - expected).norm() / scale : got.norm();
    if (dev > d.worst || d.worst_block < 0) {
      d.worst = std::max(d.worst, dev);
      d.worst_block = i;
    }
    ++d.blocks_checked;
  }
  return d;
}

Matrix dense_operator(const BlockOperation& op, const GridHierarchy& h, const HistoryVector& layout) {
  if (op.multiplicity != 1) throw std::invalid_argument("dense_operator needs a single operation");
  const Index n = layout.finest_dim();
  const Index dim = layout.logical_length();
  Matrix M = Matrix::Identity(dim, dim);
  if (!op.accumulate_target) M.block(op.target * n, op.target * n, n, n).setZero();
  for (const auto& src : op.sources) {
    const auto [cols, rows] = payload_shape(h, src.payload, src.level);
    Matrix payload(rows, cols);
    for (Index c = 0; c < cols; ++c) {
      payload.col(c) = apply_payload(h, src.payload, src.level, Vector::Unit(cols, c));
    }
    M.block(op.target * n, src.block * n, rows, cols) += payload;
  }
  return M;
}

void write_block_norms_csv(const HistoryVector& x, std::ostream& out) {
  const auto slots = block_layout(x.indexer());
  out << "block_index,level,kind,norm\n";
  out.precision(17);
  for (Index i = 0; i < x.indexer().block_count(); ++i) {
    const bool copy = i > x.indexer().final_index();
    const auto kind = copy ? std::string_view("copy") : to_string(slots[i].kind);
    out << i << ',' << x.storage_level(i) << ',' << kind << ',' << x.materialize(i).norm() << '\n';
  }
}

namespace {

void put_u64(std::ostream& out, std::uint64_t value) {
  char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((value >> (8 * k)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw std::runtime_error("truncated block dump");
  std::uint64_t value = 0;
  for (int k = 0; k < 8; ++k) value |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  return value;
}

}  // namespace

void write_blocks_binary(const HistoryVector& x, const std::vector<Index>& indices,
                         std::ostream& out) {
  put_u64(out, indices.size());
  for (Index i : indices) {
    const Vector& b = x.block(i);
    put_u64(out, static_cast<std::uint64_t>(i));
    put_u64(out, static_cast<std::uint64_t>(b.size()));
    for (Index k = 0; k < b.size(); ++k) put_u64(out, std::bit_cast<std::uint64_t>(b[k]));
  }
}

std::vector<DumpedBlock> read_blocks_binary(std::istream& in) {
  const std::uint64_t count = get_u64(in);
  std::vector<DumpedBlock> blocks;
  blocks.reserve(count);
  for (std::uint64_t b = 0; b < count; ++b) {
    DumpedBlock block;
    block.index = static_cast<Index>(get_u64(in));
    const auto length = static_cast<Index>(get_u64(in));
    block.values.resize(length);
    for (Index k = 0; k < length; ++k) block.values[k] = std::bit_cast<double>(get_u64(in));
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace qmg
