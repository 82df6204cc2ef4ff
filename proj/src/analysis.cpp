#include "qmg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace qmg {

namespace {

double pow10_or_inf(double log10_value) {
  const double v = std::pow(10.0, log10_value);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

std::vector<long long> structure_key(const BlockOperation& op) {
  std::vector<long long> key{static_cast<long long>(op.kind), op.level, op.accumulate_target ? 1 : 0};
  for (const auto& s : op.sources) {
    key.push_back(static_cast<long long>(s.payload));
    key.push_back(s.level);
  }
  return key;
}

/// p_index of the prefix ending at `final_block` with that many copies.
double prefix_probability(const std::vector<double>& squared, Index final_block, Index copies) {
  double history = 0.0;
  for (Index i = 0; i < final_block; ++i) history += squared[i];
  const double window = static_cast<double>(copies + 1) * squared[final_block];
  const double total = history + window;
  return total > 0.0 ? window / total : 0.0;
}

}  // namespace

std::optional<double> SuccessReport::p_anc_estimate() const {
  if (!log10_p_anc) return std::nullopt;
  const double p = std::pow(10.0, *log10_p_anc);
  if (p < std::numeric_limits<double>::min()) return std::nullopt;
  return p;
}

std::optional<double> SuccessReport::Z() const {
  if (!log10_Z) return std::nullopt;
  return pow10_or_inf(*log10_Z);
}

double lemma6_bound(const InitialGuessError& guess) {
  const double q = (guess.solution_norm - guess.error_norm) / (guess.solution_norm + guess.error_norm);
  return 0.5 * q * q;
}

SuccessReport index_probability(const HistoryVector& x, const std::optional<InitialGuessError>& guess) {
  const BlockIndexer& ix = x.indexer();
  const Index T = ix.final_index();
  std::vector<double> squared(T + 1);
  for (Index i = 0; i <= T; ++i) squared[i] = x.block_squared_norm(i);

  SuccessReport report;
  report.p_index = prefix_probability(squared, T, ix.copy_count());
  const double final_norm = std::sqrt(squared[T]);
  report.block_norm_ratios.reserve(T + 1);
  for (Index i = 0; i <= T; ++i) {
    report.block_norm_ratios.push_back(
        {i, final_norm > 0.0 ? std::sqrt(squared[i]) / final_norm : 0.0});
  }
  if (guess && guess->bound_applies()) report.lemma6_bound = lemma6_bound(*guess);
  return report;
}

InitialGuessError initial_guess_error(const GridHierarchy& hierarchy, const MgConfig& config,
                                      const Vector& v0, const SolveOptions& options) {
  const Vector reference = reference_solution(hierarchy, config, options);
  return {reference.norm(), (v0 - reference).norm()};
}

double ZFactor::value() const { return pow10_or_inf(log10_Z); }

ZFactor z_factor(const std::vector<BlockOperation>& schedule, const GridHierarchy& hierarchy,
                 const ZOptions& options) {
  if (!(options.pessimism >= 1.0)) throw std::invalid_argument("pessimism must be at least 1");
  std::map<std::vector<long long>, double> cache;
  ZFactor z;
  for (const auto& op : schedule) {
    const BlockOperation single = expand_final_copies(op).front();
    const auto key = structure_key(single);
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, structured_norm(single, hierarchy, options.power).value).first;
    }
    const double zeta = options.pessimism * it->second;
    z.log10_Z += static_cast<double>(op.multiplicity) * std::log10(zeta);
    z.operations += op.multiplicity;
  }
  z.distinct_operators = static_cast<Index>(cache.size());
  return z;
}

double log10_ancilla_probability(const QmgRun& run, const ZFactor& z) {
  return std::log10(run.x.squared_norm()) - 2.0 * z.log10_Z - std::log10(run.initial_squared_norm);
}

ResourceReport qubit_report(const BlockIndexer& indexer, Index N, const std::optional<ZFactor>& z) {
  if (N < 1) throw std::invalid_argument("qubit_report: N must be positive");
  ResourceReport r;
  r.len_x = indexer.block_count() * N;
  r.qubits_work = ceil_log2(static_cast<unsigned long long>(N));
  r.qubits_state = ceil_log2(static_cast<unsigned long long>(r.len_x));
  r.xi = 1 + ceil_log2(static_cast<unsigned long long>(indexer.block_count())) + 1;
  r.cycles_used = indexer.max_cycle() + 1;
  if (z) {
    r.log10_Z = z->log10_Z;
    const double value = z->value();
    if (std::isfinite(value)) r.amplification_rounds = std::ceil(value);
  }
  return r;
}

std::vector<SeriesPoint> convergence_series(const CycleTrace& trace) {
  std::vector<SeriesPoint> series;
  series.reserve(trace.epsilon.size());
  for (std::size_t i = 0; i < trace.epsilon.size(); ++i) {
    series.push_back({static_cast<int>(i), trace.epsilon[i]});
  }
  return series;
}

std::vector<SeriesPoint> p_vs_cycles(const HistoryVector& x) {
  const BlockIndexer& ix = x.indexer();
  const Index T = ix.final_index();
  std::vector<double> squared(T + 1);
  for (Index i = 0; i <= T; ++i) squared[i] = x.block_squared_norm(i);
  std::vector<SeriesPoint> series;
  for (int cycle = 0; cycle <= ix.max_cycle(); ++cycle) {
    const Index final_block = (cycle + 1) * ix.blocks_per_cycle();
    const Index copies = ix.copy_policy().resolve(final_block);
    series.push_back({cycle + 1, prefix_probability(squared, final_block, copies)});
  }
  return series;
}

QubitPoint qubit_multiple_point(const AssembledSystem& system, MgConfig config, CopyPolicy copies,
                                double tolerance, int max_cycles) {
  const GridHierarchy hierarchy = build_hierarchy(system, config);
  SolveOptions options;
  options.record_iterates = false;
  const Vector v0 = Vector::Zero(hierarchy.finest_dofs());
  QubitPoint p;
  p.cycles = cycles_to_tolerance(hierarchy, config, v0, tolerance, max_cycles, options);
  config.num_cycles = p.cycles;
  const BlockIndexer indexer = BlockIndexer::from_config(config, copies);
  const ResourceReport r = qubit_report(indexer, hierarchy.finest_dofs());
  p.N = hierarchy.finest_dofs();
  p.len_x = r.len_x;
  p.qubits_work = r.qubits_work;
  p.qubits_state = r.qubits_state;
  p.ratio = p.qubits_work > 0 ? static_cast<double>(p.qubits_state) / p.qubits_work
                              : std::numeric_limits<double>::infinity();
  return p;
}

std::vector<QubitPoint> qubit_multiple_series(const std::vector<AssembledSystem>& systems,
                                              const MgConfig& config, CopyPolicy copies,
                                              double tolerance, int max_cycles) {
  std::vector<QubitPoint> series;
  for (const auto& system : systems) {
    MgConfig c = config;
    c.num_levels = max_levels(system);
    series.push_back(qubit_multiple_point(system, c, copies, tolerance, max_cycles));
  }
  return series;
}

std::string PublishedRow::label() const {
  return std::to_string(dimension) + "D case " + std::to_string(case_id);
}

const std::vector<PublishedRow>& published_rows() {
  static const std::vector<PublishedRow> rows{
      {1, 1, 12, 15, 6, 8191, 1, 8191, 46926239, 13, 26},
      {1, 2, 13, 15, 6, 8192, 1, 8192, 50601984, 13, 26},
      {2, 1, 6, 25, 6, 127, 127, 16129, 79693389, 14, 27},
      {2, 2, 6, 35, 6, 127, 64, 8128, 55603648, 14, 26},
      {2, 3, 6, 45, 6, 127, 65, 8255, 72156955, 13, 27},
      {2, 4, 6, 45, 6, 64, 64, 4096, 35803136, 12, 26},
      {2, 5, 6, 50, 6, 64, 65, 4160, 36362560, 13, 26},
  };
  return rows;
}

bool TableRowCheck::all_match() const {
  return std::all_of(cells.begin(), cells.end(), [](const TableCell& c) { return c.match(); });
}

TableRowCheck reproduce_row(const PublishedRow& row, CopyPolicy copies) {
  const BlockIndexer indexer(row.max_cycle, row.coarsest_level, row.nu, copies);
  const ResourceReport r = qubit_report(indexer, row.N);
  TableRowCheck check{row, {}};
  check.cells = {
      {"N", row.N, row.grid_x * row.grid_y},
      {"len_x", row.len_x, r.len_x},
      {"log2_N", row.log2_N, r.qubits_work},
      {"log2_len_x", row.log2_len_x, r.qubits_state},
  };
  return check;
}

std::vector<TableRowCheck> reproduce_tables(CopyPolicy copies) {
  std::vector<TableRowCheck> out;
  for (const auto& row : published_rows()) out.push_back(reproduce_row(row, copies));
  return out;
}

void write_series_csv(const std::vector<SeriesPoint>& series, const std::string& value_column,
                      std::ostream& out) {
  out << "cycle," << value_column << '\n';
  out.precision(17);
  for (const auto& p : series) out << p.cycle << ',' << p.value << '\n';
}

void write_block_ratio_csv(const std::vector<BlockRatio>& ratios, std::ostream& out) {
  out << "block_index,ratio\n";
  out.precision(17);
  for (const auto& r : ratios) out << r.block << ',' << r.ratio << '\n';
}

void write_qubit_series_csv(const std::vector<QubitPoint>& series, std::ostream& out) {
  out << "N,cycles,len_x,qubits_work,qubits_state,ratio\n";
  out.precision(17);
  for (const auto& p : series) {
    out << p.N << ',' << p.cycles << ',' << p.len_x << ',' << p.qubits_work << ','
        << p.qubits_state << ',' << p.ratio << '\n';
  }
}

void write_tables_csv(const std::vector<TableRowCheck>& rows, std::ostream& out) {
  out << "dimension,case,column,published,computed,status\n";
  for (const auto& row : rows) {
    for (const auto& cell : row.cells) {
      out << row.row.dimension << ',' << row.row.case_id << ',' << cell.column << ','
          << cell.published << ',' << cell.computed << ',' << (cell.match() ? "match" : "mismatch")
          << '\n';
    }
  }
}

}  // namespace qmg
