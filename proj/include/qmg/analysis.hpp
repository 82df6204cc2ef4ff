#pragma once

#include "qmg/history.hpp"
#include "qmg/linalg.hpp"
#include "qmg/multigrid.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qmg {

struct BlockRatio {
  Index block = 0;
  double ratio = 0.0;
};

/// Norms of the exact solution x̃ and of the initial-guess error ε.
struct InitialGuessError {
  double solution_norm = 0.0;
  double error_norm = 0.0;

  bool bound_applies() const { return error_norm <= solution_norm; }
};

struct SuccessReport {
  /// Probability of measuring the index register in [T, T + c].
  double p_index = 0.0;
  double lemma5_bound = 0.5;
  std::optional<double> lemma6_bound;
  /// ‖x_i‖ / ‖x_T‖ for i = 0..T.
  std::vector<BlockRatio> block_norm_ratios;
  /// log10 of ‖x‖²/(Z²‖x_in‖²); filled once Z is known. p_anc_estimate() is
  /// empty when the value underflows a double.
  std::optional<double> log10_p_anc;
  std::optional<double> log10_Z;

  std::optional<double> p_anc_estimate() const;
  std::optional<double> Z() const;
};

/// ½((‖x̃‖ − ε)/(‖x̃‖ + ε))².
double lemma6_bound(const InitialGuessError& guess);

SuccessReport index_probability(const HistoryVector& x,
                                const std::optional<InitialGuessError>& guess = std::nullopt);

/// ‖v0 − u*‖ and ‖u*‖ with u* the reference solution of the scaled system.
InitialGuessError initial_guess_error(const GridHierarchy& hierarchy, const MgConfig& config,
                                      const Vector& v0, const SolveOptions& options = {});

struct ZOptions {
  double pessimism = 1.0;
  PowerIterationOptions power{};
};

/// Z = Π ζ_i in log form. Z itself overflows a double for table-sized runs.
struct ZFactor {
  double log10_Z = 0.0;
  Index operations = 0;
  /// Number of structurally distinct operators whose norm was estimated.
  Index distinct_operators = 0;

  /// +inf when Z exceeds the double range.
  double value() const;
};

/// ζ_i = pessimism · ‖Op_i‖₂ for every operation, FinalCopy counted with its
/// multiplicity. Operators that differ only in block positions share a norm,
/// so each structure is estimated once.
ZFactor z_factor(const std::vector<BlockOperation>& schedule, const GridHierarchy& hierarchy,
                 const ZOptions& options = {});

/// log10(‖x‖²/(Z²‖x_in‖²)).
double log10_ancilla_probability(const QmgRun& run, const ZFactor& z);

struct ResourceReport {
  Index len_x = 0;
  int qubits_work = 0;
  int qubits_state = 0;
  /// max ξ_i + ⌈log₂(T + c + 1)⌉ + 1 with ξ_i = 1.
  int xi = 0;
  std::optional<double> log10_Z;
  /// ⌈Z⌉ when it fits in a double.
  std::optional<double> amplification_rounds;
  int cycles_used = 0;
  std::optional<double> epsilon_tilde;
};

ResourceReport qubit_report(const BlockIndexer& indexer, Index N,
                            const std::optional<ZFactor>& z = std::nullopt);

struct SeriesPoint {
  int cycle = 0;
  double value = 0.0;
};

/// (cycle, ε̃) after every cycle.
std::vector<SeriesPoint> convergence_series(const CycleTrace& trace);

/// p_index of the run truncated after each cycle, with c equal to the
/// truncated T. The history of a shorter run is a prefix of the longer one.
std::vector<SeriesPoint> p_vs_cycles(const HistoryVector& x);

struct QubitPoint {
  Index N = 0;
  int cycles = 0;
  Index len_x = 0;
  int qubits_work = 0;
  int qubits_state = 0;
  double ratio = 0.0;
};

/// One point of the qubit-multiple series: run the classical solver from
/// zero until ε̃ ≤ tolerance and size the history vector for that cycle count.
QubitPoint qubit_multiple_point(const AssembledSystem& system, MgConfig config,
                                CopyPolicy copies = {}, double tolerance = 1e-10,
                                int max_cycles = 200);

std::vector<QubitPoint> qubit_multiple_series(const std::vector<AssembledSystem>& systems,
                                              const MgConfig& config, CopyPolicy copies = {},
                                              double tolerance = 1e-10, int max_cycles = 200);

/// One row of the published Tables 1-2.
struct PublishedRow {
  int dimension = 1;
  int case_id = 1;
  int coarsest_level = 0;
  int max_cycle = 0;
  int nu = 0;
  Index grid_x = 0;
  Index grid_y = 1;
  Index N = 0;
  Index len_x = 0;
  int log2_N = 0;
  int log2_len_x = 0;

  std::string label() const;
};

const std::vector<PublishedRow>& published_rows();

struct TableCell {
  std::string column;
  long long published = 0;
  long long computed = 0;
  bool match() const { return published == computed; }
};

struct TableRowCheck {
  PublishedRow row;
  std::vector<TableCell> cells;
  bool all_match() const;
};

/// len(x), ⌈log₂N⌉ and ⌈log₂ len(x)⌉ recomputed from (𝓛, 𝒱, ν, N).
TableRowCheck reproduce_row(const PublishedRow& row, CopyPolicy copies = {});
std::vector<TableRowCheck> reproduce_tables(CopyPolicy copies = {});

void write_series_csv(const std::vector<SeriesPoint>& series, const std::string& value_column,
                      std::ostream& out);
void write_block_ratio_csv(const std::vector<BlockRatio>& ratios, std::ostream& out);
void write_qubit_series_csv(const std::vector<QubitPoint>& series, std::ostream& out);
void write_tables_csv(const std::vector<TableRowCheck>& rows, std::ostream& out);

}  // namespace qmg
