#include "qmg/cli.hpp"

#include "qmg/analysis.hpp"
#include "qmg/block_encoding.hpp"
#include "qmg/fem.hpp"
#include "qmg/multigrid.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace qmg::cli {

namespace {

using json = nlohmann::json;

constexpr double kOracleTolerance = 1e-12;
constexpr double kDirectionTolerance = 1e-10;
constexpr double kProbabilityTolerance = 1e-12;
constexpr double kOrthogonalityTolerance = 1e-10;
/// Above this many stored doubles the qmg mode skips the iterate-by-iterate
/// comparison with the classical trace.
constexpr Index kOracleCheckLimit = 20'000'000;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
json optional_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) return number_or_null(*v);
  else return json(*v);
}

/// Report and files of one run, kept in memory until the run succeeds.
struct Artifacts {
  json report = json::object();
  std::map<std::string, std::string> files;
  std::vector<std::pair<std::string, bool>> checks;

  void check(const std::string& name, bool pass) { checks.emplace_back(name, pass); }
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.second; });
  }
};

template <class Writer>
std::string to_text(Writer&& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

bool monotone(const std::vector<double>& eps) {
  for (std::size_t i = 1; i < eps.size(); ++i) {
    if (eps[i] > eps[i - 1]) return false;
  }
  return true;
}

AssembledSystem assemble(const ProblemCase& problem, const std::array<int, 2>& mesh) {
  return problem.dimension == 1 ? assemble_1d(mesh[0], problem)
                                : assemble_2d(mesh[0], mesh[1], problem);
}

struct Prepared {
  AssembledSystem system;
  MgConfig config;
  GridHierarchy hierarchy;
  bool cycles_from_tolerance = false;
};

MgConfig base_config(const RunSpec& spec, const AssembledSystem& system) {
  MgConfig config;
  const int limit = max_levels(system);
  config.num_levels = spec.levels.value_or(limit);
  if (config.num_levels > limit) {
    throw InvalidSpecError("--levels " + std::to_string(config.num_levels) +
                           " exceeds the " + std::to_string(limit) + " levels this mesh allows");
  }
  config.nu = spec.nu;
  config.num_cycles = spec.cycles.value_or(1);
  return config;
}

Prepared prepare(const RunSpec& spec) {
  AssembledSystem system = assemble(spec.problem(), spec.mesh());
  MgConfig config = base_config(spec, system);
  GridHierarchy hierarchy = build_hierarchy(system, config);
  const bool automatic = !spec.cycles.has_value();
  if (automatic) {
    SolveOptions options;
    options.record_iterates = false;
    config.num_cycles = cycles_to_tolerance(hierarchy, config, Vector::Zero(hierarchy.finest_dofs()),
                                            spec.tolerance, spec.max_cycles, options);
  }
  return {std::move(system), config, std::move(hierarchy), automatic};
}

json spec_json(const RunSpec& spec, const std::optional<MgConfig>& config) {
  json j;
  j["mode"] = to_string(spec.mode);
  j["dimension"] = spec.dimension;
  j["case"] = spec.case_id;
  const auto mesh = spec.mesh();
  j["elements"] = spec.dimension == 1 ? json::array({mesh[0]}) : json::array({mesh[0], mesh[1]});
  j["levels"] = config ? json(config->num_levels) : optional_json(spec.levels);
  j["cycles"] = config ? json(config->num_cycles) : optional_json(spec.cycles);
  j["nu"] = spec.nu;
  j["copies"] = copies_to_string(spec.copies);
  j["pessimism"] = spec.pessimism;
  j["tolerance"] = spec.tolerance;
  return j;
}

json resources_json(const ResourceReport& r, std::optional<double> epsilon) {
  json j;
  j["len_x"] = r.len_x;
  j["qubits_work"] = r.qubits_work;
  j["qubits_state"] = r.qubits_state;
  j["xi"] = r.xi;
  j["log10_Z"] = optional_json(r.log10_Z);
  j["Z"] = r.log10_Z ? number_or_null(std::pow(10.0, *r.log10_Z)) : json(nullptr);
  j["amplification_rounds"] = optional_json(r.amplification_rounds);
  j["cycles_used"] = r.cycles_used;
  j["epsilon_tilde"] = optional_json(epsilon);
  return j;
}

json success_json(const SuccessReport& s) {
  json j;
  j["p_index"] = s.p_index;
  j["lemma5_bound"] = s.lemma5_bound;
  j["lemma6_bound"] = optional_json(s.lemma6_bound);
  j["p_anc_estimate"] = optional_json(s.p_anc_estimate());
  j["log10_p_anc"] = optional_json(s.log10_p_anc);
  return j;
}

json convergence_json(const CycleTrace& trace) {
  json j;
  j["cycles"] = trace.epsilon.size();
  j["epsilon_tilde"] = trace.epsilon.empty() ? json(nullptr) : number_or_null(trace.epsilon.back());
  j["monotone"] = monotone(trace.epsilon);
  return j;
}

void run_classical(const RunSpec& spec, Artifacts& a) {
  const Prepared p = prepare(spec);
  SolveOptions options;
  options.record_iterates = false;
  const SolveResult result = solve(p.hierarchy, p.config, Vector::Zero(p.hierarchy.finest_dofs()), options);
  const BlockIndexer indexer = BlockIndexer::from_config(p.config, spec.copies);
  const double eps = result.trace.epsilon.back();

  a.report["spec"] = spec_json(spec, p.config);
  a.report["resources"] = resources_json(qubit_report(indexer, p.hierarchy.finest_dofs()), eps);
  a.report["convergence"] = convergence_json(result.trace);
  a.check("monotone_convergence", monotone(result.trace.epsilon));
  if (p.cycles_from_tolerance) a.check("epsilon_below_tolerance", eps <= spec.tolerance);
  a.files["convergence.csv"] = to_text([&](std::ostream& os) { write_convergence_csv(result.trace, os); });
}

void run_qmg_mode(const RunSpec& spec, Artifacts& a) {
  const Prepared p = prepare(spec);
  const Vector v0 = Vector::Zero(p.hierarchy.finest_dofs());
  const BlockIndexer indexer = BlockIndexer::from_config(p.config, spec.copies);
  SolveOptions options;
  options.record_iterates = (indexer.final_index() + 1) * p.hierarchy.finest_dofs() <= kOracleCheckLimit;
  const SolveResult classical = solve(p.hierarchy, p.config, v0, options);
  const QmgRun run = run_qmg(p.hierarchy, p.config, v0, spec.copies);

  const InitialGuessError guess{classical.reference.norm(), (v0 - classical.reference).norm()};
  SuccessReport success = index_probability(run.x, guess);
  ZOptions zopt;
  zopt.pessimism = spec.pessimism;
  zopt.power.tolerance = spec.norm_tolerance;
  const ZFactor z = z_factor(run.schedule, run.hierarchy, zopt);
  success.log10_Z = z.log10_Z;
  success.log10_p_anc = log10_ancilla_probability(run, z);
  const double eps = classical.trace.epsilon.back();

  a.report["spec"] = spec_json(spec, p.config);
  a.report["resources"] = resources_json(qubit_report(indexer, p.hierarchy.finest_dofs(), z), eps);
  a.report["success"] = success_json(success);
  a.report["convergence"] = convergence_json(classical.trace);
  a.report["z_factor"] = {{"operations", z.operations}, {"distinct_operators", z.distinct_operators},
                          {"norm_tolerance", spec.norm_tolerance}};

  const bool is_monotone = monotone(classical.trace.epsilon);
  a.check("monotone_convergence", is_monotone);
  if (p.cycles_from_tolerance) a.check("epsilon_below_tolerance", eps <= spec.tolerance);
  if (options.record_iterates) {
    const OracleDeviation dev = oracle_deviation(run.x, classical.trace);
    a.report["oracle"] = {{"worst_relative_deviation", dev.worst}, {"blocks_checked", dev.blocks_checked}};
    a.check("oracle_equivalence", dev.worst <= kOracleTolerance);
  }
  a.check("final_block_matches_solution",
          (run.x.block(indexer.final_index()) - classical.solution).norm() <=
              kOracleTolerance * std::max(classical.solution.norm(), 1.0));
  if (is_monotone) {
    a.check("lemma5_bound", success.p_index >= success.lemma5_bound);
    if (success.lemma6_bound) a.check("lemma6_bound", success.p_index >= *success.lemma6_bound);
  }

  a.files["convergence.csv"] = to_text([&](std::ostream& os) { write_convergence_csv(classical.trace, os); });
  a.files["block_norms.csv"] = to_text([&](std::ostream& os) { write_block_norms_csv(run.x, os); });
  a.files["block_ratios.csv"] =
      to_text([&](std::ostream& os) { write_block_ratio_csv(success.block_norm_ratios, os); });
  a.files["p_vs_cycles.csv"] =
      to_text([&](std::ostream& os) { write_series_csv(p_vs_cycles(run.x), "p_index", os); });
}

void run_tiny_quantum(const RunSpec& spec, Artifacts& a) {
  const Prepared p = prepare(spec);
  const BlockIndexer indexer = BlockIndexer::from_config(p.config, spec.copies);
  TinyQuantumOptions options;
  options.copies = spec.copies;
  options.pessimism = spec.pessimism;
  const TinyQuantumReport tiny = [&] {
    try {
      return tiny_end_to_end(p.system, p.config, options);
    } catch (const DimensionCapError& e) {
      throw InvalidSpecError(std::string("tiny-quantum: ") + e.what());
    }
  }();

  ZOptions zopt;
  zopt.pessimism = spec.pessimism;
  const ZFactor z = z_factor(tiny.run.schedule, tiny.run.hierarchy, zopt);
  const Vector v0 = Vector::Zero(p.hierarchy.finest_dofs());
  SuccessReport success = index_probability(tiny.run.x, initial_guess_error(p.hierarchy, p.config, v0));
  success.log10_Z = z.log10_Z;
  success.log10_p_anc = log10_ancilla_probability(tiny.run, z);
  const double p_anc = *success.p_anc_estimate();
  const double p_sv = tiny.probability_statevector;
  const double formula_gap = std::abs(p_sv - tiny.probability_formula) / p_sv;
  const double analysis_gap = std::abs(p_sv - p_anc) / p_sv;

  SolveOptions solve_options;
  solve_options.record_iterates = false;
  const CycleTrace trace = solve(p.hierarchy, p.config, v0, solve_options).trace;

  a.report["spec"] = spec_json(spec, p.config);
  a.report["resources"] = resources_json(qubit_report(indexer, p.hierarchy.finest_dofs(), z),
                                         trace.epsilon.back());
  a.report["success"] = success_json(success);
  a.report["convergence"] = convergence_json(trace);
  json t;
  t["state_dim"] = tiny.state_dim;
  t["operations"] = tiny.operations;
  t["log10_Z"] = tiny.log10_Z;
  t["probability_statevector"] = p_sv;
  t["probability_formula"] = tiny.probability_formula;
  t["probability_relative_gap"] = formula_gap;
  t["p_anc_relative_gap"] = analysis_gap;
  t["direction_residual"] = tiny.direction_residual;
  t["max_orthogonality_residual"] = tiny.max_orthogonality_residual;
  t["max_top_left_residual"] = tiny.max_top_left_residual;
  a.report["tiny_quantum"] = t;

  a.check("direction_matches_emulation", tiny.direction_residual <= kDirectionTolerance);
  a.check("probability_matches_formula", formula_gap <= kProbabilityTolerance);
  a.check("probability_matches_analysis", analysis_gap <= kProbabilityTolerance);
  a.check("dilations_orthogonal", tiny.max_orthogonality_residual <= kOrthogonalityTolerance);
}

void run_tables(const RunSpec& spec, Artifacts& a) {
  const auto rows = reproduce_tables(spec.copies);
  json tables = json::array();
  for (const auto& row : rows) {
    json cells = json::array();
    for (const auto& cell : row.cells) {
      cells.push_back({{"column", cell.column},
                       {"published", cell.published},
                       {"computed", cell.computed},
                       {"status", cell.match() ? "match" : "mismatch"}});
    }
    tables.push_back({{"dimension", row.row.dimension},
                      {"case", row.row.case_id},
                      {"levels", row.row.coarsest_level + 1},
                      {"max_cycle", row.row.max_cycle},
                      {"nu", row.row.nu},
                      {"cells", cells}});
    a.check("table_" + std::to_string(row.row.dimension) + "d_case" + std::to_string(row.row.case_id),
            row.all_match());
  }
  a.report["spec"] = {{"mode", to_string(spec.mode)}, {"copies", copies_to_string(spec.copies)}};
  a.report["tables"] = tables;
  a.files["tables.csv"] = to_text([&](std::ostream& os) { write_tables_csv(rows, os); });
}

struct FigurePoint {
  std::array<int, 2> mesh{};
  QubitPoint qubits;
  CycleTrace trace;
  std::vector<SeriesPoint> p_series;
  std::vector<BlockRatio> ratios;
  double p_index = 0.0;
};

FigurePoint figure_point(const RunSpec& spec, const std::array<int, 2>& mesh) {
  FigurePoint fp;
  fp.mesh = mesh;
  const AssembledSystem system = assemble(spec.problem(), mesh);
  MgConfig config = base_config(spec, system);
  config.num_levels = std::min(config.num_levels, max_levels(system));
  fp.qubits = qubit_multiple_point(system, config, spec.copies, spec.tolerance, spec.max_cycles);
  config.num_cycles = fp.qubits.cycles;
  const GridHierarchy hierarchy = build_hierarchy(system, config);
  const Vector v0 = Vector::Zero(hierarchy.finest_dofs());
  SolveOptions options;
  options.record_iterates = false;
  fp.trace = solve(hierarchy, config, v0, options).trace;
  const QmgRun run = run_qmg(hierarchy, config, v0, spec.copies);
  const SuccessReport s = index_probability(run.x);
  fp.p_index = s.p_index;
  fp.ratios = s.block_norm_ratios;
  fp.p_series = p_vs_cycles(run.x);
  return fp;
}

std::vector<std::array<int, 2>> figure_meshes(const RunSpec& spec) {
  const auto top = spec.mesh();
  const int smallest = spec.dimension == 1 ? 32 : 4;
  std::vector<std::array<int, 2>> meshes;
  for (int shift = 0;; ++shift) {
    const std::array<int, 2> m{top[0] >> shift, std::max(top[1] >> shift, 1)};
    const int lo = spec.dimension == 1 ? m[0] : std::min(m[0], m[1]);
    if (lo < smallest) break;
    meshes.push_back(m);
  }
  std::reverse(meshes.begin(), meshes.end());
  return meshes;
}

void run_figures(const RunSpec& spec, Artifacts& a) {
  const auto meshes = figure_meshes(spec);
  if (meshes.empty()) throw InvalidSpecError("figures mode needs a larger mesh");
  std::vector<std::optional<FigurePoint>> points(meshes.size());
  std::vector<std::exception_ptr> errors(meshes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < meshes.size(); i = next++) {
      try {
        points[i] = figure_point(spec, meshes[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp<int>(spec.threads, 1, static_cast<int>(meshes.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<QubitPoint> qubit_series;
  json figures = json::array();
  for (const auto& p : points) {
    const std::string tag = "N" + std::to_string(p->qubits.N);
    qubit_series.push_back(p->qubits);
    figures.push_back({{"elements", p->mesh},
                       {"N", p->qubits.N},
                       {"cycles", p->qubits.cycles},
                       {"len_x", p->qubits.len_x},
                       {"qubit_ratio", p->qubits.ratio},
                       {"p_index", p->p_index},
                       {"epsilon_tilde", p->trace.epsilon.back()}});
    a.check("monotone_convergence_" + tag, monotone(p->trace.epsilon));
    a.check("lemma5_bound_" + tag, p->p_index >= 0.5);
    a.files["convergence_" + tag + ".csv"] =
        to_text([&](std::ostream& os) { write_convergence_csv(p->trace, os); });
    a.files["p_vs_cycles_" + tag + ".csv"] =
        to_text([&](std::ostream& os) { write_series_csv(p->p_series, "p_index", os); });
  }
  const FigurePoint& largest = *points.back();
  a.files["block_ratios_N" + std::to_string(largest.qubits.N) + ".csv"] =
      to_text([&](std::ostream& os) { write_block_ratio_csv(largest.ratios, os); });
  a.files["qubit_multiple.csv"] = to_text([&](std::ostream& os) { write_qubit_series_csv(qubit_series, os); });
  if (qubit_series.size() >= 2) {
    a.check("qubit_ratio_trend", qubit_series.back().ratio <= qubit_series.front().ratio);
  }
  a.report["spec"] = spec_json(spec, std::nullopt);
  a.report["figures"] = figures;
}

void write_artifacts(const std::filesystem::path& dir, Artifacts& a) {
  json checks = json::array();
  for (const auto& [name, pass] : a.checks) checks.push_back({{"name", name}, {"pass", pass}});
  a.report["checks"] = checks;
  std::filesystem::create_directories(dir);
  a.files["report.json"] = a.report.dump(2) + "\n";
  for (const auto& [name, text] : a.files) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
  }
}

}  // namespace

void RunSpec::validate() const {
  if (threads < 1) throw InvalidSpecError("QMG_THREADS must be a positive integer");
  if (mode == Mode::Tables) return;
  try {
    problem().validate();
  } catch (const std::exception& e) {
    throw InvalidSpecError(e.what());
  }
  if (!elements.empty()) {
    if (static_cast<int>(elements.size()) > dimension) {
      throw InvalidSpecError("--elements takes at most " + std::to_string(dimension) + " values");
    }
    for (int e : elements) {
      if (e < 2 || !is_power_of_two(static_cast<unsigned long long>(e))) {
        throw InvalidSpecError("element counts must be powers of two, got " + std::to_string(e));
      }
    }
  }
  if (levels && *levels < 2) throw InvalidSpecError("--levels must be at least 2");
  if (cycles && *cycles < 1) throw InvalidSpecError("--cycles must be positive");
  if (nu < 2) throw InvalidSpecError("--nu must be at least 2");
  if (!(pessimism >= 1.0)) throw InvalidSpecError("--pessimism must be at least 1");
  if (!(tolerance > 0.0)) throw InvalidSpecError("--tolerance must be positive");
  if (!(norm_tolerance > 0.0)) throw InvalidSpecError("--norm-tolerance must be positive");
  if (max_cycles < 1) throw InvalidSpecError("--max-cycles must be positive");
}

ProblemCase RunSpec::problem() const { return ProblemCase{dimension, case_id}; }

std::array<int, 2> RunSpec::mesh() const {
  std::array<int, 2> mesh = reference_elements(problem());
  if (!elements.empty()) {
    mesh[0] = elements[0];
    mesh[1] = dimension == 1 ? 1 : (elements.size() > 1 ? elements[1] : elements[0]);
  }
  return mesh;
}

Mode parse_mode(const std::string& text) {
  static const std::map<std::string, Mode> modes{{"classical", Mode::Classical},
                                                 {"qmg", Mode::Qmg},
                                                 {"tiny-quantum", Mode::TinyQuantum},
                                                 {"tables", Mode::Tables},
                                                 {"figures", Mode::Figures}};
  const auto it = modes.find(text);
  if (it == modes.end()) throw InvalidSpecError("unknown mode '" + text + "'");
  return it->second;
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Classical: return "classical";
    case Mode::Qmg: return "qmg";
    case Mode::TinyQuantum: return "tiny-quantum";
    case Mode::Tables: return "tables";
    case Mode::Figures: return "figures";
  }
  return "unknown";
}

CopyPolicy parse_copies(const std::string& text) {
  if (text == "T") return CopyPolicy::same_as_t();
  if (text == "T-1") return CopyPolicy::t_minus_one();
  try {
    std::size_t used = 0;
    const long long c = std::stoll(text, &used);
    if (used == text.size() && c >= 0) return CopyPolicy::exactly(c);
  } catch (const std::exception&) {
  }
  throw InvalidSpecError("--copies must be T, T-1 or a non-negative integer, got '" + text + "'");
}

std::string copies_to_string(const CopyPolicy& copies) {
  switch (copies.kind) {
    case CopyPolicy::Kind::BlockCount: return "T";
    case CopyPolicy::Kind::BlockCountMinusOne: return "T-1";
    case CopyPolicy::Kind::Explicit: return std::to_string(copies.count);
  }
  return "T";
}

int run(const RunSpec& spec, std::ostream& log) {
  Artifacts artifacts;
  try {
    spec.validate();
    switch (spec.mode) {
      case Mode::Classical: run_classical(spec, artifacts); break;
      case Mode::Qmg: run_qmg_mode(spec, artifacts); break;
      case Mode::TinyQuantum: run_tiny_quantum(spec, artifacts); break;
      case Mode::Tables: run_tables(spec, artifacts); break;
      case Mode::Figures: run_figures(spec, artifacts); break;
    }
  } catch (const InvalidSpecError& e) {
    log << "invalid spec: " << e.what() << '\n';
    return kInvalidSpec;
  } catch (const InvalidConfigError& e) {
    log << "invalid spec: " << e.what() << '\n';
    return kInvalidSpec;
  } catch (const DivergenceError& e) {
    log << "convergence failure: " << e.what() << '\n';
    return kConvergenceFailure;
  } catch (const NonConvergenceError& e) {
    log << "convergence failure: " << e.what() << '\n';
    return kConvergenceFailure;
  }

  write_artifacts(spec.out_dir, artifacts);
  for (const auto& [name, pass] : artifacts.checks) {
    log << (pass ? "ok    " : "FAIL  ") << name << '\n';
  }
  log << "wrote " << artifacts.files.size() << " files to " << spec.out_dir.string() << '\n';
  return artifacts.all_pass() ? kOk : kCheckFailed;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum multigrid emulator for finite element Poisson problems", "qmg"};
  app.set_config("--config", "", "TOML file with flag values; flags on the command line win");

  RunSpec spec;
  std::string mode = "qmg";
  std::string copies = "T";
  std::string out_dir = spec.out_dir.string();
  int levels = 0;
  int cycles = 0;
  app.add_option("--mode", mode, "classical, qmg, tiny-quantum, tables or figures")->capture_default_str();
  app.add_option("--dim", spec.dimension, "Spatial dimension, 1 or 2")->capture_default_str();
  app.add_option("--case", spec.case_id, "Boundary value case")->capture_default_str();
  app.add_option("--elements", spec.elements, "Elements per direction, E or E,E2")->delimiter(',');
  auto* levels_opt = app.add_option("--levels", levels, "Grid levels (default: as many as possible)");
  auto* cycles_opt = app.add_option("--cycles", cycles, "V-cycles (default: until --tolerance)");
  app.add_option("--nu", spec.nu, "Smoothing parameter nu")->capture_default_str();
  app.add_option("--copies", copies, "Copies of the final iterate: T, T-1 or a count")->capture_default_str();
  app.add_option("--pessimism", spec.pessimism, "Multiplier on every subnormalization factor")
      ->capture_default_str();
  app.add_option("--tolerance", spec.tolerance, "Target relative error")->capture_default_str();
  app.add_option("--max-cycles", spec.max_cycles, "Cycle limit when running to tolerance")
      ->capture_default_str();
  app.add_option("--norm-tolerance", spec.norm_tolerance, "Power-iteration tolerance for Z")
      ->capture_default_str();
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInvalidSpec;
  }

  try {
    spec.mode = parse_mode(mode);
    spec.copies = parse_copies(copies);
    if (*levels_opt) spec.levels = levels;
    if (*cycles_opt) spec.cycles = cycles;
    spec.out_dir = out_dir;
    if (const char* threads = std::getenv("QMG_THREADS")) {
      try {
        spec.threads = std::stoi(threads);
      } catch (const std::exception&) {
        spec.threads = 0;
      }
    }
    spec.validate();
  } catch (const InvalidSpecError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInvalidSpec;
  }
  return run(spec, out);
}

}  // namespace qmg::cli
