// kronlik: command-line front end for the Kronecker covariance estimators.
//
// stdout carries results only (deterministic for a given manifest); runtime,
// warnings and the run manifest go to stderr unless --out is given.

#include "kronlik/kronlik.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using nlohmann::json;
using namespace kronlik;

enum Exit : int { kOk = 0, kUsage = 1, kNumerical = 2, kRefused = 3 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse:
    case ErrorCode::Io:
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::WrongShape:
    case ErrorCode::NotInInterval:
      return kUsage;
    case ErrorCode::ExistenceRuledOut:
    case ErrorCode::ExistenceNotGuaranteed:
    case ErrorCode::InsufficientData:
    case ErrorCode::NotNonUnique:
      return kRefused;
    default:
      return kNumerical;
  }
}

int exit_code_for(Status s) {
  switch (s) {
    case Status::Converged: return kOk;
    case Status::ExistenceRuledOut: return kRefused;
    default: return kNumerical;
  }
}

struct Common {
  std::string out;
  bool json_output = false;
  std::vector<std::string> argv;
};

struct Run {
  std::string command;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("KRONLIK_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidArgument, std::string("KRONLIK_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

std::string matrix_block(const std::string& name, const Matrix& m) {
  std::ostringstream os;
  os << name << ":\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << ' ';
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ' ' << io::format_double(m(i, j));
    os << '\n';
  }
  return os.str();
}

std::string report_text(const std::string& model, const EstimateReport& r) {
  std::ostringstream os;
  os << "model: " << model << '\n'
     << "status: " << to_string(r.status) << '\n'
     << "existence_zone: " << (r.zone ? std::string(to_string(*r.zone)) : "n/a") << '\n'
     << "iterations: " << r.iterations << '\n'
     << "log_likelihood: " << io::format_double(r.log_likelihood) << '\n'
     << "residual: " << io::format_double(r.residual) << '\n'
     << matrix_block("gamma", r.covariance.gamma) << matrix_block("psi", r.covariance.psi);
  return os.str();
}

std::string uniqueness_text(const UniquenessReport& r) {
  std::ostringstream os;
  os << "classification: " << to_string(r.classification) << '\n'
     << "discriminant: " << io::format_double(r.w.discriminant) << '\n'
     << "v1: " << io::format_double(r.w.v1) << '\n'
     << "v2: " << io::format_double(r.w.v2) << '\n'
     << "v3: " << io::format_double(r.w.v3) << '\n';
  if (r.interval) {
    os << "interval: " << io::format_double(r.interval->first) << ' ' << io::format_double(r.interval->second)
       << '\n';
  }
  if (r.unique_point) {
    os << "unique_point: " << io::format_double(r.unique_point->first) << ' '
       << io::format_double(r.unique_point->second) << '\n';
  }
  if (r.family_loglik) os << "family_log_likelihood: " << io::format_double(*r.family_loglik) << '\n';
  return os.str();
}

std::string digest_inputs(const std::vector<std::string>& paths) {
  std::string all;
  for (const auto& p : paths) {
    all += io::read_file(p);
    all.push_back('\0');
  }
  return io::digest(all);
}

json manifest(const Run& run, const Common& common) {
  json m;
  m["command"] = run.command;
  m["tool_version"] = std::string(kVersion);
  m["config"] = run.config;
  m["seed"] = run.seed ? json(*run.seed) : json(nullptr);
  m["inputs"] = run.inputs;
  m["input_digest"] = digest_inputs(run.inputs);
  m["argv"] = common.argv;
  return m;
}

// Writes the result and its manifest; the manifest lands next to --out or on stderr.
void emit(const Run& run, const Common& common, const std::string& body) {
  const auto m = manifest(run, common);
  if (common.out.empty()) {
    std::cout << body << std::flush;
    std::cerr << "manifest: " << m.dump() << '\n';
  } else {
    io::write_file(common.out, body);
    io::write_file(common.out + ".manifest.json", m.dump(2) + "\n");
  }
}

class Stopwatch {
 public:
  ~Stopwatch() {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
    std::cerr << "runtime_seconds: " << dt.count() << '\n';
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string gamma_file, psi_file, mean_file;
  std::size_t n = 0;
  std::optional<Eigen::Index> p, q;
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a, const Common& common) {
  Run run;
  run.command = "simulate";
  run.inputs = {a.gamma_file, a.psi_file};
  const Matrix gamma = io::read_matrix_file(a.gamma_file);
  const Matrix psi = io::read_matrix_file(a.psi_file);
  if ((a.p && *a.p != gamma.rows()) || (a.q && *a.q != psi.rows())) {
    throw Error(ErrorCode::DimensionMismatch, "--p/--q disagree with the covariance files");
  }
  std::optional<Matrix> mean;
  if (!a.mean_file.empty()) {
    mean = io::read_matrix_file(a.mean_file);
    run.inputs.push_back(a.mean_file);
  }
  run.seed = resolve_seed(a.seed);
  run.config = {{"n", a.n}, {"p", gamma.rows()}, {"q", psi.rows()}};

  auto eng = stream_engine(*run.seed, 0);
  const auto data = simulate({gamma, psi, false}, a.n, eng, mean);
  emit(run, common, common.json_output ? io::dataset_to_json(data) + "\n" : io::dataset_to_text(data));
  return kOk;
}

// ---- estimate -------------------------------------------------------------

struct EstimateArgs {
  std::string input, model = "general", init_psi;
  std::optional<double> tol;
  std::optional<std::size_t> max_iter;
};

EstimateReport from_diagonal(const DiagonalEstimate& d) {
  EstimateReport r;
  r.covariance = d.covariance();
  r.log_likelihood = d.log_likelihood;
  r.iterations = d.iterations;
  r.status = d.status;
  r.residual = d.residual;
  r.zone = ExistenceZone::Guaranteed;
  return r;
}

int run_estimate(const EstimateArgs& a, const Common& common) {
  Run run;
  run.command = "estimate";
  run.inputs = {a.input};
  const auto data = io::read_dataset_file(a.input);
  run.config = {{"model", a.model}};
  if (a.tol) run.config["tol"] = *a.tol;
  if (a.max_iter) run.config["max_iter"] = *a.max_iter;

  EstimateReport report;
  if (a.model == "diagonal") {
    if (!a.init_psi.empty()) throw Error(ErrorCode::InvalidArgument, "--init-psi applies to general/one-diag only");
    DiagonalConfig cfg;
    if (a.tol) cfg.tol = *a.tol;
    if (a.max_iter) cfg.max_iterations = *a.max_iter;
    report = from_diagonal(diagonal_mle(data, cfg));
  } else {
    FlipFlopConfig cfg;
    if (a.tol) cfg.product_tol = *a.tol;
    if (a.max_iter) cfg.max_iterations = *a.max_iter;
    if (!a.init_psi.empty()) {
      cfg.init_psi = io::read_matrix_file(a.init_psi);
      run.inputs.push_back(a.init_psi);
    }
    if (a.model == "general") {
      report = flip_flop(data, cfg);
    } else if (data.p() == 2 && !cfg.init_psi) {
      report = one_diag_mle_p2(data);
    } else {
      report = one_diag_mle(data, cfg);
    }
  }

  if (a.model == "general" && data.p() == data.q() && !data.known_mean()) {
    if (data.n() == 2) {
      std::cerr << "warning: n = 2 with p = q: the maximum likelihood estimate is not unique; "
                   "the estimate depends on --init-psi\n";
    } else if (data.n() == 3 && data.p() == 2) {
      try {
        if (diagnose(data).classification == Classification::NonUnique) {
          std::cerr << "warning: this dataset has a continuum of maximizers (see `kronlik diagnose`); "
                       "the estimate depends on --init-psi\n";
        }
      } catch (const Error&) {
      }
    }
  }

  emit(run, common, common.json_output ? io::report_to_json(report) + "\n" : report_text(a.model, report));
  return exit_code_for(report.status);
}

// ---- diagnose -------------------------------------------------------------

struct DiagnoseArgs {
  std::string input, curves;
  double b_min = -2.0, b_max = 2.0;
  std::size_t b_steps = 401;
  double eps = kBorderlineEps;
};

int run_diagnose(const DiagnoseArgs& a, const Common& common) {
  Run run;
  run.command = "diagnose";
  run.inputs = {a.input};
  run.config = {{"borderline_eps", a.eps}};
  const auto data = io::read_dataset_file(a.input);
  const auto report = diagnose(data, a.eps);

  if (!a.curves.empty()) {
    if (a.b_steps < 2 || !(a.b_max > a.b_min)) {
      throw Error(ErrorCode::InvalidArgument, "curve grid needs b-max > b-min and at least 2 steps");
    }
    run.config["curves"] = {{"b_min", a.b_min}, {"b_max", a.b_max}, {"b_steps", a.b_steps}};
    std::vector<double> grid(a.b_steps);
    for (std::size_t i = 0; i < a.b_steps; ++i) {
      grid[i] = a.b_min + (a.b_max - a.b_min) * static_cast<double>(i) / static_cast<double>(a.b_steps - 1);
    }
    std::ostringstream table;
    table << "# b g h1 h2 w_negative\n";
    for (const auto& pt : curves(report.w, grid)) {
      table << io::format_double(pt.b) << ' ' << io::format_double(pt.g) << ' ' << io::format_double(pt.h1) << ' '
            << io::format_double(pt.h2) << ' ' << (pt.w_negative ? 1 : 0) << '\n';
    }
    io::write_file(a.curves, table.str());
  }

  emit(run, common, common.json_output ? io::uniqueness_to_json(report) + "\n" : uniqueness_text(report));
  return kOk;
}

// ---- family ---------------------------------------------------------------

struct FamilyArgs {
  std::string input;
  std::vector<double> b;
  std::size_t count = 5;
};

int run_family(const FamilyArgs& a, const Common& common) {
  Run run;
  run.command = "family";
  run.inputs = {a.input};
  const auto data = io::read_dataset_file(a.input);
  const auto report = diagnose(data);
  if (report.classification != Classification::NonUnique) {
    throw Error(ErrorCode::NotNonUnique,
                "dataset is classified " + std::string(to_string(report.classification)) + "; no family to list");
  }
  std::vector<double> bs = a.b;
  if (bs.empty()) {
    const auto [lo, hi] = *report.interval;
    for (std::size_t i = 1; i <= a.count; ++i) {
      bs.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(a.count + 1));
    }
  }
  run.config = {{"b", bs}};
  const auto members = family(data, report, bs);
  const auto stats = compute_stats(data);

  std::ostringstream os;
  json arr = json::array();
  for (std::size_t i = 0; i < members.size(); ++i) {
    const double ll = log_likelihood(data, stats.m_hat, members[i]);
    if (common.json_output) {
      arr.push_back({{"b", bs[i]}, {"log_likelihood", ll}, {"covariance", json::parse(io::covariance_to_json(members[i]))}});
    } else {
      os << "member: " << i << '\n'
         << "b: " << io::format_double(bs[i]) << '\n'
         << "log_likelihood: " << io::format_double(ll) << '\n'
         << matrix_block("gamma", members[i].gamma) << matrix_block("psi", members[i].psi);
    }
  }
  emit(run, common, common.json_output ? arr.dump(2) + "\n" : os.str());
  return kOk;
}

// ---- probability ----------------------------------------------------------

struct ProbabilityArgs {
  std::string gamma_file, psi_file;
  std::size_t reps = 10000;
  std::size_t parallelism = 0;
  double eps = kBorderlineEps;
  std::optional<std::uint64_t> seed;
};

int run_probability(const ProbabilityArgs& a, const Common& common) {
  Run run;
  run.command = "probability";
  run.inputs = {a.gamma_file, a.psi_file};
  run.seed = resolve_seed(a.seed);
  const std::size_t workers = a.parallelism ? a.parallelism : std::max(1u, std::thread::hardware_concurrency());
  // parallelism is not part of the config: it cannot change the result
  run.config = {{"reps", a.reps}, {"borderline_eps", a.eps}};
  const auto est = nonuniqueness_probability(io::read_matrix_file(a.gamma_file), io::read_matrix_file(a.psi_file),
                                             a.reps, *run.seed, workers, a.eps);
  std::ostringstream os;
  if (common.json_output) {
    os << json{{"fraction", est.fraction},   {"ci95", {est.ci_low, est.ci_high}},
               {"replications", est.replications}, {"non_unique", est.non_unique},
               {"unique", est.unique},       {"borderline", est.borderline}}
              .dump(2)
       << '\n';
  } else {
    os << "fraction: " << io::format_double(est.fraction) << '\n'
       << "ci95: " << io::format_double(est.ci_low) << ' ' << io::format_double(est.ci_high) << '\n'
       << "ci95_width: " << io::format_double(est.ci_high - est.ci_low) << '\n'
       << "replications: " << est.replications << '\n'
       << "non_unique: " << est.non_unique << '\n'
       << "unique: " << est.unique << '\n'
       << "borderline: " << est.borderline << '\n';
  }
  emit(run, common, os.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum likelihood estimation for Kronecker-structured covariance matrices"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  common.argv.assign(argv, argv + argc);
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "Write the result here (manifest goes to <out>.manifest.json)");
    sub->add_flag("--json", common.json_output, "Emit JSON instead of text");
  };

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Draw a matrix-normal dataset");
  simulate_cmd->add_option("--gamma", sim.gamma_file, "Row covariance (p x p)")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--psi", sim.psi_file, "Column covariance (q x q)")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--mean", sim.mean_file, "Mean matrix (p x q), default zero")->check(CLI::ExistingFile);
  simulate_cmd->add_option("-n,--n", sim.n, "Number of observations")->required()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--p", sim.p, "Expected rows (checked against --gamma)");
  simulate_cmd->add_option("--q", sim.q, "Expected columns (checked against --psi)");
  simulate_cmd->add_option("--seed", sim.seed, "RNG seed (fallback: KRONLIK_SEED, then 0)");
  add_common(simulate_cmd);

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate the covariance factors of a dataset");
  estimate_cmd->add_option("input", est.input, "Dataset file")->required()->check(CLI::ExistingFile);
  estimate_cmd->add_option("--model", est.model, "Covariance model")
      ->check(CLI::IsMember({"general", "diagonal", "one-diag"}));
  estimate_cmd->add_option("--init-psi", est.init_psi, "Starting column covariance")->check(CLI::ExistingFile);
  estimate_cmd->add_option("--tol", est.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
  estimate_cmd->add_option("--max-iter", est.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  add_common(estimate_cmd);

  DiagnoseArgs diag;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "Decide uniqueness of the MLE for n = 3, p = q = 2");
  diagnose_cmd->add_option("input", diag.input, "Dataset file")->required()->check(CLI::ExistingFile);
  diagnose_cmd->add_option("--curves", diag.curves, "Write the (b, g, h1, h2) table to this file");
  diagnose_cmd->add_option("--b-min", diag.b_min, "Curve grid start");
  diagnose_cmd->add_option("--b-max", diag.b_max, "Curve grid end");
  diagnose_cmd->add_option("--b-steps", diag.b_steps, "Curve grid points");
  diagnose_cmd->add_option("--eps", diag.eps, "Relative borderline band for disc(W)")->check(CLI::NonNegativeNumber);
  add_common(diagnose_cmd);

  FamilyArgs fam;
  auto* family_cmd = app.add_subcommand("family", "List maximizers of a non-unique n = 3 dataset");
  family_cmd->add_option("input", fam.input, "Dataset file")->required()->check(CLI::ExistingFile);
  family_cmd->add_option("--b", fam.b, "Interior b values (default: evenly spaced)");
  family_cmd->add_option("--count", fam.count, "Number of evenly spaced members")->check(CLI::PositiveNumber);
  add_common(family_cmd);

  ProbabilityArgs prob;
  auto* probability_cmd = app.add_subcommand("probability", "Monte Carlo fraction of non-unique n = 3 datasets");
  probability_cmd->add_option("--gamma", prob.gamma_file, "2 x 2 row covariance")->required()->check(CLI::ExistingFile);
  probability_cmd->add_option("--psi", prob.psi_file, "2 x 2 column covariance")->required()->check(CLI::ExistingFile);
  probability_cmd->add_option("--reps", prob.reps, "Replications (>= 100)");
  probability_cmd->add_option("--parallelism", prob.parallelism, "Worker threads (default: all cores)");
  probability_cmd->add_option("--seed", prob.seed, "RNG seed (fallback: KRONLIK_SEED, then 0)");
  probability_cmd->add_option("--eps", prob.eps, "Relative borderline band for disc(W)")->check(CLI::NonNegativeNumber);
  add_common(probability_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    Stopwatch timer;
    if (*simulate_cmd) return run_simulate(sim, common);
    if (*estimate_cmd) return run_estimate(est, common);
    if (*diagnose_cmd) return run_diagnose(diag, common);
    if (*family_cmd) return run_family(fam, common);
    return run_probability(prob, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
