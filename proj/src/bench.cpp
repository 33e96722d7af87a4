#include "proxqn/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "proxqn/rng.hpp"

namespace proxqn::bench {

namespace {

const std::vector<std::string> kKnownSolvers = {"0sr1", "ista", "fista",
                                                "spg"};

void validate(const BenchConfig& cfg) {
  if (cfg.solvers.empty()) {
    throw std::invalid_argument("bench: at least one solver is required");
  }
  for (const auto& s : cfg.solvers) {
    if (std::find(kKnownSolvers.begin(), kKnownSolvers.end(), s) ==
        kKnownSolvers.end()) {
      throw std::invalid_argument("bench: unknown solver '" + s + "'");
    }
  }
  if (cfg.m < 1 || cfg.n < 1) {
    throw std::invalid_argument("bench: dimensions must be positive");
  }
  if (cfg.tol <= 0) {
    throw std::invalid_argument("bench: tol must be positive");
  }
  if (cfg.max_iters < 1) {
    throw std::invalid_argument("bench: max_iters must be positive");
  }
  if (cfg.format != "csv" && cfg.format != "json") {
    throw std::invalid_argument("bench: format must be csv or json");
  }
}

// FNV-1a over raw bytes; enough to tie traces to one instance.
struct Fnv1a {
  std::uint64_t state = 0xcbf29ce484222325ULL;
  void feed(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state ^= bytes[i];
      state *= 0x100000001b3ULL;
    }
  }
  void feed(const std::string& s) { feed(s.data(), s.size()); }
  void feed(double v) { feed(&v, sizeof(v)); }
  void feed(std::uint64_t v) { feed(&v, sizeof(v)); }
};

SolveResult dispatch(const std::string& name, const CompositeProblem& problem,
                     const Eigen::VectorXd& x0, double tol, int max_iters) {
  if (name == "0sr1") {
    SR1Config cfg;
    cfg.epsilon = tol;
    cfg.max_iters = max_iters;
    return solve_0sr1(problem, x0, cfg);
  }
  if (name == "ista") {
    return solve_ista(problem, x0, 1.0 / problem.smooth.lipschitz, tol,
                      max_iters);
  }
  if (name == "fista") {
    FistaConfig cfg;
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    return solve_fista(problem, x0, cfg);
  }
  if (name == "spg") {
    SpgConfig cfg;
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    return solve_spg(problem, x0, cfg);
  }
  throw std::invalid_argument("bench: unknown solver '" + name + "'");
}

double trace_reference(const ConvergenceTrace& t) {
  if (!std::isnan(t.reference_objective)) return t.reference_objective;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : t.records) best = std::min(best, r.objective);
  return best;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CompositeProblem build_problem(const BenchConfig& cfg) {
  if (cfg.problem == "lasso-gaussian") {
    return gen_gaussian_instance(cfg.m, cfg.n, cfg.lambda, cfg.seed);
  }
  if (cfg.problem == "lasso-pde") {
    // n is the grid side; the instance dimension is n^3.
    return gen_pde_instance(cfg.n, cfg.lambda);
  }
  if (cfg.problem == "nnls") {
    Rng rng(cfg.seed);
    Eigen::MatrixXd A(cfg.m, cfg.n);
    for (int i = 0; i < cfg.m; ++i) {
      for (int j = 0; j < cfg.n; ++j) A(i, j) = rng.normal();
    }
    Eigen::VectorXd x_true(cfg.n);
    for (int j = 0; j < cfg.n; ++j) {
      x_true[j] = rng.below(2) ? rng.uniform() : 0.0;
    }
    Eigen::VectorXd noise(cfg.m);
    for (int i = 0; i < cfg.m; ++i) noise[i] = 0.1 * rng.normal();
    Eigen::VectorXd b = A * x_true + noise;
    return make_nnls(LinearOperator::dense(std::move(A)), std::move(b));
  }
  if (cfg.problem == "svm") {
    // Two Gaussian clusters at +-mu with a handful of informative
    // features; the rest is noise the l1 penalty should zero out.
    Rng rng(cfg.seed);
    Eigen::MatrixXd Z(cfg.m, cfg.n);
    Eigen::VectorXd y(cfg.m);
    const int informative = std::max(1, cfg.n / 10);
    for (int i = 0; i < cfg.m; ++i) {
      const double label = rng.below(2) ? 1.0 : -1.0;
      y[i] = label;
      for (int j = 0; j < cfg.n; ++j) {
        const double mean = j < informative ? 0.5 * label : 0.0;
        Z(i, j) = mean + rng.normal();
      }
    }
    return make_sparse_svm(std::move(Z), std::move(y), cfg.lambda,
                           SvmLoss::SquaredHinge);
  }
  throw std::invalid_argument("bench: unknown problem '" + cfg.problem + "'");
}

std::string problem_hash(const CompositeProblem& problem,
                         const BenchConfig& cfg) {
  Fnv1a h;
  h.feed(cfg.problem);
  h.feed(static_cast<std::uint64_t>(cfg.m));
  h.feed(static_cast<std::uint64_t>(cfg.n));
  h.feed(cfg.lambda);
  h.feed(cfg.seed);
  h.feed(static_cast<std::uint64_t>(problem.dimension));
  if (problem.least_squares) {
    const auto& b = problem.least_squares->b;
    h.feed(b.data(), sizeof(double) * static_cast<std::size_t>(b.size()));
  }
  std::ostringstream oss;
  oss << std::hex << h.state;
  return oss.str();
}

double reference_optimum(const CompositeProblem& problem, long budget) {
  if (budget < 10000) {
    throw std::invalid_argument("reference_optimum: budget must be >= 10^4");
  }
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(problem.dimension);
  double best = objective_value(problem, x0);

  FistaConfig fista;
  fista.tol = 1e-14;
  fista.max_iters = static_cast<int>(budget);
  for (const auto& r : solve_fista(problem, x0, fista).trace.records) {
    best = std::min(best, r.objective);
  }
  SR1Config sr1;
  sr1.epsilon = 1e-14;
  sr1.max_iters = static_cast<int>(budget);
  for (const auto& r : solve_0sr1(problem, x0, sr1).trace.records) {
    best = std::min(best, r.objective);
  }
  return best - 1e-12 * (1.0 + std::abs(best));
}

std::vector<ConvergenceTrace> run(const BenchConfig& cfg) {
  validate(cfg);
  const CompositeProblem problem = build_problem(cfg);
  const std::string hash = problem_hash(problem, cfg);
  const double reference = reference_optimum(problem, cfg.reference_budget);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(problem.dimension);

  std::vector<ConvergenceTrace> traces(cfg.solvers.size());
  auto worker = [&](std::size_t i) {
    SolveResult res =
        dispatch(cfg.solvers[i], problem, x0, cfg.tol, cfg.max_iters);
    traces[i] = std::move(res.trace);
    traces[i].problem_hash = hash;
    traces[i].reference_objective = reference;
  };
  if (cfg.parallel) {
    std::vector<std::thread> pool;
    pool.reserve(cfg.solvers.size());
    for (std::size_t i = 0; i < cfg.solvers.size(); ++i) {
      pool.emplace_back(worker, i);
    }
    for (auto& th : pool) th.join();
  } else {
    for (std::size_t i = 0; i < cfg.solvers.size(); ++i) worker(i);
  }
  return traces;
}

void export_csv(const std::vector<ConvergenceTrace>& traces,
                std::ostream& os) {
  os << "solver,iter,elapsed_s,objective,obj_err,step_norm,step_t,n_grad,"
        "n_prox\n";
  for (const auto& t : traces) {
    const double ref = trace_reference(t);
    for (const auto& r : t.records) {
      os << t.solver << ',' << r.iter << ',' << format_double(r.elapsed_seconds)
         << ',' << format_double(r.objective) << ','
         << format_double(r.objective - ref) << ','
         << format_double(r.step_norm) << ',' << format_double(r.step_t) << ','
         << r.n_grad << ',' << r.n_prox << '\n';
    }
  }
}

nlohmann::json to_json(const std::vector<ConvergenceTrace>& traces,
                       const BenchConfig* cfg) {
  nlohmann::json root;
  if (cfg) {
    root["config"] = {{"problem", cfg->problem},
                      {"m", cfg->m},
                      {"n", cfg->n},
                      {"lambda", cfg->lambda},
                      {"seed", cfg->seed},
                      {"solvers", cfg->solvers},
                      {"tol", cfg->tol},
                      {"max_iters", cfg->max_iters},
                      {"parallel", cfg->parallel},
                      {"reference_budget", cfg->reference_budget}};
  }
  nlohmann::json list = nlohmann::json::array();
  for (const auto& t : traces) {
    const double ref = trace_reference(t);
    nlohmann::json jt;
    jt["solver"] = t.solver;
    jt["status"] = to_string(t.status);
    jt["monotone"] = t.monotone;
    jt["problem_hash"] = t.problem_hash;
    if (!std::isnan(t.reference_objective)) {
      jt["reference_objective"] = t.reference_objective;
    }
    nlohmann::json jc = nlohmann::json::object();
    for (const auto& [k, v] : t.config) jc[k] = v;
    jt["config"] = jc;
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : t.records) {
      recs.push_back({{"iter", r.iter},
                      {"elapsed_s", r.elapsed_seconds},
                      {"objective", r.objective},
                      {"obj_err", r.objective - ref},
                      {"step_norm", r.step_norm},
                      {"step_t", r.step_t},
                      {"n_grad", r.n_grad},
                      {"n_prox", r.n_prox}});
    }
    jt["records"] = recs;
    list.push_back(jt);
  }
  root["traces"] = list;
  return root;
}

std::vector<ConvergenceTrace> traces_from_json(const nlohmann::json& j) {
  std::vector<ConvergenceTrace> traces;
  for (const auto& jt : j.at("traces")) {
    ConvergenceTrace t;
    t.solver = jt.at("solver").get<std::string>();
    const std::string status = jt.at("status").get<std::string>();
    t.status = status == "converged"  ? SolveStatus::Converged
               : status == "failed"   ? SolveStatus::Failed
                                      : SolveStatus::MaxIters;
    t.monotone = jt.at("monotone").get<bool>();
    t.problem_hash = jt.value("problem_hash", std::string{});
    if (jt.contains("reference_objective")) {
      t.reference_objective = jt["reference_objective"].get<double>();
    }
    for (const auto& [k, v] : jt.at("config").items()) {
      t.config.emplace_back(k, v.get<std::string>());
    }
    std::sort(t.config.begin(), t.config.end());
    for (const auto& jr : jt.at("records")) {
      TraceRecord r;
      r.iter = jr.at("iter").get<int>();
      r.elapsed_seconds = jr.at("elapsed_s").get<double>();
      r.objective = jr.at("objective").get<double>();
      r.step_norm = jr.at("step_norm").get<double>();
      r.step_t = jr.at("step_t").get<double>();
      r.n_grad = jr.at("n_grad").get<long long>();
      r.n_prox = jr.at("n_prox").get<long long>();
      t.records.push_back(r);
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

void export_trace(const std::vector<ConvergenceTrace>& traces,
                  const std::string& format, const std::string& path,
                  const BenchConfig* cfg) {
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!path.empty()) {
    file.open(path);
    if (!file) {
      throw std::runtime_error("bench: cannot open output path '" + path +
                               "'");
    }
    os = &file;
  }
  if (format == "csv") {
    export_csv(traces, *os);
  } else if (format == "json") {
    *os << to_json(traces, cfg).dump(2) << '\n';
  } else {
    throw std::invalid_argument("bench: format must be csv or json");
  }
  os->flush();
  if (!path.empty() && !file) {
    throw std::runtime_error("bench: write failed for '" + path + "'");
  }
}

}  // namespace proxqn::bench
