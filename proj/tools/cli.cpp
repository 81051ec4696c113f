// Command-line front end: variable selection, single-model fits and
// evidence, dataset simulation, and canned experiment replication.
//
// Exit codes: 0 success, 1 usage error, 2 data error (parsing, rank
// deficiency, dimension mismatches), 3 numerical error (non-convergence,
// degenerate Hessians).

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tpsel/tpsel.hpp"

using json = nlohmann::ordered_json;
using namespace tpsel;

namespace {

// ---------------------------------------------------------------- helpers --

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) out.push_back(cell);
  }
  return out;
}

VectorXd parse_vector(const std::string& s) {
  const auto cells = split_csv_list(s);
  VectorXd v(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::size_t pos = 0;
    v((Eigen::Index)i) = std::stod(cells[i], &pos);
    if (pos != cells[i].size())
      throw std::invalid_argument("bad number in list: " + cells[i]);
  }
  return v;
}

CoefPrior parse_prior(const std::string& s) {
  if (s == "mom") return CoefPrior::MOM;
  if (s == "emom") return CoefPrior::eMOM;
  if (s == "imom") return CoefPrior::iMOM;
  if (s == "zellner") return CoefPrior::ZellnerLocal;
  throw std::invalid_argument("unknown prior: " + s);
}

// Family mode string -> (infer, skew, thick); "quantile" handled separately.
void parse_family(const std::string& s, bool& infer, bool& skew, bool& thick) {
  infer = skew = thick = false;
  if (s == "infer") infer = true;
  else if (s == "normal") {}
  else if (s == "twopiece_normal") skew = true;
  else if (s == "laplace") thick = true;
  else if (s == "twopiece_laplace") skew = thick = true;
  else throw std::invalid_argument("unknown family: " + s);
}

const char* family_name(const ModelGamma& g) {
  if (g.thick) return g.skew ? "twopiece_laplace" : "laplace";
  return g.skew ? "twopiece_normal" : "normal";
}

// Shared option bundle mirroring RunConfig.
struct Options {
  std::string input, response = "y", predictors, output;
  std::string family = "infer", prior = "mom", model_prior = "betabinomial";
  std::string search = "enumerate", evidence = "laplace";
  std::vector<double> tau;
  double g_theta = -1.0, g_alpha = -1.0;
  double a_vartheta = 0.01, b_vartheta = 0.01;
  double a_gamma = 1.0, b_gamma = 1.0, binomial_rho = -1.0;
  long gibbs_iters = 2000, importance_B = 10000;
  unsigned long long seed = 12345;
  bool no_intercept = false, select_intercept = false;
};

void add_prior_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--prior", o.prior,
                  "Coefficient prior: mom|emom|imom|zellner (default mom)");
  cmd->add_option("--g-theta", o.g_theta,
                  "Coefficient prior dispersion (default: family-specific)");
  cmd->add_option("--g-alpha", o.g_alpha,
                  "Asymmetry prior dispersion (default: family-specific)");
  cmd->add_option("--a-vartheta", o.a_vartheta, "Scale prior shape (default 0.01)");
  cmd->add_option("--b-vartheta", o.b_vartheta, "Scale prior rate (default 0.01)");
}

void add_data_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--input", o.input, "Input CSV (header required)")->required();
  cmd->add_option("--response", o.response, "Response column name (default y)");
  cmd->add_option("--predictors", o.predictors,
                  "Comma-separated predictor columns (default: all others)");
  cmd->add_flag("--no-intercept", o.no_intercept,
                "Do not append an intercept column");
  cmd->add_flag("--select-intercept", o.select_intercept,
                "Let the search include/exclude the intercept");
}

PriorSpec build_prior_spec(const Options& o) {
  PriorSpec spec = PriorSpec::defaults(parse_prior(o.prior));
  if (o.g_theta > 0.0) spec.g_theta = o.g_theta;
  if (o.g_alpha > 0.0) spec.g_alpha = o.g_alpha;
  spec.a_vartheta = o.a_vartheta;
  spec.b_vartheta = o.b_vartheta;
  spec.a_gamma = o.a_gamma;
  spec.b_gamma = o.b_gamma;
  if (o.model_prior == "betabinomial") spec.model_prior = ModelPriorKind::BetaBinomial;
  else if (o.model_prior == "uniform") spec.model_prior = ModelPriorKind::Uniform;
  else if (o.model_prior == "binomial") {
    spec.model_prior = ModelPriorKind::Binomial;
    if (o.binomial_rho <= 0.0 || o.binomial_rho >= 1.0)
      throw std::invalid_argument("binomial model prior requires --binomial-rho in (0,1)");
    spec.binomial_rho = o.binomial_rho;
  } else {
    throw std::invalid_argument("unknown model prior: " + o.model_prior);
  }
  return spec;
}

// Load the dataset and append the intercept column unless opted out.
// Returns the intercept's column index (-1 when absent).
Eigen::Index load_dataset(const Options& o, Dataset& d) {
  const CsvTable tab = read_csv(o.input);
  d = dataset_from_csv(tab, o.response, split_csv_list(o.predictors));
  if (o.no_intercept) return -1;
  const Eigen::Index p = d.p();
  MatrixXd X(d.n(), p + 1);
  X.leftCols(p) = d.X;
  X.col(p).setOnes();
  d.X = X;
  d.names.push_back("(Intercept)");
  return p;
}

json config_json(const Options& o) {
  json c;
  c["input"] = o.input;
  c["response"] = o.response;
  c["predictors"] = o.predictors;
  c["family"] = o.family;
  c["tau"] = o.tau;
  c["prior"] = o.prior;
  c["g_theta"] = o.g_theta;
  c["g_alpha"] = o.g_alpha;
  c["a_vartheta"] = o.a_vartheta;
  c["b_vartheta"] = o.b_vartheta;
  c["model_prior"] = o.model_prior;
  c["search"] = o.search;
  c["gibbs_iters"] = o.gibbs_iters;
  c["evidence"] = o.evidence;
  c["importance_B"] = o.importance_B;
  c["no_intercept"] = o.no_intercept;
  c["select_intercept"] = o.select_intercept;
  c["seed"] = o.seed;
  return c;
}

void emit(const json& doc, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << doc.dump(2) << "\n";
  } else {
    std::ofstream out(output);
    if (!out) throw DataError("cannot write output file: " + output);
    out << doc.dump(2) << "\n";
  }
}

json selection_json(const SelectionResult& res, const Dataset& d) {
  json out;
  json models = json::array();
  const std::size_t top = std::min<std::size_t>(res.visited.size(), 64);
  for (std::size_t i = 0; i < top; ++i) {
    const auto& v = res.visited[i];
    json m;
    std::vector<std::string> vars;
    for (Eigen::Index j : v.gamma.active()) vars.push_back(d.names[(std::size_t)j]);
    m["variables"] = vars;
    m["family"] = family_name(v.gamma);
    m["log_evidence"] = v.log_evidence;
    m["log_joint"] = v.log_joint;
    m["posterior_prob"] = res.post_probs[i];
    m["visits"] = v.visits;
    models.push_back(std::move(m));
  }
  out["models"] = std::move(models);
  out["n_models_visited"] = res.visited.size();
  json inc, bma;
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    inc[d.names[(std::size_t)j]] = res.inclusion_probs(j);
    bma[d.names[(std::size_t)j]] = res.bma_theta(j);
  }
  out["inclusion_probs"] = std::move(inc);
  out["bma_theta"] = std::move(bma);
  out["family_probs"] = {{"normal", res.family_probs(0)},
                         {"twopiece_normal", res.family_probs(1)},
                         {"laplace", res.family_probs(2)},
                         {"twopiece_laplace", res.family_probs(3)}};
  return out;
}

SelectionResult run_search(const Dataset& d, const PriorSpec& spec,
                           const SearchConfig& cfg, const Options& o) {
  if (o.search == "enumerate") return enumerate_models(d, spec, cfg);
  if (o.search == "gibbs") {
    std::mt19937_64 rng(o.seed);
    return gibbs_search(d, spec, o.gibbs_iters, rng, cfg);
  }
  throw std::invalid_argument("unknown search: " + o.search);
}

// ------------------------------------------------------------ subcommands --

int cmd_select(const Options& o) {
  Dataset d;
  const Eigen::Index icol = load_dataset(o, d);
  PriorSpec spec = build_prior_spec(o);
  SearchConfig cfg;
  if (icol >= 0 && !o.select_intercept) cfg.forced.push_back(icol);
  cfg.evidence.adjust_curvature = o.evidence == "laplace_adjusted";
  if (o.evidence == "importance") {
    cfg.importance_B = o.importance_B;
    cfg.importance_seed = o.seed;
  } else if (o.evidence != "laplace" && o.evidence != "laplace_adjusted") {
    throw std::invalid_argument("unknown evidence method: " + o.evidence);
  }

  json doc;
  doc["config"] = config_json(o);
  if (o.family == "quantile") {
    if (o.tau.empty())
      throw std::invalid_argument("quantile mode requires --tau");
    json per_tau;
    for (double t : o.tau) {
      if (t <= 0.0 || t >= 1.0)
        throw std::invalid_argument("tau must lie in (0,1)");
      PriorSpec qspec = spec;
      qspec.fixed_alpha = 2.0 * t - 1.0;
      SearchConfig qcfg = cfg;
      qcfg.infer_family = false;
      qcfg.skew = true;
      qcfg.thick = true;  // asymmetric Laplace at fixed alpha
      const SelectionResult res = run_search(d, qspec, qcfg, o);
      per_tau[std::to_string(t)] = selection_json(res, d);
    }
    doc["by_tau"] = std::move(per_tau);
  } else {
    parse_family(o.family, cfg.infer_family, cfg.skew, cfg.thick);
    const SelectionResult res = run_search(d, spec, cfg, o);
    doc.update(selection_json(res, d));
  }
  emit(doc, o.output);
  return 0;
}

int cmd_fit(const Options& o, const std::string& type, const std::string& algo) {
  Dataset d;
  load_dataset(o, d);
  ModelGamma g;
  g.include.assign((std::size_t)d.p(), true);
  PriorSpec spec = build_prior_spec(o);
  if (o.family == "quantile") {
    if (o.tau.size() != 1)
      throw std::invalid_argument("fit in quantile mode requires exactly one --tau");
    spec.fixed_alpha = 2.0 * o.tau[0] - 1.0;
    g.skew = g.thick = true;
  } else {
    bool infer = false;
    parse_family(o.family, infer, g.skew, g.thick);
    if (infer)
      throw std::invalid_argument("fit requires a fixed family (not infer)");
  }
  OptimOptions opts;
  if (algo == "cda") opts.algorithm = Algorithm::CDA;
  else if (algo != "lma")
    throw std::invalid_argument("unknown algorithm: " + algo);

  FitResult fit;
  if (type == "mle") fit = mle(d, g, opts, spec.fixed_alpha);
  else if (type == "posterior") fit = posterior_mode(d, g, spec, opts);
  else throw std::invalid_argument("unknown fit type: " + type);
  if (!fit.converged) throw NumericalError("fit did not converge");

  const Params p = from_transformed(fit.eta_hat);
  json doc;
  doc["config"] = config_json(o);
  doc["type"] = type;
  json theta;
  for (Eigen::Index j = 0; j < d.p(); ++j)
    theta[d.names[(std::size_t)j]] = p.theta(j);
  doc["theta"] = std::move(theta);
  doc["vartheta"] = p.vartheta;
  doc["alpha"] = spec.fixed_alpha ? *spec.fixed_alpha : p.alpha;
  doc["loglik"] = fit.loglik_at_mode;
  if (type == "posterior") doc["logpost"] = fit.logpost_at_mode;
  doc["iterations"] = fit.iterations;
  doc["converged"] = fit.converged;
  emit(doc, o.output);
  return 0;
}

int cmd_evidence(const Options& o, const std::string& include) {
  Dataset d;
  const Eigen::Index icol = load_dataset(o, d);
  ModelGamma g;
  g.include.assign((std::size_t)d.p(), include.empty());
  if (!include.empty()) {
    if (icol >= 0) g.include[(std::size_t)icol] = true;
    for (const auto& name : split_csv_list(include)) {
      bool found = false;
      for (std::size_t j = 0; j < d.names.size(); ++j)
        if (d.names[j] == name) {
          g.include[j] = true;
          found = true;
        }
      if (!found) throw DataError("unknown predictor in --include: " + name);
    }
  }
  PriorSpec spec = build_prior_spec(o);
  if (o.family == "quantile") {
    if (o.tau.size() != 1)
      throw std::invalid_argument("evidence in quantile mode requires exactly one --tau");
    spec.fixed_alpha = 2.0 * o.tau[0] - 1.0;
    g.skew = g.thick = true;
  } else {
    bool infer = false;
    parse_family(o.family, infer, g.skew, g.thick);
    if (infer)
      throw std::invalid_argument("evidence requires a fixed family (not infer)");
  }
  EvidenceOptions eopts;
  eopts.adjust_curvature = o.evidence == "laplace_adjusted";
  ModelEvidence ev;
  if (o.evidence == "importance") {
    std::mt19937_64 rng(o.seed);
    ev = importance_evidence(d, g, spec, o.importance_B, rng, eopts);
  } else if (o.evidence == "laplace" || o.evidence == "laplace_adjusted") {
    ev = laplace_evidence(d, g, spec, eopts);
  } else {
    throw std::invalid_argument("unknown evidence method: " + o.evidence);
  }
  json doc;
  doc["config"] = config_json(o);
  std::vector<std::string> vars;
  for (Eigen::Index j : g.active()) vars.push_back(d.names[(std::size_t)j]);
  doc["variables"] = vars;
  doc["family"] = family_name(g);
  doc["log_marginal"] = ev.log_marginal;
  doc["method"] =
      ev.method == EvidenceMethod::LaplaceApprox ? "laplace" : "importance";
  if (ev.method == EvidenceMethod::ImportanceSampling) {
    doc["is_samples"] = ev.is_samples;
    doc["ess"] = ev.ess;
    doc["ess_warning"] = ev.ess_warning;
  }
  doc["curvature_adjusted"] = ev.curvature_adjusted;
  emit(doc, o.output);
  return 0;
}

int cmd_simulate(const std::string& kind, const std::string& base,
                 double vartheta, double alpha, double alpha_sd, long n,
                 long p, const std::string& theta, double rho,
                 unsigned long long seed, const std::string& output) {
  Scenario sc;
  if (kind == "iid") sc.kind = ScenarioKind::IID;
  else if (kind == "heteroscedastic") sc.kind = ScenarioKind::Heteroscedastic;
  else if (kind == "heteroasymmetric") sc.kind = ScenarioKind::HeteroAsymmetric;
  else if (kind == "inlier") sc.kind = ScenarioKind::InlierDegenerate;
  else throw std::invalid_argument("unknown scenario: " + kind);
  if (base == "normal") sc.base = Base::Normal;
  else if (base == "laplace") sc.base = Base::Laplace;
  else throw std::invalid_argument("unknown base: " + base);
  sc.vartheta = vartheta;
  sc.alpha = alpha;
  sc.alpha_sd = alpha_sd;
  sc.n = n;
  sc.p = p;
  sc.rho = rho;
  sc.theta_true = theta.empty() ? VectorXd(VectorXd::Zero(p)) : parse_vector(theta);
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(e.what());
  }
  std::mt19937_64 rng(seed);
  MatrixXd X = gen_design(sc.n, sc.p, sc.rho, rng);
  const VectorXd y = gen_response(X, sc, rng);
  std::vector<std::string> header{"y"};
  for (long j = 1; j <= p; ++j) header.push_back("x" + std::to_string(j));
  std::vector<std::vector<double>> rows((std::size_t)n);
  for (long i = 0; i < n; ++i) {
    rows[(std::size_t)i].push_back(y(i));
    for (long j = 0; j < p; ++j) rows[(std::size_t)i].push_back(X(i, j));
  }
  write_csv(output, header, rows);
  return 0;
}

// ------------------------------------------------------------- replicate --

// Shared simulation of the p=6, n=100, rho=0.5 design from the sensitivity
// study, with errors from the given two-piece law.  The first column is a
// ones intercept (its true coefficient is zero) and is subject to selection.
Dataset sim61_dataset(std::mt19937_64& rng, Base base, double vt, double alpha) {
  Scenario sc;
  sc.kind = ScenarioKind::IID;
  sc.base = base;
  sc.vartheta = vt;
  sc.alpha = alpha;
  sc.n = 100;
  sc.p = 6;
  sc.rho = 0.5;
  sc.theta_true = VectorXd(6);
  sc.theta_true << 0.0, 0.5, 1.0, 1.5, 0.0, 0.0;
  Dataset d;
  d.X = gen_design(sc.n, sc.p, sc.rho, rng);
  d.X.col(0).setOnes();
  d.y = gen_response(d.X, sc, rng);
  for (int j = 1; j <= 6; ++j) d.names.push_back("x" + std::to_string(j));
  return d;
}

int replicate_sim61(long reps, unsigned long long seed, const std::string& out) {
  std::mt19937_64 rng(seed);
  PriorSpec spec = PriorSpec::defaults(CoefPrior::MOM);
  spec.model_prior = ModelPriorKind::Uniform;
  const char* families[4] = {"normal", "twopiece_normal", "laplace",
                             "twopiece_laplace"};
  MatrixXd mean_inc = MatrixXd::Zero(4, 6);
  for (long r = 0; r < reps; ++r) {
    Dataset d = sim61_dataset(rng, Base::Laplace, 4.0, -0.5);
    for (int f = 0; f < 4; ++f) {
      SearchConfig cfg;
      cfg.skew = (f & 1) != 0;
      cfg.thick = (f & 2) != 0;
      const SelectionResult res = enumerate_models(d, spec, cfg);
      mean_inc.row(f) += res.inclusion_probs.transpose() / (double)reps;
    }
  }
  std::vector<std::string> header{"family", "predictor", "mean_inclusion"};
  std::ofstream os(out);
  if (!os) throw DataError("cannot write output file: " + out);
  os << "family,predictor,mean_inclusion\n";
  os.precision(10);
  for (int f = 0; f < 4; ++f)
    for (int j = 0; j < 6; ++j)
      os << families[f] << ",x" << (j + 1) << "," << mean_inc(f, j) << "\n";
  return 0;
}

int replicate_family(long reps, unsigned long long seed, const std::string& out) {
  std::mt19937_64 rng(seed);
  PriorSpec spec = PriorSpec::defaults(CoefPrior::MOM);
  spec.model_prior = ModelPriorKind::Uniform;
  const char* families[4] = {"normal", "twopiece_normal", "laplace",
                             "twopiece_laplace"};
  MatrixXd mean_probs = MatrixXd::Zero(4, 4);  // true family x assigned family
  for (long r = 0; r < reps; ++r) {
    for (int t = 0; t < 4; ++t) {
      const Base base = (t & 2) ? Base::Laplace : Base::Normal;
      const double alpha = (t & 1) ? -0.5 : 0.0;
      Dataset d = sim61_dataset(rng, base, 2.0, alpha);
      SearchConfig cfg;
      cfg.infer_family = true;
      const SelectionResult res = enumerate_models(d, spec, cfg);
      mean_probs.row(t) += res.family_probs.transpose() / (double)reps;
    }
  }
  std::ofstream os(out);
  if (!os) throw DataError("cannot write output file: " + out);
  os << "true_family,assigned_family,mean_posterior_prob\n";
  os.precision(10);
  for (int t = 0; t < 4; ++t)
    for (int f = 0; f < 4; ++f)
      os << families[t] << "," << families[f] << "," << mean_probs(t, f) << "\n";
  return 0;
}

int replicate_inlier(long reps, unsigned long long seed, const std::string& out) {
  std::ofstream os(out);
  if (!os) throw DataError("cannot write output file: " + out);
  os << "prior,seed,true_positives,false_positives\n";
  const CoefPrior priors[3] = {CoefPrior::ZellnerLocal, CoefPrior::MOM,
                               CoefPrior::eMOM};
  const char* names[3] = {"zellner", "mom", "emom"};
  for (long r = 0; r < reps; ++r) {
    Scenario sc;
    sc.kind = ScenarioKind::InlierDegenerate;
    sc.base = Base::Normal;
    sc.vartheta = 2.0;
    sc.n = 50;
    sc.p = 50;
    sc.rho = 0.0;
    sc.theta_true = VectorXd::Zero(50);
    sc.theta_true.head(5).setConstant(0.1);
    std::mt19937_64 rng(seed + (unsigned long long)r);
    Dataset d;
    d.X = gen_design(sc.n, sc.p, sc.rho, rng);
    d.y = gen_response(d.X, sc, rng);
    for (int pr = 0; pr < 3; ++pr) {
      PriorSpec spec = PriorSpec::defaults(priors[pr]);
      SearchConfig cfg;  // assumed Normal errors, Beta-Binomial(1,1)
      std::mt19937_64 chain(seed * 1000003ull + (unsigned long long)r * 31ull +
                            (unsigned long long)pr);
      const SelectionResult res = gibbs_search(d, spec, 50, chain, cfg);
      const auto& top = res.visited[0].gamma;
      int tp = 0, fp = 0;
      for (int j = 0; j < 50; ++j) {
        if (top.include[(std::size_t)j]) (j < 5 ? tp : fp) += 1;
      }
      os << names[pr] << "," << r << "," << tp << "," << fp << "\n";
    }
  }
  return 0;
}

int replicate_bfrate(long reps, unsigned long long seed, const std::string& out) {
  std::ofstream os(out);
  if (!os) throw DataError("cannot write output file: " + out);
  os << "prior,n,seed,logbf_spurious,logbf_missing\n";
  os.precision(10);
  const long ns[5] = {100, 200, 400, 800, 1600};
  for (long r = 0; r < reps; ++r) {
    for (long n : ns) {
      std::mt19937_64 rng(seed + 977ull * (unsigned long long)r +
                          (unsigned long long)n);
      std::normal_distribution<double> gauss(0.0, 1.0);
      Dataset d;
      d.X.resize(n, 3);
      d.y.resize(n);
      for (long i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) d.X(i, j) = gauss(rng);
        d.y(i) = 1.0 * d.X(i, 0) + 0.5 * d.X(i, 1) + gauss(rng);
      }
      ModelGamma truth{{true, true, false}, false, false};
      ModelGamma spurious{{true, true, true}, false, false};
      ModelGamma missing{{true, false, false}, false, false};
      for (CoefPrior f : {CoefPrior::ZellnerLocal, CoefPrior::MOM}) {
        PriorSpec spec = PriorSpec::defaults(f);
        const double lt = laplace_evidence(d, truth, spec).log_marginal;
        const double ls = laplace_evidence(d, spurious, spec).log_marginal;
        const double lm = laplace_evidence(d, missing, spec).log_marginal;
        os << (f == CoefPrior::MOM ? "mom" : "zellner") << "," << n << "," << r
           << "," << (ls - lt) << "," << (lm - lt) << "\n";
      }
    }
  }
  return 0;
}

int replicate_quantile(long reps, unsigned long long seed, const std::string& out) {
  std::mt19937_64 rng(seed);
  const double qs[5] = {0.05, 0.25, 0.5, 0.75, 0.95};
  VectorXd mean_inc2 = VectorXd::Zero(5);
  for (long r = 0; r < reps; ++r) {
    Scenario sc;
    sc.kind = ScenarioKind::Heteroscedastic;
    sc.base = Base::Normal;
    sc.vartheta = 2.0;
    sc.n = 100;
    sc.p = 6;
    sc.rho = 0.5;
    sc.theta_true = VectorXd(6);
    sc.theta_true << 0.0, 0.5, 1.0, 1.5, 0.0, 0.0;
    Dataset d;
    d.X = gen_design(sc.n, sc.p, sc.rho, rng);
    d.X.col(0).setOnes();
    d.y = gen_response(d.X, sc, rng);
    for (int qi = 0; qi < 5; ++qi) {
      PriorSpec spec = PriorSpec::defaults(CoefPrior::MOM);
      spec.model_prior = ModelPriorKind::Uniform;
      spec.fixed_alpha = 2.0 * qs[qi] - 1.0;
      SearchConfig cfg;
      cfg.skew = true;
      cfg.thick = true;
      const SelectionResult res = enumerate_models(d, spec, cfg);
      mean_inc2(qi) += res.inclusion_probs(1) / (double)reps;
    }
  }
  std::ofstream os(out);
  if (!os) throw DataError("cannot write output file: " + out);
  os << "quantile,mean_inclusion_x2\n";
  os.precision(10);
  for (int qi = 0; qi < 5; ++qi) os << qs[qi] << "," << mean_inc2(qi) << "\n";
  return 0;
}

int replicate_corollary1(long reps, unsigned long long seed,
                         const std::string& out) {
  std::ofstream os(out);
  if (!os) throw DataError("cannot write output file: " + out);
  os << "seed,theta_laplace,theta_ls\n";
  os.precision(12);
  const long n = 5000;
  double sl = 0.0, sl2 = 0.0, sm = 0.0, sm2 = 0.0;
  for (long r = 0; r < reps; ++r) {
    std::mt19937_64 rng(seed + (unsigned long long)r);
    Dataset d;
    d.X = MatrixXd::Ones(n, 1);
    d.y.resize(n);
    TwoPieceParams tp{0.0, 2.0, 0.0, Base::Normal};
    for (long i = 0; i < n; ++i) d.y(i) = tp_sample1(rng, tp);
    ModelGamma g{{true}, false, true};  // symmetric Laplace fit
    const FitResult fit = mle(d, g, {});
    const double tl = fit.eta_hat.theta(0);
    const double tm = d.y.mean();
    os << r << "," << tl << "," << tm << "\n";
    sl += tl; sl2 += tl * tl;
    sm += tm; sm2 += tm * tm;
  }
  const double vl = sl2 / reps - (sl / reps) * (sl / reps);
  const double vm = sm2 / reps - (sm / reps) * (sm / reps);
  os << "# variance_ratio," << (vl / vm) << ",\n";
  return 0;
}

int cmd_replicate(const std::string& experiment, long reps,
                  unsigned long long seed, const std::string& out) {
  if (experiment == "sim61") return replicate_sim61(reps, seed, out);
  if (experiment == "family") return replicate_family(reps, seed, out);
  if (experiment == "inlier") return replicate_inlier(reps, seed, out);
  if (experiment == "bfrate") return replicate_bfrate(reps, seed, out);
  if (experiment == "quantile") return replicate_quantile(reps, seed, out);
  if (experiment == "corollary1") return replicate_corollary1(reps, seed, out);
  throw std::invalid_argument("unknown experiment: " + experiment);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian variable selection under two-piece error models"};
  app.require_subcommand(1);

  Options o;
  std::string fit_type = "mle", fit_algo = "lma", include_list;
  std::string sim_kind = "iid", sim_base = "normal", sim_theta;
  double sim_vt = 1.0, sim_alpha = 0.0, sim_alpha_sd = 0.25, sim_rho = 0.0;
  long sim_n = 100, sim_p = 2;
  std::string experiment;
  long reps = 5;

  auto* sel = app.add_subcommand("select", "Variable + family selection");
  add_data_flags(sel, o);
  add_prior_flags(sel, o);
  sel->add_option("--family", o.family,
                  "infer|normal|twopiece_normal|laplace|twopiece_laplace|quantile");
  sel->add_option("--tau", o.tau, "Quantile levels for family=quantile");
  sel->add_option("--model-prior", o.model_prior, "betabinomial|uniform|binomial");
  sel->add_option("--binomial-rho", o.binomial_rho, "Inclusion prob for binomial prior");
  sel->add_option("--search", o.search, "enumerate|gibbs (default enumerate)");
  sel->add_option("--gibbs-iters", o.gibbs_iters, "Gibbs sweeps (default 2000)");
  sel->add_option("--evidence", o.evidence, "laplace|laplace_adjusted|importance");
  sel->add_option("--importance-b", o.importance_B, "IS sample count");
  sel->add_option("--seed", o.seed, "RNG seed")->envname("TPSEL_SEED");
  sel->add_option("--output", o.output, "Output JSON path (default stdout)");

  auto* fit = app.add_subcommand("fit", "Single-model fit (all predictors)");
  add_data_flags(fit, o);
  add_prior_flags(fit, o);
  fit->add_option("--family", o.family, "Fixed family or quantile");
  fit->add_option("--tau", o.tau, "Quantile level for family=quantile");
  fit->add_option("--type", fit_type, "mle|posterior (default mle)");
  fit->add_option("--algorithm", fit_algo, "lma|cda (default lma)");
  fit->add_option("--seed", o.seed, "RNG seed")->envname("TPSEL_SEED");
  fit->add_option("--output", o.output, "Output JSON path (default stdout)");

  auto* evd = app.add_subcommand("evidence", "Single-model marginal likelihood");
  add_data_flags(evd, o);
  add_prior_flags(evd, o);
  evd->add_option("--family", o.family, "Fixed family or quantile");
  evd->add_option("--tau", o.tau, "Quantile level for family=quantile");
  evd->add_option("--include", include_list,
                  "Comma-separated active predictors (default: all)");
  evd->add_option("--evidence", o.evidence, "laplace|laplace_adjusted|importance");
  evd->add_option("--importance-b", o.importance_B, "IS sample count");
  evd->add_option("--seed", o.seed, "RNG seed")->envname("TPSEL_SEED");
  evd->add_option("--output", o.output, "Output JSON path (default stdout)");

  auto* sim = app.add_subcommand("simulate", "Generate a scenario dataset");
  sim->add_option("--scenario", sim_kind,
                  "iid|heteroscedastic|heteroasymmetric|inlier");
  sim->add_option("--base", sim_base, "normal|laplace");
  sim->add_option("--vartheta", sim_vt, "Error scale (default 1)");
  sim->add_option("--alpha", sim_alpha, "Error asymmetry (default 0)");
  sim->add_option("--alpha-sd", sim_alpha_sd,
                  "sd of atanh(alpha_i) (heteroasymmetric)");
  sim->add_option("--n", sim_n, "Observations")->required();
  sim->add_option("--p", sim_p, "Predictors")->required();
  sim->add_option("--theta", sim_theta, "True coefficients (comma list)");
  sim->add_option("--rho", sim_rho, "Pairwise covariate correlation");
  sim->add_option("--seed", o.seed, "RNG seed")->envname("TPSEL_SEED");
  sim->add_option("--output", o.output, "Output CSV path")->required();

  auto* rep = app.add_subcommand("replicate", "Run a canned experiment");
  rep->add_option("--experiment", experiment,
                  "sim61|family|inlier|bfrate|quantile|corollary1")
      ->required();
  rep->add_option("--reps", reps, "Replicates (default 5)");
  rep->add_option("--seed", o.seed, "RNG seed")->envname("TPSEL_SEED");
  rep->add_option("--output", o.output, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sel->parsed()) return cmd_select(o);
    if (fit->parsed()) return cmd_fit(o, fit_type, fit_algo);
    if (evd->parsed()) return cmd_evidence(o, include_list);
    if (sim->parsed())
      return cmd_simulate(sim_kind, sim_base, sim_vt, sim_alpha, sim_alpha_sd,
                          sim_n, sim_p, sim_theta, sim_rho, o.seed, o.output);
    if (rep->parsed()) return cmd_replicate(experiment, reps, o.seed, o.output);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
