#ifndef TPSEL_DATA_HPP
#define TPSEL_DATA_HPP

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpsel/twopiece.hpp"

// Core data and parameter containers shared by all modules.

namespace tpsel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Error taxonomy mirrored by the CLI exit codes: DataError for malformed or
// unusable inputs (parse failures, rank deficiency), NumericalError for
// optimizer/evidence breakdowns (non-convergence, indefinite Hessians).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  VectorXd y;                      // response, length n
  MatrixXd X;                      // design, n x p
  std::vector<std::string> names;  // p column labels

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }

  void validate() const {
    if (y.size() < 1 || X.cols() < 1 || X.rows() != y.size())
      throw std::invalid_argument("Dataset: empty or mismatched dimensions");
    if (!y.allFinite() || !X.allFinite())
      throw std::invalid_argument("Dataset: non-finite entries");
  }
};

// Model indicator: which predictors are active plus flags for residual
// asymmetry (skew) and thick tails (thick).  (skew, thick) selects the error
// family: (0,0) Normal, (1,0) two-piece Normal, (0,1) Laplace, (1,1)
// two-piece Laplace.  k is the prior-variance multiplier: 1 for Normal bases,
// 2 for Laplace bases.
struct ModelGamma {
  std::vector<bool> include;  // length p
  bool skew = false;
  bool thick = false;

  int k() const { return thick ? 2 : 1; }
  Base base() const { return thick ? Base::Laplace : Base::Normal; }

  Eigen::Index p_gamma() const {
    Eigen::Index c = 0;
    for (bool b : include) c += b ? 1 : 0;
    return c;
  }

  // Indices of active columns, in design order.
  std::vector<Eigen::Index> active() const {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < (Eigen::Index)include.size(); ++j)
      if (include[j]) idx.push_back(j);
    return idx;
  }
};

// Design submatrix restricted to the active columns of gamma.
inline MatrixXd select_columns(const MatrixXd& X, const ModelGamma& g) {
  const auto idx = g.active();
  MatrixXd Xg(X.rows(), (Eigen::Index)idx.size());
  for (Eigen::Index j = 0; j < Xg.cols(); ++j) Xg.col(j) = X.col(idx[j]);
  return Xg;
}

struct Params {
  VectorXd theta;          // length p_gamma
  double vartheta = 1.0;   // > 0
  double alpha = 0.0;      // in (-1,1); 0 when skew=false
};

// Unconstrained image (theta, log vartheta, atanh alpha).
struct TransformedParams {
  VectorXd theta;
  double log_vartheta = 0.0;
  double atanh_alpha = 0.0;
};

// |atanh(alpha)| is clamped here, i.e. |alpha| <= 1 - 1e-6, to keep the
// unconstrained coordinates finite near the boundary.
constexpr double kAtanhAlphaMax = 7.25;

inline double clamp_atanh(double a) {
  return a > kAtanhAlphaMax ? kAtanhAlphaMax
                            : (a < -kAtanhAlphaMax ? -kAtanhAlphaMax : a);
}

inline TransformedParams to_transformed(const Params& p) {
  TransformedParams t;
  t.theta = p.theta;
  t.log_vartheta = std::log(p.vartheta);
  t.atanh_alpha = clamp_atanh(std::atanh(p.alpha));
  return t;
}

inline Params from_transformed(const TransformedParams& t) {
  Params p;
  p.theta = t.theta;
  p.vartheta = std::exp(t.log_vartheta);
  p.alpha = std::tanh(t.atanh_alpha);
  return p;
}

// Flattened unconstrained coordinate vector [theta..., log_vartheta,
// atanh_alpha?]; the alpha entry is present only when with_alpha.
inline VectorXd flatten(const TransformedParams& t, bool with_alpha) {
  VectorXd v(t.theta.size() + 1 + (with_alpha ? 1 : 0));
  v.head(t.theta.size()) = t.theta;
  v(t.theta.size()) = t.log_vartheta;
  if (with_alpha) v(t.theta.size() + 1) = t.atanh_alpha;
  return v;
}

inline TransformedParams unflatten(const VectorXd& v, bool with_alpha,
                                   double alpha_tilde_fixed = 0.0) {
  TransformedParams t;
  const Eigen::Index d = v.size() - 1 - (with_alpha ? 1 : 0);
  t.theta = v.head(d);
  t.log_vartheta = v(d);
  t.atanh_alpha = with_alpha ? clamp_atanh(v(d + 1)) : alpha_tilde_fixed;
  return t;
}

// ---------------------------------------------------------------------------
// CSV input/output.  Header row required; '.' decimal; missing or non-numeric
// cells are an error.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  CsvTable tab;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) tab.header.push_back(cell);
  }
  if (tab.header.empty()) throw std::runtime_error("CSV header missing: " + path);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      if (cell.empty())
        throw std::runtime_error("missing value at line " + std::to_string(lineno));
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw std::runtime_error("non-numeric cell '" + cell + "' at line " +
                                 std::to_string(lineno));
      }
      if (pos != cell.size() || !std::isfinite(v))
        throw std::runtime_error("non-numeric cell '" + cell + "' at line " +
                                 std::to_string(lineno));
      row.push_back(v);
    }
    if (row.size() != tab.header.size())
      throw std::runtime_error("ragged CSV row at line " + std::to_string(lineno));
    tab.rows.push_back(std::move(row));
  }
  if (tab.rows.empty()) throw std::runtime_error("CSV has no data rows: " + path);
  return tab;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path);
  out.precision(17);
  for (std::size_t j = 0; j < header.size(); ++j)
    out << header[j] << (j + 1 < header.size() ? "," : "\n");
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.size(); ++j)
      out << r[j] << (j + 1 < r.size() ? "," : "\n");
}

// Build a Dataset from a CSV table: `response` names the y column; predictors
// default to all remaining columns.
inline Dataset dataset_from_csv(const CsvTable& tab, const std::string& response,
                                std::vector<std::string> predictors = {}) {
  auto find = [&](const std::string& name) -> Eigen::Index {
    for (std::size_t j = 0; j < tab.header.size(); ++j)
      if (tab.header[j] == name) return (Eigen::Index)j;
    throw std::runtime_error("column not found: " + name);
  };
  const Eigen::Index yj = find(response);
  if (predictors.empty())
    for (const auto& h : tab.header)
      if (h != response) predictors.push_back(h);
  Dataset d;
  const Eigen::Index n = (Eigen::Index)tab.rows.size();
  d.y.resize(n);
  d.X.resize(n, (Eigen::Index)predictors.size());
  d.names = predictors;
  std::vector<Eigen::Index> cols;
  for (const auto& nm : predictors) cols.push_back(find(nm));
  for (Eigen::Index i = 0; i < n; ++i) {
    d.y(i) = tab.rows[i][yj];
    for (std::size_t j = 0; j < cols.size(); ++j) d.X(i, (Eigen::Index)j) = tab.rows[i][cols[j]];
  }
  d.validate();
  return d;
}

}  // namespace tpsel

#endif  // TPSEL_DATA_HPP
