#include "selboost/heckman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "selboost/error.hpp"
#include "selboost/numeric.hpp"

namespace selboost {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> view(const Matrix& m) {
  return Eigen::Map<const RowMatrix>(m.data.data(), static_cast<Eigen::Index>(m.rows),
                                     static_cast<Eigen::Index>(m.cols));
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

int intercept_column(const Matrix& x) {
  for (std::size_t c = 0; c < x.cols; ++c) {
    bool ones = x.rows > 0;
    for (std::size_t r = 0; r < x.rows && ones; ++r) ones = x(r, c) == 1.0;
    if (ones) return static_cast<int>(c);
  }
  return -1;
}

void check_rank(const Eigen::ColPivHouseholderQR<RowMatrix>& qr, const Matrix& x, const char* what) {
  if (qr.rank() < static_cast<Eigen::Index>(x.cols)) {
    throw CollinearityError(std::string(what) + ": design has rank " + std::to_string(qr.rank()) + " < " +
                            std::to_string(x.cols) + " columns");
  }
}

struct ProbitState {
  Eigen::VectorXd xb;
  double ll = 0.0;
  Eigen::VectorXd score;  // sum of per-row scores
  Eigen::MatrixXd info;   // negative Hessian
};

ProbitState probit_state(const Eigen::Map<const RowMatrix>& x, const Eigen::VectorXd& q, const Eigen::VectorXd& b,
                         bool with_derivatives) {
  ProbitState st;
  st.xb = x * b;
  CompensatedSum ll;
  const auto n = x.rows();
  Eigen::VectorXd lam(n), curv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = q[i] * st.xb[i];
    ll += log_normal_cdf(u);
    if (with_derivatives) {
      const double l = inverse_mills(u);
      lam[i] = q[i] * l;
      curv[i] = l * (l + u);
    }
  }
  st.ll = ll.value();
  if (with_derivatives) {
    st.score = x.transpose() * lam;
    st.info = x.transpose() * curv.asDiagonal() * x;
  }
  return st;
}

double condition_number(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd scaled = a;
  for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
    const double norm = scaled.col(c).norm();
    if (norm == 0.0) return std::numeric_limits<double>::infinity();
    scaled.col(c) /= norm;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaled);
  const Eigen::MatrixXd r =
      qr.matrixQR().topRows(scaled.cols()).template triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  const auto& sv = svd.singularValues();
  const double lo = sv[sv.size() - 1];
  return lo > 0.0 ? sv[0] / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

Matrix Matrix::take_rows(std::span<const std::size_t> idx) const {
  Matrix out;
  out.rows = idx.size();
  out.cols = cols;
  out.names = names;
  out.data.reserve(idx.size() * cols);
  for (std::size_t r : idx) out.data.insert(out.data.end(), data.begin() + r * cols, data.begin() + (r + 1) * cols);
  return out;
}

DesignSpec make_design_spec(const Dataset& ds, std::span<const std::string> columns, bool intercept) {
  DesignSpec spec;
  spec.intercept = intercept;
  for (const auto& name : columns) {
    const auto& col = ds.column(name);
    spec.columns.push_back(name);
    spec.levels.push_back(col.is_numeric() ? std::vector<std::string>{} : col.levels());
  }
  return spec;
}

Matrix build_design(const DesignSpec& spec, const Dataset& ds) {
  Matrix m;
  m.rows = ds.n_rows();
  if (spec.intercept) m.names.push_back("(intercept)");
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    if (spec.levels[c].empty()) {
      m.names.push_back(spec.columns[c]);
    } else {
      for (std::size_t l = 1; l < spec.levels[c].size(); ++l) m.names.push_back(spec.columns[c] + "=" + spec.levels[c][l]);
    }
  }
  m.cols = m.names.size();
  m.data.assign(m.rows * m.cols, 0.0);
  std::size_t offset = 0;
  if (spec.intercept) {
    for (std::size_t r = 0; r < m.rows; ++r) m(r, 0) = 1.0;
    offset = 1;
  }
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    const auto& col = ds.column(spec.columns[c]);
    if (spec.levels[c].empty()) {
      if (!col.is_numeric()) throw SchemaError("design column '" + spec.columns[c] + "' is not numeric");
      const auto v = col.values();
      for (std::size_t r = 0; r < m.rows; ++r) {
        if (std::isnan(v[r])) {
          throw DataError("design column '" + spec.columns[c] + "' is missing at row id " +
                          std::to_string(ds.row_ids()[r]));
        }
        m(r, offset) = v[r];
      }
      ++offset;
    } else {
      if (col.is_numeric()) throw SchemaError("design column '" + spec.columns[c] + "' is not categorical");
      const auto& levels = spec.levels[c];
      for (std::size_t r = 0; r < m.rows; ++r) {
        const auto name = col.level_at(r);
        const auto it = std::find(levels.begin() + 1, levels.end(), name);
        if (it != levels.end()) m(r, offset + static_cast<std::size_t>(it - levels.begin()) - 1) = 1.0;
      }
      offset += levels.size() - 1;
    }
  }
  return m;
}

double inverse_mills(double z) {
  if (z > -5.0) return normal_pdf(z) / normal_cdf(z);
  // Laplace continued fraction for the reciprocal Mills ratio at x = -z:
  // lambda = x + 1/(x + 2/(x + 3/(x + ...))).
  const double x = -z;
  double t = x;
  for (int k = 400; k >= 1; --k) t = x + k / t;
  return t;
}

ProbitFit fit_probit(const Matrix& xm, std::span<const double> s, const ProbitOptions& options) {
  if (s.size() != xm.rows) throw AlignmentError("fit_probit: s and X differ in length");
  if (xm.rows == 0 || xm.cols == 0) throw FitError("fit_probit: empty design");
  const auto x = view(xm);
  const auto n = static_cast<Eigen::Index>(xm.rows);
  Eigen::VectorXd q(n), sv(n);
  std::size_t ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = s[static_cast<std::size_t>(i)];
    if (v != 0.0 && v != 1.0) throw DomainError("fit_probit: s must be 0 or 1");
    sv[i] = v;
    q[i] = 2.0 * v - 1.0;
    ones += v == 1.0;
  }
  if (ones == 0 || ones == xm.rows) throw SeparationError("fit_probit: selection indicator is constant");

  Eigen::ColPivHouseholderQR<RowMatrix> qr(x);
  check_rank(qr, xm, "fit_probit");
  Eigen::VectorXd b = 2.5 * qr.solve(sv);
  if (const int ic = intercept_column(xm); ic >= 0) b[ic] -= 1.25;  // 2.5 * (b0 - 0.5)

  ProbitFit fit;
  fit.names = xm.names;
  ProbitState st = probit_state(x, q, b, true);
  fit.log_likelihood_path.push_back(st.ll);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (;;) {
    fit.gradient_norm = (st.score * inv_n).lpNorm<Eigen::Infinity>();
    if (fit.gradient_norm <= options.tolerance) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= options.max_iterations) break;
    const Eigen::VectorXd delta = st.info.ldlt().solve(st.score);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < 50; ++h, step /= 2.0) {
      const Eigen::VectorXd cand = b + step * delta;
      ProbitState next = probit_state(x, q, cand, false);
      if (std::isfinite(next.ll) && next.ll >= st.ll) {
        b = cand;
        st = probit_state(x, q, b, true);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++fit.iterations;
    fit.log_likelihood_path.push_back(st.ll);
  }

  bool separated = true;
  for (Eigen::Index i = 0; i < n && separated; ++i) separated = q[i] * st.xb[i] > 0.0;
  if (separated || (!fit.converged && b.lpNorm<Eigen::Infinity>() > 1e3)) {
    throw SeparationError("fit_probit: selection is perfectly predicted by the covariates");
  }

  fit.coefficients = to_vector(b);
  fit.log_likelihood = st.ll;
  const Eigen::MatrixXd cov = st.info.ldlt().solve(Eigen::MatrixXd::Identity(b.size(), b.size()));
  for (Eigen::Index c = 0; c < b.size(); ++c) fit.std_errors.push_back(std::sqrt(std::max(cov(c, c), 0.0)));
  return fit;
}

std::vector<double> ols(const Matrix& xm, std::span<const double> y) {
  if (y.size() != xm.rows) throw AlignmentError("ols: y and X differ in length");
  if (xm.rows < xm.cols) throw CollinearityError("ols: fewer rows than columns");
  const auto x = view(xm);
  Eigen::ColPivHouseholderQR<RowMatrix> qr(x);
  check_rank(qr, xm, "ols");
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  return to_vector(qr.solve(yv));
}

HeckmanFit fit_heckman_two_step(const Matrix& x1, const Matrix& x2, std::span<const double> y,
                                std::span<const double> s, const HeckmanOptions& options) {
  if (x1.rows != s.size() || x2.rows != s.size() || y.size() != s.size()) {
    throw AlignmentError("fit_heckman_two_step: X1, X2, y and s must have one row per unit");
  }
  HeckmanFit fit;
  fit.x1_names = x1.names;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == 1.0) {
      if (std::isnan(y[i])) throw DataError("outcome missing on a selected row " + std::to_string(i));
      fit.selected_rows.push_back(i);
    } else if (s[i] != 0.0) {
      throw DomainError("selection indicator must be 0 or 1");
    }
  }
  if (fit.selected_rows.empty()) throw DegenerateTargetError("no rows are selected");
  if (x1.names == x2.names && x1.data == x2.data) {
    fit.warnings.push_back("X1 and X2 are identical; identification rests only on the nonlinearity of the Mills ratio");
  }

  const Matrix x1_sel = x1.take_rows(fit.selected_rows);
  std::vector<double> y_sel;
  for (std::size_t i : fit.selected_rows) y_sel.push_back(y[i]);
  const auto n_sel = static_cast<Eigen::Index>(y_sel.size());
  const auto p = static_cast<Eigen::Index>(x1.cols);

  Matrix design;
  if (fit.selected_rows.size() == s.size()) {
    // Every unit selected: the Mills column is constant and carries no information.
    fit.warnings.push_back("every unit is selected; the Mills term was dropped and stage B is plain OLS");
    fit.mills_dropped = true;
    fit.mills.assign(fit.selected_rows.size(), 0.0);
    design = x1_sel;
  } else {
    fit.probit = fit_probit(x2, s, options.probit);
    if (!fit.probit.converged) fit.warnings.push_back("probit did not converge");
    const auto xb = view(x2) * Eigen::Map<const Eigen::VectorXd>(fit.probit.coefficients.data(),
                                                                  static_cast<Eigen::Index>(x2.cols));
    for (std::size_t i : fit.selected_rows) fit.mills.push_back(inverse_mills(xb[static_cast<Eigen::Index>(i)]));
    design.rows = x1_sel.rows;
    design.cols = x1_sel.cols + 1;
    design.names = x1_sel.names;
    design.names.push_back("(mills)");
    design.data.reserve(design.rows * design.cols);
    for (std::size_t r = 0; r < design.rows; ++r) {
      design.data.insert(design.data.end(), x1_sel.data.begin() + r * x1_sel.cols,
                         x1_sel.data.begin() + (r + 1) * x1_sel.cols);
      design.data.push_back(fit.mills[r]);
    }
    fit.condition_number = condition_number(view(design));
    if (!(fit.condition_number <= options.max_condition)) {
      throw IdentificationError("Mills ratio is nearly collinear with X1 (condition number " +
                                std::to_string(fit.condition_number) + ")");
    }
  }

  const auto coef = ols(design, y_sel);
  fit.beta1.assign(coef.begin(), coef.begin() + p);
  fit.beta_lambda = fit.mills_dropped ? 0.0 : coef.back();

  const auto xd = view(design);
  const Eigen::Map<const Eigen::VectorXd> cv(coef.data(), static_cast<Eigen::Index>(coef.size()));
  const Eigen::Map<const Eigen::VectorXd> yv(y_sel.data(), n_sel);
  const Eigen::VectorXd resid = yv - xd * cv;
  const double dof = static_cast<double>(n_sel - static_cast<Eigen::Index>(coef.size()));
  const double sigma2 = dof > 0 ? resid.squaredNorm() / dof : std::numeric_limits<double>::quiet_NaN();
  fit.residual_scale = std::sqrt(sigma2);
  const Eigen::MatrixXd xtx = xd.transpose() * xd;
  const Eigen::MatrixXd cov = xtx.ldlt().solve(Eigen::MatrixXd::Identity(xtx.rows(), xtx.cols())) * sigma2;
  for (Eigen::Index c = 0; c < cov.rows(); ++c) fit.std_errors.push_back(std::sqrt(std::max(cov(c, c), 0.0)));
  if (fit.mills_dropped) fit.std_errors.push_back(0.0);
  CompensatedSum smear;
  for (Eigen::Index i = 0; i < n_sel; ++i) smear += std::exp(resid[i]);
  fit.smearing_factor = smear.value() / static_cast<double>(n_sel);
  return fit;
}

std::vector<double> predict_heckman(const HeckmanFit& fit, const Matrix& x1, HeckmanScale scale, bool smearing) {
  if (x1.cols != fit.beta1.size()) throw AlignmentError("predict_heckman: X1 has the wrong number of columns");
  std::vector<double> out(x1.rows);
  for (std::size_t r = 0; r < x1.rows; ++r) {
    double v = 0.0;
    for (std::size_t c = 0; c < x1.cols; ++c) v += x1(r, c) * fit.beta1[c];
    if (scale == HeckmanScale::log_then_back) v = std::exp(v) * (smearing ? fit.smearing_factor : 1.0);
    out[r] = v;
  }
  return out;
}

nlohmann::json heckman_report(const HeckmanFit& fit) {
  nlohmann::json j;
  j["probit"] = {{"coef", fit.probit.coefficients},
                 {"se", fit.probit.std_errors},
                 {"names", fit.probit.names},
                 {"ll", fit.probit.log_likelihood},
                 {"iters", fit.probit.iterations},
                 {"converged", fit.probit.converged}};
  j["outcome"] = {{"coef", fit.beta1},
                  {"names", fit.x1_names},
                  {"beta_lambda", fit.beta_lambda},
                  {"se", fit.std_errors},
                  {"scale", fit.residual_scale},
                  {"condition_number", fit.condition_number},
                  {"mills_dropped", fit.mills_dropped},
                  {"smearing_factor", fit.smearing_factor},
                  {"n_selected", fit.selected_rows.size()}};
  j["warnings"] = fit.warnings;
  return j;
}

}  // namespace selboost
