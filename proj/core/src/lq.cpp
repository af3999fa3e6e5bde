#include "mfc/lq.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mfc/errors.hpp"

namespace mfc {

namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr double kRankTolerance = 1e-10;

Eigen::MatrixXd sym(const Eigen::MatrixXd& x) { return 0.5 * (x + x.transpose()); }

double min_eigenvalue(const Eigen::MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(x), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Eigen::MatrixXd& x) { return min_eigenvalue(x) >= -kPsdTolerance; }

bool is_pd(const Eigen::MatrixXd& x) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(x), Eigen::EigenvaluesOnly);
  const auto ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return ev.minCoeff() > kPsdTolerance * scale;
}

bool has_rank(const Eigen::MatrixXd& x, int rank) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  const auto sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return rank == 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] >= kRankTolerance * sv[0]) ++r;
  }
  return r == rank;
}

void check_shape(const Eigen::MatrixXd& x, Eigen::Index rows, Eigen::Index cols,
                 const std::string& where) {
  if (x.rows() != rows || x.cols() != cols) {
    std::ostringstream os;
    os << where << " is " << x.rows() << "x" << x.cols() << ", expected " << rows << "x" << cols;
    throw std::invalid_argument(os.str());
  }
  if (!x.allFinite()) throw std::invalid_argument(where + " has non-finite entries");
}

void check_symmetric(const Eigen::MatrixXd& x, const std::string& where) {
  if ((x - x.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    throw std::invalid_argument(where + " is not symmetric");
  }
}

std::string stage_name(int k) { return "stage " + std::to_string(k); }

}  // namespace

GaussianState GaussianState::dirac(const Eigen::VectorXd& x) {
  return {x, Eigen::MatrixXd::Zero(x.size(), x.size())};
}

GaussianState GaussianState::from_measure(const DiscreteMeasure& mu) {
  return {mfc::mean(mu), mfc::covariance(mu)};
}

GaussianState moments(const InitialLaw& law) {
  if (const auto* g = std::get_if<GaussianState>(&law)) return *g;
  return GaussianState::from_measure(std::get<DiscreteMeasure>(law));
}

LQStage LQStage::zeros(int d, int m) {
  LQStage s;
  s.B = s.Bbar = s.D = s.Dbar = Eigen::MatrixXd::Zero(d, d);
  s.C = s.Cbar = s.H = s.Hbar = Eigen::MatrixXd::Zero(d, m);
  s.Q = s.Qbar = Eigen::MatrixXd::Zero(d, d);
  s.R = s.Rbar = Eigen::MatrixXd::Zero(m, m);
  s.L = s.Lbar = Eigen::VectorXd::Zero(d);
  return s;
}

LQModel LQModel::zeros(int d, int m, int horizon) {
  LQModel model;
  model.d = d;
  model.m = m;
  for (int k = 0; k < horizon; ++k) {
    auto s = LQStage::zeros(d, m);
    s.B = Eigen::MatrixXd::Identity(d, d);
    model.stages.push_back(s);
  }
  model.Q = model.Qbar = Eigen::MatrixXd::Zero(d, d);
  model.L = model.Lbar = Eigen::VectorXd::Zero(d);
  model.initial = GaussianState{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  return model;
}

void LQModel::validate() const {
  if (d < 1 || m < 1) throw std::invalid_argument("LQ model dimensions must be >= 1");
  if (stages.empty()) throw std::invalid_argument("LQ model horizon must be >= 1");
  for (int k = 0; k < horizon(); ++k) {
    const auto& s = stages[k];
    const auto at = [k](const char* f) { return stage_name(k) + " " + f; };
    check_shape(s.B, d, d, at("B"));
    check_shape(s.Bbar, d, d, at("Bbar"));
    check_shape(s.D, d, d, at("D"));
    check_shape(s.Dbar, d, d, at("Dbar"));
    check_shape(s.C, d, m, at("C"));
    check_shape(s.Cbar, d, m, at("Cbar"));
    check_shape(s.H, d, m, at("H"));
    check_shape(s.Hbar, d, m, at("Hbar"));
    check_shape(s.Q, d, d, at("Q"));
    check_shape(s.Qbar, d, d, at("Qbar"));
    check_shape(s.R, m, m, at("R"));
    check_shape(s.Rbar, m, m, at("Rbar"));
    check_shape(s.L, d, 1, at("L"));
    check_shape(s.Lbar, d, 1, at("Lbar"));
    check_symmetric(s.Q, at("Q"));
    check_symmetric(s.Qbar, at("Qbar"));
    check_symmetric(s.R, at("R"));
    check_symmetric(s.Rbar, at("Rbar"));
  }
  check_shape(Q, d, d, "terminal Q");
  check_shape(Qbar, d, d, "terminal Qbar");
  check_shape(L, d, 1, "terminal L");
  check_shape(Lbar, d, 1, "terminal Lbar");
  check_symmetric(Q, "terminal Q");
  check_symmetric(Qbar, "terminal Qbar");
  const auto xi = moments(initial);
  check_shape(xi.mean, d, 1, "initial mean");
  check_shape(xi.cov, d, d, "initial covariance");
  check_symmetric(xi.cov, "initial covariance");
  if (!is_psd(xi.cov)) throw std::invalid_argument("initial covariance is not positive semidefinite");
}

void MeanVarianceParams::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!std::isfinite(b) || !std::isfinite(x0)) throw std::invalid_argument("b and x0 must be finite");
}

LQModel mean_variance_model(const MeanVarianceParams& p) {
  p.validate();
  LQModel model = LQModel::zeros(1, 1, p.n);
  for (auto& s : model.stages) {
    s.C(0, 0) = p.b * p.delta;
    s.H(0, 0) = p.sigma * std::sqrt(p.delta);
  }
  model.Q(0, 0) = p.gamma / 2.0;
  model.Qbar(0, 0) = -p.gamma / 2.0;
  model.Lbar(0) = -1.0;
  model.initial = GaussianState::dirac(Eigen::VectorXd::Constant(1, p.x0));
  return model;
}

bool ConditionReport::passed() const {
  if (!terminal_c0) return false;
  for (const auto& s : stages) {
    if (!(s.c0 && s.c1 && s.c2)) return false;
  }
  return true;
}

std::string ConditionReport::first_failure() const {
  if (!terminal_c0) return "(c0) fails at terminal stage: Q or Q + Qbar not positive semidefinite";
  for (const auto& s : stages) {
    if (!s.c0) return "(c0) fails at " + stage_name(s.stage) + ": " + s.detail;
    if (!s.c1) return "(c1) fails at " + stage_name(s.stage) + ": " + s.detail;
    if (!s.c2) return "(c2) fails at " + stage_name(s.stage) + ": " + s.detail;
  }
  return {};
}

ConditionReport check_conditions(const LQModel& model) {
  model.validate();
  const int n = model.horizon();
  const int d = model.d;
  ConditionReport report;
  report.terminal_c0 = is_psd(model.Q) && is_psd(model.Q + model.Qbar);
  report.stages.resize(n);

  // Propagated Λ_{k+1}, Γ_{k+1}; unavailable once a stage problem degenerates.
  std::optional<Eigen::MatrixXd> lambda_next = sym(model.Q);
  std::optional<Eigen::MatrixXd> gamma_next = sym(model.Q + model.Qbar);

  for (int k = n - 1; k >= 0; --k) {
    const auto& s = model.stages[k];
    auto& out = report.stages[k];
    out.stage = k;
    std::ostringstream why;

    const bool q_psd = is_psd(s.Q) && is_psd(s.Q + s.Qbar);
    const bool r_psd = is_psd(s.R) && is_psd(s.R + s.Rbar);
    out.c0 = q_psd && r_psd;
    if (!q_psd) why << "Q_k or Q_k + Qbar_k not positive semidefinite; ";
    if (!r_psd) why << "R_k or R_k + Rbar_k not positive semidefinite; ";

    const Eigen::MatrixXd& q_next = k + 1 == n ? model.Q : model.stages[k + 1].Q;
    const Eigen::MatrixXd& qbar_next = k + 1 == n ? model.Qbar : model.stages[k + 1].Qbar;
    const Eigen::MatrixXd CC = s.C + s.Cbar;
    const Eigen::MatrixXd HH = s.H + s.Hbar;
    const bool rank_c = has_rank(s.C, d);
    const bool rank_h = has_rank(s.H, d);
    const bool rank_cc = has_rank(CC, d);
    const bool rank_hh = has_rank(HH, d);
    const bool r_pd = is_pd(s.R);
    const bool rr_pd = is_pd(s.R + s.Rbar);

    const bool q_next_pd = is_pd(q_next);
    const bool qq_next_pd = is_pd(q_next + qbar_next);
    out.c1_literal = r_pd || (rank_c && q_next_pd) || (rank_h && q_next_pd);
    out.c2_literal = rr_pd || (rank_cc && qq_next_pd) || (rank_hh && q_next_pd);

    const bool lambda_pd = lambda_next && is_pd(*lambda_next);
    const bool gamma_pd = gamma_next && is_pd(*gamma_next);
    out.c1 = out.c1_literal || (rank_c && lambda_pd) || (rank_h && lambda_pd);
    out.c2 = out.c2_literal || (rank_cc && gamma_pd) || (rank_hh && lambda_pd);
    if (!out.c1) why << "R_k not positive definite and no full-rank C_k or H_k with positive next-stage weight; ";
    if (!out.c2) why << "R_k + Rbar_k not positive definite and no full-rank C_k + Cbar_k or H_k + Hbar_k with positive next-stage weight; ";
    out.detail = why.str();
    if (out.detail.size() >= 2) out.detail.resize(out.detail.size() - 2);

    if (lambda_next && gamma_next && out.c0 && out.c1 && out.c2) {
      const Eigen::MatrixXd& Lam = *lambda_next;
      const Eigen::MatrixXd& Gam = *gamma_next;
      const Eigen::MatrixXd V = sym(s.R + s.H.transpose() * Lam * s.H + s.C.transpose() * Lam * s.C);
      const Eigen::MatrixXd W = sym(s.R + s.Rbar + CC.transpose() * Gam * CC + HH.transpose() * Lam * HH);
      Eigen::LLT<Eigen::MatrixXd> v_llt(V), w_llt(W);
      if (v_llt.info() == Eigen::Success && w_llt.info() == Eigen::Success) {
        const Eigen::MatrixXd BB = s.B + s.Bbar;
        const Eigen::MatrixXd DD = s.D + s.Dbar;
        const Eigen::MatrixXd S = s.D.transpose() * Lam * s.H + s.B.transpose() * Lam * s.C;
        const Eigen::MatrixXd T = DD.transpose() * Lam * HH + BB.transpose() * Gam * CC;
        lambda_next = sym(s.Q + s.B.transpose() * Lam * s.B + s.D.transpose() * Lam * s.D -
                          S * v_llt.solve(S.transpose()));
        gamma_next = sym(s.Q + s.Qbar + BB.transpose() * Gam * BB + DD.transpose() * Lam * DD -
                         T * w_llt.solve(T.transpose()));
        continue;
      }
    }
    lambda_next.reset();
    gamma_next.reset();
  }
  return report;
}

RiccatiSolution solve_riccati(const LQModel& model, bool force) {
  model.validate();
  if (!force) {
    const auto report = check_conditions(model);
    if (!report.passed()) {
      throw std::invalid_argument("convexity conditions violated: " + report.first_failure());
    }
  }
  const int n = model.horizon();
  RiccatiSolution sol;
  sol.Lambda.resize(n + 1);
  sol.Gamma.resize(n + 1);
  sol.rho.resize(n + 1);
  sol.chi.resize(n + 1);
  sol.V.resize(n);
  sol.W.resize(n);
  sol.S.resize(n);
  sol.T.resize(n);
  sol.N.resize(n);

  sol.Lambda[n] = sym(model.Q);
  sol.Gamma[n] = sym(model.Q + model.Qbar);
  sol.rho[n] = model.L + model.Lbar;
  sol.chi[n] = 0.0;

  for (int k = n - 1; k >= 0; --k) {
    const auto& s = model.stages[k];
    const Eigen::MatrixXd& Lam = sol.Lambda[k + 1];
    const Eigen::MatrixXd& Gam = sol.Gamma[k + 1];
    const Eigen::VectorXd& rho = sol.rho[k + 1];
    const Eigen::MatrixXd BB = s.B + s.Bbar;
    const Eigen::MatrixXd CC = s.C + s.Cbar;
    const Eigen::MatrixXd DD = s.D + s.Dbar;
    const Eigen::MatrixXd HH = s.H + s.Hbar;

    const Eigen::MatrixXd V = sym(s.R + s.H.transpose() * Lam * s.H + s.C.transpose() * Lam * s.C);
    const Eigen::MatrixXd W = sym(s.R + s.Rbar + CC.transpose() * Gam * CC + HH.transpose() * Lam * HH);
    const Eigen::MatrixXd S = s.D.transpose() * Lam * s.H + s.B.transpose() * Lam * s.C;
    const Eigen::MatrixXd T = DD.transpose() * Lam * HH + BB.transpose() * Gam * CC;

    Eigen::LLT<Eigen::MatrixXd> v_llt(V);
    if (v_llt.info() != Eigen::Success || !is_pd(V)) {
      throw NumericalError("V_k is not positive definite at " + stage_name(k), k);
    }
    Eigen::LLT<Eigen::MatrixXd> w_llt(W);
    if (w_llt.info() != Eigen::Success || !is_pd(W)) {
      throw NumericalError("W_k is not positive definite at " + stage_name(k), k);
    }

    const Eigen::MatrixXd v_inv_st = v_llt.solve(S.transpose());
    const Eigen::MatrixXd w_inv_tt = w_llt.solve(T.transpose());
    const Eigen::MatrixXd w_inv_cct = w_llt.solve(CC.transpose());

    sol.Lambda[k] = sym(s.Q + s.B.transpose() * Lam * s.B + s.D.transpose() * Lam * s.D - S * v_inv_st);
    sol.Gamma[k] = sym(s.Q + s.Qbar + BB.transpose() * Gam * BB + DD.transpose() * Lam * DD -
                       T * w_inv_tt);
    sol.N[k] = BB - CC * w_inv_tt;
    sol.rho[k] = s.L + s.Lbar + sol.N[k].transpose() * rho;
    sol.chi[k] = sol.chi[k + 1] - 0.25 * rho.dot(CC * (w_inv_cct * rho));
    sol.V[k] = V;
    sol.W[k] = W;
    sol.S[k] = S;
    sol.T[k] = T;
  }
  return sol;
}

RiccatiSolution mean_variance_closed_form(const MeanVarianceParams& p) {
  p.validate();
  const double s2 = p.sigma * p.sigma;
  const double growth = (s2 + p.b * p.b * p.delta) / s2;
  RiccatiSolution sol;
  for (int k = 0; k <= p.n; ++k) {
    const int steps = p.n - k;
    sol.Lambda.push_back(Eigen::MatrixXd::Constant(1, 1, p.gamma / 2.0 * std::pow(growth, -steps)));
    sol.Gamma.push_back(Eigen::MatrixXd::Zero(1, 1));
    sol.rho.push_back(Eigen::VectorXd::Constant(1, -1.0));
    sol.chi.push_back(-(std::pow(growth, steps) - 1.0) / (2.0 * p.gamma));
  }
  return sol;
}

double mean_variance_value(const MeanVarianceParams& p, int k, double mean, double variance) {
  const auto sol = mean_variance_closed_form(p);
  if (k < 0 || k > p.n) throw std::out_of_range("stage outside [0, n]");
  return sol.Lambda[k](0, 0) * variance - mean + sol.chi[k];
}

Eigen::VectorXd AffinePolicy::action(int k, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& mean) const {
  const auto& s = stages.at(k);
  return s.gain_state * (x - mean) + s.gain_mean * mean + s.offset;
}

AffinePolicy AffinePolicy::zeros(int d, int m, int horizon) {
  AffinePolicy p;
  for (int k = 0; k < horizon; ++k) {
    p.stages.push_back({Eigen::MatrixXd::Zero(m, d), Eigen::MatrixXd::Zero(m, d),
                        Eigen::VectorXd::Zero(m)});
  }
  return p;
}

namespace {

void check_solution(const LQModel& model, const RiccatiSolution& sol) {
  const int n = model.horizon();
  if (sol.horizon() != n || static_cast<int>(sol.V.size()) != n ||
      static_cast<int>(sol.W.size()) != n) {
    throw std::invalid_argument("Riccati solution does not match the model horizon");
  }
}

}  // namespace

AffinePolicy optimal_policy(const LQModel& model, const RiccatiSolution& sol) {
  check_solution(model, sol);
  AffinePolicy policy;
  for (int k = 0; k < model.horizon(); ++k) {
    const auto& s = model.stages[k];
    Eigen::LLT<Eigen::MatrixXd> v_llt(sol.V[k]);
    Eigen::LLT<Eigen::MatrixXd> w_llt(sol.W[k]);
    if (v_llt.info() != Eigen::Success || w_llt.info() != Eigen::Success) {
      throw NumericalError("singular stage matrix at " + stage_name(k), k);
    }
    const Eigen::MatrixXd CC = s.C + s.Cbar;
    policy.stages.push_back({-v_llt.solve(sol.S[k].transpose()),
                             -w_llt.solve(sol.T[k].transpose()),
                             -0.5 * w_llt.solve(CC.transpose() * sol.rho[k + 1])});
  }
  return policy;
}

std::vector<Eigen::MatrixXd> mean_propagators(const RiccatiSolution& sol) {
  const int n = static_cast<int>(sol.N.size());
  const int d = static_cast<int>(sol.Lambda.front().rows());
  std::vector<Eigen::MatrixXd> out;
  out.push_back(Eigen::MatrixXd::Identity(d, d));
  for (int k = 0; k < n; ++k) out.push_back(sol.N[k] * out.back());
  return out;
}

std::vector<ExplicitControl> explicit_control_coefficients(const LQModel& model,
                                                           const RiccatiSolution& sol) {
  const auto policy = optimal_policy(model, sol);
  const int d = model.d;
  std::vector<ExplicitControl> out;
  Eigen::MatrixXd propagator = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd drift = Eigen::VectorXd::Zero(d);  // offset-driven part of E[X_k]
  for (int k = 0; k < model.horizon(); ++k) {
    const auto& st = policy.stages[k];
    const Eigen::MatrixXd centered = st.gain_mean - st.gain_state;  // V⁻¹Sᵀ − W⁻¹Tᵀ
    out.push_back({st.gain_state, centered * propagator, centered * drift + st.offset});
    const auto& s = model.stages[k];
    drift = sol.N[k] * drift + (s.C + s.Cbar) * st.offset;
    propagator = sol.N[k] * propagator;
  }
  return out;
}

double value_at(const RiccatiSolution& sol, int k, const GaussianState& mu) {
  if (k < 0 || k > sol.horizon()) throw std::out_of_range("stage outside [0, n]");
  const auto& Lam = sol.Lambda[k];
  if (mu.mean.size() != Lam.rows() || mu.cov.rows() != Lam.rows() || mu.cov.cols() != Lam.cols()) {
    throw std::invalid_argument("law dimension does not match the Riccati solution");
  }
  return (Lam * mu.cov).trace() + mu.mean.dot(sol.Gamma[k] * mu.mean) + sol.rho[k].dot(mu.mean) +
         sol.chi[k];
}

double value_at(const RiccatiSolution& sol, int k, const DiscreteMeasure& mu) {
  if (k < 0 || k > sol.horizon()) throw std::out_of_range("stage outside [0, n]");
  if (mu.dimension() != sol.Lambda[k].rows()) {
    throw std::invalid_argument("law dimension does not match the Riccati solution");
  }
  const Eigen::VectorXd m = mean(mu);
  return variance_form(mu, sol.Lambda[k]) + m.dot(sol.Gamma[k] * m) + sol.rho[k].dot(m) +
         sol.chi[k];
}

Eigen::VectorXd stationarity_residual(const LQModel& model, const RiccatiSolution& sol,
                                      const AffinePolicy& policy, int k, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& mean) {
  check_solution(model, sol);
  const auto& s = model.stages.at(k);
  const Eigen::VectorXd a = policy.action(k, x, mean);
  const Eigen::VectorXd a_bar = policy.stages[k].gain_mean * mean + policy.stages[k].offset;
  return 2.0 * sol.V[k] * a + 2.0 * (sol.W[k] - sol.V[k]) * a_bar +
         2.0 * sol.S[k].transpose() * (x - mean) + 2.0 * sol.T[k].transpose() * mean +
         (s.C + s.Cbar).transpose() * sol.rho[k + 1];
}

}  // namespace mfc
