// SPDX-License-Identifier: Apache-2.0
#include "isac/had.hpp"

#include "isac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace isac {

namespace {

CVec vec_of(const CMat& a) { return linalg::vec(a); }

CMat dft_columns(int m, int n) {
  CMat f(m, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) f(i, j) = std::polar(1.0, -2.0 * kPi * i * (j % m) / m + kPi * (j / m) / n);
  }
  return f;
}

CMat least_squares(const CMat& a, const CMat& b) { return a.completeOrthogonalDecomposition().solve(b); }

double fit_residual(const CMat& x, const CMat& f_a, const CMat& f_d) { return (x - f_a * f_d).norm(); }

// One exact coordinate sweep over the entries of F_a with F_d fixed.
void coordinate_sweep(const CMat& x, const CMat& f_d, CMat& f_a) {
  for (Eigen::Index i = 0; i < f_a.rows(); ++i) {
    Eigen::RowVectorXcd e = x.row(i) - f_a.row(i) * f_d;
    for (Eigen::Index j = 0; j < f_a.cols(); ++j) {
      e += f_a(i, j) * f_d.row(j);
      const cd c = e.dot(f_d.row(j));  // sum conj(e) d, so the best phase is conj(c)
      if (std::abs(c) > 0.0) f_a(i, j) = std::conj(c) / std::abs(c);
      e -= f_a(i, j) * f_d.row(j);
    }
  }
}

CMat total_q(const HybridState& s) {
  CMat q = s.f_c * s.f_c.adjoint();
  if (s.f_s.cols() > 0) q += s.f_s * s.f_s.adjoint();
  return q;
}

// Columns beta_k h_k.
CMat weighted_users(const HybridState& s, const ChannelSet& ch) {
  CMat h = ch.h_users;
  for (int k = 0; k < ch.k_users(); ++k) h.col(k) *= s.beta(k);
  return h;
}

double aux_constant(const HybridState& s, double noise_c) {
  double c = 0.0;
  for (Eigen::Index k = 0; k < s.nu.size(); ++k) c += std::log1p(s.nu(k)) - s.nu(k);
  return c - s.beta.squaredNorm() * noise_c;
}

ReceiveBank optimal_bank(const ChannelSet& ch, const HybridState& s, const ScenarioConfig& cfg) {
  CMat cov = s.w() * s.w().adjoint();
  if (s.f_s.cols() > 0) cov += s.r_v();
  return receive_bank_cov(ch, cov, ch.k_users() + cfg.n_s, cfg);
}

void update_receiver(HybridState& s, const ChannelSet& ch, const ScenarioConfig& cfg, const HybridOptions& opts) {
  if (ch.t_aes() == 0) return;
  const ReceiveBank bank = optimal_bank(ch, s, cfg);
  CMat u(ch.m_r(), ch.t_aes());
  for (int t = 0; t < ch.t_aes(); ++t) u.col(t) = bank.u[t];
  const ReceiveDecomposition rd = decompose_receive(u, cfg.n_rf, opts);
  s.u_a = rd.u_a;
  s.u_d = rd.u_d;
}

double relative_violation(const DesignMetrics& m, const ScenarioConfig& cfg, const HybridOptions& opts) {
  double v = m.power / cfg.power_budget - 1.0;
  for (std::size_t t = 0; t < m.ae_sinr.size(); ++t) {
    if (opts.enforce_ae) v = std::max(v, m.ae_sinr[t] / cfg.gamma_e - 1.0);
    if (opts.enforce_scnr) v = std::max(v, 1.0 - m.scnr[t] / cfg.gamma_r);
  }
  return std::max(v, 0.0);
}

double modulus_error(const CMat& f_a) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < f_a.size(); ++i) e = std::max(e, std::abs(std::abs(f_a(i)) - 1.0));
  return e;
}

}  // namespace

CMat HybridState::r_v() const {
  if (f_s.cols() == 0) return CMat();
  const CMat v = f_a * f_s;
  return v * v.adjoint();
}

ReceiveBank HybridState::receive_bank() const {
  ReceiveBank bank;
  for (Eigen::Index t = 0; t < u_d.cols(); ++t) {
    CVec u = u_a * u_d.col(t);
    const double n = u.norm();
    bank.u.push_back(n > 0.0 ? CVec(u / n) : u);
  }
  return bank;
}

double AnalogProblem::constraint_gap(int m, const CVec& f) const {
  return (f.adjoint() * b_mats.at(m) * f)(0).real() - b_vals.at(m);
}

double AnalogProblem::objective(const CVec& f) const {
  return a0.dot(f).real() - (f.adjoint() * a_mat * f)(0).real();
}

void update_aux_hybrid(HybridState& s, const ChannelSet& ch, double noise_c) {
  DigitalState d;
  d.w = s.w();
  d.r_v = s.r_v();
  d.nu = update_nu(d, ch, noise_c);
  s.nu = d.nu;
  s.beta = update_beta(d, ch, noise_c);
}

double r_had(const HybridState& s, const ChannelSet& ch, double noise_c) {
  const CMat ht = weighted_users(s, ch);
  const CMat eff = ht.adjoint() * s.f_a;  // H~^H F_a
  double f = aux_constant(s, noise_c);
  for (int k = 0; k < ch.k_users(); ++k) f += 2.0 * std::sqrt(1.0 + s.nu(k)) * (eff.row(k) * s.f_c.col(k))(0).real();
  f -= (eff * total_q(s) * eff.adjoint()).trace().real();
  return f;
}

conic::ConicProblem build_digital_subproblem(const HybridState& s, const ChannelSet& ch, const ScenarioConfig& cfg,
                                             const HybridOptions& opts) {
  const int n_rf = static_cast<int>(s.f_a.cols());
  const int k_users = ch.k_users();
  const int n_s = static_cast<int>(s.f_s.cols());
  const int cols = k_users + n_s;
  const int n = n_rf * cols;

  conic::ConicProblem p;
  for (int k = 0; k < k_users; ++k) p.add_vector("fc" + std::to_string(k), n_rf);
  for (int j = 0; j < n_s; ++j) p.add_vector("fs" + std::to_string(j), n_rf);
  auto block_diag = [&](const CMat& b) {
    CMat out = CMat::Zero(n, n);
    for (int c = 0; c < cols; ++c) out.block(c * n_rf, c * n_rf, n_rf, n_rf) = b;
    return out;
  };
  CMat incumbent(n_rf, cols);
  incumbent << s.f_c, s.f_s;

  // Objective.
  const CMat ht = weighted_users(s, ch);
  const CMat g = s.f_a.adjoint() * ht;  // F_a^H H~
  p.objective.quad = block_diag(-linalg::herm(g * g.adjoint()));
  p.objective.lin = CVec::Zero(n);
  for (int k = 0; k < k_users; ++k)
    p.objective.lin.segment(k * n_rf, n_rf) = 2.0 * std::sqrt(1.0 + s.nu(k)) * g.col(k);
  p.objective.constant = aux_constant(s, cfg.noise_comm);

  if (opts.enforce_ae) {
    for (int t = 0; t < ch.t_aes(); ++t) {
      const CVec e = s.f_a.adjoint() * ch.h_aes[t];
      const CMat ee = e * e.adjoint();
      for (int k = 0; k < k_users; ++k) {
        conic::Constraint c;
        c.form.quad = CMat::Zero(n, n);
        c.form.quad.block(k * n_rf, k * n_rf, n_rf, n_rf) = ee / cfg.gamma_e;
        c.form.lin = CVec::Zero(n);
        for (int j = 0; j < n_s; ++j) {
          const CVec fj = s.f_s.col(j);
          c.form.lin.segment((k_users + j) * n_rf, n_rf) = -2.0 * ee * fj;
          c.form.constant += std::norm(e.dot(fj));
        }
        c.bound = cfg.noise_eav;
        c.label = "ae[" + std::to_string(t) + "][" + std::to_string(k) + "]";
        p.constraints.push_back(c);
      }
    }
  }
  if (opts.enforce_scnr) {
    const ReceiveBank bank = s.receive_bank();
    for (int t = 0; t < ch.t_aes(); ++t) {
      const ScnrMatrices a = scnr_matrices(ch, bank.u.at(t), t);
      const CMat at = linalg::herm(s.f_a.adjoint() * a.a_target * s.f_a);
      const CMat ai = linalg::herm(s.f_a.adjoint() * a.a_clutter * s.f_a);
      conic::Constraint c;
      c.sense = conic::Sense::GreaterEqual;
      c.form.quad = block_diag(-cfg.gamma_r * ai);
      c.form.lin = CVec::Zero(n);
      for (int j = 0; j < cols; ++j) {
        const CVec fj = incumbent.col(j);
        c.form.lin.segment(j * n_rf, n_rf) = 2.0 * at * fj;
        c.form.constant -= (fj.adjoint() * at * fj)(0).real();
      }
      c.bound = cfg.gamma_r * cols * cfg.noise_sense / cfg.frame_len_l;
      c.label = "scnr[" + std::to_string(t) + "]";
      p.constraints.push_back(c);
    }
  }
  conic::Constraint power;
  power.form.quad = block_diag(linalg::herm(s.f_a.adjoint() * s.f_a));
  power.bound = cfg.power_budget;
  power.label = "power";
  p.constraints.push_back(power);
  return p;
}

conic::ConicSolution solve_digital_subproblem(HybridState& s, const ChannelSet& ch, const ScenarioConfig& cfg,
                                              const HybridOptions& opts) {
  // Work in an orthonormal basis of range(F_a): the surrogate depends on the
  // digital matrices only through F_a F_d, so this is the same problem without
  // the flat directions of a rank-deficient F_a.
  Eigen::JacobiSVD<CMat> svd(s.f_a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& sv = svd.singularValues();
  int r = 0;
  while (r < sv.size() && sv(r) > 1e-8 * sv(0)) ++r;
  const CMat u = svd.matrixU().leftCols(r);
  const CMat back = svd.matrixV().leftCols(r) * sv.head(r).cwiseInverse().asDiagonal();  // F_a^+ restricted to rank r

  HybridState basis = s;
  basis.f_a = u;
  basis.f_c = u.adjoint() * s.w();
  basis.f_s = u.adjoint() * s.v();
  const conic::ConicProblem p = build_digital_subproblem(basis, ch, cfg, opts);
  const int cols = static_cast<int>(s.f_c.cols() + s.f_s.cols());
  CMat incumbent(r, cols);
  incumbent << basis.f_c, basis.f_s;
  conic::SolverOptions so;
  so.tol = opts.solver_tol;
  so.max_iter = opts.solver_max_iter;
  so.warm_start = conic::Point{vec_of(incumbent), CMat()};
  conic::ConicSolution sol = conic::solve(p, so);
  const bool usable = sol.status == conic::Status::Optimal ||
                      (sol.status == conic::Status::MaxIter && sol.kkt.primal <= 1e-6);
  if (usable) {
    const CMat x = back * linalg::unvec(sol.values.w, r, cols);
    s.f_c = x.leftCols(s.f_c.cols());
    s.f_s = x.rightCols(s.f_s.cols());
  }
  return sol;
}

AnalogProblem build_analog_problem(const HybridState& s, const ChannelSet& ch, const ScenarioConfig& cfg,
                                   const HybridOptions& opts) {
  AnalogProblem p;
  p.m_t = static_cast<int>(s.f_a.rows());
  p.n_rf = static_cast<int>(s.f_a.cols());
  const int k_users = ch.k_users();
  const CMat q = total_q(s);
  const CMat qt = q.transpose();
  const CMat ht = weighted_users(s, ch);
  RVec nmat(k_users);
  for (int k = 0; k < k_users; ++k) nmat(k) = 2.0 * std::sqrt(1.0 + s.nu(k));

  p.a_mat = linalg::herm(linalg::kron(qt, ht * ht.adjoint()));
  p.a0 = vec_of(ht * nmat.asDiagonal() * s.f_c.adjoint());
  p.constant = aux_constant(s, cfg.noise_comm);

  const CMat fs_gram = s.f_s.cols() > 0 ? CMat(s.f_s * s.f_s.adjoint()) : CMat::Zero(p.n_rf, p.n_rf);
  if (opts.enforce_ae) {
    for (int t = 0; t < ch.t_aes(); ++t) {
      const CMat hh = ch.h_aes[t] * ch.h_aes[t].adjoint();
      for (int k = 0; k < k_users; ++k) {
        const CMat inner = s.f_c.col(k) * s.f_c.col(k).adjoint() / cfg.gamma_e - fs_gram;
        p.b_mats.push_back(linalg::herm(linalg::kron(inner.transpose(), hh)));
        p.b_vals.push_back(cfg.noise_eav);
        p.labels.push_back("ae[" + std::to_string(t) + "][" + std::to_string(k) + "]");
      }
    }
  }
  if (opts.enforce_scnr) {
    const ReceiveBank bank = s.receive_bank();
    const int cols = k_users + static_cast<int>(s.f_s.cols());
    for (int t = 0; t < ch.t_aes(); ++t) {
      const ScnrMatrices a = scnr_matrices(ch, bank.u.at(t), t);
      p.b_mats.push_back(linalg::herm(linalg::kron(-qt, a.a_target - cfg.gamma_r * a.a_clutter)));
      p.b_vals.push_back(-cfg.gamma_r * cols * cfg.noise_sense / cfg.frame_len_l);
      p.labels.push_back("scnr[" + std::to_string(t) + "]");
    }
  }
  p.b_mats.push_back(linalg::herm(linalg::kron(qt, CMat::Identity(p.m_t, p.m_t))));
  p.b_vals.push_back(cfg.power_budget);
  p.labels.push_back("power");

  if (s.lambda.size() == p.b_mats.size()) {
    p.lambda = s.lambda;
  } else {
    p.lambda.assign(p.b_mats.size(), 0.0);
  }
  return p;
}

double penalty_value(const AnalogProblem& p, const CVec& f) {
  double g = p.objective(f);
  for (int m = 0; m < p.n_constraints(); ++m) {
    const double gap = p.constraint_gap(m, f);
    if (gap > 0.0) g -= p.lambda[m] * gap * gap;
  }
  return g;
}

CVec euclidean_grad(const AnalogProblem& p, const CVec& f) {
  CVec g = p.a0 - 2.0 * p.a_mat * f;
  for (int m = 0; m < p.n_constraints(); ++m) {
    const double gap = p.constraint_gap(m, f);
    if (gap > 0.0) g -= p.lambda[m] * 4.0 * gap * (p.b_mats[m] * f);
  }
  return g;
}

CVec riemannian_grad(const CVec& f, const CVec& egrad) {
  CVec out = egrad;
  for (Eigen::Index i = 0; i < f.size(); ++i) out(i) -= (egrad(i) * std::conj(f(i))).real() * f(i);
  return out;
}

CVec retract(const CVec& f, const CVec& step) {
  CVec out(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const cd z = f(i) + step(i);
    const double r = std::abs(z);
    if (r > 0.0) {
      out(i) = z / r;
    } else {
      const double rf = std::abs(f(i));
      out(i) = rf > 0.0 ? f(i) / rf : cd{1.0, 0.0};
    }
  }
  return out;
}

ManifoldResult manifold_ascent(const AnalogProblem& p, const CVec& f0, const HybridOptions& opts) {
  ManifoldResult r;
  r.f = f0;
  r.value = penalty_value(p, f0);
  r.values.push_back(r.value);
  CVec grad = riemannian_grad(r.f, euclidean_grad(p, r.f));
  CVec prev_f;
  CVec prev_grad;
  for (int it = 0; it < opts.inner_max_iter; ++it) {
    const double gn2 = grad.squaredNorm();
    if (gn2 == 0.0) break;
    // Trial step: the configured one first, then Barzilai-Borwein from the last move.
    double mu = opts.initial_step;
    if (opts.bb_step && it > 0) {
      const CVec ds = r.f - prev_f;
      const CVec dg = prev_grad - grad;  // ascent: curvature along -grad
      const double sy = ds.dot(dg).real();
      if (sy > 0.0) mu = std::clamp(ds.squaredNorm() / sy, 1e-10, 1e10);
    }
    bool accepted = false;
    CVec cand;
    double value = 0.0;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      cand = retract(r.f, mu * grad);
      value = penalty_value(p, cand);
      if (value >= r.value + opts.armijo_c * mu * gn2) {
        accepted = true;
        break;
      }
      mu *= opts.armijo_shrink;
    }
    if (!accepted) {
      r.backtrack_limit = true;
      break;
    }
    const double change = (value - r.value) / std::max(std::abs(r.value), std::numeric_limits<double>::min());
    prev_f = r.f;
    prev_grad = grad;
    r.f = cand;
    r.value = value;
    r.values.push_back(value);
    r.iterations = it + 1;
    grad = riemannian_grad(r.f, euclidean_grad(p, r.f));
    // A short backtracked step also gives a small change, so stationarity has to hold as well.
    if (change < opts.inner_rel_tol && grad.norm() <= opts.stationarity_tol * (1.0 + std::abs(r.value))) break;
  }
  return r;
}

std::vector<double> initial_penalty_weights(const AnalogProblem& p, const CVec& f0, double floor) {
  const double obj = std::max(std::abs(p.objective(f0)), std::numeric_limits<double>::min());
  std::vector<double> lambda;
  for (int m = 0; m < p.n_constraints(); ++m) {
    const double gap = p.constraint_gap(m, f0);
    const double b = std::max(std::abs(p.b_vals[m]), std::numeric_limits<double>::min());
    lambda.push_back(gap > 0.0 ? obj / (gap * gap) : floor * obj / (b * b));
  }
  return lambda;
}

PhaseFactorization phase_factorize(const CMat& target, int n_rf, int max_iter, double tol) {
  PhaseFactorization out;
  const int m = static_cast<int>(target.rows());
  const int c = static_cast<int>(target.cols());
  out.f_a = dft_columns(m, n_rf);
  out.f_d = CMat::Zero(n_rf, c);
  if (c == 0) {
    out.residual_trace.push_back(0.0);
    return out;
  }

  if (n_rf >= 2 * c) {
    // Each column is the sum of two unit-modulus vectors scaled by half its peak modulus.
    for (int j = 0; j < c; ++j) {
      const double peak = target.col(j).cwiseAbs().maxCoeff();
      if (peak == 0.0) continue;
      const double half = 0.5 * peak;
      for (int i = 0; i < m; ++i) {
        const double phi = std::arg(target(i, j));
        const double delta = std::acos(std::clamp(std::abs(target(i, j)) / peak, 0.0, 1.0));
        out.f_a(i, 2 * j) = std::polar(1.0, phi + delta);
        out.f_a(i, 2 * j + 1) = std::polar(1.0, phi - delta);
      }
      out.f_d(2 * j, j) = half;
      out.f_d(2 * j + 1, j) = half;
    }
    out.residual_trace.push_back(fit_residual(target, out.f_a, out.f_d));
    return out;
  }

  // Start from the phases of the dominant left singular vectors.
  Eigen::JacobiSVD<CMat> svd(target, Eigen::ComputeThinU);
  const int lead = std::min<int>(n_rf, static_cast<int>(svd.matrixU().cols()));
  for (int j = 0; j < lead; ++j) {
    if (svd.singularValues()(j) > 1e-12 * svd.singularValues()(0)) out.f_a.col(j) = linalg::phase_only(svd.matrixU().col(j));
  }
  out.f_d = least_squares(out.f_a, target);
  double prev = fit_residual(target, out.f_a, out.f_d);
  out.residual_trace.push_back(prev);
  for (int it = 0; it < max_iter; ++it) {
    CMat cand = linalg::phase_only(target * out.f_d.adjoint());
    if (fit_residual(target, cand, out.f_d) > fit_residual(target, out.f_a, out.f_d)) {
      cand = out.f_a;
      coordinate_sweep(target, out.f_d, cand);
    }
    out.f_a = cand;
    out.f_d = least_squares(out.f_a, target);
    const double res = fit_residual(target, out.f_a, out.f_d);
    out.residual_trace.push_back(res);
    if (prev - res <= tol * std::max(prev, std::numeric_limits<double>::min())) break;
    prev = res;
  }
  return out;
}

HybridDecomposition decompose_fully_digital(const CMat& w, const CMat& v, int n_rf, const ScenarioConfig& cfg,
                                            const HybridOptions& opts) {
  CMat x(w.rows(), w.cols() + v.cols());
  x << w, v;
  const PhaseFactorization pf = phase_factorize(x, n_rf, opts.decomposition_iters, opts.decomposition_tol);
  HybridDecomposition d;
  d.f_a = pf.f_a;
  CMat f_d = pf.f_d;
  d.residual = pf.residual_trace.back();
  d.residual_trace = pf.residual_trace;
  const double p = (d.f_a * f_d).squaredNorm();
  if (p > cfg.power_budget) f_d *= std::sqrt(cfg.power_budget / p);
  d.f_c = f_d.leftCols(w.cols());
  d.f_s = f_d.rightCols(v.cols());
  return d;
}

HybridDecomposition init_hybrid(const CMat& w0, const CMat& v0, const ScenarioConfig& cfg, const HybridOptions& opts) {
  return decompose_fully_digital(w0, v0, cfg.n_rf, cfg, opts);
}

ReceiveDecomposition decompose_receive(const CMat& u_digital, int n_rf, const HybridOptions& opts) {
  const PhaseFactorization pf = phase_factorize(u_digital, n_rf, opts.decomposition_iters, opts.decomposition_tol);
  ReceiveDecomposition r;
  r.u_a = pf.f_a;
  r.u_d = pf.f_d;
  for (Eigen::Index t = 0; t < r.u_d.cols(); ++t) {
    const double n = (r.u_a * r.u_d.col(t)).norm();
    if (n > 0.0) r.u_d.col(t) /= n;
    r.bank.u.push_back(r.u_a * r.u_d.col(t));
  }
  return r;
}

DesignMetrics evaluate_hybrid(const ChannelSet& ch, const HybridState& s, const ScenarioConfig& cfg) {
  const CMat w = s.w();
  const CMat r_v = s.r_v();
  DesignMetrics m = evaluate_design(ch, w, r_v, cfg);
  CMat cov = w * w.adjoint();
  if (r_v.size() > 0) cov += r_v;
  const ReceiveBank bank = s.receive_bank();
  for (int t = 0; t < ch.t_aes() && t < static_cast<int>(bank.u.size()); ++t) {
    m.scnr[t] = sensing_scnr_cov(ch, cov, ch.k_users() + static_cast<int>(s.f_s.cols()), t, bank.u[t], cfg);
  }
  return m;
}

namespace {

HybridTraceRow make_row(int iteration, const ChannelSet& ch, const HybridState& s, const ScenarioConfig& cfg,
                        const HybridOptions& opts, double penalized) {
  HybridTraceRow row;
  row.iteration = iteration;
  HybridState tmp = s;
  update_aux_hybrid(tmp, ch, cfg.noise_comm);
  row.r_had = r_had(tmp, ch, cfg.noise_comm);
  row.penalized = penalized;
  const DesignMetrics m = evaluate_hybrid(ch, s, cfg);
  row.max_violation = relative_violation(m, cfg, opts);
  row.modulus_error = modulus_error(s.f_a);
  row.lambda_max = s.lambda.empty() ? 0.0 : *std::max_element(s.lambda.begin(), s.lambda.end());
  row.sum_rate = m.sum_rate * std::log(2.0);
  row.secrecy_rate = m.secrecy_rate;
  return row;
}

// Doubles the digital step while the true constraints hold and the sum rate keeps increasing.
void extrapolate_digital(const ChannelSet& ch, const ScenarioConfig& cfg, const HybridOptions& opts,
                         const HybridState& before, HybridState& s) {
  auto rate = [&](const HybridState& x) { return sum_rate_nats(ch, x.w(), x.r_v(), cfg.noise_comm); };
  if (relative_violation(evaluate_hybrid(ch, s, cfg), cfg, opts) > 0.0) return;
  const CMat dc = s.f_c - before.f_c;
  const CMat ds = s.f_s - before.f_s;
  double best = rate(s);
  HybridState trial = s;
  for (double tau = 2.0; tau <= 1024.0; tau *= 2.0) {
    trial.f_c = before.f_c + tau * dc;
    trial.f_s = before.f_s + tau * ds;
    if (relative_violation(evaluate_hybrid(ch, trial, cfg), cfg, opts) > 0.0) break;
    const double f = rate(trial);
    if (f <= best) break;
    best = f;
    s.f_c = trial.f_c;
    s.f_s = trial.f_s;
  }
}

// Largest common scale c >= 1 of (F_c, F_s) keeping power and AE constraints;
// SCNR only improves with c. Applied when it raises the sum rate.
void rescale_digital(const ChannelSet& ch, const ScenarioConfig& cfg, const HybridOptions& opts, HybridState& s) {
  const double p = s.w().squaredNorm() + s.v().squaredNorm();
  if (!(p > 0.0)) return;
  double c2 = cfg.power_budget / p;
  if (opts.enforce_ae) {
    const CMat w = s.w();
    const CMat v = s.v();
    for (int t = 0; t < ch.t_aes(); ++t) {
      const CVec& he = ch.h_aes[t];
      double leak = 0.0;
      for (Eigen::Index j = 0; j < v.cols(); ++j) leak += std::norm(he.dot(v.col(j)));
      for (int k = 0; k < ch.k_users(); ++k) {
        const double coef = std::norm(he.dot(w.col(k))) / cfg.gamma_e - leak;
        if (coef > 0.0) c2 = std::min(c2, cfg.noise_eav / coef);
      }
    }
  }
  if (!(c2 > 1.0)) return;
  HybridState trial = s;
  const double c = std::sqrt(c2) * (1.0 - 1e-9);
  trial.f_c *= c;
  trial.f_s *= c;
  if (relative_violation(evaluate_hybrid(ch, trial, cfg), cfg, opts) > 0.0) return;
  if (sum_rate_nats(ch, trial.w(), trial.r_v(), cfg.noise_comm) <= sum_rate_nats(ch, s.w(), s.r_v(), cfg.noise_comm))
    return;
  s.f_c = trial.f_c;
  s.f_s = trial.f_s;
}

bool usable(const conic::ConicSolution& sol) {
  return sol.status == conic::Status::Optimal ||
         (sol.status == conic::Status::MaxIter && sol.kkt.primal <= 1e-6);
}

HybridSolution run_unit_power(const ChannelSet& ch, const ScenarioConfig& cfg, const HybridOptions& opts) {
  HybridSolution sol;
  HybridState& s = sol.state;
  DigitalOptions dopts;
  dopts.enforce_ae = opts.enforce_ae;
  dopts.enforce_scnr = opts.enforce_scnr;
  const InitResult init = init_beamformers(ch, cfg, dopts);
  if (opts.f_a_init) {
    HybridDecomposition d;
    d.f_a = *opts.f_a_init;
    CMat x(init.w.rows(), init.w.cols() + init.v.cols());
    x << init.w, init.v;
    CMat f_d = least_squares(d.f_a, x);
    d.residual = fit_residual(x, d.f_a, f_d);
    d.residual_trace = {d.residual};
    const double p = (d.f_a * f_d).squaredNorm();
    if (p > cfg.power_budget) f_d *= std::sqrt(cfg.power_budget / p);
    d.f_c = f_d.leftCols(init.w.cols());
    d.f_s = f_d.rightCols(init.v.cols());
    sol.init = d;
  } else {
    sol.init = init_hybrid(init.w, init.v, cfg, opts);
  }
  s.f_a = sol.init.f_a;
  s.f_c = sol.init.f_c;
  s.f_s = sol.init.f_s;
  update_receiver(s, ch, cfg, opts);
  update_aux_hybrid(s, ch, cfg.noise_comm);
  {
    const AnalogProblem p0 = build_analog_problem(s, ch, cfg, opts);
    s.lambda = initial_penalty_weights(p0, vec_of(s.f_a), opts.lambda_floor);
  }
  const std::vector<double> lambda0 = s.lambda;
  sol.trace.push_back(make_row(0, ch, s, cfg, opts, 0.0));
  sol.status = "max_iter";

  double prev = sol.trace.back().sum_rate;
  HybridState good = s;
  bool have_good = false;
  for (int it = 1; it <= opts.max_outer; ++it) {
    s.iteration = it;
    update_aux_hybrid(s, ch, cfg.noise_comm);
    const HybridState before = s;
    const conic::ConicSolution ds = solve_digital_subproblem(s, ch, cfg, opts);
    if (!usable(ds)) {
      if (have_good) {
        s = good;
        sol.status = "solver_failed";
      } else {
        sol.status = ds.status == conic::Status::Infeasible ? "infeasible_init" : "solver_failed";
      }
      break;
    }
    if (opts.extrapolate) {
      extrapolate_digital(ch, cfg, opts, before, s);
      rescale_digital(ch, cfg, opts, s);
    }
    good = s;
    have_good = true;

    update_aux_hybrid(s, ch, cfg.noise_comm);
    const AnalogProblem ap = build_analog_problem(s, ch, cfg, opts);
    const ManifoldResult mr = manifold_ascent(ap, vec_of(s.f_a), opts);
    s.f_a = linalg::unvec(mr.f, s.f_a.rows(), s.f_a.cols());

    sol.lambda_trace.push_back(s.lambda);
    for (int m = 0; m < ap.n_constraints(); ++m) {
      if (ap.constraint_gap(m, mr.f) > 0.0) s.lambda[m] = std::min(2.0 * s.lambda[m], opts.lambda_cap * lambda0[m]);
    }
    update_receiver(s, ch, cfg, opts);

    sol.trace.push_back(make_row(it, ch, s, cfg, opts, mr.value));
    const double f = sol.trace.back().sum_rate;
    if (std::abs(f - prev) <= opts.rel_tol * std::max(std::abs(prev), 1e-12)) {
      sol.converged = true;
      sol.status = "optimal";
      break;
    }
    prev = f;
  }

  if (opts.polish && sol.status != "infeasible_init") {
    HybridState trial = s;
    update_aux_hybrid(trial, ch, cfg.noise_comm);
    if (usable(solve_digital_subproblem(trial, ch, cfg, opts))) {
      update_receiver(trial, ch, cfg, opts);
      s = trial;
    }
  }
  update_aux_hybrid(s, ch, cfg.noise_comm);
  return sol;
}

}  // namespace

HybridSolution run_hybrid(const ChannelSet& ch, const ScenarioConfig& cfg, const HybridOptions& opts) {
  const double p = cfg.power_budget;
  ScenarioConfig unit = cfg;
  unit.power_budget = 1.0;
  unit.noise_comm /= p;
  unit.noise_eav /= p;
  unit.noise_sense /= p;
  HybridOptions o = opts;
  HybridSolution sol = run_unit_power(ch, unit, o);

  const double amp = std::sqrt(p);
  HybridState& s = sol.state;
  s.f_c *= amp;
  s.f_s *= amp;
  s.beta /= amp;
  for (double& l : s.lambda) l /= p * p;
  for (auto& ls : sol.lambda_trace)
    for (double& l : ls) l /= p * p;
  for (auto& row : sol.trace) row.lambda_max /= p * p;
  sol.init.f_c *= amp;
  sol.init.f_s *= amp;
  sol.init.residual *= amp;
  for (double& r : sol.init.residual_trace) r *= amp;

  sol.beams = BeamformerPair{s.w(), s.v()};
  sol.metrics = evaluate_hybrid(ch, s, cfg);
  sol.max_violation = relative_violation(sol.metrics, cfg, opts);
  sol.feasible = sol.max_violation <= 1e-4;
  return sol;
}

void write_hybrid_trace_csv(const std::vector<HybridTraceRow>& rows, std::ostream& os) {
  os << "iteration,r_had,penalized,max_violation,modulus_error,lambda_max,sum_rate,secrecy_rate\n";
  os << std::setprecision(12);
  for (const auto& r : rows) {
    os << r.iteration << ',' << r.r_had << ',' << r.penalized << ',' << r.max_violation << ',' << r.modulus_error
       << ',' << r.lambda_max << ',' << r.sum_rate << ',' << r.secrecy_rate << '\n';
  }
}

}  // namespace isac
