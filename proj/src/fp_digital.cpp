// SPDX-License-Identifier: Apache-2.0
#include "isac/fp_digital.hpp"

#include "isac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace isac {

namespace {

int sensing_streams(const ChannelSet& ch, const ScenarioConfig& cfg) { return ch.k_users() + cfg.n_s; }

CMat tx_covariance(const CMat& w, const CMat& r_v) {
  CMat c = w * w.adjoint();
  if (r_v.size() > 0) c += r_v;
  return c;
}

double trace_re(const CMat& a) { return a.size() > 0 ? a.trace().real() : 0.0; }

CVec stack_columns(const CMat& w) {
  CVec out(w.size());
  for (Eigen::Index k = 0; k < w.cols(); ++k) out.segment(k * w.rows(), w.rows()) = w.col(k);
  return out;
}

CMat unstack_columns(const CVec& z, int rows, int cols) {
  CMat out(rows, cols);
  for (int k = 0; k < cols; ++k) out.col(k) = z.segment(static_cast<Eigen::Index>(k) * rows, rows);
  return out;
}

double to_db(double lin) { return lin > 0.0 ? 10.0 * std::log10(lin) : -std::numeric_limits<double>::infinity(); }

// Orthonormal real coordinates of a Hermitian matrix (diagonal first, then
// sqrt(2)-scaled real and imaginary parts of the strict upper triangle).
RVec herm_coords(const CMat& a) {
  const Eigen::Index n = a.rows();
  RVec out(n * n);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) out(idx++) = a(i, i).real();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(idx++) = std::sqrt(2.0) * a(i, j).real();
      out(idx++) = std::sqrt(2.0) * a(i, j).imag();
    }
  }
  return out;
}

CMat herm_from_coords(const RVec& c, Eigen::Index n) {
  CMat out = CMat::Zero(n, n);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) out(i, i) = c(idx++);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const cd v{c(idx) / std::sqrt(2.0), c(idx + 1) / std::sqrt(2.0)};
      idx += 2;
      out(i, j) = v;
      out(j, i) = std::conj(v);
    }
  }
  return out;
}

CMat weighted_user_gram(const CVec& beta, const ChannelSet& ch) {
  const int m = ch.m_t();
  CMat b = CMat::Zero(m, m);
  for (int k = 0; k < ch.k_users(); ++k) {
    const CVec h = ch.h_users.col(k);
    b += std::norm(beta(k)) * h * h.adjoint();
  }
  return b;
}

}  // namespace

ScnrMatrices scnr_matrices(const ChannelSet& ch, const CVec& u, int t) {
  const CVec gs = ch.h_roundtrip.at(t).adjoint() * u;
  const CVec gi = ch.h_clutter.adjoint() * u;
  return {gs * gs.adjoint(), gi * gi.adjoint()};
}

double sum_rate_nats(const ChannelSet& ch, const CMat& w, const CMat& r_v, double noise_c) {
  double r = 0.0;
  for (int k = 0; k < ch.k_users(); ++k) r += std::log1p(user_sinr_cov(ch, w, r_v, k, noise_c));
  return r;
}

DesignMetrics evaluate_design(const ChannelSet& ch, const CMat& w, const CMat& r_v, const ScenarioConfig& cfg) {
  DesignMetrics m;
  m.sum_rate = sum_rate_nats(ch, w, r_v, cfg.noise_comm) / std::log(2.0);
  m.secrecy_rate = sum_secrecy_rate_cov(ch, w, r_v, cfg.noise_comm, cfg.noise_eav);
  m.power = w.squaredNorm() + trace_re(r_v);
  const CMat cov = tx_covariance(w, r_v);
  const int streams = sensing_streams(ch, cfg);
  for (int t = 0; t < ch.t_aes(); ++t) {
    double worst = 0.0;
    for (int k = 0; k < ch.k_users(); ++k) worst = std::max(worst, ae_sinr_cov(ch, w, r_v, t, k, cfg.noise_eav));
    m.ae_sinr.push_back(worst);
    const CVec u = receive_beamformer_cov(ch, cov, streams, t, cfg);
    m.scnr.push_back(sensing_scnr_cov(ch, cov, streams, t, u, cfg));
  }
  return m;
}

double constraint_violation(const ChannelSet& ch, const CMat& w, const CMat& r_v, const ScenarioConfig& cfg,
                            const DigitalOptions& opts) {
  const DesignMetrics m = evaluate_design(ch, w, r_v, cfg);
  double v = m.power / cfg.power_budget - 1.0;
  for (int t = 0; t < ch.t_aes(); ++t) {
    if (opts.enforce_ae) v = std::max(v, m.ae_sinr[t] / cfg.gamma_e - 1.0);
    if (opts.enforce_scnr) v = std::max(v, 1.0 - m.scnr[t] / cfg.gamma_r);
  }
  return v;
}

InitResult init_beamformers(const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalOptions& opts) {
  const int m = ch.m_t();
  const int k_users = ch.k_users();
  CMat w_i(m, k_users);
  for (int k = 0; k < k_users; ++k) w_i.col(k) = steering(cfg.user_geometry.at(k).angle, m);
  CMat v_i = CMat::Zero(m, cfg.n_s);
  if (cfg.n_s > 0) {
    CVec sum = CVec::Zero(m);
    for (int t = 0; t < ch.t_aes(); ++t) sum += steering(ch.ae_angles.at(t), m);
    for (int n = 0; n < cfg.n_s; ++n) v_i.col(n) = sum;
  }
  const double nw = w_i.norm();
  const double nv = v_i.norm();
  const double root_p = std::sqrt(cfg.power_budget);

  InitResult best;
  best.max_violation = std::numeric_limits<double>::infinity();
  const int steps = nv > 0.0 ? 20 : 0;
  for (int s = 0; s <= steps; ++s) {
    const double mu = 0.05 * s;
    const double denom = (1.0 - mu) * nw + mu * nv;
    if (denom <= 0.0) continue;
    InitResult cand;
    cand.mu = mu;
    cand.w = root_p * (1.0 - mu) / denom * w_i;
    cand.v = root_p * mu / denom * v_i;
    const CMat r_v = cfg.n_s > 0 ? CMat(cand.v * cand.v.adjoint()) : CMat();
    cand.max_violation = constraint_violation(ch, cand.w, r_v, cfg, opts);
    cand.feasible = cand.max_violation <= 0.0;
    if (cand.feasible) return cand;
    if (cand.max_violation < best.max_violation) best = cand;
  }
  return best;
}

RVec update_nu(const DigitalState& s, const ChannelSet& ch, double noise_c) {
  RVec nu(ch.k_users());
  for (int k = 0; k < ch.k_users(); ++k) nu(k) = user_sinr_cov(ch, s.w, s.r_v, k, noise_c);
  return nu;
}

CVec update_beta(const DigitalState& s, const ChannelSet& ch, double noise_c) {
  CVec beta(ch.k_users());
  for (int k = 0; k < ch.k_users(); ++k) {
    const CVec h = ch.h_users.col(k);
    const Eigen::RowVectorXcd g = h.adjoint() * s.w;
    double total = g.squaredNorm() + noise_c;
    if (s.r_v.size() > 0) total += (h.adjoint() * s.r_v * h)(0).real();
    beta(k) = std::sqrt(1.0 + s.nu(k)) * g(k) / total;
  }
  return beta;
}

double r_sum(const RVec& nu, const CVec& beta, const CMat& w, const CMat& r_v, const ChannelSet& ch, double noise_c) {
  double f = 0.0;
  for (int k = 0; k < ch.k_users(); ++k) {
    const CVec h = ch.h_users.col(k);
    const Eigen::RowVectorXcd g = h.adjoint() * w;
    double total = g.squaredNorm() + noise_c;
    if (r_v.size() > 0) total += (h.adjoint() * r_v * h)(0).real();
    f += std::log1p(nu(k)) - nu(k);
    f += 2.0 * std::sqrt(1.0 + nu(k)) * (std::conj(beta(k)) * g(k)).real();
    f -= std::norm(beta(k)) * total;
  }
  return f;
}

conic::ConicProblem build_subproblem(const DigitalState& s, const ChannelSet& ch, const ScenarioConfig& cfg,
                                     const DigitalOptions& opts) {
  const int m = ch.m_t();
  const int k_users = ch.k_users();
  const int n = m * k_users;
  const bool has_r = cfg.n_s > 0;

  conic::ConicProblem p;
  for (int k = 0; k < k_users; ++k) p.add_vector("w" + std::to_string(k), m);
  if (has_r) p.psd_var = conic::PsdVar{"R", m};

  const CMat b = weighted_user_gram(s.beta, ch);
  const CMat eye_k = CMat::Identity(k_users, k_users);
  p.objective.quad = -linalg::kron(eye_k, b);
  p.objective.lin = CVec::Zero(n);
  double constant = 0.0;
  for (int k = 0; k < k_users; ++k) {
    p.objective.lin.segment(static_cast<Eigen::Index>(k) * m, m) =
        2.0 * std::sqrt(1.0 + s.nu(k)) * s.beta(k) * ch.h_users.col(k);
    constant += std::log1p(s.nu(k)) - s.nu(k) - std::norm(s.beta(k)) * cfg.noise_comm;
  }
  p.objective.constant = constant;
  if (has_r) p.objective.trace = -b;

  if (opts.enforce_ae) {
    for (int t = 0; t < ch.t_aes(); ++t) {
      const CVec& he = ch.h_aes[t];
      const CMat g = he * he.adjoint();
      for (int k = 0; k < k_users; ++k) {
        conic::Constraint c;
        c.form.quad = CMat::Zero(n, n);
        c.form.quad.block(static_cast<Eigen::Index>(k) * m, static_cast<Eigen::Index>(k) * m, m, m) = g / cfg.gamma_e;
        if (has_r) c.form.trace = -g;
        c.sense = conic::Sense::LessEqual;
        c.bound = cfg.noise_eav;
        c.label = "ae[" + std::to_string(t) + "][" + std::to_string(k) + "]";
        p.constraints.push_back(std::move(c));
      }
    }
  }

  if (opts.enforce_scnr) {
    const int streams = sensing_streams(ch, cfg);
    for (int t = 0; t < ch.t_aes() && t < static_cast<int>(s.u_bank.u.size()); ++t) {
      const auto a = scnr_matrices(ch, s.u_bank.u[t], t);
      conic::Constraint c;
      c.form.quad = -cfg.gamma_r * linalg::kron(eye_k, a.a_clutter);
      c.form.lin = CVec::Zero(n);
      double lin_const = 0.0;
      for (int k = 0; k < k_users; ++k) {
        const CVec wk = s.w.col(k);
        c.form.lin.segment(static_cast<Eigen::Index>(k) * m, m) = 2.0 * a.a_target * wk;
        lin_const += (wk.adjoint() * a.a_target * wk)(0).real();
      }
      c.form.constant = -lin_const;
      if (has_r) c.form.trace = a.a_target - cfg.gamma_r * a.a_clutter;
      c.sense = conic::Sense::GreaterEqual;
      c.bound = cfg.gamma_r * streams * cfg.noise_sense * s.u_bank.u[t].squaredNorm() / cfg.frame_len_l;
      c.label = "scnr[" + std::to_string(t) + "]";
      p.constraints.push_back(std::move(c));
    }
  }

  conic::Constraint power;
  power.form.quad = CMat::Identity(n, n);
  if (has_r) power.form.trace = CMat::Identity(m, m);
  power.sense = conic::Sense::LessEqual;
  power.bound = cfg.power_budget;
  power.label = "power";
  p.constraints.push_back(std::move(power));
  return p;
}

bool reallocate_power(const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalOptions& opts,
                      const ReceiveBank& u_bank, CMat& w, CMat& r_v) {
  if (r_v.size() == 0 || w.squaredNorm() <= 0.0) return false;
  const int m = ch.m_t();
  const CMat ww = w * w.adjoint();

  conic::ConicProblem p;
  p.add_vector("c", 1);
  p.psd_var = conic::PsdVar{"R", m};
  p.objective.lin = CVec::Constant(1, cd{1.0, 0.0});

  auto scalar = [](double v) { return CMat::Constant(1, 1, cd{v, 0.0}); };
  if (opts.enforce_ae) {
    for (int t = 0; t < ch.t_aes(); ++t) {
      const CVec& he = ch.h_aes[t];
      const CMat g = he * he.adjoint();
      for (int k = 0; k < ch.k_users(); ++k) {
        conic::Constraint c;
        c.form.quad = scalar(std::norm(he.dot(w.col(k))) / cfg.gamma_e);
        c.form.trace = -g;
        c.bound = cfg.noise_eav;
        c.label = "ae[" + std::to_string(t) + "][" + std::to_string(k) + "]";
        p.constraints.push_back(std::move(c));
      }
    }
  }
  if (opts.enforce_scnr) {
    const int streams = sensing_streams(ch, cfg);
    for (int t = 0; t < ch.t_aes() && t < static_cast<int>(u_bank.u.size()); ++t) {
      const auto a = scnr_matrices(ch, u_bank.u[t], t);
      const CMat net = a.a_target - cfg.gamma_r * a.a_clutter;
      const double q = (net * ww).trace().real();
      conic::Constraint c;
      // |c|^2 q: kept as is when concave, otherwise replaced by its tangent at c = 1.
      if (q < 0.0) {
        c.form.quad = scalar(q);
      } else {
        c.form.lin = CVec::Constant(1, cd{2.0 * q, 0.0});
        c.form.constant = -q;
      }
      c.form.trace = net;
      c.sense = conic::Sense::GreaterEqual;
      c.bound = cfg.gamma_r * streams * cfg.noise_sense * u_bank.u[t].squaredNorm() / cfg.frame_len_l;
      c.label = "scnr[" + std::to_string(t) + "]";
      p.constraints.push_back(std::move(c));
    }
  }
  for (int k = 0; k < ch.k_users(); ++k) {
    const CVec h = ch.h_users.col(k);
    conic::Constraint c;
    c.form.trace = h * h.adjoint();
    // A little headroom keeps the feasible set solid when R_v already avoids the user.
    c.bound = (h.adjoint() * r_v * h)(0).real() + 1e-3 * cfg.noise_comm;
    c.label = "interference[" + std::to_string(k) + "]";
    p.constraints.push_back(std::move(c));
  }
  conic::Constraint power;
  power.form.quad = scalar(w.squaredNorm());
  power.form.trace = CMat::Identity(m, m);
  power.bound = cfg.power_budget;
  power.label = "power";
  p.constraints.push_back(std::move(power));

  conic::SolverOptions so;
  so.tol = opts.solver_tol;
  so.max_iter = opts.solver_max_iter;
  so.warm_start = conic::Point{CVec::Constant(1, cd{1.0, 0.0}), r_v};
  const conic::ConicSolution res = conic::solve(p, so);
  if (res.status == conic::Status::Infeasible) return false;
  const double scale = std::abs(res.values.w(0));
  if (!(scale > 1.0)) return false;
  const CMat w_new = scale * w;
  const CMat r_new = linalg::herm(res.values.x);
  if (constraint_violation(ch, w_new, r_new, cfg, opts) > 0.0) return false;
  if (sum_rate_nats(ch, w_new, r_new, cfg.noise_comm) <= sum_rate_nats(ch, w, r_v, cfg.noise_comm)) return false;
  w = w_new;
  r_v = r_new;
  return true;
}

namespace {

TraceRow make_row(int iteration, const ChannelSet& ch, const DigitalState& s, const ScenarioConfig& cfg) {
  TraceRow row;
  row.iteration = iteration;
  row.objective = sum_rate_nats(ch, s.w, s.r_v, cfg.noise_comm);
  const DesignMetrics m = evaluate_design(ch, s.w, s.r_v, cfg);
  row.secrecy_rate = m.secrecy_rate;
  row.power_used = m.power;
  double max_ae = 0.0;
  double min_scnr = std::numeric_limits<double>::infinity();
  for (double v : m.ae_sinr) max_ae = std::max(max_ae, v);
  for (double v : m.scnr) min_scnr = std::min(min_scnr, v);
  row.max_ae_sinr_db = to_db(max_ae);
  row.min_scnr_db = m.scnr.empty() ? std::numeric_limits<double>::quiet_NaN() : to_db(min_scnr);
  return row;
}

// Doubles the step along (W+ - W, R+ - R) while the point stays feasible for
// the true constraints and the true sum rate keeps increasing.
void extrapolate_step(const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalOptions& opts, const CMat& w0,
                      const CMat& r0, CMat& w1, CMat& r1) {
  if (constraint_violation(ch, w1, r1, cfg, opts) > 0.0) return;
  const CMat dw = w1 - w0;
  const CMat dr = r1.size() > 0 ? CMat(r1 - r0) : CMat();
  double best = sum_rate_nats(ch, w1, r1, cfg.noise_comm);
  for (double tau = 2.0; tau <= 1024.0; tau *= 2.0) {
    const CMat w = w0 + tau * dw;
    CMat r;
    if (dr.size() > 0) r = linalg::project_psd(linalg::herm(r0 + tau * dr));
    if (constraint_violation(ch, w, r, cfg, opts) > 0.0) break;
    const double f = sum_rate_nats(ch, w, r, cfg.noise_comm);
    if (f <= best) break;
    best = f;
    w1 = w;
    r1 = r;
  }
}

}  // namespace

namespace {

// Algorithm body in units where the power budget is one.
DigitalSolution run_unit_power(const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalOptions& opts) {
  DigitalSolution sol;
  DigitalState& s = sol.state;
  const int m = ch.m_t();
  const int k_users = ch.k_users();
  const int streams = sensing_streams(ch, cfg);
  const bool has_r = cfg.n_s > 0;

  sol.init = init_beamformers(ch, cfg, opts);
  s.w = sol.init.w;
  if (has_r) s.r_v = sol.init.v * sol.init.v.adjoint();
  if (ch.t_aes() > 0) s.u_bank = receive_bank_cov(ch, tx_covariance(s.w, s.r_v), streams, cfg);
  sol.trace.push_back(make_row(0, ch, s, cfg));
  sol.status = "max_iter";

  double prev = sol.trace.back().objective;
  for (int it = 1; it <= opts.max_iter; ++it) {
    s.iteration = it;
    s.nu = update_nu(s, ch, cfg.noise_comm);
    s.beta = update_beta(s, ch, cfg.noise_comm);
    const conic::ConicProblem prob = build_subproblem(s, ch, cfg, opts);

    conic::SolverOptions so;
    so.tol = opts.solver_tol;
    so.max_iter = opts.solver_max_iter;
    so.warm_start = conic::Point{stack_columns(s.w), s.r_v};
    const conic::ConicSolution res = conic::solve(prob, so);
    if (res.status == conic::Status::Infeasible) {
      sol.status = sol.init.feasible ? "solver_infeasible" : "infeasible_init";
      break;
    }
    if (res.status == conic::Status::MaxIter && res.kkt.primal > 1e-6) {
      sol.status = "solver_failed";
      break;
    }

    CMat w_new = unstack_columns(res.values.w, m, k_users);
    CMat r_new = has_r ? linalg::herm(res.values.x) : CMat();
    if (opts.extrapolate) extrapolate_step(ch, cfg, opts, s.w, s.r_v, w_new, r_new);
    s.w = w_new;
    s.r_v = r_new;
    if (ch.t_aes() > 0) s.u_bank = receive_bank_cov(ch, tx_covariance(s.w, s.r_v), streams, cfg);
    if (opts.reallocate && reallocate_power(ch, cfg, opts, s.u_bank, s.w, s.r_v) && ch.t_aes() > 0) {
      s.u_bank = receive_bank_cov(ch, tx_covariance(s.w, s.r_v), streams, cfg);
    }

    sol.trace.push_back(make_row(it, ch, s, cfg));
    const double f = sol.trace.back().objective;
    s.objective_trace.push_back(f);
    const bool comparable = it > 1 || sol.init.feasible;
    if (comparable && std::abs(f - prev) <= opts.rel_tol * std::max(std::abs(prev), 1e-12)) {
      sol.converged = true;
      sol.status = "optimal";
      prev = f;
      break;
    }
    prev = f;
  }

  if (has_r) {
    if (opts.reduce_rank && s.nu.size() > 0) {
      sol.reduction = rank_reduce(s.r_v, ch, cfg, s, opts);
      s.r_v = sol.reduction.r;
    } else {
      const int r = linalg::numeric_rank(s.r_v, 1e-6);
      sol.reduction = RankReduction{s.r_v, r, r, true};
    }
    sol.extraction = extract_beams(s.r_v, cfg.n_s);
    sol.v = sol.extraction.v;
  } else {
    sol.v = CMat::Zero(m, 0);
  }
  return sol;
}

}  // namespace

DigitalSolution run_digital(const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalOptions& opts) {
  const double p = cfg.power_budget;
  ScenarioConfig unit = cfg;
  unit.power_budget = 1.0;
  unit.noise_comm /= p;
  unit.noise_eav /= p;
  unit.noise_sense /= p;
  DigitalSolution sol = run_unit_power(ch, unit, opts);

  const double amp = std::sqrt(p);
  DigitalState& s = sol.state;
  s.w *= amp;
  if (s.r_v.size() > 0) s.r_v *= p;
  s.beta /= amp;  // beta scales inversely with the beam amplitude
  sol.v *= amp;
  sol.init.w *= amp;
  sol.init.v *= amp;
  sol.reduction.r *= p;
  sol.extraction.v *= amp;
  for (auto& row : sol.trace) row.power_used *= p;
  sol.beams = BeamformerPair{s.w, sol.v};
  sol.metrics = evaluate_design(ch, s.w, sol.v * sol.v.adjoint(), cfg);
  return sol;
}

int worst_case_bound(int t_aes) {
  int r = 0;
  while ((r + 1) * (r + 1) <= 2 * t_aes + 1) ++r;
  return r;
}

RankReduction rank_reduce(const CMat& r_v, const ChannelSet& ch, const ScenarioConfig& cfg, const DigitalState& s,
                          const DigitalOptions& opts) {
  RankReduction out;
  out.r = r_v;
  if (r_v.size() == 0) return out;
  const double tr = trace_re(r_v);
  out.rank_before = linalg::numeric_rank(r_v, 1e-6);
  out.rank_after = out.rank_before;
  if (tr <= 0.0) return out;

  std::vector<CMat> rows;
  for (int t = 0; t < ch.t_aes(); ++t) {
    if (opts.enforce_ae) rows.push_back(ch.h_aes[t] * ch.h_aes[t].adjoint());
    if (opts.enforce_scnr && t < static_cast<int>(s.u_bank.u.size())) {
      const auto a = scnr_matrices(ch, s.u_bank.u[t], t);
      rows.push_back(a.a_target - cfg.gamma_r * a.a_clutter);
    }
  }
  rows.push_back(CMat::Identity(r_v.rows(), r_v.cols()));
  const CMat weight = s.beta.size() > 0 ? weighted_user_gram(s.beta, ch) : CMat(CMat::Zero(r_v.rows(), r_v.cols()));

  // R = Q Q^H with the numerically nonzero eigenpairs.
  const auto eig = linalg::eig_desc(linalg::herm(r_v));
  int keep = 0;
  while (keep < eig.values.size() && eig.values(keep) > 1e-13 * tr) ++keep;
  CMat q(r_v.rows(), keep);
  for (int i = 0; i < keep; ++i) q.col(i) = eig.vectors.col(i) * std::sqrt(eig.values(i));

  const Eigen::Index n_rows = static_cast<Eigen::Index>(rows.size());
  while (q.cols() > 1) {
    const Eigen::Index r = q.cols();
    if (r * r <= n_rows) break;
    RMat sys(n_rows, r * r);
    for (Eigen::Index i = 0; i < n_rows; ++i) sys.row(i) = herm_coords(q.adjoint() * rows[i] * q).transpose();
    Eigen::JacobiSVD<RMat> svd(sys, Eigen::ComputeFullV);
    const RVec null_dir = svd.matrixV().col(r * r - 1);
    const CMat delta = herm_from_coords(null_dir, r);
    const double slope = (q.adjoint() * weight * q * delta).trace().real();
    const auto de = linalg::eig_desc(delta);
    const double lam_max = de.values(0);
    const double lam_min = de.values(r - 1);
    double step;
    if (slope >= 0.0 && lam_max > 1e-12) {
      step = 1.0 / lam_max;
    } else if (slope <= 0.0 && lam_min < -1e-12) {
      step = 1.0 / lam_min;
    } else {
      out.ok = false;
      break;
    }
    const CMat shrink = linalg::herm(CMat::Identity(r, r) - step * delta);
    const auto se = linalg::eig_desc(shrink);
    const double top = std::max(se.values(0), 0.0);
    int next = 0;
    while (next < r && se.values(next) > 1e-12 * top) ++next;
    CMat q_next(q.rows(), next);
    for (int i = 0; i < next; ++i) q_next.col(i) = q * se.vectors.col(i) * std::sqrt(se.values(i));
    q = q_next;
  }

  out.r = linalg::herm(q * q.adjoint());
  out.rank_after = linalg::numeric_rank(out.r, 1e-6);
  if (static_cast<Eigen::Index>(out.rank_after) * out.rank_after > n_rows) out.ok = false;
  return out;
}

ExtractedBeams extract_beams(const CMat& r_v, int n_s) {
  ExtractedBeams out;
  const Eigen::Index m = r_v.rows();
  out.v = CMat::Zero(m, n_s);
  const double tr = trace_re(r_v);
  if (m == 0 || tr <= 0.0) return out;
  const auto eig = linalg::eig_desc(linalg::herm(r_v));
  out.rank = linalg::numeric_rank(r_v, 1e-6);
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(n_s, m); ++i) {
    if (eig.values(i) > 1e-12 * tr) out.v.col(i) = eig.vectors.col(i) * std::sqrt(eig.values(i));
  }
  out.lossy = n_s < out.rank;
  out.error = (out.v * out.v.adjoint() - r_v).norm() / tr;
  return out;
}

void write_trace_csv(const std::vector<TraceRow>& rows, std::ostream& os) {
  os << "iteration,objective,secrecy_rate,max_ae_sinr_db,min_scnr_db,power_used\n";
  os << std::setprecision(12);
  for (const auto& r : rows) {
    os << r.iteration << ',' << r.objective << ',' << r.secrecy_rate << ',' << r.max_ae_sinr_db << ','
       << r.min_scnr_db << ',' << r.power_used << '\n';
  }
}

}  // namespace isac
