#include "swarmkin/fvm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace swarmkin {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int e = row_ptr[r]; e < row_ptr[r + 1]; ++e) s += val[e] * x[col[e]];
    y[r] = s;
  }
}

double CsrMatrix::at(int r, int c) const {
  for (int e = row_ptr[r]; e < row_ptr[r + 1]; ++e)
    if (col[e] == c) return val[e];
  return 0.0;
}

Vec2 drift(Vec2 g, Vec2 phi_grad, Vec2 v, const ModelParams& p) {
  const Vec2 vp = v.perp();
  const double propulsion = p.alpha - p.beta * v.norm2() - 0.5 * p.noise_a * p.noise_a;
  return v * propulsion - g - vp * phi_grad.dot(vp);
}

double van_leer(double theta) {
  if (std::isinf(theta)) return theta > 0.0 ? 2.0 : 0.0;
  const double a = std::abs(theta);
  return (theta + a) / (1.0 + a);
}

double smoothness_ratio(double upwind_jump, double edge_jump, double f_scale) {
  if (std::abs(edge_jump) <= 1e-14 * f_scale) return 1.0;
  return upwind_jump / edge_jump;
}

double edge_value(double f_k, double f_l, double fk_e, double fl_e, double fkl_e, double tau,
                  double h, double theta) {
  const double lw = 0.5 * ((f_k + f_l) - (tau / h) * (fl_e * f_l - fk_e * f_k));
  const double uw = fkl_e > 0.0 ? f_k : f_l;
  const double phi = van_leer(theta);
  return phi * lw + (1.0 - phi) * uw;
}

VelocityStencil::VelocityStencil(const PhaseGrid& grid, const ModelParams& p)
    : nu(grid.nu()), nw(grid.nw()), hu(grid.hu()), hw(grid.hw()) {
  auto own = [&](Vec2 v) { return drift({}, {}, v, p); };
  v_center.resize(std::size_t(nu) * nw);
  pu_center.resize(v_center.size());
  pw_center.resize(v_center.size());
  for (int k = 0; k < nu; ++k)
    for (int l = 0; l < nw; ++l) {
      const Vec2 v = grid.velocity(k, l);
      const Vec2 d = own(v);
      v_center[k * nw + l] = v;
      pu_center[k * nw + l] = d.x;
      pw_center[k * nw + l] = d.y;
    }
  for (int k = 0; k + 1 < nu; ++k)
    for (int l = 0; l < nw; ++l) {
      const Vec2 v{grid.u.lo + (k + 1) * hu, grid.w.point(l)};
      v_edge_u.push_back(v);
      pu_edge.push_back(own(v).x);
    }
  for (int k = 0; k < nu; ++k)
    for (int l = 0; l + 1 < nw; ++l) {
      const Vec2 v{grid.u.point(k), grid.w.lo + (l + 1) * hw};
      v_edge_w.push_back(v);
      pw_edge.push_back(own(v).y);
    }
}

double VelocityStencil::max_edge_drift() const {
  double m = 0.0;
  for (double d : pu_edge) m = std::max(m, std::abs(d));
  for (double d : pw_edge) m = std::max(m, std::abs(d));
  return m;
}

namespace {

// Component of (grad phi . v_perp) v_perp along u (0) or w (1).
inline double roost_component(Vec2 phi_grad, Vec2 v, int axis) {
  const Vec2 vp = v.perp();
  const double s = phi_grad.dot(vp);
  return axis == 0 ? s * vp.x : s * vp.y;
}

// Visits every interior edge with its limited interface coefficients:
// interface value = ca * f[a] + cb * f[b], flux along e = fe * value / h.
template <class Visit>
void for_each_edge(const VelocityStencil& st, std::span<const double> f, Vec2 g, Vec2 phi_grad,
                   double tau, double scale, Visit&& visit) {
  const int nu = st.nu, nw = st.nw;
  const bool roost = phi_grad.x != 0.0 || phi_grad.y != 0.0;
  double f_scale = 0.0;
  for (double v : f) f_scale = std::max(f_scale, std::abs(v));

  auto center = [&](int idx, int axis) {
    double d = axis == 0 ? st.pu_center[idx] - g.x : st.pw_center[idx] - g.y;
    if (roost) d -= roost_component(phi_grad, st.v_center[idx], axis);
    return scale * d;
  };

  auto limited = [&](int a, int b, double fa_e, double fb_e, double fe, double up_jump,
                     double h) {
    const double theta = smoothness_ratio(up_jump, f[b] - f[a], f_scale);
    const double phi = van_leer(theta);
    double ca = phi * 0.5 * (1.0 + tau * fa_e / h);
    double cb = phi * 0.5 * (1.0 - tau * fb_e / h);
    if (fe > 0.0) ca += 1.0 - phi;
    else cb += 1.0 - phi;
    visit(a, b, fe / h, ca, cb);
  };

  // Edges normal to u: (k, l) | (k + 1, l).
  for (int k = 0; k + 1 < nu; ++k)
    for (int l = 0; l < nw; ++l) {
      const int e = k * nw + l;
      const int a = k * nw + l, b = (k + 1) * nw + l;
      double fe = st.pu_edge[e] - g.x;
      if (roost) fe -= roost_component(phi_grad, st.v_edge_u[e], 0);
      fe *= scale;
      double up = 0.0;
      if (fe > 0.0) {
        if (k > 0) up = f[a] - f[a - nw];
      } else if (k + 2 < nu) {
        up = f[b + nw] - f[b];
      }
      limited(a, b, center(a, 0), center(b, 0), fe, up, st.hu);
    }
  // Edges normal to w: (k, l) | (k, l + 1).
  for (int k = 0; k < nu; ++k)
    for (int l = 0; l + 1 < nw; ++l) {
      const int e = k * (nw - 1) + l;
      const int a = k * nw + l, b = a + 1;
      double fe = st.pw_edge[e] - g.y;
      if (roost) fe -= roost_component(phi_grad, st.v_edge_w[e], 1);
      fe *= scale;
      double up = 0.0;
      if (fe > 0.0) {
        if (l > 0) up = f[a] - f[a - 1];
      } else if (l + 2 < nw) {
        up = f[b + 1] - f[b];
      }
      limited(a, b, center(a, 1), center(b, 1), fe, up, st.hw);
    }
}

// Builds CSR from per-row (col, value) lists in ascending column order.
CsrMatrix to_csr(int n, std::vector<std::vector<std::pair<int, double>>>& rows) {
  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.assign(1, 0);
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!m.col.empty() && m.row_ptr.back() < int(m.col.size()) && m.col.back() == r[i].first) {
        m.val.back() += r[i].second;
        continue;
      }
      m.col.push_back(r[i].first);
      m.val.push_back(r[i].second);
    }
    m.row_ptr.push_back(int(m.col.size()));
  }
  return m;
}

}  // namespace

CsrMatrix diffusion_matrix(const PhaseGrid& grid, const ModelParams& params, double scale) {
  const int nu = grid.nu(), nw = grid.nw(), n = nu * nw;
  const double d = scale * 0.5 * params.noise_a * params.noise_a;
  const double cu = d / (grid.hu() * grid.hu()), cw = d / (grid.hw() * grid.hw());
  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.assign(1, 0);
  for (int k = 0; k < nu; ++k)
    for (int l = 0; l < nw; ++l) {
      const int r = k * nw + l;
      double diag = 0.0;
      auto add = [&](int c, double v) {
        m.col.push_back(c);
        m.val.push_back(v);
        diag -= v;
      };
      if (k > 0) add(r - nw, cu);
      if (l > 0) add(r - 1, cw);
      const std::size_t diag_pos = m.col.size();
      m.col.push_back(r);
      m.val.push_back(0.0);
      if (l + 1 < nw) add(r + 1, cw);
      if (k + 1 < nu) add(r + nw, cu);
      m.val[diag_pos] = diag;
      m.row_ptr.push_back(int(m.col.size()));
    }
  return m;
}

CsrMatrix implicit_matrix(const CsrMatrix& a_d, double tau) {
  CsrMatrix m = a_d;
  for (int r = 0; r < m.rows; ++r)
    for (int e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e)
      m.val[e] = (m.col[e] == r ? 1.0 : 0.0) - tau * m.val[e];
  return m;
}

VelocityOperators assemble_operators(std::span<const double> slice, Vec2 x_force, Vec2 phi_grad,
                                     const PhaseGrid& grid, const ModelParams& params,
                                     double tau, double scale) {
  const VelocityStencil st(grid, params);
  const int n = st.nu * st.nw;
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (int r = 0; r < n; ++r) rows[r].push_back({r, 0.0});
  for_each_edge(st, slice, x_force, phi_grad, tau, scale,
                [&](int a, int b, double fe_h, double ca, double cb) {
                  rows[a].push_back({a, fe_h * ca});
                  rows[a].push_back({b, fe_h * cb});
                  rows[b].push_back({a, -fe_h * ca});
                  rows[b].push_back({b, -fe_h * cb});
                });
  return {to_csr(n, rows), diffusion_matrix(grid, params, scale)};
}

CgResult cg_solve(const CsrMatrix& m, std::span<const double> b, std::span<double> x, double tol,
                  int max_iter) {
  const std::size_t n = b.size();
  const double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {};
  }
  thread_local std::vector<double> r, p, q;
  r.resize(n);
  q.resize(n);
  m.multiply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double rr = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
  const double target = tol * bnorm;
  p.assign(r.begin(), r.end());
  int it = 0;
  while (std::sqrt(rr) > target) {
    if (it >= max_iter)
      throw SolverError("cg_solve: no convergence after " + std::to_string(it) +
                        " iterations, relative residual " + std::to_string(std::sqrt(rr) / bnorm));
    m.multiply(p, q);
    const double alpha = rr / std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    const double rr_new = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    ++it;
  }
  return {it, std::sqrt(rr) / bnorm};
}

std::vector<double> cg_solve(const CsrMatrix& m, std::span<const double> b, double tol,
                             int max_iter) {
  std::vector<double> x(b.size(), 0.0);
  cg_solve(m, b, x, tol, max_iter);
  return x;
}

VelocityStepper::VelocityStepper(const PhaseGrid& grid, const ModelParams& params, double scale,
                                 double cg_tol, int cg_max_iter)
    : grid_(grid),
      params_(params),
      scale_(scale),
      cg_tol_(cg_tol),
      cg_max_iter_(cg_max_iter > 0 ? cg_max_iter : 10 * int(grid.velocity_size())),
      diffusion_(scale * 0.5 * params.noise_a * params.noise_a),
      stencil_(grid, params),
      a_d_(diffusion_matrix(grid, params, scale)) {}

void VelocityStepper::prepare(double tau) {
  if (tau == prepared_tau_) return;
  implicit_ = implicit_matrix(a_d_, tau);
  prepared_tau_ = tau;
}

void VelocityStepper::transport_rate(std::span<const double> f, Vec2 x_force, Vec2 phi_grad,
                                     double tau, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for_each_edge(stencil_, f, x_force, phi_grad, tau, scale_,
                [&](int a, int b, double fe_h, double ca, double cb) {
                  const double flux = fe_h * (ca * f[a] + cb * f[b]);
                  out[a] += flux;
                  out[b] -= flux;
                });
}

HalfstepStats VelocityStepper::step(std::span<double> f, Vec2 x_force, Vec2 phi_grad, double tau,
                                    HalfstepWorkspace& ws) const {
  const std::size_t n = f.size();
  ws.rate.resize(n);
  ws.rhs.resize(n);
  transport_rate(f, x_force, phi_grad, tau, ws.rate);
  for (std::size_t i = 0; i < n; ++i) ws.rhs[i] = f[i] - tau * ws.rate[i];
  if (diffusion_ == 0.0) {
    std::copy(ws.rhs.begin(), ws.rhs.end(), f.begin());
    return {};
  }
  if (tau != prepared_tau_) throw SolverError("VelocityStepper: prepare(tau) was not called");
  std::copy(ws.rhs.begin(), ws.rhs.end(), f.begin());
  const CgResult res = cg_solve(implicit_, ws.rhs, f, cg_tol_, cg_max_iter_);
  return {res.iterations};
}

double VelocityStepper::max_velocity_speed(double max_force, double max_phi_grad) const {
  double vmax2 = 0.0;
  for (Vec2 v : stencil_.v_center) vmax2 = std::max(vmax2, v.norm2());
  vmax2 = std::max(vmax2, std::pow(std::max(std::abs(grid_.u.lo), std::abs(grid_.u.hi)), 2) +
                              std::pow(std::max(std::abs(grid_.w.lo), std::abs(grid_.w.hi)), 2));
  return scale_ * (stencil_.max_edge_drift() + max_force + max_phi_grad * vmax2);
}

std::vector<double> velocity_halfstep(std::span<const double> slice, Vec2 x_force, Vec2 phi_grad,
                                      const PhaseGrid& grid, const ModelParams& params,
                                      double tau, double scale, double cg_tol) {
  VelocityStepper stepper(grid, params, scale, cg_tol, 0);
  stepper.prepare(tau);
  HalfstepWorkspace ws;
  std::vector<double> f(slice.begin(), slice.end());
  stepper.step(f, x_force, phi_grad, tau, ws);
  return f;
}

}  // namespace swarmkin
