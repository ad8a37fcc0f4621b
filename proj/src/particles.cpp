#include "swarmkin/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "swarmkin/potentials.hpp"

namespace swarmkin {

std::vector<Vec2> pairwise_force(const ParticleEnsemble& e, const ModelParams& p) {
  const std::size_t n = e.size();
  std::vector<Vec2> g(n);
  if (n < 2) return g;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double ka = p.c_a / p.l_a, kr = p.c_r / p.l_r;
  const double ia = 1.0 / p.l_a, ir = 1.0 / p.l_r;

  // Each pair is evaluated once and applied to both ends with opposite signs.
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::vector<std::vector<Vec2>> partial(threads, std::vector<Vec2>(n));
#pragma omp parallel num_threads(threads)
  {
    int tid = 0;
#ifdef _OPENMP
    tid = omp_get_thread_num();
#endif
    auto& acc = partial[tid];
#pragma omp for schedule(static, 16)
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 xi = e.x[i];
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = xi.x - e.x[j].x, dy = xi.y - e.x[j].y;
        const double r = std::sqrt(dx * dx + dy * dy);
        if (r == 0.0) continue;
        const double s = (ka * std::exp(-r * ia) - kr * std::exp(-r * ir)) / r;
        gx += s * dx;
        gy += s * dy;
        acc[j].x -= s * dx;
        acc[j].y -= s * dy;
      }
      acc[i].x += gx;
      acc[i].y += gy;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 s;
    for (int t = 0; t < threads; ++t) s += partial[t][i];
    g[i] = s * inv_n;
  }
  return g;
}

void em_step(ParticleEnsemble& e, double tau, const ModelParams& p, std::mt19937_64& rng) {
  const std::vector<Vec2> g = pairwise_force(e, p);
  const double sq = p.noise_a * std::sqrt(tau);
  const double damp = 0.5 * p.noise_a * p.noise_a;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const Vec2 v = e.v[i];
    const Vec2 vp = v.perp();
    const Vec2 phi = roosting_grad(e.x[i], p);
    const Vec2 a = v * (p.alpha - p.beta * v.norm2() - damp) - g[i] - vp * phi.dot(vp);
    Vec2 noise;
    if (p.noise_a != 0.0) {
      noise.x = normal(rng);
      noise.y = normal(rng);
    }
    e.x[i] += v * tau;
    e.v[i] = v + a * tau + noise * sq;
  }
}

void run_particles(ParticleEnsemble& e, double tau, double t_max, const ModelParams& p,
                   std::uint64_t seed,
                   const std::function<void(long, double, const ParticleEnsemble&)>& progress) {
  if (!(tau > 0.0)) throw ConfigError("run_particles: tau must be positive");
  std::mt19937_64 rng(seed);
  double t = 0.0;
  long step = 0;
  while (t < t_max) {
    const double dt = std::min(tau, t_max - t);
    em_step(e, dt, p, rng);
    t = (t + dt >= t_max - 1e-12 * t_max) ? t_max : t + dt;
    ++step;
    if (progress) progress(step, t, e);
  }
}

ParticleEnsemble sample_ensemble(int n, InitialCondition ic, const ModelParams& p,
                                 std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_ensemble: need at least one particle");
  if (ic == InitialCondition::large_a)
    throw ConfigError("sample_ensemble: the large_a start is defined for kinetic runs only");
  ParticleEnsemble e;
  e.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double c = p.cruise_speed();
  for (int i = 0; i < n; ++i) {
    Vec2 x;
    do {
      x = {29.0 * unit(rng), 29.0 * unit(rng)};
    } while (x.norm() < 12.0 || x.norm() > 29.0);
    Vec2 v;
    if (ic == InitialCondition::double_mill) {
      do {
        v = {1.6 * unit(rng), 1.6 * unit(rng)};
      } while (v.norm() > 1.6);
    } else {
      const Vec2 t = x.perp() * (1.0 / x.norm());
      const double vmax = c + 0.5;
      while (true) {
        v = {vmax * unit(rng), vmax * unit(rng)};
        const double s = v.norm();
        if (s < c - 0.5 || s > c + 0.5 || s == 0.0) continue;
        if ((v * (1.0 / s) - t).norm() <= 0.15) break;
      }
    }
    e.x.push_back(x);
    e.v.push_back(v);
  }
  return e;
}

Histogram histogram_4d(const ParticleEnsemble& e, const PhaseGrid& grid) {
  Histogram h{DistributionField(grid), 0, 0.0};
  auto node = [](const Axis& a, double x, bool& out) {
    const double pos = (x - a.lo) / a.spacing();
    // Nodes own [x_i - h/2, x_i + h/2).
    const long i = std::lround(std::floor(pos + 0.5));
    if (i < 0 || i >= a.n) out = true;
    return static_cast<int>(std::clamp<long>(i, 0, a.n - 1));
  };
  auto cell = [](const Axis& a, double x, bool& out) {
    const double pos = (x - a.lo) / a.spacing();
    const long i = static_cast<long>(std::floor(pos));
    if (i < 0 || i >= a.n) out = true;
    return static_cast<int>(std::clamp<long>(i, 0, a.n - 1));
  };
  const double w = 1.0 / (static_cast<double>(e.size()) * grid.cell_volume());
  for (std::size_t p = 0; p < e.size(); ++p) {
    bool out = false;
    const int i = node(grid.x, e.x[p].x, out);
    const int j = node(grid.y, e.x[p].y, out);
    const int k = cell(grid.u, e.v[p].x, out);
    const int l = cell(grid.w, e.v[p].y, out);
    h.f.at(i, j, k, l) += w;
    if (out) ++h.out_of_range;
  }
  h.out_of_range_fraction = e.size() ? double(h.out_of_range) / double(e.size()) : 0.0;
  return h;
}

ParticleEnsemble subsample(const ParticleEnsemble& e, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(e.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(n, idx.size()));
  std::sort(idx.begin(), idx.end());
  ParticleEnsemble out;
  out.seed = seed;
  for (auto i : idx) {
    out.x.push_back(e.x[i]);
    out.v.push_back(e.v[i]);
  }
  return out;
}

}  // namespace swarmkin
