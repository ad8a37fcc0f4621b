#pragma once

// Microscopic system: N self-propelled particles with Morse interactions,
// optional roosting and white noise, integrated with Euler-Maruyama.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "swarmkin/core.hpp"

namespace swarmkin {

struct ParticleEnsemble {
  std::vector<Vec2> x;
  std::vector<Vec2> v;
  std::uint64_t seed = 0;

  std::size_t size() const { return x.size(); }
};

/// G_i = (1/N) sum_{j != i} grad U(x_i - x_j). The interaction acceleration
/// of particle i is -G_i.
std::vector<Vec2> pairwise_force(const ParticleEnsemble& e, const ModelParams& p);

/// One Euler-Maruyama step. Normal draws are taken in particle index order,
/// two per particle (u then w).
void em_step(ParticleEnsemble& e, double tau, const ModelParams& p, std::mt19937_64& rng);

/// Euler-Maruyama steps of length tau up to t_max (the last step is shortened
/// to land on t_max). The noise stream is seeded with `seed`. `progress` is
/// called after every step with the step count and time.
void run_particles(ParticleEnsemble& e, double tau, double t_max, const ModelParams& p,
                   std::uint64_t seed,
                   const std::function<void(long, double, const ParticleEnsemble&)>& progress = {});

/// Positions uniform on the annulus 12 <= |x| <= 29; velocities in the
/// single-mill band or uniform on |v| <= 1.6 (double mill). Rejection sampling.
ParticleEnsemble sample_ensemble(int n, InitialCondition ic, const ModelParams& p,
                                 std::uint64_t seed);

struct Histogram {
  DistributionField f;
  std::size_t out_of_range = 0;
  double out_of_range_fraction = 0.0;
};

/// Counts particles per phase cell (nearest spatial node, containing velocity
/// cell) and normalises to unit mass. Particles outside the grid go to the
/// nearest boundary cell and are counted in out_of_range.
Histogram histogram_4d(const ParticleEnsemble& e, const PhaseGrid& grid);

/// Random subsample of the ensemble, e.g. for plotting.
ParticleEnsemble subsample(const ParticleEnsemble& e, std::size_t n, std::uint64_t seed);

}  // namespace swarmkin
