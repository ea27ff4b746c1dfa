// Two random Slater states of 2 particles on 4 points: overlap bounds, the
// exact W1 distance, and the laws of the induced point processes.
#include <cstdio>

#include "fermiflow/bounds.hpp"
#include "fermiflow/w1_exact.hpp"

int main() {
  using namespace fermiflow;
  const GroundSpace space = GroundSpace::uniform(4);
  const OrthonormalFamily a = random_orthonormal(space, 2, 2024, 0);
  const OrthonormalFamily b = random_orthonormal(space, 2, 2024, 1);

  const SlaterBoundsReport r = slater_bounds_report(a, b);
  std::printf("trace distance      %.6f\n", r.trace_distance);
  std::printf("W1 upper bound      %.6f\n", r.w1_upper);
  std::printf("n * trace distance  %.6f\n", r.n_times_trace);

  const W1Certificate c = w1_exact(full_state_vector(a), full_state_vector(b));
  std::printf("W1 (solver)         %.6f  certified gap %.2e after %ld iterations\n", c.value,
              c.gap, c.iterations);

  const auto p = brute_force_configuration_distribution(a).probs;
  const auto q = brute_force_configuration_distribution(b).probs;
  std::printf("TV of point laws    %.6f  <= %.6f\n", total_variation(p, q),
              tv_bound_projection(overlap_matrix(a, b)));
  std::printf("W# of point laws    %.6f  <= %.6f\n", wsharp_distance(p, q),
              wsharp_bound_projection(overlap_matrix(a, b)));
  return 0;
}
