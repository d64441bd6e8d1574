// Minimal library use: one shape Newton run for f(x) = |x|^2 - 1 from an
// off-centre ellipse, printing per-step diagnostics.

#include <cstdio>

#include "wnf/experiments.hpp"
#include "wnf/newton.hpp"

int main() {
  wnf::NewtonConfig cfg;
  cfg.kernel = wnf::Kernel(4, 0.7);
  cfg.n = 64;
  cfg.max_steps = 5;

  const wnf::NewtonRun run = wnf::run(wnf::unit_disc_integrand(), wnf::newton_start_curve(), cfg);
  std::printf("step  ||g||_H        J(Omega)\n");
  for (const auto& r : run.records) std::printf("%4d  %.6e  %.12f\n", r.step, r.g_norm, r.objective);
  if (run.abort_reason) std::printf("aborted: %s\n", run.abort_reason->c_str());
  std::printf("max | |x| - 1 | on the final curve: %.3e\n", wnf::radial_deviation(run.final_curve()));
  return run.abort_reason ? 1 : 0;
}
