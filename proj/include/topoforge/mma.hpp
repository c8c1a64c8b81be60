#pragma once

#include <vector>

namespace topoforge {

/// One linearization point of  min f0(x)  s.t.  g_i(x) <= 0,  x_min <= x <= x_max.
struct MmaProblem {
  std::vector<double> x;
  std::vector<double> x_min;
  std::vector<double> x_max;
  double f0 = 0.0;
  std::vector<double> df0;
  std::vector<double> g;                 ///< constraint values
  std::vector<std::vector<double>> dg;   ///< one gradient per constraint
};

struct MmaSettings {
  double move = 0.2;          ///< step bound as a fraction of x_max - x_min
  double asy_init = 0.5;
  double asy_incr = 1.2;
  double asy_decr = 0.7;
  double asy_min = 0.01;      ///< closest asymptote distance, fraction of x_max - x_min
  double asy_max = 10.0;      ///< farthest asymptote distance
  double albefa = 0.1;
  double raa0 = 1e-5;
  double kkt_tol = 1e-9;
  double a0 = 1.0;
  double c = 1000.0;          ///< penalty on the elastic constraint variables y_i
  double d = 1.0;
};

/// Asymptotes and iterate history carried between steps.
struct MmaState {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> x_old1;
  std::vector<double> x_old2;
  int iter = 0;
  double kkt_residual = 0.0;  ///< max-norm KKT residual of the last subproblem
  int subproblem_iterations = 0;
};

/// Method of moving asymptotes (Svanberg 1987, primal-dual subproblem solver of the 2007 notes).
/// Variables with x_min == x_max are held fixed. Returns the new iterate and updates `state`.
std::vector<double> mma_step(const MmaProblem& problem, MmaState& state, const MmaSettings& settings = {});

}  // namespace topoforge
