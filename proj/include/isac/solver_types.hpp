#pragma once

#include <cstdint>
#include <vector>

#include "isac/multiplier.hpp"

namespace isac {

/// Shared knobs for the alternating-maximization solvers.
struct SolverConfig {
    double tol = 1e-9;        // successive surrogate-objective gap (nats)
    int max_iters = 2000;     // per restart
    int restarts = 4;         // independent starts; best final objective kept
    double jitter = 0.05;     // multiplicative init jitter magnitude
    std::uint64_t seed = 1;
    std::size_t u_size = 0;   // auxiliary cardinality |U|; 0 => |X|
    RootConfig root;
    bool record_trace = true;
    // Optional externally supplied start for restart 0 (flat u-major p(u,x));
    // used by warm-started sweeps. Blended with a small uniform floor so a
    // previous solution's dead cells can revive.
    std::vector<double> init_p;
};

/// Per-iteration record. F_pre is the surrogate after the q-update at the
/// previous p (meaningful from iteration 2 on; NaN in iteration 1 where the
/// arbitrary start is not part of the monotone chain). `bound` is the
/// information upper bound evaluated at the same iterate.
struct TraceEntry {
    int iteration = 0;
    double F_pre = 0.0;
    double F_post = 0.0;
    double distortion = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    double bound = 0.0;
};

struct SolveResult {
    std::vector<double> p_ux;  // row-major (u major), best restart
    std::size_t nu = 0;
    std::size_t nx = 0;
    double rate_nats = 0.0;
    double rate_bits = 0.0;
    double achieved_distortion = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<TraceEntry> trace;  // best restart only
    int feasible_restarts = 0;      // starts whose first iteration had a root
};

}  // namespace isac
