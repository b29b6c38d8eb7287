#pragma once

#include "slipfsi/drivers.hpp"
#include "slipfsi/output.hpp"
#include "slipfsi/transport.hpp"

#include <cstdint>
#include <vector>

namespace slipfsi {

/// Test functions q(|y|) p(y) (1 + t / 2): q a shell bump vanishing to fourth
/// order at |y| = a and |y| = R, p a quadratic with normal random coefficients.
std::vector<SpaceTimeTest> random_test_functions(const Config& cfg, int count, std::uint64_t seed);

/// Relative-velocity history of a run with snapshots.
GalerkinRelativeVelocity history_from_snapshots(const Scenario& sc, const RunResult& run);

/// Invariant summary of a run: per-step invariants, final inequality,
/// trilinear identity and mass drift.
Report run_report(const Scenario& sc, const RunResult& run);

/// run_report plus the verification kernels: weak residual against every
/// basis function, renormalized continuity, boundary algebra identities and
/// pressure recovery. Needs a run with snapshots.
Report verification_report(const Scenario& sc, const RunResult& run, std::uint64_t seed);

}  // namespace slipfsi
