#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "transportlab/dataset.hpp"
#include "transportlab/spec.hpp"

namespace transportlab {

/// n i.i.d. rows drawn in topological order; every variate is a pure function
/// of (seed, node, row index), so identical inputs give bit-identical output
/// regardless of thread count. With masking, z/a/y are NA exactly when s=0.
Dataset sample_observational(const ScenarioSpec& spec, std::size_t n, bool mask_nonparticipants,
                             std::uint64_t seed, int jobs = 1);

/// Mutilated-model draws sharing exogenous noise with sample_observational:
/// the intervened nodes become constants, everything downstream re-evaluates.
Dataset sample_interventional(const ScenarioSpec& spec, const RegimeSpec& regime, std::size_t n,
                              std::uint64_t seed, int jobs = 1);

/// Separate fixed-size participant / non-participant strata (samples obtained
/// independently rather than as one cohort). Rows appear in virtual-draw
/// order; each stratum's conditional law matches the observational one.
Dataset sample_non_nested(const ScenarioSpec& spec, std::size_t n_participants,
                          std::size_t n_nonparticipants, bool mask_nonparticipants,
                          std::uint64_t seed);

struct ConsistencyReport {
  std::size_t rows = 0;
  std::size_t violations = 0;
  std::string first_counterexample;  // empty when pass

  bool pass() const { return violations == 0; }
};

/// Row-level consistency under common random numbers: on rows with S=1 the
/// do(S=1) assignment equals the observed Z, and on rows with S=1,Z=z the
/// do(S=1,Z=z) treatment and outcome equal the observed A and Y. Under the
/// deterministic-copy scenario additionally checks A=z in every do(Z=z) world.
/// Passing a distinct counterfactual_seed breaks the coupling on purpose
/// (negative control): the report then carries the first counterexample.
ConsistencyReport consistency_check(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed,
                                    std::optional<std::uint64_t> counterfactual_seed = {});

}  // namespace transportlab
