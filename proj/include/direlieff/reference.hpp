#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "direlieff/core.hpp"

namespace direlieff::reference {

/// Classic single-threaded ReliefF over a flat instance list, used as the
/// correctness oracle for the partitioned pipeline.
///
/// Priors and feature ranges are computed here by direct scans. For each
/// supplied sample the k nearest instances of every class are found by an
/// exhaustive scan (same bounded heap, self-exclusion by id and tie rule as
/// the pipeline), and the hit and miss terms are accumulated per sample with
/// the 1/(m*k) scaling folded into each term. Classes absent from the data
/// add nothing, and a sample whose class has prior 1 adds only its hit term.
core::WeightVector relieff_sequential(const core::Schema& schema,
                                      std::span<const core::Instance> instances,
                                      std::span<const core::Instance> samples, std::size_t k,
                                      const core::DiffConfig& cfg);

}  // namespace direlieff::reference
