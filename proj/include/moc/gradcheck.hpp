#pragma once

#include <cstdint>
#include <functional>

#include "moc/meta_learner.hpp"

namespace moc {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t instances = 0;
    std::size_t parameters_checked = 0;
    std::size_t rejected = 0; ///< instances skipped for sitting near a ReLU kink or a top-K tie
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
/// Central differences of an O(1) loss carry ~1e-11 of round-off at step 1e-5, so entries
/// smaller than the floor are effectively held to an absolute tolerance of floor * 1e-5.
double relative_error(double analytic, double numeric, double floor = 1e-5);

/// Central differences of `loss` with respect to every meta-learner parameter.
MetaParameters numeric_gradient(MetaLearner& meta, const std::function<double(const MetaLearner&)>& loss,
                                double step = 1e-5);

/// Meta-learner alone: loss = <g, mix_scores(M(u), tables)> for random u, tables, g.
GradCheckResult check_meta_gradients(std::uint64_t seed, std::size_t instances);

/// Full slide path: cross-entropy of top-K pooled mixed logits over a nominated bag.
GradCheckResult check_end_to_end_gradients(std::uint64_t seed, std::size_t instances);

} // namespace moc
