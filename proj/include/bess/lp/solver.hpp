#pragma once

#include "bess/lp/interior_point.hpp"
#include "bess/lp/model.hpp"
#include "bess/lp/simplex.hpp"

namespace bess::lp {

enum class Method {
    /// Simplex for small models (exact vertices), interior point otherwise.
    Automatic,
    Simplex,
    InteriorPoint,
};

/// Row count up to which Automatic selects the simplex. The dense basis
/// inverse costs O(rows^2) memory and per-pivot work.
inline constexpr int kSimplexRowLimit = 600;

/// Largest model the simplex may be used on to confirm a non-optimal
/// interior-point status (about 70 MB of basis inverse).
inline constexpr int kStatusCheckRowLimit = 3000;

inline Solution solve(const Model& model, Method method = Method::Automatic,
                      const InteriorPointOptions& ipm_options = {}) {
    if (method == Method::Automatic) {
        method = model.num_rows() <= kSimplexRowLimit ? Method::Simplex : Method::InteriorPoint;
    }
    if (method == Method::Simplex) return solve_simplex(model);
    auto result = solve_interior_point(model, ipm_options);
    if (result.status != Status::Optimal && model.num_rows() <= kStatusCheckRowLimit) {
        // Infeasibility and unboundedness are only detected heuristically by
        // the interior point; the simplex settles the status exactly.
        auto exact = solve_simplex(model);
        exact.iterations += result.iterations;
        return exact;
    }
    return result;
}

} // namespace bess::lp
