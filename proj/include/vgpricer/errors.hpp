#pragma once

#include <stdexcept>
#include <string>

namespace vgp {

// Query outside the tabulated European curve where no certified tail bound applies.
struct out_of_grid_error : std::runtime_error {
    explicit out_of_grid_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Candidate exercise boundary admits no positive premium, so ln() of it is undefined.
struct infeasible_boundary_error : std::runtime_error {
    explicit infeasible_boundary_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Solved price profile never touches the payoff, or touches it everywhere.
struct no_exercise_region_error : std::runtime_error {
    explicit no_exercise_region_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Too few usable nodes between the boundary and the far end of the fit window.
struct degenerate_window_error : std::runtime_error {
    explicit degenerate_window_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace vgp
