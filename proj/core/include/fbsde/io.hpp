#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "fbsde/solver.hpp"

namespace fbsde {

// Full round-trip precision formatting used by every CSV writer.
std::string format_full(double v);

// Cross-path means and standard errors per grid time:
// t, mean_X*, mean_Y*, mean_Z*, stderr_X*, stderr_Y*, stderr_Z*.
// Z columns are empty on the terminal row (Z is an integrand on [0,T)).
void write_solution_csv(const SolutionEstimate& est, std::ostream& os);
void write_solution_csv(const SolutionEstimate& est, const std::string& filename);

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const std::string& filename);

// Writes via a temporary file in the same directory, then renames.
void write_text_atomic(const std::string& filename, const std::string& content);

}  // namespace fbsde
