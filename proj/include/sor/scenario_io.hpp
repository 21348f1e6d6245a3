#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "sor/simulate.hpp"

namespace sor {

// Configuration or validation problem; the message carries the offending
// JSON key path.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Strict parse of a scenario file: unknown keys are rejected, agent names
// must be registered builtins, and cross-field invariants are checked.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<string>");

// One row per grid point: t, sigma, then per agent y_i, e_i, w_i_1..w_i_s
// (plus zerr_i = ||z_i - x_i|| in output feedback), then the leader w0
// columns in leader mode. Cells are printed with 17 significant digits.
void write_csv(const SimResult& r, const std::string& path);

// Exit codes: 0 success, 1 validation failure, 2 runtime divergence.
int run_cli(int argc, const char* const* argv);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace sor
