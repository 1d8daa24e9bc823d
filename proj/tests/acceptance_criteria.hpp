#pragma once

#include <string>

namespace perc_acceptance {

// Runs the acceptance criteria (all, or the comma list in `only`), printing
// one PASS/FAIL line per criterion.  Returns the number of failures.
int run_all(const std::string& fixtures_dir, const std::string& cli_path,
            const std::string& only);

}  // namespace perc_acceptance
