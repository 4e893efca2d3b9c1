#pragma once

#include <iostream>

namespace cellfree {

// Runs the release acceptance checks, printing one PASS/FAIL line per
// criterion. Returns the number of failed criteria. skip_slow drops the two
// long-running criteria (the large-drop SNR benchmark and the scheme-ordering
// reproduction) for a quick smoke run.
int run_acceptance(std::ostream& out, bool skip_slow = false);

}  // namespace cellfree
