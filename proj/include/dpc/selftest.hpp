// Randomised structural properties of the codec, runnable from the CLI.

#pragma once

#include <cstdint>
#include <iosfwd>

namespace dpc {

/// Prints one PASS/FAIL line per property; true when all pass.
bool run_property_suite(std::ostream& out, std::uint64_t seed = 1);

} // namespace dpc
