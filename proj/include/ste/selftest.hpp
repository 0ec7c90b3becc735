#pragma once

#include <string>
#include <vector>

namespace ste {

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Built-in consistency checks runnable from any environment (no files):
/// the cross-product field oracle, the noiseless end-to-end round trips,
/// and the phase-compensation sign regression.
std::vector<SelftestCheck> run_selftest();

}  // namespace ste
