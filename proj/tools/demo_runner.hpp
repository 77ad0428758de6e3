#pragma once

#include <cstdint>
#include <string>

namespace ineqgp_cli {

struct DemoOptions {
    std::string outdir = "demo_out";
    std::uint64_t seed = 7;
    bool full = false;  // full-scale protocol instead of desk-scale defaults
};

// Runs one named experiment end to end and writes its CSV tables. Known names:
// bounded-toy, sigmoid, tensor-2d, tensor-5d. Returns a process exit code.
int run_demo(const std::string& name, const DemoOptions& opts);

// One line per known demo, for usage messages.
std::string demo_names();

}  // namespace ineqgp_cli
