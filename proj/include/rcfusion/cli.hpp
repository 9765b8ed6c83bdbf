#pragma once

namespace rcfusion {

/// Command-line entry point: simulate | calibrate | track | evaluate | plot.
/// Returns 0 on success, 2 on a usage error, 1 on a processing error.
int run_cli(int argc, const char* const* argv);

}  // namespace rcfusion
