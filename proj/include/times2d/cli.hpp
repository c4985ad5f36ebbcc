#pragma once

namespace times2d::cli {

/// Entry point for the command-line tool. Exit codes: 0 success,
/// 2 configuration error, 3 data error, 4 training divergence,
/// 5 incompatible checkpoint, 1 anything else.
int run(int argc, char** argv);

} // namespace times2d::cli
