#include "times2d/cli.hpp"

int main(int argc, char** argv) { return times2d::cli::run(argc, argv); }
