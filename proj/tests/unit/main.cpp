#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "times2d/tensor.hpp"

int main(int argc, char** argv) {
    times2d::set_debug_checks(true);
    doctest::Context ctx;
    ctx.applyCommandLine(argc, argv);
    return ctx.run();
}
