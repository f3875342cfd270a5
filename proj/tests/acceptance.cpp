// Runs every acceptance criterion and prints one pass/fail line per criterion.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "mfgpi/acceptance.hpp"

int main(int argc, char** argv) {
    mfgpi::AcceptanceOptions opt;
    std::vector<std::string> only;
    for (int k = 1; k < argc; ++k) only.push_back(argv[k]);
    int failed = 0;
    double total = 0.0;
    opt.on_result = [&](const mfgpi::CriterionResult& r) {
        std::printf("%s (%.1f s)\n", mfgpi::result_line(r).c_str(), r.seconds);
        std::fflush(stdout);
        failed += !r.pass();
        total += r.seconds;
    };
    const auto results = mfgpi::run_acceptance(opt, only);
    std::printf("%zu criteria, %d failed, %.1f s\n", results.size(), failed, total);
    return failed ? EXIT_FAILURE : EXIT_SUCCESS;
}
