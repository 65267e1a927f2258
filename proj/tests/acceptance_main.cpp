// Full-scale validation suite: every criterion at its pinned tolerance, one
// line per criterion. Exits nonzero if any criterion fails.
//
// Usage: sfl_acceptance [--quick] [--suite <consistency|clt|block|all>]

#include <cstring>
#include <iostream>
#include <string>

#include "sfl/verify.hpp"

int main(int argc, char** argv) {
    bool quick = false;
    std::string suite = "all";
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0)
            quick = true;
        else if (std::strcmp(argv[i], "--suite") == 0 && i + 1 < argc)
            suite = argv[++i];
        else {
            std::cerr << "usage: sfl_acceptance [--quick] [--suite <name>]\n";
            return 2;
        }
    }

    bool all_passed = true;
    try {
        for (int id : sfl::suite_criteria(suite)) {
            const sfl::CriterionResult r = sfl::run_criterion(id, quick);
            std::cout << "criterion " << r.id << " [" << r.name << "]: "
                      << (r.passed ? "PASS" : "FAIL") << " - " << r.detail << std::endl;
            all_passed = all_passed && r.passed;
        }
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 2;
    }
    std::cout << (all_passed ? "acceptance suite passed" : "acceptance suite FAILED")
              << (quick ? " (quick mode)" : "") << std::endl;
    return all_passed ? 0 : 1;
}
