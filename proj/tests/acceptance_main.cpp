#include <cstdlib>
#include <fstream>
#include <sstream>
#include <iostream>
#include <string>
#include <vector>

#include "hierspin/acceptance.hpp"

// one line per criterion; nonzero exit only when the suite cannot run
int main(int argc, char** argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::stoi(argv[i]));
    try {
        const auto results = hierspin::run_acceptance(which, 12345, &std::cout);
        int passed = 0;
        std::ofstream table("acceptance_results.txt");
        for (const auto& r : results) {
            passed += r.pass ? 1 : 0;
            table << hierspin::format_result(r) << '\n';
        }
        table << passed << "/" << results.size() << " criteria passed\n";
        std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
    } catch (const std::exception& e) {
        std::cerr << "acceptance suite error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
