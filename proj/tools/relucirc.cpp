#include <relucirc/cli.hpp>

int main(int argc, char** argv) { return relucirc::cli::run(argc, argv, std::cout, std::cerr); }
