#include "cli.hpp"

int main(int argc, char** argv) { return wnf::cli::run(argc, argv); }
