#include "spes/cli.hpp"

int main(int argc, char** argv) { return spes::cli::run(argc, argv); }
