#include "peakdp/cli.hpp"

int main(int argc, char** argv) { return peakdp::cli::run(argc, argv); }
