#include "ponsim/cli.hpp"

int main(int argc, char** argv) { return ponsim::run_cli(argc, argv); }
