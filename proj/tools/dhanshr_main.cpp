#include "dhanshr/cli.hpp"

int main(int argc, char** argv) { return dhanshr::cli::run(argc, argv); }
