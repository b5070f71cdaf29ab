#include "lapb/cli.hpp"

int main(int argc, char** argv) { return lapb::cli::run(argc, argv); }
