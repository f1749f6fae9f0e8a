#include "opgd/cli.hpp"

int main(int argc, char** argv) { return opgd::cli::main(argc, argv); }
