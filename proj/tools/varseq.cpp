#include "varseq/cli.hpp"

int main(int argc, char** argv) { return varseq::cli::main(argc, argv); }
