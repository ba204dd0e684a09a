#include "sparsecombine/cli.hpp"

int main(int argc, char** argv) { return sparsecombine::cli::run(argc, argv); }
