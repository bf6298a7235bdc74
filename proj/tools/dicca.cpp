#include "dicca/cli.hpp"

int main(int argc, char** argv) { return dicca::cli::run(argc, argv); }
