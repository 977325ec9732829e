#include "qsparse/cli.hpp"

int main(int argc, char** argv) { return qsparse::cli::run(argc, argv); }
