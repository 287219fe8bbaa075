#include "tsxai/cli.hpp"

int main(int argc, char** argv) { return tsxai::cli::main(argc, argv); }
