#include "cli.hpp"

int main(int argc, char** argv) { return splitac::cli::main_entry(argc, argv); }
