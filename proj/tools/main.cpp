#include "cli.hpp"

int main(int argc, char** argv) { return swgauge::cli::main_entry(argc, argv); }
