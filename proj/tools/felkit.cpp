#include "felkit/cli.hpp"

int main(int argc, char** argv) { return felkit::cli::main_entry(argc, argv); }
