#include "cli/commands.hpp"

int main(int argc, char** argv) { return volinfo::cli::run(argc, argv); }
