#include "cli.hpp"

int main(int argc, char** argv) { return plnet::cli::main_entry(argc, argv); }
