#include "zoo/cli.hpp"

int main(int argc, char** argv) { return zoo::cli::cli(argc, argv); }
