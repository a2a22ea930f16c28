#include "derisk/cli.hpp"

int main(int argc, char** argv) { return derisk::cli_main(argc, argv); }
