#include "rotwind/cli.hpp"

int main(int argc, char** argv) { return rotwind::cli_main(argc, argv); }
