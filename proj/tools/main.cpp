#include "mdpm/cli.hpp"

int main(int argc, char** argv) { return mdpm::run_cli(argc, argv); }
