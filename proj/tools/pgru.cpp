#include "pgru/cli.hpp"

int main(int argc, char** argv) { return pgru::run_cli(argc, argv); }
