#include "phbvm/cli.hpp"

int main(int argc, char** argv) { return phbvm::run_cli(argc, argv); }
