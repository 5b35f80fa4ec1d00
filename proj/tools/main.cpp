#include "hypflow/cli.hpp"

int main(int argc, char** argv) { return hypflow::run_cli(argc, argv); }
