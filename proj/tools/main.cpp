#include "rcfusion/cli.hpp"

int main(int argc, char** argv) { return rcfusion::run_cli(argc, argv); }
