#include "gmatch/cli.hpp"

int main(int argc, char** argv) { return gmatch::run_cli(argc, argv); }
