#include "linresp/cli.hpp"

int main(int argc, char** argv) { return linresp::run_cli(argc, argv); }
