#include "gpc/cli.hpp"

int main(int argc, char** argv) { return gpc::cli_main(argc, argv); }
