#include "lrpr/cli.hpp"

int main(int argc, char** argv) { return lrpr::cli_main(argc, argv); }
