#include "nanomvg/cli.hpp"

int main(int argc, char** argv) { return nanomvg::cli_main(argc, argv); }
