#include "realens/cli.hpp"

int main(int argc, char** argv) { return realens::cli_main(argc, argv); }
