#include "paced/cli.hpp"

int main(int argc, char** argv) { return paced::cli_main(argc, argv); }
