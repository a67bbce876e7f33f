#include "cli.hpp"

int main(int argc, char** argv) { return probemb::cli::cli_main(argc, argv); }
