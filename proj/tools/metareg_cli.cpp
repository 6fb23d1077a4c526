#include "metareg/cli.hpp"

int main(int argc, char** argv) { return metareg::cli::cli_main(argc, argv); }
