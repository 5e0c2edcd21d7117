#include "hbnet/cli.hpp"

int main(int argc, char** argv) { return hbnet::cli::run(argc, argv); }
