#include "cosgraph/cli.hpp"

int main(int argc, char** argv) { return cosgraph::cli::run(argc, argv); }
