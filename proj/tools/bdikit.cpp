#include "bdikit/cli.hpp"

int main(int argc, char** argv) { return bdikit::cli::run(argc, argv); }
