#include "gocart/cli.hpp"

int main(int argc, char** argv) { return gocart::cli::run(argc, argv); }
