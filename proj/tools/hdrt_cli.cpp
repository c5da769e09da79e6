#include "hdrt/cli.hpp"

int main(int argc, char** argv) { return hdrt::cli::run(argc, argv); }
