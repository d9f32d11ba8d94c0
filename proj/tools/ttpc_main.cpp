#include "ttpc/cli.hpp"

int main(int argc, char** argv) { return ttpc::cli::run(argc, argv); }
