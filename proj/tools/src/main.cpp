#include "cli.hpp"

int main(int argc, char **argv) { return mcast::cli::run(argc, argv); }
