#include "cli.hpp"

int main(int argc, char** argv) { return rtucker::cli::run(argc, argv); }
