#include "lung/cli.hpp"

int main(int argc, char** argv) { return lung::cli::run(argc, argv); }
