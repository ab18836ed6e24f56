#include "hrom/cli.hpp"

int main(int argc, char** argv) { return hrom::run(argc, argv); }
