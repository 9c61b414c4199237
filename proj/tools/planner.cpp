#include "uavplan/cli_io.hpp"

int main(int argc, char** argv) { return uavplan::cli_main(argc, argv); }
