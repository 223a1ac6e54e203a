#include "radarpc/cli.hpp"

int main(int argc, char** argv) { return radarpc::cli::main(argc, argv); }
