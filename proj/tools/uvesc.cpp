#include "uvesc/commands.hpp"

int main(int argc, char** argv) { return uvesc::run_cli(argc, argv); }
