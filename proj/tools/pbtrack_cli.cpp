#include "pbtrack/cli.hpp"

int main(int argc, char** argv) { return pbtrack::run_command(argc, argv); }
