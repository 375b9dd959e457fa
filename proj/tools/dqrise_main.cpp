#include "dqrise/cli.hpp"

int main(int argc, char** argv) { return dqrise::cli_dispatch(argc, argv); }
