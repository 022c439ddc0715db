#include "nsm/cli.hpp"

int main(int argc, char** argv) { return nsm::run_cli(argc, argv); }
