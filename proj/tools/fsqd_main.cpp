#include "fsqd/cli_app.hpp"

int main(int argc, char** argv) { return fsqd::run_cli(argc, argv); }
