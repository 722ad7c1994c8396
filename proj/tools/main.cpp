#include "cli/app.hpp"

int main(int argc, char** argv) { return plcguard::cli::run_cli(argc, argv); }
