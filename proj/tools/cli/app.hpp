#pragma once

namespace plcguard::cli {

/// Parses the command line, runs one subcommand and writes its manifest.
int run_cli(int argc, char** argv);

}  // namespace plcguard::cli
