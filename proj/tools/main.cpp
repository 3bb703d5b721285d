#include "msgmimc/cli.hpp"

int main(int argc, char** argv) { return msgmimc::cli::main_entry(argc, argv); }
