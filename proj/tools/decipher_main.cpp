#include "decipher/cli.hpp"

int main(int argc, char** argv) { return decipher::run_cli(argc, argv); }
