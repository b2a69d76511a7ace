#include "miaudit/cli.hpp"

int main(int argc, char** argv) { return miaudit::run_cli(argc, argv); }
