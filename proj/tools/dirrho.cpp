#include "dirrho/cli_io.hpp"

int main(int argc, char** argv) { return dirrho::run_cli(argc, argv); }
