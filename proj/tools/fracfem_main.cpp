#include "fracfem/cli.hpp"

int main(int argc, char** argv) { return fracfem::cli_main(argc, argv); }
