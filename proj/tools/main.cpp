#include "run.hpp"

int main(int argc, char** argv) { return keyatm::cli::main(argc, argv); }
