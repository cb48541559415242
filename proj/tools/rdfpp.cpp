#include "rdfpp/cli.hpp"

int main(int argc, char** argv) { return rdfpp::cli::main(argc, argv); }
