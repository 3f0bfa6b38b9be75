#include <iostream>

#include "rts/commands.hpp"

int main(int argc, char** argv) { return rts::run_cli(argc, argv, std::cout, std::cerr); }
