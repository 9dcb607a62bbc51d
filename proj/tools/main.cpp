#include <iostream>

#include "app.hpp"

int main(int argc, char** argv) { return boxrec::cli::run(argc, argv, std::cout, std::cerr); }
