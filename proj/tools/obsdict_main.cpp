#include <iostream>

#include "obsdict/cli.hpp"

int main(int argc, char** argv) {
  return obsdict::cli::dispatch(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
