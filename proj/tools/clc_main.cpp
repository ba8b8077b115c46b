#include "clc/cli.hpp"

int main(int argc, char** argv) {
  return clc::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
