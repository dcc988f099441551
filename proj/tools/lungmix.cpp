#include <string>
#include <vector>

#include "lungmix/cli.hpp"

int main(int argc, char** argv) {
  return lungmix::cli::run(std::vector<std::string>(argv, argv + argc));
}
