#include <string>
#include <vector>

#include "covert_kalman/cli.hpp"

int main(int argc, char** argv) {
  return covert_kalman::execute(std::vector<std::string>(argv, argv + argc));
}
