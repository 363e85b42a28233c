#include <acs/cli.hpp>

int main(int argc, char** argv) {
  return acs::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
