#include <iostream>
#include <string>
#include <vector>

#include <glog/logging.h>

#include "cli.h"

int main(int argc, char** argv) {
  FLAGS_logtostderr = true;
  google::InitGoogleLogging(argv[0]);
  const std::vector<std::string> args(argv + 1, argv + argc);
  return netmeter::cli::Run(args, std::cout, std::cerr);
}
