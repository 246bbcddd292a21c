#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "xgen/cli.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("xgen"));
  return xgen::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
