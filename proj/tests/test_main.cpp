#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "einode/log.hpp"

int main(int argc, char** argv) {
  einode::set_log_level(einode::LogLevel::quiet);
  doctest::Context context(argc, argv);
  return context.run();
}
