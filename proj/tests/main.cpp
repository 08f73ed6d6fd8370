#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <iostream>

#include "bssroute/routing.hpp"

int main(int argc, char** argv) {
  doctest::Context ctx(argc, argv);
  const int rc = ctx.run();
  if (ctx.shouldExit()) return rc;
  // The suite is hermetic: nothing may reach the real HTTP transport.
  const auto live = bssroute::live_request_count();
  if (live != 0) {
    std::cerr << "live network requests issued during tests: " << live << '\n';
    return rc == 0 ? 1 : rc;
  }
  return rc;
}
