#include "domdec/executor.hpp"

#include "domdec/errors.hpp"

#include <cstdlib>
#include <string>

namespace domdec {

Executor::Executor(int workers) : workers_(workers) {
  if (workers < 1) throw ConfigError("worker count must be at least 1");
}

int workersFromEnvironment(int fallback) {
  const char* env = std::getenv("DOMDEC_WORKERS");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(env, &used);
    if (used != std::string(env).size() || v < 1) return fallback;
    return v;
  } catch (const std::exception&) {
    return fallback;
  }
}

}  // namespace domdec
