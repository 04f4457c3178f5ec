#pragma once

#include <random>
#include <sstream>
#include <string>

namespace gmatch {

using RngEngine = std::mt19937_64;

inline double runif(RngEngine& eng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

inline double rnorm(RngEngine& eng) {
  return std::normal_distribution<double>(0.0, 1.0)(eng);
}

inline std::string rng_state_to_string(const RngEngine& eng) {
  std::ostringstream os;
  os << eng;
  return os.str();
}

inline RngEngine rng_state_from_string(const std::string& s) {
  RngEngine eng;
  std::istringstream is(s);
  is >> eng;
  return eng;
}

}  // namespace gmatch
