#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace fleetmatch {

using NodeId = std::int32_t;
using RequestId = std::int64_t;
using VehicleId = std::int32_t;
using CompanyId = std::int32_t;

// Simulation time and durations, seconds.
using Seconds = double;

inline constexpr Seconds kInfiniteTime = std::numeric_limits<Seconds>::infinity();

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class UnreachablePair : public Error {
public:
  UnreachablePair(NodeId from, NodeId to)
    : Error("no path from node " + std::to_string(from) + " to node " +
            std::to_string(to)),
      from(from),
      to(to) {
  }
  NodeId from;
  NodeId to;
};

class ParseError : public Error {
public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(source + ":" + std::to_string(line) + ": " + what), line(line) {
  }
  std::size_t line;
};

class MalformedMatrix : public Error {
  using Error::Error;
};

class MatrixTooLarge : public Error {
  using Error::Error;
};

class NonTermination : public Error {
  using Error::Error;
};

class MalformedScenario : public Error {
  using Error::Error;
};

class MalformedSpec : public Error {
  using Error::Error;
};

class EmptyRun : public Error {
  using Error::Error;
};

} // namespace fleetmatch
