#ifndef DXGRAPH_ERROR_H_
#define DXGRAPH_ERROR_H_

#include <stdexcept>
#include <string>

namespace dxgraph {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input row. Carries the 1-based line number of the offending row.
class ParseError : public Error {
 public:
  ParseError(const std::string &source, int line, const std::string &what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Embedding provider failure during alignment. Distinct from "no match".
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Record update arrived with a turn index older than the record.
class OrderingError : public Error {
 public:
  using Error::Error;
};

// Case file does not follow the case schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace dxgraph

#endif  // DXGRAPH_ERROR_H_
