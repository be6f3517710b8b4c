#pragma once

#include <stdexcept>
#include <string>

namespace colorassoc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input: bad CSV cells, unknown ids, bad arguments.
class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Non-finite data, solver failure, degenerate statistics.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace colorassoc
