#pragma once

#include <stdexcept>
#include <string>

namespace mtqe {

// Base class for all pipeline errors. What failed goes in the message;
// callers that need to distinguish catch the subclass.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (bad JSONL line, duplicate key,
// schema violation).
class DataError : public Error {
public:
    using Error::Error;
};

// Model output that cannot be turned into a judgment even after repair.
class ParseError : public Error {
public:
    using Error::Error;
};

// HTTP transport failures after retries are exhausted.
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace mtqe
