#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pneulogic {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Text-format errors. line/column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line = 0, std::size_t column = 0);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::string& message() const { return message_; }

private:
    std::string message_;
    std::size_t line_;
    std::size_t column_;
};

// Structural problems detected while assembling a netlist.
class NetlistError : public Error {
public:
    using Error::Error;
};

// A program or equation set does not fit the device.
class CapacityError : public Error {
public:
    using Error::Error;
};

// dt violates the explicit-integration guard, or a stimulus is illegal.
class SimulationError : public Error {
public:
    using Error::Error;
};

}  // namespace pneulogic
