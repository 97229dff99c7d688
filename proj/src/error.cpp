#include "pneulogic/error.hpp"

namespace pneulogic {

namespace {

std::string located(const std::string& message, std::size_t line, std::size_t column) {
    if (line == 0) {
        return message;
    }
    std::string out = "line " + std::to_string(line);
    if (column != 0) {
        out += ", col " + std::to_string(column);
    }
    return out + ": " + message;
}

}  // namespace

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : Error(located(message, line, column)), message_(message), line_(line), column_(column) {}

}  // namespace pneulogic
