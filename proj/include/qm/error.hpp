#pragma once

#include <stdexcept>
#include <string>

namespace qm {

// Carrier for all recoverable failures. `code` is a stable kebab-case
// identifier (e.g. "dangling-reference") that the CLI and tests match on;
// `element` names the offending model element or file when known.
class Error : public std::runtime_error {
public:
    Error(std::string code, std::string element, std::string message)
        : std::runtime_error(element.empty() ? "[" + code + "] " + message
                                             : "[" + code + "] " + element + ": " + message),
          code_(std::move(code)),
          element_(std::move(element)),
          message_(std::move(message)) {}

    const std::string& code() const { return code_; }
    const std::string& element() const { return element_; }
    const std::string& message() const { return message_; }

private:
    std::string code_;
    std::string element_;
    std::string message_;
};

// Malformed input text (JSON/CSV). Line and column are 1-based; 0 when the
// position is unknown (pure schema violations).
class ParseError : public Error {
public:
    ParseError(std::string code, std::string message, int line = 0, int column = 0)
        : Error(std::move(code),
                line > 0 ? "line " + std::to_string(line) + ":" + std::to_string(column) : "",
                std::move(message)),
          line_(line),
          column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

// File-system level failure (missing file, unreadable, unwritable).
class IoError : public Error {
public:
    IoError(std::string path, std::string message)
        : Error("io", std::move(path), std::move(message)) {}
};

} // namespace qm
