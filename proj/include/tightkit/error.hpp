#pragma once

#include <stdexcept>
#include <string>

namespace tightkit {

// Base for every failure the toolkit reports. The kind string is stable and
// is what reports and the CLI print.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& w) : Error("domain", w) {}
};

class DegenerateMetric : public Error {
public:
    explicit DegenerateMetric(const std::string& w) : Error("degenerate-metric", w) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& w) : Error("precondition", w) {}
};

class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& w) : Error("convergence", w) {}
};

class CertificateError : public Error {
public:
    explicit CertificateError(const std::string& w) : Error("certificate", w) {}
};

// Malformed or invalid run configuration; line is 0 when not tied to one.
class ConfigError : public Error {
public:
    ConfigError(int line, const std::string& w)
        : Error("config", line > 0 ? "line " + std::to_string(line) + ": " + w : w), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

// A manifest entry whose file is gone or no longer matches its hash.
class ArtifactError : public Error {
public:
    explicit ArtifactError(const std::string& w) : Error("artifact", w) {}
};

}  // namespace tightkit
