#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace holdtime {

// Root of every error this library throws. The CLI maps the category onto
// its exit code.
class Error : public std::runtime_error {
public:
    enum class Category { Input, Numeric, Infeasible };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }
    virtual const char* kind() const noexcept { return "error"; }

private:
    Category category_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string field, const std::string& what)
        : Error(Category::Input, what), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }
    const char* kind() const noexcept override { return "parse"; }

private:
    std::size_t line_;
    std::string field_;
};

enum class Violation {
    NegativeRate,
    AbsorbingState,
    NotStronglyConnected,
    InteriorNotStronglyConnected,
    ZeroOriginRate,
    InteriorSelfLoop,
    NonFiniteRate,
    BadThreshold,
    BadBoundary,
};

const char* to_string(Violation v) noexcept;

struct ViolationEntry {
    Violation tag;
    std::string detail;
};

struct ValidationReport {
    std::vector<ViolationEntry> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(Violation v) const noexcept;
    std::string summary() const;
};

class ValidationError : public Error {
public:
    explicit ValidationError(ValidationReport report)
        : Error(Category::Input, report.summary()), report_(std::move(report)) {}

    const ValidationReport& report() const noexcept { return report_; }
    const char* kind() const noexcept override { return "validation"; }

private:
    ValidationReport report_;
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(Category::Input, what) {}
    const char* kind() const noexcept override { return "precondition"; }
};

class StructureError : public Error {
public:
    explicit StructureError(const std::string& what) : Error(Category::Input, what) {}
    const char* kind() const noexcept override { return "structure"; }
};

class SingularMatrixError : public Error {
public:
    SingularMatrixError(double pivot, const std::string& what)
        : Error(Category::Numeric, what), pivot_(pivot) {}

    double pivot() const noexcept { return pivot_; }
    const char* kind() const noexcept override { return "singular"; }

private:
    double pivot_;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(double residual, const std::string& what)
        : Error(Category::Numeric, what), residual_(residual) {}

    double residual() const noexcept { return residual_; }
    const char* kind() const noexcept override { return "convergence"; }

private:
    double residual_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(Category::Numeric, what) {}
    const char* kind() const noexcept override { return "domain"; }
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(Category::Numeric, what) {}
    const char* kind() const noexcept override { return "numeric"; }
};

class InfeasibleError : public Error {
public:
    InfeasibleError(double rate, const std::string& what)
        : Error(Category::Infeasible, what), rate_(rate) {}

    double acceptance_rate() const noexcept { return rate_; }
    const char* kind() const noexcept override { return "infeasible"; }

private:
    double rate_;
};

}  // namespace holdtime
