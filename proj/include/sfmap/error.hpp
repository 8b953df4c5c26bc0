#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace sfmap {

/// Coarse error category; the CLI maps it to its exit code.
enum class ErrorKind {
    usage,     ///< bad arguments or parameters
    data,      ///< malformed or invalid input files, missing artifacts
    numerical, ///< solver failure
};

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what)
        , m_kind(kind)
    {}

    ErrorKind kind() const noexcept { return m_kind; }

private:
    ErrorKind m_kind;
};

class ArgumentError : public Error
{
public:
    explicit ArgumentError(const std::string& what)
        : Error(ErrorKind::usage, what)
    {}
};

/// Malformed file contents. Carries the 1-based line number when known.
class ParseError : public Error
{
public:
    explicit ParseError(const std::string& what, std::optional<std::int64_t> line = {});

    std::optional<std::int64_t> line() const noexcept { return m_line; }

private:
    std::optional<std::int64_t> m_line;
};

/// A mesh that parsed but violates a TriMesh invariant.
class ValidationError : public Error
{
public:
    enum class Element { vertex, face };

    ValidationError(const std::string& what, Element element, std::int64_t index);

    Element element() const noexcept { return m_element; }
    std::int64_t index() const noexcept { return m_index; }

private:
    Element m_element;
    std::int64_t m_index;
};

/// A pipeline step was asked for before the artifacts it consumes exist.
class DependencyError : public Error
{
public:
    explicit DependencyError(const std::string& what)
        : Error(ErrorKind::data, what)
    {}
};

class NumericalError : public Error
{
public:
    explicit NumericalError(const std::string& what, double residual = 0.0)
        : Error(ErrorKind::numerical, what)
        , m_residual(residual)
    {}

    /// Worst residual at the point of failure (0 when not applicable).
    double residual() const noexcept { return m_residual; }

private:
    double m_residual;
};

} // namespace sfmap
