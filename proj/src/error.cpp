#include <sfmap/error.hpp>

namespace sfmap {

namespace {

std::string with_line(const std::string& what, std::optional<std::int64_t> line)
{
    if (!line) return what;
    return "line " + std::to_string(*line) + ": " + what;
}

std::string with_element(const std::string& what, ValidationError::Element element, std::int64_t index)
{
    const char* name = element == ValidationError::Element::vertex ? "vertex " : "face ";
    return name + std::to_string(index) + ": " + what;
}

} // namespace

ParseError::ParseError(const std::string& what, std::optional<std::int64_t> line)
    : Error(ErrorKind::data, with_line(what, line))
    , m_line(line)
{}

ValidationError::ValidationError(const std::string& what, Element element, std::int64_t index)
    : Error(ErrorKind::data, with_element(what, element, index))
    , m_element(element)
    , m_index(index)
{}

} // namespace sfmap
