#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace navq {

struct Error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/** Malformed input text (graph files, query programs). */
struct ParseError : Error
{
    std::size_t line;
    std::size_t column;

    ParseError(const std::string &msg, std::size_t line, std::size_t column = 0)
        : Error(msg + " (line " + std::to_string(line) + (column ? ", column " + std::to_string(column) : "") + ")")
        , line(line)
        , column(column)
    { }
};

/** Input parsed fine but violates a data-model invariant. */
struct IntegrityError : Error
{
    using Error::Error;
};

/** Program is syntactically valid but not a well-formed Regular Query. */
struct QueryError : Error
{
    using Error::Error;
};

struct SchemaError : Error
{
    using Error::Error;
};

struct EnumerationError : Error
{
    using Error::Error;
};

struct ExecutionError : Error
{
    using Error::Error;
};

struct Timeout : Error
{
    Timeout() : Error("execution time limit exceeded") { }
};

}
