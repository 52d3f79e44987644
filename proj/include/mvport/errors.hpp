#pragma once

#include <stdexcept>
#include <string>

namespace mvport
{

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data or configuration: malformed CSV, invalid prices,
/// out-of-range days, inconsistent parameters.
class DataError : public Error
{
public:
    using Error::Error;
};

/// The numerics gave up: singular KKT systems after ridge escalation,
/// iteration caps, non-finite arithmetic.
class NumericalError : public Error
{
public:
    using Error::Error;
};

/// File could not be opened or written.
class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace mvport
