#ifndef SITEWALK_ERRORS_HPP
#define SITEWALK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sitewalk {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document (JSON syntax, missing or mistyped fields).
class ParseError : public Error
{
public:
    using Error::Error;
};

/// A well-formed document that violates a model invariant. `subject()` names
/// the offending element or fiducial id.
class ValidationError : public Error
{
public:
    ValidationError(std::string subject, const std::string& what) :
        Error(subject + ": " + what), mSubject(std::move(subject)) { }

    const std::string& subject() const noexcept { return mSubject; }

private:
    std::string mSubject;
};

class EmptyRegionError : public Error
{
public:
    using Error::Error;
};

class ResolutionError : public Error
{
public:
    using Error::Error;
};

/// Raised when a point cannot be snapped onto the grid or two points lie in
/// different connected components. `subject()` names the DRP (or "start"/"goal").
class NoPathError : public Error
{
public:
    NoPathError(std::string subject, const std::string& what) :
        Error(subject + ": " + what), mSubject(std::move(subject)) { }

    const std::string& subject() const noexcept { return mSubject; }

private:
    std::string mSubject;
};

class SimulationInvariantError : public Error
{
public:
    using Error::Error;
};

class MissionParseError : public Error
{
public:
    using Error::Error;
};

class BusyError : public Error
{
public:
    using Error::Error;
};

class ExecutionError : public Error
{
public:
    using Error::Error;
};

class StorageError : public Error
{
public:
    using Error::Error;
};

/// Framing or envelope-level violation on the relay wire.
class ProtocolError : public Error
{
public:
    using Error::Error;
};

/// Socket-level failure (connect refused, peer closed).
class ConnectionError : public Error
{
public:
    using Error::Error;
};

/// An ERROR envelope received from the relay or the middleware.
class RemoteError : public Error
{
public:
    RemoteError(std::string code, const std::string& message) :
        Error(code + ": " + message), mCode(std::move(code)) { }

    const std::string& code() const noexcept { return mCode; }

private:
    std::string mCode;
};

class MissionTimeout : public Error
{
public:
    using Error::Error;
};

} // namespace sitewalk

#endif // SITEWALK_ERRORS_HPP
