#pragma once

#include <stdexcept>
#include <string>

namespace loadcast {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Bad invocation or configuration. CLI exit code 1.
class UsageError : public Error {
public:
	using Error::Error;
};

/// Input data is missing, malformed or inconsistent. CLI exit code 2.
class DataError : public Error {
public:
	using Error::Error;
};

/// Missing or misnamed columns in a CSV source.
class SchemaError : public DataError {
public:
	using DataError::DataError;
};

/// Binary file with a bad magic, truncated payload or unsupported layout.
class FormatError : public DataError {
public:
	using DataError::DataError;
};

/// Non-finite values during training or inference. CLI exit code 3.
class NumericError : public Error {
public:
	using Error::Error;
};

} // namespace loadcast
