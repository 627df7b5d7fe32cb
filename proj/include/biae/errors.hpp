#pragma once

#include <stdexcept>
#include <string>

namespace biae {

// Base for every error raised by the library. The service layer maps the
// concrete subclasses onto HTTP status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public ValidationError {
 public:
  SchemaError(const std::string& record_id, const std::string& field, const std::string& detail)
      : ValidationError("record '" + record_id + "': field '" + field + "': " + detail),
        record_id_(record_id),
        field_(field) {}

  const std::string& record_id() const { return record_id_; }
  const std::string& field() const { return field_; }

 private:
  std::string record_id_;
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

// Model or generator could not be loaded / run.
class ServiceError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public ServiceError {
 public:
  using ServiceError::ServiceError;
};

}  // namespace biae
