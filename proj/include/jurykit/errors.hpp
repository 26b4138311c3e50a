#pragma once

#include <stdexcept>
#include <string>

namespace jurykit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- contract parsing / validation ---

class MalformedDocument : public Error {
 public:
  explicit MalformedDocument(const std::string& what)
      : Error("malformed document: " + what) {}
};

class MissingField : public Error {
 public:
  explicit MissingField(const std::string& field)
      : Error("missing field: " + field), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class BadGraderType : public Error {
 public:
  explicit BadGraderType(const std::string& value)
      : Error("bad grader_type: \"" + value + "\"") {}
};

class ZeroTotalWeight : public Error {
 public:
  ZeroTotalWeight() : Error("criterion weights sum to zero") {}
};

// --- judge gateway ---

/// Retryable backend failure (HTTP 429/5xx, timeouts, transport errors).
class TransientBackendError : public Error {
 public:
  explicit TransientBackendError(const std::string& what)
      : Error("transient backend error: " + what) {}
};

/// Non-retryable backend failure; the affected vote becomes Unusable.
class PermanentBackendError : public Error {
 public:
  explicit PermanentBackendError(const std::string& what)
      : Error("permanent backend error: " + what) {}
};

/// Credential / configuration fault. Surfaced immediately, never a vote.
class AuthError : public Error {
 public:
  explicit AuthError(const std::string& what) : Error("auth error: " + what) {}
};

class ExhaustedRetries : public Error {
 public:
  explicit ExhaustedRetries(const std::string& what)
      : Error("exhausted retries: " + what) {}
};

class MissingScriptEntry : public Error {
 public:
  MissingScriptEntry(const std::string& judge_id, const std::string& criterion_id)
      : Error("no script entry for judge \"" + judge_id + "\" criterion \"" +
              criterion_id + "\" and no default configured") {}
};

// --- trace store ---

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

class CorruptTrace : public Error {
 public:
  explicit CorruptTrace(const std::string& path_or_what)
      : Error("corrupt trace: " + path_or_what) {}
};

class MissingPoolVotes : public Error {
 public:
  MissingPoolVotes(const std::string& pool_id, const std::string& criterion_id)
      : Error("no votes for pool \"" + pool_id + "\" on criterion \"" +
              criterion_id + "\""),
        criterion_id_(criterion_id) {}
  const std::string& criterion_id() const { return criterion_id_; }

 private:
  std::string criterion_id_;
};

// --- analytics ---

class EmptySample : public Error {
 public:
  explicit EmptySample(const std::string& what) : Error("empty sample: " + what) {}
};

class EmptyIntersection : public Error {
 public:
  EmptyIntersection() : Error("criterion key intersection across runs is empty") {}
};

class LengthMismatch : public Error {
 public:
  explicit LengthMismatch(const std::string& what)
      : Error("length mismatch: " + what) {}
};

class ConstantSample : public Error {
 public:
  ConstantSample() : Error("sample is constant, z-score undefined") {}
};

class ReducedPanel : public Error {
 public:
  explicit ReducedPanel(const std::string& what) : Error("reduced panel: " + what) {}
};

class InvalidCutpoints : public Error {
 public:
  InvalidCutpoints() : Error("cutpoints must satisfy low < high") {}
};

class EmptyAfterFilter : public Error {
 public:
  EmptyAfterFilter() : Error("no rows survive the comparable-row filter") {}
};

class MissingPool : public Error {
 public:
  explicit MissingPool(const std::string& pool_id)
      : Error("trace does not contain pool \"" + pool_id + "\"") {}
};

}  // namespace jurykit
