#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dquant {

// Base of every error raised by the library. `kind()` is a stable,
// machine-readable name used by the CLI's error JSON.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "Error"; }
};

#define DQUANT_DEFINE_ERROR(Name)                                   \
  class Name : public error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : error(what) {}         \
    const char* kind() const noexcept override { return #Name; }    \
  }

DQUANT_DEFINE_ERROR(InvalidArgument);
DQUANT_DEFINE_ERROR(DimensionError);
DQUANT_DEFINE_ERROR(IoError);
DQUANT_DEFINE_ERROR(SchemaError);
DQUANT_DEFINE_ERROR(NotSeparable);
DQUANT_DEFINE_ERROR(AxisParallelSeparator);
DQUANT_DEFINE_ERROR(SameSignCoefficients);
DQUANT_DEFINE_ERROR(NoRepresentative);
DQUANT_DEFINE_ERROR(DuplicateProjection);
DQUANT_DEFINE_ERROR(BudgetExceeded);

#undef DQUANT_DEFINE_ERROR

enum class ParseErrorKind {
  kEmptyFile,
  kMalformedHeader,
  kColumnCount,
  kNonNumeric,
  kNegativeLabel,
  kNoRows,
};

inline const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kEmptyFile: return "empty file";
    case ParseErrorKind::kMalformedHeader: return "malformed header";
    case ParseErrorKind::kColumnCount: return "wrong column count";
    case ParseErrorKind::kNonNumeric: return "non-numeric cell";
    case ParseErrorKind::kNegativeLabel: return "negative label";
    case ParseErrorKind::kNoRows: return "no data rows";
  }
  return "parse error";
}

// CSV ingestion failure. Row 0 is the header; data rows count from 1.
class ParseError : public error {
 public:
  ParseError(ParseErrorKind kind, std::size_t row, const std::string& detail)
      : error("row " + std::to_string(row) + ": " + to_string(kind) +
              (detail.empty() ? "" : " (" + detail + ")")),
        kind_(kind),
        row_(row) {}

  const char* kind() const noexcept override { return "ParseError"; }
  ParseErrorKind parse_kind() const noexcept { return kind_; }
  std::size_t row() const noexcept { return row_; }

 private:
  ParseErrorKind kind_;
  std::size_t row_;
};

}  // namespace dquant
