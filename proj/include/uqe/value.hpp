#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uqe/error.hpp"

namespace uqe {

enum class ValueType {
  Null,
  Integer,
  Float,
  Text,
  Datetime,          // epoch seconds internally, ISO-8601 on the wire
  EnumLabel,         // string from a declared vocabulary
  UnstructuredText,  // opaque string, no comparison operators
  UnstructuredBlob,  // bytes + media-type tag
};

const char* value_type_name(ValueType t);
std::optional<ValueType> value_type_from_name(std::string_view name);

struct Blob {
  std::string media_type;
  std::vector<std::uint8_t> bytes;

  bool operator==(const Blob&) const = default;
};

/// Tagged cell value. Unstructured variants never participate in comparison
/// operators; attempting so raises a type error rather than coercing.
class Value {
 public:
  Value() : type_(ValueType::Null) {}

  static Value integer(std::int64_t v) { return Value(ValueType::Integer, v); }
  static Value real(double v) { return Value(ValueType::Float, v); }
  static Value text(std::string v) { return Value(ValueType::Text, std::move(v)); }
  static Value datetime(std::int64_t epoch_seconds) {
    return Value(ValueType::Datetime, epoch_seconds);
  }
  static Value enum_label(std::string v) { return Value(ValueType::EnumLabel, std::move(v)); }
  static Value unstructured_text(std::string v) {
    return Value(ValueType::UnstructuredText, std::move(v));
  }
  static Value unstructured_blob(Blob b) {
    return Value(ValueType::UnstructuredBlob, std::move(b));
  }

  ValueType type() const { return type_; }
  bool is_null() const { return type_ == ValueType::Null; }
  bool is_unstructured() const {
    return type_ == ValueType::UnstructuredText || type_ == ValueType::UnstructuredBlob;
  }
  bool is_numeric() const { return type_ == ValueType::Integer || type_ == ValueType::Float; }

  std::int64_t as_integer() const { return std::get<std::int64_t>(data_); }
  double as_float() const {
    return type_ == ValueType::Integer ? static_cast<double>(std::get<std::int64_t>(data_))
                                       : std::get<double>(data_);
  }
  const std::string& as_string() const { return std::get<std::string>(data_); }
  const Blob& as_blob() const { return std::get<Blob>(data_); }
  std::int64_t as_epoch_seconds() const { return std::get<std::int64_t>(data_); }

  /// Rendering used for result output and canonical row ordering.
  std::string render() const;

  bool operator==(const Value&) const = default;

 private:
  Value(ValueType t, std::int64_t v) : type_(t), data_(v) {}
  Value(ValueType t, double v) : type_(t), data_(v) {}
  Value(ValueType t, std::string v) : type_(t), data_(std::move(v)) {}
  Value(ValueType t, Blob v) : type_(t), data_(std::move(v)) {}

  ValueType type_;
  std::variant<std::monostate, std::int64_t, double, std::string, Blob> data_;
};

/// Three-way comparison for structured values. Numeric types compare
/// numerically (Integer/Float/Datetime mix where sensible); Text and
/// EnumLabel compare as strings. Unstructured or null operands raise a
/// type-mismatch error.
int compare_values(const Value& a, const Value& b);

/// True when the two types can be ordered against each other.
bool comparable(ValueType a, ValueType b);

/// Parses "YYYY-MM-DDTHH:MM:SS" (optionally with a trailing 'Z', 'T' may be
/// a space) into epoch seconds, UTC.
std::optional<std::int64_t> parse_iso8601(std::string_view s);
std::string format_iso8601(std::int64_t epoch_seconds);

}  // namespace uqe
