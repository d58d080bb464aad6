#include "uqe/value.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <cmath>

namespace uqe {

const char* value_type_name(ValueType t) {
  switch (t) {
    case ValueType::Null: return "null";
    case ValueType::Integer: return "integer";
    case ValueType::Float: return "float";
    case ValueType::Text: return "text";
    case ValueType::Datetime: return "datetime";
    case ValueType::EnumLabel: return "enum";
    case ValueType::UnstructuredText: return "unstructured-text";
    case ValueType::UnstructuredBlob: return "unstructured-blob";
  }
  return "?";
}

std::optional<ValueType> value_type_from_name(std::string_view name) {
  if (name == "null") return ValueType::Null;
  if (name == "integer" || name == "int") return ValueType::Integer;
  if (name == "float" || name == "real") return ValueType::Float;
  if (name == "text" || name == "string") return ValueType::Text;
  if (name == "datetime") return ValueType::Datetime;
  if (name == "enum") return ValueType::EnumLabel;
  if (name == "unstructured-text") return ValueType::UnstructuredText;
  if (name == "unstructured-blob" || name == "blob") return ValueType::UnstructuredBlob;
  return std::nullopt;
}

std::string Value::render() const {
  switch (type_) {
    case ValueType::Null: return "null";
    case ValueType::Integer: return std::to_string(as_integer());
    case ValueType::Float: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.10g", std::get<double>(data_));
      return buf;
    }
    case ValueType::Text:
    case ValueType::EnumLabel:
    case ValueType::UnstructuredText:
      return as_string();
    case ValueType::Datetime:
      return format_iso8601(as_epoch_seconds());
    case ValueType::UnstructuredBlob:
      return "<blob:" + as_blob().media_type + "," + std::to_string(as_blob().bytes.size()) +
             " bytes>";
  }
  return "?";
}

bool comparable(ValueType a, ValueType b) {
  auto numeric = [](ValueType t) { return t == ValueType::Integer || t == ValueType::Float; };
  auto stringy = [](ValueType t) { return t == ValueType::Text || t == ValueType::EnumLabel; };
  if (a == ValueType::UnstructuredText || a == ValueType::UnstructuredBlob ||
      b == ValueType::UnstructuredText || b == ValueType::UnstructuredBlob)
    return false;
  if (a == ValueType::Null || b == ValueType::Null) return false;
  if (numeric(a) && numeric(b)) return true;
  if (stringy(a) && stringy(b)) return true;
  if (a == ValueType::Datetime && b == ValueType::Datetime) return true;
  return false;
}

int compare_values(const Value& a, const Value& b) {
  if (!comparable(a.type(), b.type()))
    throw Error("execute", "type-mismatch",
                std::string("cannot compare ") + value_type_name(a.type()) + " with " +
                    value_type_name(b.type()));
  if (a.type() == ValueType::Datetime) {
    auto x = a.as_epoch_seconds(), y = b.as_epoch_seconds();
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (a.is_numeric()) {
    if (a.type() == ValueType::Integer && b.type() == ValueType::Integer) {
      auto x = a.as_integer(), y = b.as_integer();
      return x < y ? -1 : x > y ? 1 : 0;
    }
    double x = a.as_float(), y = b.as_float();
    return x < y ? -1 : x > y ? 1 : 0;
  }
  return a.as_string().compare(b.as_string()) < 0   ? -1
         : a.as_string().compare(b.as_string()) > 0 ? 1
                                                    : 0;
}

namespace {

// days since 1970-01-01 for a civil date (proleptic Gregorian)
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601(std::string_view s) {
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  // YYYY-MM-DD[T ]HH:MM:SS or bare date
  int year, month, day, hh = 0, mm = 0, ss = 0;
  auto read_int = [&](std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return r.ec == std::errc() && r.ptr == s.data() + pos + len;
  };
  if (!read_int(0, 4, year) || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!read_int(5, 2, month) || !read_int(8, 2, day)) return std::nullopt;
  if (s.size() > 10) {
    if ((s[10] != 'T' && s[10] != ' ') || s.size() != 19 || s[13] != ':' || s[16] != ':')
      return std::nullopt;
    if (!read_int(11, 2, hh) || !read_int(14, 2, mm) || !read_int(17, 2, ss))
      return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60)
    return std::nullopt;
  return days_from_civil(year, month, day) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_iso8601(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
  return buf;
}

}  // namespace uqe
