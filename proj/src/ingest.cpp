#include "uqe/engine/ingest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uqe/util/text.hpp"

namespace uqe {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("ingest", "io", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Value cell_from_json(const json& v, const ColumnSpec& col, std::size_t line) {
  auto bad = [&](const std::string& why) -> Error {
    return Error("ingest", "type-mismatch",
                 "line " + std::to_string(line) + ", column '" + col.name + "': " + why);
  };
  if (v.is_null()) return Value();
  switch (col.type) {
    case ValueType::Integer:
      if (!v.is_number_integer()) throw bad("expected integer");
      return Value::integer(v.get<std::int64_t>());
    case ValueType::Float:
      if (!v.is_number()) throw bad("expected number");
      return Value::real(v.get<double>());
    case ValueType::Text:
      if (!v.is_string()) throw bad("expected string");
      return Value::text(v.get<std::string>());
    case ValueType::Datetime: {
      if (!v.is_string()) throw bad("expected ISO-8601 string");
      auto epoch = parse_iso8601(v.get<std::string>());
      if (!epoch) throw bad("unparseable datetime '" + v.get<std::string>() + "'");
      return Value::datetime(*epoch);
    }
    case ValueType::EnumLabel: {
      if (!v.is_string()) throw bad("expected enum label string");
      return Value::enum_label(v.get<std::string>());
    }
    case ValueType::UnstructuredText:
      if (!v.is_string()) throw bad("expected string");
      return Value::unstructured_text(v.get<std::string>());
    case ValueType::UnstructuredBlob: {
      if (!v.is_object() || !v.contains("media_type") || !v.contains("bytes"))
        throw bad("expected {media_type, bytes}");
      Blob b;
      b.media_type = v.at("media_type").get<std::string>();
      for (const auto& byte : v.at("bytes")) b.bytes.push_back(byte.get<std::uint8_t>());
      return Value::unstructured_blob(std::move(b));
    }
    case ValueType::Null:
      return Value();
  }
  throw bad("unsupported column type");
}

Value cell_from_csv(const std::string& field, const ColumnSpec& col, std::size_t line) {
  auto bad = [&](const std::string& why) -> Error {
    return Error("ingest", "type-mismatch",
                 "line " + std::to_string(line) + ", column '" + col.name + "': " + why);
  };
  if (field.empty()) return Value();
  switch (col.type) {
    case ValueType::Integer:
      try {
        return Value::integer(std::stoll(field));
      } catch (...) {
        throw bad("expected integer, got '" + field + "'");
      }
    case ValueType::Float:
      try {
        return Value::real(std::stod(field));
      } catch (...) {
        throw bad("expected number, got '" + field + "'");
      }
    case ValueType::Datetime: {
      auto epoch = parse_iso8601(field);
      if (!epoch) throw bad("unparseable datetime '" + field + "'");
      return Value::datetime(*epoch);
    }
    case ValueType::EnumLabel:
      return Value::enum_label(field);
    case ValueType::UnstructuredText:
      return Value::unstructured_text(field);
    case ValueType::Text:
      return Value::text(field);
    default:
      throw bad("unsupported CSV column type");
  }
}

std::vector<std::string> parse_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted)
    throw Error("ingest", "parse",
                "line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

Schema schema_from_json_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error("ingest", "parse", origin + ": " + e.what());
  }
  if (!doc.contains("columns") || !doc["columns"].is_array())
    throw Error("ingest", "schema-violation", origin + ": missing 'columns' array");
  std::vector<ColumnSpec> columns;
  for (const auto& c : doc["columns"]) {
    ColumnSpec spec;
    spec.name = c.at("name").get<std::string>();
    std::string kind = c.value("kind", "structured");
    if (kind == "structured")
      spec.kind = ColumnKind::Structured;
    else if (kind == "unstructured")
      spec.kind = ColumnKind::Unstructured;
    else
      throw Error("ingest", "schema-violation",
                  origin + ": column '" + spec.name + "' has unknown kind '" + kind + "'");
    std::string type_name = c.value("type", spec.kind == ColumnKind::Unstructured
                                                 ? "unstructured-text"
                                                 : "text");
    if (spec.kind == ColumnKind::Unstructured && type_name == "text")
      type_name = "unstructured-text";
    auto type = value_type_from_name(type_name);
    if (!type)
      throw Error("ingest", "schema-violation",
                  origin + ": column '" + spec.name + "' has unknown type '" + type_name +
                      "'");
    spec.type = *type;
    if (c.contains("vocabulary"))
      for (const auto& label : c["vocabulary"])
        spec.vocabulary.push_back(label.get<std::string>());
    columns.push_back(std::move(spec));
  }
  return Schema(std::move(columns));
}

Schema load_schema(const std::string& path) {
  return schema_from_json_text(read_file(path), path);
}

Table ingest_jsonl_text(const std::string& text, Schema schema, const std::string& origin) {
  std::vector<Row> rows;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("ingest", "parse",
                  origin + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object())
      throw Error("ingest", "parse",
                  origin + " line " + std::to_string(line_no) + ": expected an object");
    for (const auto& [key, _] : obj.items())
      if (!schema.index_of(key))
        throw Error("ingest", "unknown-field",
                    origin + " line " + std::to_string(line_no) + ": unknown field '" + key +
                        "'");
    Row row;
    row.reserve(schema.size());
    for (const auto& col : schema.columns()) {
      if (obj.contains(col.name))
        row.push_back(cell_from_json(obj[col.name], col, line_no));
      else
        row.push_back(Value());
    }
    rows.push_back(std::move(row));
  }
  return validate_table(std::move(schema), std::move(rows));
}

Table ingest_csv_text(const std::string& text, Schema schema, const std::string& origin) {
  auto lines = split_lines(text);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) return validate_table(std::move(schema), {});
  auto header = parse_csv_line(lines[0], 1);
  std::vector<std::size_t> header_to_schema;
  for (const auto& name : header) {
    auto j = schema.index_of(name);
    if (!j)
      throw Error("ingest", "unknown-field", origin + ": unknown CSV column '" + name + "'");
    header_to_schema.push_back(*j);
  }
  for (const auto& col : schema.columns()) {
    bool found = false;
    for (const auto& name : header) found = found || name == col.name;
    if (!found)
      throw Error("ingest", "schema-violation",
                  origin + ": CSV is missing column '" + col.name + "'");
  }
  std::vector<Row> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    auto fields = parse_csv_line(lines[li], li + 1);
    if (fields.size() != header.size())
      throw Error("ingest", "arity-mismatch",
                  origin + " line " + std::to_string(li + 1) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    Row row(schema.size());
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const auto& col = schema.at(header_to_schema[f]);
      row[header_to_schema[f]] = cell_from_csv(fields[f], col, li + 1);
    }
    rows.push_back(std::move(row));
  }
  return validate_table(std::move(schema), std::move(rows));
}

Table ingest(const std::string& data_path, const std::string& schema_path) {
  Schema schema = load_schema(schema_path);
  std::string text = read_file(data_path);
  if (data_path.size() >= 4 && data_path.substr(data_path.size() - 4) == ".csv")
    return ingest_csv_text(text, std::move(schema), data_path);
  return ingest_jsonl_text(text, std::move(schema), data_path);
}

std::string table_to_jsonl(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    json obj = json::object();
    for (std::size_t j = 0; j < table.num_columns(); ++j) {
      const auto& col = table.schema().at(j);
      const Value& v = table.cell(i, j);
      if (v.is_null()) {
        obj[col.name] = nullptr;
        continue;
      }
      switch (v.type()) {
        case ValueType::Integer: obj[col.name] = v.as_integer(); break;
        case ValueType::Float: obj[col.name] = v.as_float(); break;
        case ValueType::Datetime: obj[col.name] = format_iso8601(v.as_epoch_seconds()); break;
        case ValueType::UnstructuredBlob: {
          json blob = json::object();
          blob["media_type"] = v.as_blob().media_type;
          blob["bytes"] = v.as_blob().bytes;
          obj[col.name] = std::move(blob);
          break;
        }
        default: obj[col.name] = v.as_string(); break;
      }
    }
    out += obj.dump();
    out += "\n";
  }
  return out;
}

std::string schema_to_json(const Schema& schema) {
  json doc = json::object();
  doc["columns"] = json::array();
  for (const auto& col : schema.columns()) {
    json c = json::object();
    c["name"] = col.name;
    c["kind"] = col.kind == ColumnKind::Unstructured ? "unstructured" : "structured";
    c["type"] = value_type_name(col.type);
    if (!col.vocabulary.empty()) c["vocabulary"] = col.vocabulary;
    doc["columns"].push_back(std::move(c));
  }
  return doc.dump(2);
}

}  // namespace uqe
