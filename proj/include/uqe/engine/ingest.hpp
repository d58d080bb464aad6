#pragma once

#include <string>

#include "uqe/table.hpp"

namespace uqe {

/// Loads a schema declaration:
/// {"columns": [{"name", "kind": "structured"|"unstructured",
///               "type": value type name, "vocabulary": [...]}]}
Schema load_schema(const std::string& path);
Schema schema_from_json_text(const std::string& text, const std::string& origin);

/// JSONL (one object per row) or CSV with a header, decided by extension.
/// Rows must match the schema; unknown fields are rejected, missing fields
/// ingest as null. Errors carry line numbers.
Table ingest(const std::string& data_path, const std::string& schema_path);
Table ingest_jsonl_text(const std::string& text, Schema schema, const std::string& origin);
Table ingest_csv_text(const std::string& text, Schema schema, const std::string& origin);

/// JSONL serialization of a table (schema-ordered fields); re-validating the
/// output reproduces an identical table.
std::string table_to_jsonl(const Table& table);
std::string schema_to_json(const Schema& schema);

}  // namespace uqe
