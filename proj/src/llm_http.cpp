#include "uqe/oracle/llm_http.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "uqe/util/text.hpp"

namespace uqe {

namespace {

using nlohmann::json;

[[noreturn]] void protocol_error(const std::string& what, const std::string& reply) {
  std::string shown = reply.size() > 160 ? reply.substr(0, 160) + "..." : reply;
  throw Error("oracle", "oracle-protocol", what + ": '" + shown + "'");
}

std::vector<std::string> nonempty_lines(const std::string& reply) {
  std::vector<std::string> out;
  for (auto& line : split_lines(reply)) {
    auto t = trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace

bool parse_judge_reply(const std::string& reply) {
  auto t = trim(reply);
  if (t == "<True>") return true;
  if (t == "<False>") return false;
  protocol_error("expected <True> or <False>", reply);
}

std::vector<std::string> parse_extract_reply(const std::string& reply,
                                             std::size_t num_attributes) {
  auto lines = nonempty_lines(reply);
  if (lines.size() != num_attributes)
    protocol_error("expected " + std::to_string(num_attributes) + " attribute lines, got " +
                       std::to_string(lines.size()),
                   reply);
  return lines;
}

std::vector<std::string> parse_taxonomy_reply(const std::string& reply,
                                              std::size_t max_groups) {
  // lines of "label,count"; the label is everything before the last comma
  std::vector<std::string> labels;
  for (const auto& line : nonempty_lines(reply)) {
    auto comma = line.rfind(',');
    std::string label(trim(comma == std::string::npos ? line : line.substr(0, comma)));
    if (label.empty()) continue;
    bool dup = false;
    for (const auto& l : labels) dup = dup || l == label;
    if (!dup && labels.size() < max_groups) labels.push_back(label);
  }
  if (labels.empty()) protocol_error("no taxonomy groups in reply", reply);
  return labels;
}

std::vector<std::size_t> parse_classify_reply(const std::string& reply,
                                              std::size_t num_categories) {
  auto open = reply.find('[');
  auto close = reply.find(']', open == std::string::npos ? 0 : open);
  if (open == std::string::npos || close == std::string::npos)
    protocol_error("expected bracketed index list", reply);
  std::vector<std::size_t> indices;
  std::size_t pos = open + 1;
  while (pos < close) {
    while (pos < close && (reply[pos] == ' ' || reply[pos] == ',')) ++pos;
    if (pos >= close) break;
    std::size_t value = 0;
    auto r = std::from_chars(reply.data() + pos, reply.data() + close, value);
    if (r.ec != std::errc()) protocol_error("malformed category index", reply);
    if (value >= num_categories)
      protocol_error("category index " + std::to_string(value) + " out of range (have " +
                         std::to_string(num_categories) + ")",
                     reply);
    indices.push_back(value);
    pos = r.ptr - reply.data();
  }
  if (indices.empty()) protocol_error("empty category index list", reply);
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return indices;
}

std::pair<bool, std::vector<std::size_t>> parse_combined_reply(const std::string& reply,
                                                               std::size_t num_categories) {
  auto lines = nonempty_lines(reply);
  if (lines.empty()) protocol_error("empty combined reply", reply);
  bool verdict = parse_judge_reply(lines[0]);
  if (!verdict) return {false, {}};
  if (lines.size() < 2) protocol_error("missing category line after <True>", reply);
  std::string rest;
  for (std::size_t i = 1; i < lines.size(); ++i) rest += lines[i] + "\n";
  return {true, parse_classify_reply(rest, num_categories)};
}

std::string LlmHttpBackend::complete(const ChatPrompt& prompt) {
  json body = {
      {"model", config_.model},
      {"messages", json::array({{{"role", "system"}, {"content", prompt.system}},
                                {{"role", "user"}, {"content", prompt.user}}})},
  };
  const std::string payload = body.dump();

  std::string token;
  if (!config_.auth_env.empty()) {
    const char* v = std::getenv(config_.auth_env.c_str());
    if (v) token = v;
  }

  std::string last_error;
  double backoff = config_.backoff_initial_seconds;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error: status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Error("oracle", "llm-transport",
                  "LLM endpoint returned status " + std::to_string(res->status));
    try {
      json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error("oracle", "oracle-protocol",
                  std::string("malformed completion response: ") + e.what());
    }
  }
  throw Error("oracle", "llm-transport",
              "LLM call failed after " + std::to_string(config_.max_retries) +
                  " retries: " + last_error);
}

std::string LlmHttpBackend::row_text(const RowRef& row, const std::string& source_column) const {
  return row.text(source_column);
}

bool LlmHttpBackend::judge(const RowRef& row, const Condition& cond) {
  if (cond.text.empty())
    throw Error("oracle", "invalid-condition", "empty condition text");
  const std::string source =
      cond.source_columns.empty() ? std::string() : cond.source_columns.front();
  auto prompt = build_judge_prompt(config_.templates, cond.text, row_text(row, source));
  meter_.record_judge(prompt.size());
  return parse_judge_reply(complete(prompt));
}

std::vector<std::string> LlmHttpBackend::extract(const RowRef& row,
                                                 const std::vector<std::string>& attributes,
                                                 const std::string& source_column) {
  auto prompt =
      build_extract_prompt(config_.templates, attributes, row_text(row, source_column));
  meter_.record_extract(prompt.size());
  return parse_extract_reply(complete(prompt), attributes.size());
}

Taxonomy LlmHttpBackend::build_taxonomy(const std::vector<RowRef>& sample,
                                        const std::string& attribute,
                                        const std::string& source_column,
                                        std::size_t max_groups) {
  if (sample.empty())
    throw Error("oracle", "empty-sample", "taxonomy construction needs at least one row");
  std::vector<std::string> texts;
  texts.reserve(sample.size());
  for (const auto& r : sample) texts.push_back(row_text(r, source_column));
  auto prompt = build_taxonomy_prompt(config_.templates, attribute, texts);
  meter_.record_taxonomy(sample.size(), prompt.size());
  auto labels = parse_taxonomy_reply(complete(prompt), max_groups);
  Taxonomy tax;
  tax.attribute = attribute;
  for (auto& l : labels) tax.categories.push_back({tax.categories.size(), std::move(l), ""});
  tax.check();
  return tax;
}

ClassifyResult LlmHttpBackend::classify(const RowRef& row, const Taxonomy& taxonomy,
                                        const std::string& source_column) {
  std::vector<std::string> labels;
  for (const auto& c : taxonomy.categories) labels.push_back(c.label);
  auto prompt = build_classify_prompt(config_.templates, taxonomy.attribute, labels,
                                      row_text(row, source_column));
  meter_.record_classify(prompt.size());
  return ClassifyResult{parse_classify_reply(complete(prompt), labels.size()), false};
}

std::pair<bool, ClassifyResult> LlmHttpBackend::judge_and_classify(
    const RowRef& row, const Condition& cond, const Taxonomy& taxonomy,
    const std::string& source_column) {
  std::vector<std::string> labels;
  for (const auto& c : taxonomy.categories) labels.push_back(c.label);
  auto prompt = build_combined_prompt(config_.templates, cond.text, taxonomy.attribute, labels,
                                      row_text(row, source_column));
  meter_.record_combined(prompt.size());
  auto [verdict, indices] = parse_combined_reply(complete(prompt), labels.size());
  return {verdict, ClassifyResult{std::move(indices), false}};
}

}  // namespace uqe
