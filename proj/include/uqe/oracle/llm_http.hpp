#pragma once

#include <optional>

#include "uqe/oracle/oracle.hpp"
#include "uqe/oracle/prompts.hpp"

namespace uqe {

/// Minimal JSON chat-completion client configuration. The auth token is read
/// from the environment variable named in `auth_env` and is never logged.
struct LlmHttpConfig {
  std::string endpoint = "http://localhost:8080";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model = "default";
  std::string auth_env;  // empty: no Authorization header
  int max_retries = 3;
  double backoff_initial_seconds = 1.0;
  int timeout_seconds = 60;
  PromptTemplates templates;
};

class LlmHttpBackend : public OracleBackend {
 public:
  explicit LlmHttpBackend(LlmHttpConfig config) : config_(std::move(config)) {}

  bool judge(const RowRef& row, const Condition& cond) override;
  std::vector<std::string> extract(const RowRef& row,
                                   const std::vector<std::string>& attributes,
                                   const std::string& source_column) override;
  Taxonomy build_taxonomy(const std::vector<RowRef>& sample, const std::string& attribute,
                          const std::string& source_column, std::size_t max_groups) override;
  ClassifyResult classify(const RowRef& row, const Taxonomy& taxonomy,
                          const std::string& source_column) override;
  std::pair<bool, ClassifyResult> judge_and_classify(const RowRef& row, const Condition& cond,
                                                     const Taxonomy& taxonomy,
                                                     const std::string& source_column) override;

  const LlmHttpConfig& config() const { return config_; }

  /// POSTs the prompt and returns the assistant reply text. Retries with
  /// exponential backoff on transport errors; for tests, exposed directly.
  std::string complete(const ChatPrompt& prompt);

 private:
  std::string row_text(const RowRef& row, const std::string& source_column) const;

  LlmHttpConfig config_;
};

/// Reply parsers, shared with the recorded-response tests. All throw
/// positioned oracle-protocol errors on malformed input; replies are never
/// silently coerced.
bool parse_judge_reply(const std::string& reply);
std::vector<std::string> parse_extract_reply(const std::string& reply,
                                             std::size_t num_attributes);
std::vector<std::string> parse_taxonomy_reply(const std::string& reply,
                                              std::size_t max_groups);
std::vector<std::size_t> parse_classify_reply(const std::string& reply,
                                              std::size_t num_categories);
std::pair<bool, std::vector<std::size_t>> parse_combined_reply(const std::string& reply,
                                                               std::size_t num_categories);

}  // namespace uqe
