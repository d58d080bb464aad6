#include "uqe/oracle/prompts.hpp"

#include "uqe/util/text.hpp"

namespace uqe {

std::string render_category_list(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += "\n";
    out += "[" + std::to_string(i) + "]: " + labels[i];
  }
  return out;
}

ChatPrompt build_judge_prompt(const PromptTemplates& t, const std::string& where_clause,
                              const std::string& row_text) {
  return {replace_all(t.judge_system, "{WHERE_CLAUSE}", where_clause),
          replace_all(t.judge_user, "{ROW}", row_text)};
}

ChatPrompt build_extract_prompt(const PromptTemplates& t,
                                const std::vector<std::string>& attributes,
                                const std::string& row_text) {
  std::string attrs;
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (i) attrs += "\n";
    attrs += "[" + std::to_string(i) + "]: " + attributes[i];
  }
  return {replace_all(t.extract_system, "{ATTRIBUTES}", attrs),
          replace_all(t.extract_user, "{ROW}", row_text)};
}

ChatPrompt build_taxonomy_prompt(const PromptTemplates& t, const std::string& attribute,
                                 const std::vector<std::string>& row_texts) {
  std::string rows;
  for (std::size_t i = 0; i < row_texts.size(); ++i) {
    if (i) rows += "\n";
    rows += replace_all(t.rows_item_header, "{I}", std::to_string(i)) + row_texts[i];
  }
  return {replace_all(t.taxonomy_system, "{ABSTRACT_ATTRIBUTE}", attribute),
          replace_all(t.taxonomy_user, "{ROWS}", rows)};
}

ChatPrompt build_classify_prompt(const PromptTemplates& t, const std::string& attribute,
                                 const std::vector<std::string>& category_labels,
                                 const std::string& row_text) {
  std::string sys = replace_all(t.classify_system, "{ABSTRACT_ATTRIBUTE}", attribute);
  sys = replace_all(std::move(sys), "{NUM_CATEGORIES}", std::to_string(category_labels.size()));
  sys = replace_all(std::move(sys), "{CATEGORY_LIST}", render_category_list(category_labels));
  return {std::move(sys), replace_all(t.classify_user, "{ROW}", row_text)};
}

ChatPrompt build_combined_prompt(const PromptTemplates& t, const std::string& where_clause,
                                 const std::string& attribute,
                                 const std::vector<std::string>& category_labels,
                                 const std::string& row_text) {
  std::string sys = replace_all(t.combined_system, "{WHERE_CLAUSE}", where_clause);
  sys = replace_all(std::move(sys), "{ABSTRACT_ATTRIBUTE}", attribute);
  sys = replace_all(std::move(sys), "{NUM_CATEGORIES}", std::to_string(category_labels.size()));
  sys = replace_all(std::move(sys), "{CATEGORY_LIST}", render_category_list(category_labels));
  return {std::move(sys), replace_all(t.combined_user, "{ROW}", row_text)};
}

}  // namespace uqe
