#pragma once

#include <string>
#include <vector>

namespace uqe {

/// Prompt template set for an LLM backend. Placeholders: {WHERE_CLAUSE},
/// {ABSTRACT_ATTRIBUTE}, {ATTRIBUTES}, {NUM_CATEGORIES}, {CATEGORY_LIST},
/// {ROW}, {ROWS}, {I}. Deployments override these per dataset; the defaults
/// are dataset-neutral.
struct PromptTemplates {
  std::string judge_system =
      "Read the following record, and only reply <True> if {WHERE_CLAUSE}, or <False> "
      "otherwise.";
  std::string judge_user = "{ROW}";

  // Reply contract: one line per attribute, in order.
  std::string extract_system =
      "Read the following record and extract each of these attributes:\n{ATTRIBUTES}\n"
      "Reply with exactly one line per attribute, in the same order, containing only the "
      "extracted value.";
  std::string extract_user = "{ROW}";

  std::string taxonomy_system =
      "The following are records. Records start with headers such as **record_1**, "
      "**record_2**, and so on.\n"
      "Your task is to analyze all the records, and summarize \"{ABSTRACT_ATTRIBUTE}\" into "
      "groups. Please output the table of your analysis, in the format of pairs of "
      "(\"{ABSTRACT_ATTRIBUTE}\", number_of_records belong to that). Specifically in the "
      "format as:\ngroup 1,number_of_records\ngroup 2,number_of_records\n...";
  std::string taxonomy_user = "Below are the records: \n{ROWS}";
  std::string rows_item_header = "**record_{I}**: \n";

  std::string classify_system =
      "Read the given record, and classify {ABSTRACT_ATTRIBUTE}, into one or several "
      "categories below. Here are the description of the {NUM_CATEGORIES} categories: "
      "\n{CATEGORY_LIST}Only reply the index of the category, separated by \",\". Here is "
      "the example format: \n[0, 3]";
  std::string classify_user = "{ROW}";

  // Reply contract: first line <True>/<False>, second line the bracketed
  // category indices (required when the first line is <True>).
  std::string combined_system =
      "Read the given record. First reply <True> if {WHERE_CLAUSE}, or <False> otherwise, "
      "on a line of its own. Then on a second line classify {ABSTRACT_ATTRIBUTE} into one "
      "or several categories below. Here are the description of the {NUM_CATEGORIES} "
      "categories: \n{CATEGORY_LIST}Reply the index of the category, separated by \",\", "
      "in the example format: \n[0, 3]";
  std::string combined_user = "{ROW}";
};

struct ChatPrompt {
  std::string system;
  std::string user;

  std::size_t size() const { return system.size() + user.size(); }
};

/// Prompt construction is a pure function of (templates, operation, inputs);
/// golden-file tests pin the exact bytes.
ChatPrompt build_judge_prompt(const PromptTemplates& t, const std::string& where_clause,
                              const std::string& row_text);
ChatPrompt build_extract_prompt(const PromptTemplates& t,
                                const std::vector<std::string>& attributes,
                                const std::string& row_text);
ChatPrompt build_taxonomy_prompt(const PromptTemplates& t, const std::string& attribute,
                                 const std::vector<std::string>& row_texts);
ChatPrompt build_classify_prompt(const PromptTemplates& t, const std::string& attribute,
                                 const std::vector<std::string>& category_labels,
                                 const std::string& row_text);
ChatPrompt build_combined_prompt(const PromptTemplates& t, const std::string& where_clause,
                                 const std::string& attribute,
                                 const std::vector<std::string>& category_labels,
                                 const std::string& row_text);

/// "[0]: labelA\n[1]: labelB" -- no trailing newline.
std::string render_category_list(const std::vector<std::string>& labels);

}  // namespace uqe
