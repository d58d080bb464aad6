#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace uqe {

/// Half-open byte range into a query source string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

/// Engine-wide error. `stage` names the pipeline step that raised it
/// (parse, validate, plan, bind, execute, oracle, ingest); `code` is a
/// stable machine-checkable tag.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, std::string code, const std::string& message,
        std::optional<Span> span = std::nullopt)
      : std::runtime_error("[" + stage + "] " + message +
                           (span ? " at bytes [" + std::to_string(span->begin) + ", " +
                                       std::to_string(span->end) + ")"
                                 : "")),
        stage_(std::move(stage)),
        code_(std::move(code)),
        span_(span) {}

  const std::string& stage() const { return stage_; }
  const std::string& code() const { return code_; }
  const std::optional<Span>& span() const { return span_; }

 private:
  std::string stage_;
  std::string code_;
  std::optional<Span> span_;
};

}  // namespace uqe
