#include "medq/eval/prompt.hpp"

#include "medq/error.hpp"

namespace medq::eval {

namespace {

constexpr std::string_view kHead =
    "You are a medical AI assistant. Please answer the following\n"
    "question based on the provided medical image. ";

constexpr std::string_view kTail =
    "\n\nConstraint: Output ONLY the single letter (A, B, C, or D,\n"
    "E, etc) corresponding to the correct answer. No explanation,\n"
    "no punctuation.\n"
    "\n"
    "Answer:";

bool valid_label(char c, std::size_t k) { return c >= 'A' && static_cast<std::size_t>(c - 'A') < k; }

}  // namespace

std::string option_text(const std::vector<std::string>& options) {
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i) out.push_back('\n');
    out.push_back(option_label(i));
    out += ". ";
    out += options[i];
  }
  return out;
}

std::string render_prompt(const std::string& question, const std::vector<std::string>& options) {
  if (options.size() < 2) throw InvalidArgument("prompt needs at least two options");
  if (options.size() > 26) throw InvalidArgument("prompt supports at most 26 options");
  std::string out(kHead);
  out += question;
  out += "\n\n";
  out += option_text(options);
  out += kTail;
  return out;
}

std::string render_prompt(const QAPair& pair) { return render_prompt(pair.question, pair.options); }

std::optional<char> extract_answer(std::string_view response, std::size_t k) {
  const auto first = response.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos) {
    const auto last = response.find_last_not_of(" \t\r\n");
    const auto trimmed = response.substr(first, last - first + 1);
    if (trimmed.size() == 1 && valid_label(trimmed[0], k)) return trimmed[0];
  }
  for (char c : response) {
    if (valid_label(c, k)) return c;
  }
  return std::nullopt;
}

}  // namespace medq::eval
