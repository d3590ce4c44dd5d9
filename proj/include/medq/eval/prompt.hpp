#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medq/types.hpp"

namespace medq::eval {

/// Options as "A. <text>" lines joined by '\n'.
std::string option_text(const std::vector<std::string>& options);

/// Fills the fixed multiple-choice instruction template. Throws InvalidArgument for fewer
/// than two options.
std::string render_prompt(const std::string& question, const std::vector<std::string>& options);
std::string render_prompt(const QAPair& pair);

/// Answer matching with k options (labels A..):
///   1. the trimmed response is exactly one valid label;
///   2. otherwise the first capital letter in the text that is a valid label;
///   3. otherwise nullopt (scored incorrect).
std::optional<char> extract_answer(std::string_view response, std::size_t k);

}  // namespace medq::eval
