#pragma once

#include <string>

#include "kgrag/providers.hpp"
#include "kgrag/retrieval.hpp"

namespace kgrag {

enum class AnswerStyle { ShortForm, LongForm };

AnswerStyle answer_style_from_name(const std::string& name);  // "short" | "long"

/// Instruction, retrieved triples one "(h; r; t)" line each in score order,
/// then the question on the final line. An empty triple list swaps in a
/// "no retrieved knowledge" notice. A custom template replaces the whole
/// layout via {{triples}} and {{question}} placeholders.
std::string assemble_answer_prompt(const std::string& question,
                                   const RetrievedContext& context, AnswerStyle style,
                                   const std::string& custom_template = "");

std::string load_prompt_template_file(const std::string& path);

/// complete(assemble_answer_prompt(...)), trimmed of surrounding whitespace.
std::string generate_answer(const std::string& question, const RetrievedContext& context,
                            CompletionProvider& completer, AnswerStyle style,
                            const std::string& custom_template = "");

}  // namespace kgrag
