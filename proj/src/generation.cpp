#include "kgrag/generation.hpp"

#include <fstream>

#include "kgrag/error.hpp"
#include "kgrag/kg_extraction.hpp"
#include "kgrag/text.hpp"

namespace kgrag {
namespace {

constexpr const char* kShortFormInstruction =
    "Answer the question using the knowledge triples below. Reply with only the answer, "
    "as a short span of text, with no explanation.";

constexpr const char* kLongFormInstruction =
    "Answer the question using the knowledge triples below. Reply with a complete, "
    "self-contained answer in full sentences.";

constexpr const char* kNoKnowledgeNotice =
    "(no retrieved knowledge; answer from general knowledge)";

std::string render_triples(const RetrievedContext& context) {
  if (context.triples.empty()) return kNoKnowledgeNotice;
  std::string out;
  for (std::size_t i = 0; i < context.triples.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += format_triple(context.triples[i].triple);
  }
  return out;
}

std::string replace_all(std::string text, const std::string& needle,
                        const std::string& replacement) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), replacement);
    pos += replacement.size();
  }
  return text;
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n\f\v");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r\n\f\v");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

AnswerStyle answer_style_from_name(const std::string& name) {
  if (name == "short") return AnswerStyle::ShortForm;
  if (name == "long") return AnswerStyle::LongForm;
  raise(ErrorCode::InvalidArgument,
        "unknown answer style \"" + name + "\" (expected short or long)");
}

std::string assemble_answer_prompt(const std::string& question,
                                   const RetrievedContext& context, AnswerStyle style,
                                   const std::string& custom_template) {
  const std::string q = normalize_text(question);
  if (q.empty()) raise(ErrorCode::InvalidArgument, "question must be nonempty");

  if (!custom_template.empty()) {
    return replace_all(replace_all(custom_template, "{{triples}}", render_triples(context)),
                       "{{question}}", q);
  }

  std::string prompt =
      style == AnswerStyle::ShortForm ? kShortFormInstruction : kLongFormInstruction;
  prompt += "\n\nKnowledge:\n";
  prompt += render_triples(context);
  prompt += "\n\nQuestion:\n";
  prompt += q;
  return prompt;
}

std::string load_prompt_template_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open prompt template " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::Io, "read failed for prompt template " + path);
  if (text.find("{{question}}") == std::string::npos) {
    raise(ErrorCode::InvalidArgument,
          "prompt template " + path + " lacks the {{question}} placeholder");
  }
  return text;
}

std::string generate_answer(const std::string& question, const RetrievedContext& context,
                            CompletionProvider& completer, AnswerStyle style,
                            const std::string& custom_template) {
  const std::string prompt = assemble_answer_prompt(question, context, style, custom_template);
  return trim(completer.complete(prompt));
}

}  // namespace kgrag
