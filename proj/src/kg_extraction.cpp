#include "kgrag/kg_extraction.hpp"

#include <fstream>
#include <set>
#include <utility>

#include "json.hpp"
#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag {
namespace {

using nlohmann::json;

constexpr const char* kInstruction =
    "You are an NLP assistant. Given a piece of text, you need to analyze its semantic "
    "information and generate a knowledge graph. Your output consists only of triples, "
    "considering only the text content, and avoiding newline characters. For example, "
    "(entity; relationship; entity),(entity; relationship; entity). The knowledge graph "
    "should be comprehensive, covering all information in the text.";

bool ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

PromptTemplate::PromptTemplate(std::string instruction, std::vector<PromptExample> examples,
                               std::string language)
    : instruction_(std::move(instruction)),
      examples_(std::move(examples)),
      language_(std::move(language)) {
  if (instruction_.empty()) {
    raise(ErrorCode::InvalidArgument, "prompt template needs an instruction");
  }
  if (examples_.empty()) {
    raise(ErrorCode::InvalidArgument, "prompt template needs at least one example");
  }
  if (language_ != "english" && language_ != "chinese") {
    raise(ErrorCode::InvalidArgument,
          "prompt template language must be \"english\" or \"chinese\", got \"" + language_ +
              "\"");
  }
}

std::string PromptTemplate::hash() const {
  std::string canon = instruction_;
  canon.push_back('\x1f');
  for (const auto& ex : examples_) {
    canon += ex.text;
    canon.push_back('\x1e');
    canon += ex.triples;
    canon.push_back('\x1f');
  }
  canon += language_;
  return to_hex(fnv1a64(canon));
}

PromptTemplate english_template() {
  std::vector<PromptExample> examples;
  examples.push_back(
      {"Adam Collis is an American filmmaker and actor. He attended the Duke University "
       "from 1986 to 1990 and the University of California, Los Angeles from 2007 to 2010. "
       "He also studied cinema at the University of Southern California from 1991 to 1997. "
       "Collis first work was the assistant director for the Scott Derrickson's short "
       "\"Love in the Ruins\" (1995). In 1998, he played \"Crankshaft\" in Eric Koyanagi's "
       "\"Hundred Percent\".",
       "(Adam Collis; nationality; American),(Adam Collis; profession; filmmaker),"
       "(Adam Collis; profession; actor),(Adam Collis; education; Duke University),"
       "(Adam Collis; education; University of California, Los Angeles),"
       "(Adam Collis; education; University of Southern California),"
       "(Adam Collis; attended; Duke University),"
       "(Adam Collis; attended; University of California, Los Angeles),"
       "(Adam Collis; attended; University of Southern California),"
       "(Adam Collis; first work; assistant director),"
       "(Adam Collis; work; \"Love in the Ruins\"),"
       "(\"Love in the Ruins\"; director; Scott Derrickson),"
       "(Adam Collis; work date; 1995),(Adam Collis; role; \"Crankshaft\"),"
       "(\"Hundred Percent\"; director; Eric Koyanagi),"
       "(Adam Collis; work; \"Hundred Percent\"),(Adam Collis; work date; 1998)"});
  examples.push_back(
      {"Tyler Bates (born June 5, 1965) is an American musician, music producer, and "
       "composer for films, television, and video games. Much of his work is in the action "
       "and horror film genres, with films like \"Dawn of the Dead, 300, Sucker Punch,\" "
       "and \"John Wick.\" He has collaborated with directors like Zack Snyder, Rob Zombie, "
       "Neil Marshall, William Friedkin, Scott Derrickson, and James Gunn. With Gunn, he "
       "has scored every one of the director's films; including \"Guardians of the "
       "Galaxy\", which became one of the highest grossing domestic movies of 2014, and "
       "its 2017 sequel. In addition, he is also the lead guitarist of the American rock "
       "band Marilyn Manson, and produced its albums \"The Pale Emperor\" and \"Heaven "
       "Upside Down\".",
       "(Tyler Bates; birthdate; June 5, 1965),(Tyler Bates; nationality; American),"
       "(Tyler Bates; profession; musician),(Tyler Bates; profession; music producer),"
       "(Tyler Bates; profession; composer),(Tyler Bates; works in; films),"
       "(Tyler Bates; works in; television),(Tyler Bates; works in; video games),"
       "(Tyler Bates; specializes in; action and horror film genres),"
       "(Tyler Bates; notable films; \"Dawn of the Dead\"),"
       "(Tyler Bates; notable films; \"300\"),(Tyler Bates; notable films; \"Sucker "
       "Punch\"),(Tyler Bates; notable films; \"John Wick\"),"
       "(Tyler Bates; collaborations; Zack Snyder),(Tyler Bates; collaborations; Rob "
       "Zombie),(Tyler Bates; collaborations; Neil Marshall),"
       "(Tyler Bates; collaborations; William Friedkin),"
       "(Tyler Bates; collaborations; Scott Derrickson),"
       "(Tyler Bates; collaborations; James Gunn),(Tyler Bates; collaborations; James "
       "Gunn),(Tyler Bates; collaborations; James Gunn),"
       "(Tyler Bates; scored; \"Guardians of the Galaxy\"),"
       "(\"Guardians of the Galaxy\"; release year; 2014),"
       "(\"Guardians of the Galaxy\"; grossing; high),"
       "(\"Guardians of the Galaxy\"; sequel; released in 2017),"
       "(Tyler Bates; lead guitarist; Marilyn Manson),"
       "(Marilyn Manson; music albums; \"The Pale Emperor\"),"
       "(Marilyn Manson; music albums; \"Heaven Upside Down\")"});
  return PromptTemplate(kInstruction, std::move(examples), "english");
}

PromptTemplate chinese_template() {
  std::vector<PromptExample> examples;
  examples.push_back(
      {"To foster a positive atmosphere regarding children's eye health across society and "
       "continually advance comprehensive efforts to prevent and control myopia among "
       "children and adolescents, the National Health Commission has decided to launch the "
       "nationwide \"Bright Vision Initiative\" – a health promotion campaign for "
       "preventing and controlling myopia in children and adolescents. They have also "
       "issued the \"Ten Core Knowledge Points for Preventing and Controlling Myopia in "
       "Children and Adolescents.\"The theme of this initiative is \"Prioritize Children's "
       "Eye Health, Safeguard Children's Clear Vision.\" Emphasizing prevention as the "
       "primary approach, it aims to shift the focus to earlier stages, advocating for "
       "joint actions by families and society as a whole. The goal is to create a "
       "visual-friendly environment that promotes eye care and protection, ensuring "
       "children have bright futures.",
       "(The National Health Commission; launches; \"Enlightenment Action\" - health "
       "promotion activities for preventing and controlling myopia in children and "
       "adolescents), (\"Enlightenment Action\" - health promotion activities for "
       "preventing and controlling myopia in children and adolescents; theme; emphasizing "
       "children's eye care; guarding children's clear vision \"sight\" field), (The "
       "National Health Commission; issues; \"Top Ten Core Knowledge on Preventing and "
       "Controlling Myopia in Children and Adolescents\"), (\"Top Ten Core Knowledge on "
       "Preventing and Controlling Myopia in Children and Adolescents\"; type; scientific "
       "knowledge on preventing and controlling myopia), (The National Health Commission; "
       "requires; conducting social publicity and health education),(Social publicity and "
       "health education; utilizing; internet, radio and television, newspapers and "
       "magazines, posters and bulletin boards, training seminars), (Health education; "
       "objective; popularizing scientific knowledge on preventing myopia), (Health "
       "education; target; the general public), (Health education; focus; \"Top Ten Core "
       "Knowledge on Preventing and Controlling Myopia in Children and Adolescents\"), "
       "(Health education; method; innovative educational approaches and media), (Health "
       "education; purpose; enhancing specificity, precision, and effectiveness), (Health "
       "education; tool; internet media)"});
  examples.push_back(
      {"Pushing forward nationwide fitness is a long-term task that requires persistent "
       "efforts. Sustaining and stimulating people's enthusiasm for fitness, meeting "
       "diverse demands for sports consumption, all require meticulous efforts. In recent "
       "years, various regions have taken multiple measures to encourage public "
       "participation in sports and fitness, making considerable efforts in this regard. "
       "To boost enthusiasm for exercise among the public, some places have come up with "
       "innovative ideas. Recently, Xi'an, Shaanxi Province, allocated 5 million yuan in "
       "sports electronic consumption vouchers. Citizens who receive these vouchers can "
       "use them at 173 sports venues across the city. The issuance of sports consumption "
       "vouchers has not only encouraged public participation in fitness activities but "
       "also boosted the operation of sports venues, further unleashing the potential for "
       "sports consumption. The goal is not just to encourage regular fitness but also to "
       "ensure that people know how to exercise effectively.",
       "(National Fitness; nature; long-term task), (National Fitness; requires; "
       "persistent efforts), (Stimulating fitness enthusiasm; goal; meeting diverse sports "
       "consumption demands), (Stimulating fitness enthusiasm; method; meticulous "
       "efforts), (Local actions; initiative; taking multiple measures to encourage public "
       "participation in sports and fitness), (Local actions; provision; providing diverse "
       "sports services), (Local actions; effort; meticulous efforts), (Xi'an, Shaanxi "
       "Province; action; distributing 5 million yuan worth of electronic sports "
       "consumption vouchers),"});
  return PromptTemplate(kInstruction, std::move(examples), "chinese");
}

std::string build_extraction_prompt(const PromptTemplate& tmpl, const std::string& doc_text) {
  if (normalize_text(doc_text).empty()) {
    raise(ErrorCode::InvalidArgument, "cannot build an extraction prompt for empty text");
  }
  std::string prompt = tmpl.instruction();
  for (const auto& ex : tmpl.examples()) {
    prompt += "\n#\nText: ";
    prompt += ex.text;
    prompt += "\nTriples: ";
    prompt += ex.triples;
  }
  prompt += "\n#\nText: ";
  prompt += doc_text;
  prompt += "\nTriples:";
  return prompt;
}

ParsedTriples parse_triples(const std::string& reply, const std::string& source_doc) {
  ParsedTriples out;
  const auto first = reply.find('(');
  const auto last = reply.rfind(')');
  if (first == std::string::npos || last == std::string::npos || last < first) {
    return out;
  }
  const std::string blob = reply.substr(first, last - first + 1);

  // split candidate groups at ")  ,  (" boundaries, separator consumed
  std::vector<std::string> pieces;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < blob.size()) {
    if (blob[i] == ')') {
      std::size_t j = i + 1;
      while (j < blob.size() && ascii_space(blob[j])) ++j;
      if (j < blob.size() && blob[j] == ',') {
        ++j;
        while (j < blob.size() && ascii_space(blob[j])) ++j;
        if (j < blob.size() && blob[j] == '(') {
          pieces.push_back(blob.substr(start, i - start));
          start = j + 1;
          i = j + 1;
          continue;
        }
      }
    }
    ++i;
  }
  pieces.push_back(blob.substr(start));

  std::set<std::array<std::string, 3>> seen;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    std::string group = pieces[p];
    if (p == 0 && !group.empty() && group.front() == '(') group.erase(0, 1);
    if (p + 1 == pieces.size() && !group.empty() && group.back() == ')') group.pop_back();

    std::vector<std::string> parts;
    std::size_t field_start = 0;
    while (true) {
      const auto semi = group.find(';', field_start);
      if (semi == std::string::npos) {
        parts.push_back(normalize_text(group.substr(field_start)));
        break;
      }
      parts.push_back(normalize_text(group.substr(field_start, semi - field_start)));
      field_start = semi + 1;
    }

    if (parts.size() == 3 && !parts[0].empty() && !parts[1].empty() && !parts[2].empty()) {
      std::array<std::string, 3> key{parts[0], parts[1], parts[2]};
      if (seen.insert(key).second) {
        out.triples.push_back({parts[0], parts[1], parts[2], source_doc});
      }
    } else {
      ++out.skipped;
    }
  }
  return out;
}

std::string format_triple(const Triple& triple) {
  return "(" + triple.head + "; " + triple.relation + "; " + triple.tail + ")";
}

std::vector<Triple> extract_document_kg(const Document& doc, CompletionProvider& provider,
                                        const PromptTemplate& tmpl, const WarningSink& warn) {
  const std::string prompt = build_extraction_prompt(tmpl, doc.text);
  std::string reply;
  try {
    reply = provider.complete(prompt);
  } catch (const Error& e) {
    raise(e.code(), "extraction failed for document \"" + doc.id + "\": " + e.what());
  }
  ParsedTriples parsed = parse_triples(reply, doc.id);
  if (warn) {
    if (parsed.skipped > 0) {
      warn("document \"" + doc.id + "\": skipped " + std::to_string(parsed.skipped) +
           " malformed triple group(s)");
    }
    if (parsed.triples.empty()) {
      warn("document \"" + doc.id + "\": extraction produced no triples");
    }
  }
  return std::move(parsed.triples);
}

ExtractionCache::ExtractionCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // nothing cached yet
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) continue;  // best-effort cache
    if (!record.contains("doc_id") || !record.contains("template_hash") ||
        !record.contains("model") || !record.contains("triples")) {
      continue;
    }
    std::vector<std::array<std::string, 3>> triples;
    bool ok = record["triples"].is_array();
    if (ok) {
      for (const auto& t : record["triples"]) {
        if (!t.is_array() || t.size() != 3) {
          ok = false;
          break;
        }
        triples.push_back({t[0].get<std::string>(), t[1].get<std::string>(),
                           t[2].get<std::string>()});
      }
    }
    if (!ok) continue;
    std::string key = record["doc_id"].get<std::string>();
    key.push_back('\x1f');
    key += record["template_hash"].get<std::string>();
    key.push_back('\x1f');
    key += record["model"].get<std::string>();
    entries_[std::move(key)] = std::move(triples);
  }
}

std::optional<std::vector<Triple>> ExtractionCache::lookup(const std::string& doc_id,
                                                           const std::string& template_hash,
                                                           const std::string& model) {
  std::string key = doc_id;
  key.push_back('\x1f');
  key += template_hash;
  key.push_back('\x1f');
  key += model;
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++stats_.misses;
    return std::nullopt;
  }
  ++stats_.hits;
  std::vector<Triple> out;
  out.reserve(it->second.size());
  for (const auto& t : it->second) {
    out.push_back({t[0], t[1], t[2], doc_id});
  }
  return out;
}

void ExtractionCache::store(const std::string& doc_id, const std::string& template_hash,
                            const std::string& model, const std::vector<Triple>& triples) {
  json rendered = json::array();
  std::vector<std::array<std::string, 3>> flat;
  flat.reserve(triples.size());
  for (const auto& t : triples) {
    rendered.push_back(json::array({t.head, t.relation, t.tail}));
    flat.push_back({t.head, t.relation, t.tail});
  }
  json record = {{"doc_id", doc_id},
                 {"template_hash", template_hash},
                 {"model", model},
                 {"triples", std::move(rendered)}};

  std::ofstream out(path_, std::ios::app);
  if (!out) {
    raise(ErrorCode::Io, "cannot append to extraction cache at " + path_);
  }
  out << record.dump() << "\n";
  if (!out) {
    raise(ErrorCode::Io, "write to extraction cache failed at " + path_);
  }

  std::string key = doc_id;
  key.push_back('\x1f');
  key += template_hash;
  key.push_back('\x1f');
  key += model;
  entries_[std::move(key)] = std::move(flat);
}

}  // namespace kgrag
