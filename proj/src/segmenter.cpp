#include "biae/segmenter.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "biae/errors.hpp"
#include "biae/text.hpp"

namespace biae {

namespace {

constexpr std::array<std::string_view, 20> kAbbreviations = {
    "e.g.", "i.e.", "etc.", "mr.", "mrs.", "ms.", "dr.", "no.", "vs.", "st.",
    "jr.",  "sr.",  "inc.", "ltd.", "co.", "approx.", "a.m.", "p.m.", "nos.", "cf."};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

CharSpan trim_span(std::string_view s, CharSpan sp) {
  while (sp.start < sp.end && is_space(s[sp.start])) ++sp.start;
  while (sp.end > sp.start && is_space(s[sp.end - 1])) --sp.end;
  return sp;
}

// Also drops a dangling comma or semicolon at the end of a clause.
CharSpan trim_clause(std::string_view s, CharSpan sp) {
  sp = trim_span(s, sp);
  while (sp.end > sp.start && (s[sp.end - 1] == ',' || s[sp.end - 1] == ';')) {
    --sp.end;
    sp = trim_span(s, sp);
  }
  return sp;
}

std::size_t word_count(std::string_view s, CharSpan sp) {
  return text::words(s.substr(sp.start, sp.end - sp.start)).size();
}

bool has_word_content(std::string_view s, CharSpan sp) { return word_count(s, sp) > 0; }

bool ends_abbreviation(std::string_view s, std::size_t begin, std::size_t dot) {
  std::size_t b = dot;
  while (b > begin && !is_space(s[b - 1]) && s[b - 1] != '(' && s[b - 1] != '"') --b;
  auto token = text::to_lower(s.substr(b, dot + 1 - b));
  for (auto abbr : kAbbreviations)
    if (token == abbr) return true;
  // Single-letter initials such as "J." in "J. Smith".
  return token.size() == 2 && std::isalpha(static_cast<unsigned char>(token[0])) &&
         std::isupper(static_cast<unsigned char>(s[b]));
}

// Returns the length of the list marker (plus trailing spaces) at the start of
// `line`, or 0 when the line is not a list item.
std::size_t bullet_marker_length(std::string_view line) {
  auto followed_by_space = [&](std::size_t len) { return line.size() == len || is_space(line[len]); };
  std::size_t len = 0;
  if (line.empty()) return 0;
  if ((line[0] == '*' || line[0] == '-') && followed_by_space(1)) {
    len = 1;
  } else if (line.rfind("\xE2\x80\xA2", 0) == 0 && followed_by_space(3)) {
    len = 3;
  } else {
    std::size_t d = 0;
    while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
    if (d > 0 && d < line.size() && (line[d] == '.' || line[d] == ')') && followed_by_space(d + 1)) len = d + 1;
  }
  while (len > 0 && len < line.size() && is_space(line[len])) ++len;
  return len;
}

// Finds case-insensitive, word-bounded occurrences of `marker` within sp.
std::vector<std::size_t> find_marker(std::string_view s, CharSpan sp, std::string_view marker) {
  std::vector<std::size_t> hits;
  if (sp.end - sp.start < marker.size()) return hits;
  for (std::size_t p = sp.start; p + marker.size() <= sp.end; ++p) {
    if (!text::iequals(s.substr(p, marker.size()), marker)) continue;
    bool left_ok = p == sp.start || !std::isalnum(static_cast<unsigned char>(s[p - 1]));
    bool right_ok = p + marker.size() == sp.end || !std::isalnum(static_cast<unsigned char>(s[p + marker.size()]));
    if (left_ok && right_ok) hits.push_back(p);
  }
  return hits;
}

constexpr std::array<std::string_view, 3> kSubordinators = {"if", "unless", "when"};

void split_clauses(std::string_view s, CharSpan sp, bool in_list, std::vector<CharSpan>& out) {
  sp = trim_clause(s, sp);
  if (!has_word_content(s, sp)) return;

  // Sentence-initial conditional: "If you work, you can claim" splits at the comma.
  for (auto marker : kSubordinators) {
    if (text::starts_with_ci(s.substr(sp.start, sp.end - sp.start), marker) &&
        sp.start + marker.size() < sp.end && is_space(s[sp.start + marker.size()])) {
      auto comma = s.substr(sp.start, sp.end - sp.start).find(", ");
      if (comma != std::string_view::npos) {
        CharSpan left{sp.start, sp.start + comma};
        CharSpan right{sp.start + comma + 1, sp.end};
        if (word_count(s, left) >= 3 && word_count(s, right) >= 2) {
          split_clauses(s, left, in_list, out);
          split_clauses(s, right, in_list, out);
          return;
        }
      }
    }
  }

  // Mid-sentence subordinate clause: split before the marker.
  for (auto marker : kSubordinators) {
    for (auto p : find_marker(s, sp, marker)) {
      if (p == sp.start) continue;
      CharSpan left{sp.start, p};
      CharSpan right{p, sp.end};
      if (word_count(s, left) >= 3 && word_count(s, right) >= 3) {
        split_clauses(s, left, in_list, out);
        split_clauses(s, right, in_list, out);
        return;
      }
    }
  }

  // Coordinated clauses inside list items.
  if (in_list) {
    for (auto p : find_marker(s, sp, "and")) {
      if (p == sp.start) continue;
      CharSpan left{sp.start, p};
      CharSpan right{p + 3, sp.end};
      if (word_count(s, left) >= 3 && word_count(s, right) >= 3) {
        split_clauses(s, left, in_list, out);
        split_clauses(s, right, in_list, out);
        return;
      }
    }
  }

  out.push_back(sp);
}

}  // namespace

std::string_view to_string(PremiseSource s) { return s == PremiseSource::Scenario ? "SCENARIO" : "TURN"; }

std::vector<CharSpan> sentence_spans(std::string_view s, std::size_t begin, std::size_t end) {
  std::vector<CharSpan> out;
  std::size_t start = begin;
  for (std::size_t i = begin; i < end; ++i) {
    char c = s[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    // Absorb repeated terminators and closing quotes/brackets.
    while (j < end && (s[j] == '.' || s[j] == '!' || s[j] == '?' || s[j] == '"' || s[j] == '\'' || s[j] == ')'))
      ++j;
    if (j < end && !is_space(s[j])) continue;
    if (c == '.' && j == i + 1 && ends_abbreviation(s, start, i)) continue;
    auto sp = trim_span(s, {start, j});
    if (sp.end > sp.start) out.push_back(sp);
    start = j;
    i = j - 1;
  }
  auto tail = trim_span(s, {start, end});
  if (tail.end > tail.start) out.push_back(tail);
  return out;
}

std::vector<CharSpan> RuleSegmenter::split(std::string_view doc) const {
  std::vector<CharSpan> units;
  bool in_list = false;
  std::size_t pos = 0;
  while (pos < doc.size()) {
    auto nl = doc.find('\n', pos);
    std::size_t line_end = nl == std::string_view::npos ? doc.size() : nl;
    auto line = trim_span(doc, {pos, line_end});
    pos = line_end + 1;
    if (line.end == line.start) continue;

    auto marker = bullet_marker_length(doc.substr(line.start, line.end - line.start));
    bool is_item = marker > 0;
    if (is_item) line.start += marker;
    if (!is_item) in_list = false;

    for (auto sentence : sentence_spans(doc, line.start, line.end)) {
      split_clauses(doc, sentence, in_list && is_item, units);
    }
    // A colon-terminated line opens a list for the following items.
    if (line.end > line.start && doc[line.end - 1] == ':') in_list = true;
  }
  return units;
}

std::vector<Hypothesis> segment_document(std::string_view document, const Segmenter& segmenter) {
  if (text::trim(document).empty()) throw ValidationError("document is empty or whitespace-only");
  auto spans = segmenter.split(document);
  std::vector<Hypothesis> out;
  std::size_t last_end = 0;
  for (const auto& sp : spans) {
    if (sp.start >= sp.end || sp.end > document.size() || sp.start < last_end)
      throw InternalError("segmenter '" + segmenter.name() + "' produced an invalid span");
    last_end = sp.end;
    Hypothesis h;
    h.index = static_cast<int>(out.size());
    h.span = sp;
    h.text = std::string(text::trim(document.substr(sp.start, sp.end - sp.start)));
    out.push_back(std::move(h));
  }
  if (out.empty()) {
    // Punctuation-only documents still yield one unit.
    auto t = trim_span(document, {0, document.size()});
    out.push_back({0, std::string(document.substr(t.start, t.end - t.start)), t});
  }
  return out;
}

std::vector<Hypothesis> segment_document(std::string_view document) {
  static const RuleSegmenter kDefault;
  return segment_document(document, kDefault);
}

std::vector<std::string> segment_scenario(std::string_view scenario) {
  std::vector<std::string> out;
  for (auto sp : sentence_spans(scenario, 0, scenario.size()))
    out.emplace_back(scenario.substr(sp.start, sp.end - sp.start));
  return out;
}

std::string format_turn(const HistoryTurn& turn) {
  return "System: " + std::string(text::trim(turn.follow_up_question)) + " Client: " +
         std::string(to_string(turn.follow_up_answer));
}

std::vector<Premise> build_premise_set(const std::vector<std::string>& scenario_sentences,
                                       const std::vector<HistoryTurn>& turns) {
  std::vector<Premise> out;
  out.reserve(scenario_sentences.size() + turns.size());
  for (const auto& s : scenario_sentences)
    out.push_back({static_cast<int>(out.size()), s, PremiseSource::Scenario, std::nullopt, std::nullopt});
  for (std::size_t k = 0; k < turns.size(); ++k)
    out.push_back({static_cast<int>(out.size()), format_turn(turns[k]), PremiseSource::Turn, static_cast<int>(k),
                   turns[k].follow_up_answer});
  return out;
}

std::vector<Premise> premises_of(std::string_view scenario, const std::vector<HistoryTurn>& turns) {
  return build_premise_set(segment_scenario(scenario), turns);
}

}  // namespace biae
