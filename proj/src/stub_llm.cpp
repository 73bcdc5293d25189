#include "larag/stub_llm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "larag/benchgen.hpp"
#include "larag/clock.hpp"
#include "larag/error.hpp"
#include "larag/eval_harness.hpp"
#include "larag/intent_classifier.hpp"
#include "larag/prompts.hpp"

namespace larag {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + sep.size();
  }
  return out;
}

std::vector<std::string> lines_of(std::string_view s) {
  std::vector<std::string> out;
  std::stringstream ss{std::string(s)};
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

// Text after `header` up to `end` (or the end of the prompt).
std::string section(const std::string& prompt, std::string_view header, std::string_view end) {
  auto b = prompt.find(header);
  if (b == std::string::npos) return {};
  b += header.size();
  auto e = end.empty() ? std::string::npos : prompt.find(end, b);
  return prompt.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

// Value on the line starting with `prefix`.
std::string line_value(const std::string& prompt, std::string_view prefix) {
  for (const auto& line : lines_of(prompt))
    if (line.rfind(prefix, 0) == 0) return trim(std::string_view(line).substr(prefix.size()));
  return {};
}

std::string user_text(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it)
    if (it->role == "user") return it->content;
  return {};
}

std::string system_text(const ChatRequest& request) {
  for (const auto& m : request.messages)
    if (m.role == "system") return m.content;
  return {};
}

std::string padded(std::string_view text) { return " " + normalize_words(text) + " "; }

bool contains_form(const std::string& haystack_padded, const std::string& form) {
  for (const char* suffix : {"", "s", "es"})
    if (haystack_padded.find(" " + form + suffix + " ") != std::string::npos) return true;
  return false;
}

struct StubEvent {
  std::string tag;
  double start_s = 0.0;
};

std::string event_list(const std::vector<StubEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    if (!out.empty()) out += ", ";
    out += fmt::format("{} at {}", e.tag, format_hms(e.start_s));
  }
  return out;
}

std::string summarize(const std::vector<StubEvent>& events) {
  std::map<std::string, std::vector<double>> by_tag;
  for (const auto& e : events) by_tag[e.tag].push_back(e.start_s);
  if (by_tag.empty()) return std::string(bench::kNoEventsBullet);
  std::string out;
  for (const auto& [tag, starts] : by_tag) {
    if (!out.empty()) out += '\n';
    auto [lo, hi] = std::minmax_element(starts.begin(), starts.end());
    out += bench::summary_bullet(tag, static_cast<std::int64_t>(starts.size()), *lo, *hi);
  }
  return out;
}

std::string answer_kind(StubQuestionKind kind, const std::optional<std::string>& tag,
                        const std::vector<StubEvent>& matching) {
  const auto n = matching.size();
  switch (kind) {
    case StubQuestionKind::detection:
      if (!tag || n == 0) return "No.";
      return fmt::format("Yes. {} event(s): {}.", n, event_list(matching));
    case StubQuestionKind::counting:
      if (!tag) return "0 event(s).";
      if (n == 0) return fmt::format("0 event(s) of {}.", *tag);
      return fmt::format("{} event(s) of {}: {}.", n, *tag, event_list(matching));
    case StubQuestionKind::summary:
      return summarize(matching);
  }
  return {};
}

std::string sql_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

std::string sql_time_filter(const TimeInterval& iv) {
  std::string out;
  for (const auto& span : iv.spans()) {
    if (!out.empty()) out += " OR ";
    out += fmt::format("(start_s >= {} AND start_s < {})", span.start_s, span.end_s);
  }
  return "(" + out + ")";
}

TimeInterval interval_or_day(std::string_view question, const ShiftConfig& shifts) {
  return resolve_rules(question, shifts).value_or(TimeInterval::full_day());
}

const std::vector<std::string>& builtin_tags() {
  static const std::vector<std::string> kTags = [] {
    std::vector<std::string> all = bench::DomainConfig::industrial_iot().classes;
    const auto home = bench::DomainConfig::home_iot().classes;
    all.insert(all.end(), home.begin(), home.end());
    return all;
  }();
  return kTags;
}

}  // namespace

StubQuestionKind guess_question_kind(std::string_view question) {
  const std::string q = padded(question);
  for (const char* k : {" how many ", " count ", " number of ", " how often "})
    if (q.find(k) != std::string::npos) return StubQuestionKind::counting;
  for (const char* k : {" summarize ", " summarise ", " summary ", " overview ", " what happened ", " recap "})
    if (q.find(k) != std::string::npos) return StubQuestionKind::summary;
  return StubQuestionKind::detection;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
    }
  return d[n][m];
}

std::string repair_time_text(std::string_view text) {
  static const std::vector<std::string> kVocabulary = {
      "between", "after", "before", "until", "since", "during", "first", "last", "second", "half",
      "hours", "hour", "minutes", "minute", "morning", "afternoon", "evening", "night", "shift", "noon",
      "midnight", "whole", "entire", "throughout", "from", "through", "today", "recording", "start"};
  // Near-misses of these would be rewritten into the wrong word.
  static const std::set<std::string> kKeep = {"there", "were", "where", "other", "hear", "heard", "with", "this",
                                              "that", "what", "many", "much", "time", "times", "tags", "sound",
                                              "sounds", "does", "door", "dogs", "barks", "horns", "event", "events"};
  static const std::vector<std::pair<std::regex, std::string>> kColloquial = {
      {std::regex(R"(\blunch\s*time\b|\blunch\b)"), " between 12:00 and 13:00 "},
      {std::regex(R"(\bbusiness hours\b|\boffice hours\b|\bworking hours\b)"), " between 09:00 and 17:00 "},
      {std::regex(R"(\blate (?:at )?night\b)"), " between 22:00 and 24:00 "},
      {std::regex(R"(\bearly (?:in the )?morning\b|\bdawn\b)"), " between 05:00 and 08:00 "},
      {std::regex(R"(\bovernight\b)"), " during the night shift "},
      {std::regex(R"(\btonight\b)"), " between 18:00 and 24:00 "},
      {std::regex(R"(\bround the clock\b|\baround the clock\b|\bat all\b)"), " all day "},
  };

  std::string s = to_lower(text);
  s = std::regex_replace(s, std::regex(R"(\b(\d{1,2})\.(\d{2})\b)"), "$1:$2");
  s = std::regex_replace(s, std::regex(R"(\b([ap])\s+m\b)"), "$1m");
  s = std::regex_replace(s, std::regex(R"(\bhrs?\b)"), "hours");

  std::string repaired;
  std::stringstream ss(s);
  for (std::string word; ss >> word;) {
    std::string core = word;
    std::string tail;
    while (!core.empty() && std::ispunct(static_cast<unsigned char>(core.back()))) {
      tail.insert(tail.begin(), core.back());
      core.pop_back();
    }
    const bool alpha = !core.empty() && std::all_of(core.begin(), core.end(), [](unsigned char c) { return std::isalpha(c); });
    if (alpha && core.size() >= 4 && !kKeep.count(core) &&
        std::find(kVocabulary.begin(), kVocabulary.end(), core) == kVocabulary.end()) {
      std::size_t best = 99;
      std::string best_word;
      for (const auto& v : kVocabulary) {
        const std::size_t d = edit_distance(core, v);
        if (d < best) {
          best = d;
          best_word = v;
        }
      }
      const std::size_t allowed = core.size() >= 7 ? 2 : 1;
      if (best <= allowed) core = best_word;
    }
    if (!repaired.empty()) repaired += ' ';
    repaired += core + tail;
  }
  for (const auto& [re, replacement] : kColloquial) repaired = std::regex_replace(repaired, re, replacement);
  return repaired;
}

StubLlmClient::StubLlmClient() : StubLlmClient(std::map<std::string, std::vector<std::string>>{}) {}

StubLlmClient::StubLlmClient(std::map<std::string, std::vector<std::string>> extra_synonyms) {
  for (const auto& domain : {bench::DomainConfig::industrial_iot(), bench::DomainConfig::home_iot()})
    for (const auto& [tag, list] : domain.synonyms)
      for (const auto& s : list) forms_[tag].push_back(normalize_words(s));
  for (const auto& [tag, list] : extra_synonyms)
    for (const auto& s : list) forms_[tag].push_back(normalize_words(s));
}

std::optional<std::string> StubLlmClient::link_tag(std::string_view text, const std::vector<std::string>& vocabulary) const {
  const std::string hay = padded(text);
  std::optional<std::string> best;
  std::size_t best_len = 0;
  for (const auto& tag : vocabulary) {
    std::vector<std::string> forms = {normalize_words(tag), normalize_words(humanize_tag(tag))};
    if (auto it = forms_.find(tag); it != forms_.end()) forms.insert(forms.end(), it->second.begin(), it->second.end());
    for (const auto& f : forms) {
      if (f.empty() || f.size() <= best_len) continue;
      if (contains_form(hay, f)) {
        best = tag;
        best_len = f.size();
      }
    }
  }
  return best;
}

std::string StubLlmClient::complete(const ChatRequest& request) {
  const auto task = prompts::task_of(request);
  if (!task) throw ClientError(ErrorCode::MalformedResponse, "stub request has no task marker");
  const std::string prompt = user_text(request);
  if (*task == "answer-detection" || *task == "answer-counting" || *task == "answer-summary")
    return answer_from_evidence(*task, prompt);
  if (*task == "rephrase") return rephrase(prompt);
  if (*task == "time-resolution") return time_resolution(request);
  if (*task == "judge") return judge(prompt);
  if (*task == "text2sql") return text2sql(prompt);
  if (*task == "sql-answer") return sql_answer(prompt);
  if (*task == "rag-answer") return rag_answer(prompt);
  if (*task == "anomaly-explain") return anomaly_explain(prompt);
  return "I can only answer from the provided event log.";
}

std::string StubLlmClient::answer_from_evidence(const std::string& task, const std::string& prompt) const {
  const auto vocabulary = split(line_value(prompt, "Known sound tags (closed set):"), ",");
  const std::string question = line_value(prompt, "Question:");
  std::vector<StubEvent> events;
  const std::string block = section(prompt, "confidence | loudness:\n", "\n\n");
  for (const auto& line : lines_of(block)) {
    const auto cols = split(line, "|");
    if (cols.size() < 2) continue;
    const auto range = split(cols[0], "\xE2\x80\x93");
    auto start = parse_hms(range[0]);
    if (start) events.push_back({cols[1], *start});
  }
  const auto tag = link_tag(question, vocabulary);
  const StubQuestionKind kind = task == "answer-detection"  ? StubQuestionKind::detection
                                : task == "answer-counting" ? StubQuestionKind::counting
                                                            : StubQuestionKind::summary;
  std::vector<StubEvent> matching;
  for (const auto& e : events)
    if (kind == StubQuestionKind::summary ? (!tag || e.tag == *tag) : (tag && e.tag == *tag)) matching.push_back(e);
  return answer_kind(kind, tag, matching);
}

std::string StubLlmClient::rephrase(const std::string& prompt) const {
  const std::string query = trim(line_value(prompt, "Latest user message:"));
  const std::string lower = to_lower(query);
  std::string tail;
  if (lower.rfind("and ", 0) == 0)
    tail = trim(std::string_view(query).substr(4));
  else if (lower.rfind("what about ", 0) == 0)
    tail = trim(std::string_view(query).substr(11));
  else
    return query;

  std::string previous;
  for (const auto& line : lines_of(section(prompt, "Conversation so far (oldest first):\n", "\n\nLatest user message:")))
    if (line.rfind("user: ", 0) == 0) previous = line.substr(6);
  if (previous.empty()) return query;

  static const char* kTimeStarts[] = {" this ", " in the ", " during ", " between ", " after ", " before ",
                                      " since ", " until ", " from ", " today", " at ", " over ",
                                      " throughout ", " within ", " on the "};
  const std::string prev_lower = " " + to_lower(previous) + " ";
  std::size_t cut = std::string::npos;
  for (const char* marker : kTimeStarts) cut = std::min(cut, prev_lower.find(marker));
  std::string head = cut == std::string::npos ? previous : previous.substr(0, cut);
  while (!head.empty() && (std::ispunct(static_cast<unsigned char>(head.back())) || head.back() == ' ')) head.pop_back();

  const std::string head_words = padded(head);
  if (head_words.rfind(" how many ", 0) == 0) {
    bool has_verb = false;
    for (const char* v : {" occur ", " occurred ", " were ", " was ", " did ", " happen ", " happened ", " are ", " is "})
      has_verb = has_verb || head_words.find(v) != std::string::npos;
    if (!has_verb) head += " occurred";
  }
  std::string out = head + " " + tail;
  if (!out.empty() && out.back() != '?' && out.back() != '.') out += '?';
  return out;
}

std::string StubLlmClient::time_resolution(const ChatRequest& request) const {
  ShiftConfig shifts;
  static const std::regex kShiftLine(R"(^- ([a-z_]+): (\d\d:\d\d:\d\d)-(\d\d:\d\d:\d\d)$)");
  for (const auto& line : lines_of(system_text(request))) {
    std::smatch m;
    if (!std::regex_match(line, m, kShiftLine)) continue;
    auto s = parse_hms(m[2].str()), e = parse_hms(m[3].str());
    if (s && e) shifts.shifts.emplace_back(m[1].str(), Span{*s, *e});
  }
  if (shifts.shifts.empty()) shifts = ShiftConfig::defaults();
  const auto hit = resolve_rules(repair_time_text(user_text(request)), shifts);
  if (!hit || hit->continuation) return "NONE";
  return fmt::format(R"({{"start":"{}","end":"{}"}})", format_hms(hit->start_s), format_hms(hit->end_s));
}

std::string StubLlmClient::judge(const std::string& prompt) const {
  const std::string category = line_value(prompt, "Category:");
  const std::string reference = trim(section(prompt, "Reference answer:\n", "\n\nSystem answer:"));
  const std::string answer = trim(section(prompt, "System answer:\n", "\n\nReply with"));
  if (category == "summary" || category == "anomaly")
    return std::to_string(score_summary_recall(answer, reference).value);
  static const std::regex kInt(R"(-?\d+)");
  std::smatch a, r;
  if (category == "counting") {
    if (!std::regex_search(answer, a, kInt) || !std::regex_search(reference, r, kInt)) return "1";
    return a.str() == r.str() ? "5" : "2";
  }
  auto polarity = [](const std::string& text) -> int {
    const std::string w = padded(text);
    const auto yes = w.find(" yes "), no = std::min(w.find(" no "), w.find(" none "));
    if (yes == std::string::npos && no == std::string::npos) return 0;
    return yes < no ? 1 : -1;
  };
  const int pa = polarity(answer), pr = polarity(reference);
  if (pa == 0) return "1";
  return pa == pr ? "5" : "2";
}

std::string StubLlmClient::text2sql(const std::string& prompt) const {
  const auto vocabulary = split(line_value(prompt, "Known tags:"), ",");
  const std::string audio_id = line_value(prompt, "audio_id for this recording:");
  const std::string question = trim(section(prompt, "retrieves what is needed to answer:\n", "\n\nReply with"));
  const auto tag = link_tag(question, vocabulary);
  const TimeInterval iv = interval_or_day(question, ShiftConfig::defaults());
  const std::string where = fmt::format("audio_id = {} AND {}", sql_quote(audio_id), sql_time_filter(iv));
  if (guess_question_kind(question) == StubQuestionKind::summary) {
    return fmt::format(
        "SELECT tag, COUNT(*) AS n, MIN(start_s) AS first_s, MAX(start_s) AS last_s FROM events WHERE {}{} "
        "GROUP BY tag ORDER BY tag",
        where, tag ? " AND tag = " + sql_quote(*tag) : std::string());
  }
  return fmt::format("SELECT COUNT(*) FROM events WHERE {} AND {}", where,
                     tag ? "tag = " + sql_quote(*tag) : std::string("0 = 1"));
}

std::string StubLlmClient::sql_answer(const std::string& prompt) const {
  const std::string question = line_value(prompt, "Question:");
  const auto rows = lines_of(trim(section(prompt, "Result table:\n", "\n\nAnswer the question")));
  const StubQuestionKind kind = guess_question_kind(question);
  if (rows.empty()) return "The query returned no table.";
  const auto header = split(rows[0], "|");
  if (kind == StubQuestionKind::summary && header.size() >= 4) {
    std::string out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto cols = split(rows[i], "|");
      if (cols.size() < 4) continue;
      if (!out.empty()) out += '\n';
      out += bench::summary_bullet(cols[0], std::stoll(cols[1]), std::stod(cols[2]), std::stod(cols[3]));
    }
    return out.empty() ? std::string(bench::kNoEventsBullet) : out;
  }
  long long n = 0;
  if (rows.size() >= 2) {
    const auto cols = split(rows[1], "|");
    try {
      n = header.size() == 1 ? std::stoll(cols[0]) : static_cast<long long>(rows.size() - 1);
    } catch (const std::exception&) {
      n = static_cast<long long>(rows.size() - 1);
    }
  }
  if (kind == StubQuestionKind::counting) return fmt::format("{} event(s).", n);
  return n > 0 ? fmt::format("Yes. {} event(s).", n) : std::string("No.");
}

std::string StubLlmClient::rag_answer(const std::string& prompt) const {
  const std::string question = line_value(prompt, "Question:");
  static const std::regex kSnippet(R"(^(\S+) at (\d\d:\d\d:\d\d) for [\d.]+s, \S+ LUFS$)");
  std::vector<StubEvent> events;
  std::set<std::pair<std::string, double>> seen;
  for (const auto& line : lines_of(section(prompt, "covers four minutes):\n", "\n\nAnswer the question"))) {
    std::smatch m;
    const std::string l = trim(line);
    if (!std::regex_match(l, m, kSnippet)) continue;
    auto start = parse_hms(m[2].str());
    if (start && seen.emplace(m[1].str(), *start).second) events.push_back({m[1].str(), *start});
  }
  std::vector<std::string> vocabulary = builtin_tags();
  for (const auto& e : events)
    if (std::find(vocabulary.begin(), vocabulary.end(), e.tag) == vocabulary.end()) vocabulary.push_back(e.tag);
  const auto tag = link_tag(question, vocabulary);
  const TimeInterval iv = interval_or_day(question, ShiftConfig::defaults());
  const StubQuestionKind kind = guess_question_kind(question);
  std::vector<StubEvent> matching;
  for (const auto& e : events)
    if (iv.contains(e.start_s) && (kind == StubQuestionKind::summary ? (!tag || e.tag == *tag) : (tag && e.tag == *tag)))
      matching.push_back(e);
  std::sort(matching.begin(), matching.end(),
            [](const StubEvent& a, const StubEvent& b) { return a.start_s < b.start_s || (a.start_s == b.start_s && a.tag < b.tag); });
  return answer_kind(kind, tag, matching);
}

std::string StubLlmClient::anomaly_explain(const std::string& prompt) const {
  const std::string table = section(prompt, "Anomaly table:\n", "\nExplain the anomalies");
  std::vector<std::string> rows;
  for (const auto& line : lines_of(table))
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) rows.push_back(line);
  std::string out = fmt::format("{} anomalies found.", rows.size());
  for (const auto& r : rows) {
    std::stringstream ss(r);
    std::string time, tag, kind;
    ss >> time >> tag >> kind;
    out += fmt::format(" {} at {} ({}).", tag, time, kind);
  }
  if (prompt.find("Manual excerpt:") != std::string::npos) out += " See the manual excerpt for the recommended checks.";
  return out;
}

}  // namespace larag
