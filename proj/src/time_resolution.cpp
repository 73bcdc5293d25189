#include "larag/time_resolution.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <regex>
#include <sstream>

#include "larag/clock.hpp"
#include "larag/error.hpp"

namespace larag {

using nlohmann::json;

ShiftConfig ShiftConfig::defaults() {
  return ShiftConfig{{{"morning", {28800, 57600}},
                      {"day", {28800, 57600}},
                      {"afternoon", {57600, 86400}},
                      {"evening", {57600, 86400}},
                      {"night", {0, 28800}}}};
}

std::optional<Span> ShiftConfig::find(std::string_view name) const {
  for (const auto& [n, span] : shifts)
    if (n == name) return span;
  return std::nullopt;
}

void ShiftConfig::normalize_and_validate() {
  for (auto& [name, span] : shifts) {
    name = to_lower(name);
    if (name.empty()) throw Error(ErrorCode::InvalidArgument, "shift name must be nonempty");
    const bool in_day = span.start_s >= 0 && span.start_s <= kDaySeconds && span.end_s >= 0 && span.end_s <= kDaySeconds;
    if (!in_day || span.start_s == span.end_s)
      throw Error(ErrorCode::InvalidArgument, "shift '" + name + "' has invalid bounds");
  }
}

TimeInterval make_interval(double start_s, double end_s, ExpressionType type, ResolutionSource source) {
  if (start_s >= kDaySeconds) {
    start_s -= kDaySeconds;
    end_s -= kDaySeconds;
  }
  TimeInterval out{start_s, std::min(end_s, kDaySeconds), type, source, std::nullopt};
  if (end_s > kDaySeconds) out.continuation = Span{0.0, std::min(end_s - kDaySeconds, start_s)};
  return out;
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

const std::map<std::string, double>& number_words() {
  static const std::map<std::string, double> kWords = {
      {"a", 1},   {"an", 1},    {"one", 1},   {"two", 2},    {"three", 3},  {"four", 4},   {"five", 5},
      {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9},   {"ten", 10},   {"eleven", 11}, {"twelve", 12},
  };
  return kWords;
}

std::optional<double> parse_amount(const std::string& token) {
  if (token.empty()) return 1.0;
  if (auto it = number_words().find(token); it != number_words().end()) return it->second;
  try {
    std::size_t used = 0;
    double v = std::stod(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

double unit_seconds(const std::string& unit) { return unit.rfind("h", 0) == 0 ? 3600.0 : 60.0; }

struct ClockToken {
  double seconds = 0.0;
  bool has_colon = false;
  bool meridiem = false;
};

// "14:30", "2:30" + "pm", "2" + "pm". Hours 24 only as 24:00.
std::optional<ClockToken> parse_clock(const std::string& digits, const std::string& meridiem) {
  int parts[3] = {0, 0, 0};
  int n = 0;
  std::stringstream ss(digits);
  std::string item;
  while (std::getline(ss, item, ':') && n < 3) parts[n++] = std::stoi(item);
  ClockToken tok;
  tok.has_colon = n > 1;
  tok.meridiem = !meridiem.empty();
  int h = parts[0], m = parts[1], s = parts[2];
  if (m > 59 || s > 59) return std::nullopt;
  if (tok.meridiem) {
    if (h < 1 || h > 12) return std::nullopt;
    if (h == 12) h = 0;
    if (meridiem == "pm") h += 12;
  } else if (h > 24 || (h == 24 && (m || s))) {
    return std::nullopt;
  }
  tok.seconds = h * 3600.0 + m * 60.0 + s;
  return tok;
}

struct Candidate {
  TimeInterval interval;
};

constexpr ExpressionType kPriority[] = {ExpressionType::h24,      ExpressionType::h12,   ExpressionType::before_after,
                                        ExpressionType::duration, ExpressionType::half,  ExpressionType::shift,
                                        ExpressionType::relative, ExpressionType::full_day};

int priority_rank(ExpressionType t) {
  for (int i = 0; i < static_cast<int>(std::size(kPriority)); ++i)
    if (kPriority[i] == t) return i;
  return static_cast<int>(std::size(kPriority));
}

constexpr const char* kClock = R"((\d{1,2}(?::\d{2}){0,2})(?![\d:])\s*(am|pm)?)";
constexpr const char* kAmount = R"((\d+(?:\.\d+)?|an?|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve))";
constexpr const char* kUnit = R"((hours?|hrs?|minutes?|mins?))";
constexpr const char* kPeriod = R"((?:the\s+)?(?:([a-z]+)\s+shift|day|recording))";

const std::regex& range_re() {
  static const std::regex re(fmt::format(R"(\b{}\s*(?:and|to|until|till|through|-)\s*{}(?!\s*{}))", kClock, kClock, kUnit));
  return re;
}
const std::regex& after_re() {
  static const std::regex re(fmt::format(R"(\b(?:after|since|from|starting at|starting from|later than|past)\s+{})", kClock));
  return re;
}
const std::regex& before_re() {
  static const std::regex re(
      fmt::format(R"(\b(?:before|until|till|up to|prior to|earlier than|by)\s+{})", kClock));
  return re;
}
const std::regex& shift_bound_re() {
  static const std::regex re(R"(\b(after|before)\s+(?:the\s+)?([a-z]+)\s+shift\b)");
  return re;
}
const std::regex& duration_re() {
  static const std::regex re(fmt::format(
      R"(\b(first|last|initial|final|opening|closing)\s+(?:{}\s*)?{}\s+of\s+{})", kAmount, kUnit, kPeriod));
  return re;
}
const std::regex& half_re() {
  static const std::regex re(
      fmt::format(R"(\b(first|second|1st|2nd|latter|earlier|later)\s+half\s+of\s+{})", kPeriod));
  return re;
}
const std::regex& relative_between_re() {
  static const std::regex re(fmt::format(R"(\bbetween\s+{}\s*{}?\s+and\s+{}\s*{})", kAmount, kUnit, kAmount, kUnit));
  return re;
}
const std::regex& relative_first_re() {
  static const std::regex re(fmt::format(R"(\b(within|in|during|after)\s+the\s+first\s+{}\s*{}(?!\s+of))", kAmount, kUnit));
  return re;
}
const std::regex& relative_into_re() {
  static const std::regex re(
      fmt::format(R"(\b{}\s*{}\s+(?:after|into|from)\s+(?:the\s+)?(?:start|beginning|recording))", kAmount, kUnit));
  return re;
}
const std::regex& full_day_re() {
  static const std::regex re(
      R"(\b(all day|whole day|entire day|full day|throughout the day|over the day|all of the day|the day(?! shifts?\b)|today|all 24 hours|24 hours|whole recording|entire recording|full recording|anytime|at any time)\b)");
  return re;
}

std::optional<Span> period_span(const std::smatch& m, std::size_t shift_group, const ShiftConfig& config) {
  if (m[shift_group].matched) {
    auto span = config.find(m[shift_group].str());
    if (!span) return std::nullopt;
    Span s = *span;
    if (s.start_s > s.end_s) s.end_s += kDaySeconds;
    return s;
  }
  return Span{0.0, kDaySeconds};
}

void match_ranges(const std::string& text, std::vector<Candidate>& out) {
  for (std::sregex_iterator it(text.begin(), text.end(), range_re()), end; it != end; ++it) {
    const auto& m = *it;
    std::string mer1 = m[2].str(), mer2 = m[4].str();
    const bool has_colon = m[1].str().find(':') != std::string::npos || m[3].str().find(':') != std::string::npos;
    if (!has_colon && mer1.empty() && mer2.empty()) continue;  // bare numbers
    auto b = parse_clock(m[3].str(), mer2);
    if (!b) continue;
    std::optional<ClockToken> a;
    if (mer1.empty() && !mer2.empty() && m[1].str().find(':') == std::string::npos) {
      // "from 11 to 1pm": inherit the meridiem that keeps the range forward.
      a = parse_clock(m[1].str(), mer2);
      if (!a || a->seconds > b->seconds) a = parse_clock(m[1].str(), mer2 == "pm" ? "am" : "pm");
    } else {
      a = parse_clock(m[1].str(), mer1);
    }
    if (!a) continue;
    const ExpressionType type = (!mer1.empty() || !mer2.empty()) ? ExpressionType::h12 : ExpressionType::h24;
    double start = a->seconds, stop = b->seconds;
    if (start >= kDaySeconds) continue;
    if (stop == start) continue;
    if (stop < start) stop += kDaySeconds;  // crosses midnight
    out.push_back({make_interval(start, stop, type, ResolutionSource::rules)});
    return;
  }
}

void match_before_after(const std::string& text, const ShiftConfig& config, std::vector<Candidate>& out) {
  std::smatch m;
  auto clock_bound = [&](const std::regex& re, bool after) {
    for (std::sregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it) {
      const auto& mm = *it;
      if (mm[1].str().find(':') == std::string::npos && !mm[2].matched) continue;
      auto t = parse_clock(mm[1].str(), mm[2].str());
      if (!t) continue;
      double s = after ? t->seconds : 0.0;
      double e = after ? kDaySeconds : t->seconds;
      if (e - s <= 0) continue;
      out.push_back({make_interval(s, e, ExpressionType::before_after, ResolutionSource::rules)});
      return true;
    }
    return false;
  };
  if (clock_bound(after_re(), true)) return;
  if (clock_bound(before_re(), false)) return;
  if (std::regex_search(text, m, shift_bound_re())) {
    auto span = config.find(m[2].str());
    if (!span) return;
    if (m[1].str() == "after" && span->end_s < kDaySeconds && span->start_s < span->end_s)
      out.push_back({make_interval(span->end_s, kDaySeconds, ExpressionType::before_after, ResolutionSource::rules)});
    else if (m[1].str() == "before" && span->start_s > 0)
      out.push_back({make_interval(0.0, span->start_s, ExpressionType::before_after, ResolutionSource::rules)});
  }
}

void match_duration(const std::string& text, const ShiftConfig& config, std::vector<Candidate>& out) {
  std::smatch m;
  if (!std::regex_search(text, m, duration_re())) return;
  auto amount = parse_amount(m[2].str());
  auto base = period_span(m, 4, config);
  if (!amount || !base || *amount <= 0) return;
  const double len = std::min(*amount * unit_seconds(m[3].str()), base->length());
  const std::string which = m[1].str();
  const bool first = which == "first" || which == "initial" || which == "opening";
  const double s = first ? base->start_s : base->end_s - len;
  out.push_back({make_interval(s, s + len, ExpressionType::duration, ResolutionSource::rules)});
}

void match_half(const std::string& text, const ShiftConfig& config, std::vector<Candidate>& out) {
  std::smatch m;
  if (!std::regex_search(text, m, half_re())) return;
  auto base = period_span(m, 2, config);
  if (!base) return;
  const std::string which = m[1].str();
  const bool first = which == "first" || which == "1st" || which == "earlier";
  const double mid = base->start_s + base->length() / 2.0;
  out.push_back({first ? make_interval(base->start_s, mid, ExpressionType::half, ResolutionSource::rules)
                       : make_interval(mid, base->end_s, ExpressionType::half, ResolutionSource::rules)});
}

void match_shift(const std::string& text, const ShiftConfig& config, std::vector<Candidate>& out) {
  std::vector<std::string> words;
  std::stringstream ss(text);
  for (std::string w; ss >> w;) words.push_back(w);
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto span = config.find(words[i]);
    if (!span) continue;
    const bool named = i + 1 < words.size() && (words[i + 1] == "shift" || words[i + 1] == "shifts");
    const bool bare = words[i] != "day" && i > 0 &&
                      (words[i - 1] == "this" || words[i - 1] == "the" || words[i - 1] == "during");
    if (!named && !bare) continue;
    double end = span->end_s;
    if (span->start_s > end) end += kDaySeconds;
    out.push_back({make_interval(span->start_s, end, ExpressionType::shift, ResolutionSource::rules)});
    return;
  }
}

void match_relative(const std::string& text, std::vector<Candidate>& out) {
  std::smatch m;
  auto push = [&](double s, double e) {
    s = std::max(0.0, s);
    e = std::min(kDaySeconds, e);
    if (e > s) out.push_back({make_interval(s, e, ExpressionType::relative, ResolutionSource::rules)});
  };
  if (std::regex_search(text, m, relative_between_re())) {
    auto a = parse_amount(m[1].str()), b = parse_amount(m[3].str());
    const std::string unit_b = m[4].str();
    const std::string unit_a = m[2].matched ? m[2].str() : unit_b;
    if (a && b) push(*a * unit_seconds(unit_a), *b * unit_seconds(unit_b));
    return;
  }
  if (std::regex_search(text, m, relative_first_re())) {
    auto a = parse_amount(m[2].str());
    if (!a) return;
    const double t = *a * unit_seconds(m[3].str());
    if (m[1].str() == "after")
      push(t, kDaySeconds);
    else
      push(0.0, t);
    return;
  }
  if (std::regex_search(text, m, relative_into_re())) {
    auto a = parse_amount(m[1].str());
    if (a) push(*a * unit_seconds(m[2].str()), kDaySeconds);
  }
}

}  // namespace

std::string normalize_time_text(std::string_view raw) {
  std::string s = to_lower(raw);
  replace_all(s, "\xE2\x80\x93", "-");  // en dash
  replace_all(s, "\xE2\x80\x94", "-");  // em dash
  replace_all(s, "p.m.", "pm");
  replace_all(s, "a.m.", "am");
  replace_all(s, "p.m", "pm");
  replace_all(s, "a.m", "am");
  replace_all(s, "o'clock", " ");
  std::string cleaned;
  cleaned.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    const bool digit_dot = c == '.' && i > 0 && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
                           std::isdigit(static_cast<unsigned char>(s[i + 1]));
    if (std::isalnum(c) || c == ':' || c == '-' || c == ' ' || digit_dot)
      cleaned.push_back(static_cast<char>(c));
    else
      cleaned.push_back(' ');
  }
  std::stringstream ss(cleaned);
  std::vector<std::string> words;
  for (std::string w; ss >> w;) words.push_back(w);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::string w = words[i];
    if (w == "noon" || w == "midday") w = "12pm";
    if (w == "midnight") {
      const std::string prev = i ? words[i - 1] : "";
      w = (prev == "until" || prev == "to" || prev == "and" || prev == "till" || prev == "before" ||
           prev == "through")
              ? "24:00"
              : "00:00";
    }
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::optional<TimeInterval> resolve_rules(std::string_view text, const ShiftConfig& config) {
  const std::string norm = normalize_time_text(text);
  if (norm.empty()) return std::nullopt;
  std::vector<Candidate> cands;
  match_ranges(norm, cands);
  match_before_after(norm, config, cands);
  match_duration(norm, config, cands);
  match_half(norm, config, cands);
  match_shift(norm, config, cands);
  match_relative(norm, cands);
  if (std::regex_search(norm, full_day_re()))
    cands.push_back({TimeInterval::full_day(ResolutionSource::rules)});
  if (cands.empty()) return std::nullopt;
  auto best = std::min_element(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return priority_rank(a.interval.type) < priority_rank(b.interval.type);
  });
  return best->interval;
}

ChatRequest time_fallback_request(std::string_view text, const ShiftConfig& config) {
  std::string system =
      "### task: time-resolution\n"
      "Convert the time reference in the user's question about one recording day into a clock interval.\n"
      "The day runs from 00:00:00 to 23:59:59 on a 24-hour clock; the recording starts at 00:00:00.\n"
      "Configured shifts:\n";
  for (const auto& [name, span] : config.shifts)
    system += fmt::format("- {}: {}-{}\n", name, format_hms(span.start_s),
                          span.end_s >= kDaySeconds ? std::string("24:00:00") : format_hms(span.end_s));
  system +=
      "Reply with exactly one line of JSON: {\"start\":\"HH:MM:SS\",\"end\":\"HH:MM:SS\"}\n"
      "If the question contains no time reference, reply with the single word NONE.";
  return ChatRequest{{{"system", system}, {"user", std::string(text)}}, 64, 0.0};
}

std::optional<TimeInterval> parse_time_reply(std::string_view reply) {
  const auto first = reply.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return std::nullopt;
  const auto last = reply.find_last_not_of(" \t\r\n");
  std::string_view body = reply.substr(first, last - first + 1);
  if (body == "NONE") return std::nullopt;
  json doc = json::parse(body.begin(), body.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || doc.size() != 2) return std::nullopt;
  auto s_it = doc.find("start"), e_it = doc.find("end");
  if (s_it == doc.end() || e_it == doc.end() || !s_it->is_string() || !e_it->is_string()) return std::nullopt;
  const std::string s_text = s_it->get<std::string>(), e_text = e_it->get<std::string>();
  auto s = parse_hms(s_text), e = parse_hms(e_text);
  if (!s || !e || s_text.size() != 8 || e_text.size() != 8) return std::nullopt;
  if (*e == kDaySeconds - 1) *e = kDaySeconds;  // 23:59:59 closes the day
  if (!(*s < *e)) return std::nullopt;
  const bool whole = *s == 0.0 && *e == kDaySeconds;
  return TimeInterval{*s, *e, whole ? ExpressionType::full_day : ExpressionType::h24, ResolutionSource::llm,
                      std::nullopt};
}

std::optional<TimeInterval> resolve_llm(std::string_view text, const ShiftConfig& config, LlmClient& client) {
  return parse_time_reply(client.complete(time_fallback_request(text, config)));
}

bool has_time_cue(std::string_view text, const ShiftConfig& config) {
  static const std::regex cue(
      R"(\d|\b(am|pm|noon|midday|midnight|morning|afternoon|evening|night|tonight|dawn|dusk|sunrise|sunset|)"
      R"(breakfast|lunch|lunchtime|dinner|supper|shift|shifts|hours?|hrs?|minutes?|mins?|seconds?|half|quarter|)"
      R"(before|after|between|from|until|till|til|since|by|around|about|during|early|earlier|late|later|start|)"
      R"(beginning|end|first|last|past|next|previous|o ?clock|one|two|three|four|five|six|seven|eight|nine|ten|)"
      R"(eleven|twelve|fifteen|twenty|thirty|forty|fifty)\b)");
  const std::string norm = normalize_time_text(text);
  if (std::regex_search(norm, cue)) return true;
  std::stringstream ss(norm);
  for (std::string w; ss >> w;)
    if (config.find(w)) return true;
  return false;
}

TimeInterval resolve(std::string_view text, const ShiftConfig& config, LlmClient* client) {
  if (auto hit = resolve_rules(text, config)) return *hit;
  // Without any temporal cue the question is about the whole day; the
  // fallback could only narrow it wrongly.
  if (client && has_time_cue(text, config)) {
    try {
      if (auto hit = resolve_llm(text, config, *client)) return *hit;
    } catch (const std::exception&) {
      // unreachable fallback degrades to the full day
    }
  }
  return TimeInterval::full_day(ResolutionSource::fallback_default);
}

std::string_view to_string(TimeStrategy strategy) {
  switch (strategy) {
    case TimeStrategy::rules_only: return "rules_only";
    case TimeStrategy::llm_only: return "llm_only";
    case TimeStrategy::combined: return "combined";
  }
  return "unknown";
}

std::vector<TimeCase> load_time_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open time suite " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedLog, e.what());
  }
  std::vector<TimeCase> cases;
  for (const auto& c : doc) {
    cases.push_back({c.at("question").get<std::string>(), c.at("expected_start").get<std::string>(),
                     c.at("expected_end").get<std::string>(), c.at("category").get<std::string>(),
                     c.at("difficulty").get<std::string>()});
  }
  return cases;
}

TimeSuiteReport run_time_suite(const std::vector<TimeCase>& cases, TimeStrategy strategy,
                               const ShiftConfig& config, LlmClient* client) {
  TimeSuiteReport report;
  for (const auto& c : cases) {
    TimeInterval got = TimeInterval::full_day();
    switch (strategy) {
      case TimeStrategy::rules_only:
        got = resolve_rules(c.question, config).value_or(got);
        break;
      case TimeStrategy::llm_only:
        if (client) {
          try {
            got = resolve_llm(c.question, config, *client).value_or(got);
          } catch (const std::exception&) {
          }
        }
        break;
      case TimeStrategy::combined:
        got = resolve(c.question, config, client);
        break;
    }
    auto s = parse_hms(c.expected_start), e = parse_hms(c.expected_end);
    const bool ok = s && e && !got.continuation && std::abs(got.start_s - *s) < 1e-6 && std::abs(got.end_s - *e) < 1e-6;
    for (auto* bucket : {&report.by_category[c.category], &report.by_difficulty[c.difficulty], &report.overall}) {
      bucket->total++;
      bucket->correct += ok ? 1 : 0;
    }
    if (!ok)
      report.failures.push_back(fmt::format("[{}] {} -> {}-{} (expected {}-{})", c.category, c.question,
                                            format_hms(got.start_s), format_hms(got.end_s), c.expected_start,
                                            c.expected_end));
  }
  return report;
}

}  // namespace larag
