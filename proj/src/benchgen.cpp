#include "larag/benchgen.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>

#include "larag/clock.hpp"
#include "larag/error.hpp"

namespace larag::bench {

using nlohmann::json;

namespace {

const std::vector<std::string> kIndustrialClasses = {
    "tools_clanking", "hand_saw",        "hand_file",        "workers_talking", "footsteps",      "arc_welder",
    "diesel_forklift", "power_hand_drill", "stamping_machine", "walkie_talkie",   "warning_buzzer", "factory_whistle"};

const std::vector<std::string> kHomeClasses = {"alarms",   "sirens",  "door_bell", "door_knock", "glass_breaking",
                                               "car_crash", "door_close-open", "baby_cry", "gun_shot", "cat",
                                               "car_honk", "snoring", "dog_bark"};

const std::map<std::string, std::vector<std::string>> kIndustrialSynonyms = {
    {"tools_clanking", {"clanking tools", "tool clanking noise", "tools clattering"}},
    {"hand_saw", {"manual hand saw", "sawing by hand", "saw cutting"}},
    {"hand_file", {"hand filing", "metal hand file", "file rasping"}},
    {"workers_talking", {"people talking", "workers chatting", "voices of workers"}},
    {"footsteps", {"footstep sounds", "heavy footsteps", "steps walking"}},
    {"arc_welder", {"arc welding", "welder arcing", "electric arc welder"}},
    {"diesel_forklift", {"forklift engine", "diesel forklift truck", "forklift driving"}},
    {"power_hand_drill", {"power drill", "electric hand drill", "drill running"}},
    {"stamping_machine", {"stamping press", "metal stamping", "stamping machine thuds"}},
    {"walkie_talkie", {"walkie talkie chatter", "walkie-talkie radio", "talkie radio calls"}},
    {"warning_buzzer", {"warning buzzer sound", "buzzer sounding", "alert buzzer"}},
    {"factory_whistle", {"factory whistle blast", "whistle blowing", "loud factory whistle"}},
};

const std::map<std::string, std::vector<std::string>> kHomeSynonyms = {
    {"alarms", {"alarm sounds", "alarm going off", "alarm ringing"}},
    {"sirens", {"siren wailing", "emergency sirens", "siren sounds"}},
    {"door_bell", {"doorbell ringing", "doorbell chime", "door bell ring"}},
    {"door_knock", {"knocking on the door", "door knocks", "knock at the door"}},
    {"glass_breaking", {"breaking glass", "glass shattering", "shattered glass"}},
    {"car_crash", {"car collision", "vehicle crash", "car crashing"}},
    {"door_close-open", {"door opening or closing", "door slam", "door closing"}},
    {"baby_cry", {"baby crying", "crying baby", "infant crying"}},
    {"gun_shot", {"gunshots", "gun firing", "gunfire"}},
    {"cat", {"cat meowing", "cat sounds", "meowing cat"}},
    {"car_honk", {"car horn", "honking car", "car honking"}},
    {"snoring", {"someone snoring", "snoring sounds", "loud snoring"}},
    {"dog_bark", {"dog barking", "barking dog", "a dog yapping"}},
};

double round_to(double v, double step) { return std::round(v / step) * step; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::string clock24(int minute_of_day) { return fmt::format("{:02d}:{:02d}", minute_of_day / 60, minute_of_day % 60); }

std::string clock12(int minute_of_day) {
  const int h = minute_of_day / 60;
  const int h12 = h % 12 == 0 ? 12 : h % 12;
  return fmt::format("{}:{:02d} {}", h12, minute_of_day % 60, h < 12 ? "am" : "pm");
}

}  // namespace

DomainConfig DomainConfig::industrial_iot() {
  DomainConfig c;
  c.name = "industrial_iot";
  c.classes = kIndustrialClasses;
  c.synonyms = kIndustrialSynonyms;
  c.unrelated = kHomeClasses;
  c.shift_queries_enabled = true;
  return c;
}

DomainConfig DomainConfig::home_iot() {
  DomainConfig c;
  c.name = "home_iot";
  c.classes = kHomeClasses;
  c.synonyms = kHomeSynonyms;
  c.unrelated = kIndustrialClasses;
  c.shift_queries_enabled = false;
  return c;
}

std::map<std::string, std::vector<std::string>> builtin_tag_aliases() {
  std::map<std::string, std::vector<std::string>> out = kIndustrialSynonyms;
  out.insert(kHomeSynonyms.begin(), kHomeSynonyms.end());
  return out;
}

std::optional<DomainConfig> DomainConfig::by_name(std::string_view name) {
  const std::string n = to_lower(name);
  if (n == "industrial_iot" || n == "industrial" || n == "iiot") return industrial_iot();
  if (n == "home_iot" || n == "home" || n == "hiot") return home_iot();
  return std::nullopt;
}

void DomainConfig::validate() const {
  if (classes.empty()) throw Error(ErrorCode::InvalidArgument, "domain has no classes");
  std::set<std::string> seen;
  for (const auto& c : classes)
    if (!seen.insert(c).second) throw Error(ErrorCode::InvalidArgument, "duplicate class '" + c + "'");
  for (const auto& [tag, list] : synonyms)
    if (!seen.count(tag)) throw Error(ErrorCode::InvalidArgument, "synonyms for unknown class '" + tag + "'");
  ShiftConfig copy = shifts;
  copy.normalize_and_validate();
}

std::string DomainConfig::to_json() const {
  json doc;
  doc["name"] = name;
  doc["classes"] = classes;
  doc["synonyms"] = synonyms;
  doc["unrelated"] = unrelated;
  doc["shift_queries_enabled"] = shift_queries_enabled;
  json shift_list = json::array();
  for (const auto& [n, span] : shifts.shifts)
    shift_list.push_back({{"name", n}, {"start", format_hms(span.start_s)},
                          {"end", span.end_s >= kDaySeconds ? std::string("24:00:00") : format_hms(span.end_s)}});
  doc["shifts"] = shift_list;
  return doc.dump(2);
}

DomainConfig DomainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open domain config " + path);
  DomainConfig c;
  try {
    json doc = json::parse(in);
    c.name = doc.at("name").get<std::string>();
    c.classes = doc.at("classes").get<std::vector<std::string>>();
    c.synonyms = doc.value("synonyms", std::map<std::string, std::vector<std::string>>{});
    c.unrelated = doc.value("unrelated", std::vector<std::string>{});
    c.shift_queries_enabled = doc.value("shift_queries_enabled", true);
    if (doc.contains("shifts")) {
      c.shifts.shifts.clear();
      for (const auto& s : doc["shifts"]) {
        auto start = parse_hms(s.at("start").get<std::string>());
        auto end = parse_hms(s.at("end").get<std::string>());
        if (!start || !end) throw Error(ErrorCode::InvalidArgument, "bad shift bounds in " + path);
        c.shifts.shifts.emplace_back(s.at("name").get<std::string>(), Span{*start, *end});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("domain config: ") + e.what());
  }
  c.shifts.normalize_and_validate();
  c.validate();
  return c;
}

std::map<std::string, double> default_rates(const DomainConfig& config) {
  std::map<std::string, double> rates;
  for (std::size_t i = 0; i < config.classes.size(); ++i) rates[config.classes[i]] = 1.0 + static_cast<double>(i % 4);
  return rates;
}

std::vector<EventRecord> synth_timeline(const DomainConfig& config, std::uint64_t seed, const TimelineParams& params) {
  if (params.dur_range_s.start_s <= 0 || params.dur_range_s.end_s < params.dur_range_s.start_s ||
      params.dur_range_s.end_s >= params.duration_s)
    throw Error(ErrorCode::InvalidArgument, "invalid event duration range");
  const auto rates = params.rates_per_hour.empty() ? default_rates(config) : params.rates_per_hour;
  Rng rng(seed);
  std::vector<EventRecord> out;
  std::size_t class_index = 0;
  for (const auto& tag : config.classes) {
    const double loud_mean = params.loudness.mean_lufs + 2.0 * (static_cast<double>(class_index++ % 5) - 2.0);
    auto rate_it = rates.find(tag);
    const double rate = rate_it == rates.end() ? 0.0 : rate_it->second;
    if (rate < 0) throw Error(ErrorCode::InvalidArgument, "negative rate for " + tag);
    const double mean_count = rate * params.duration_s / 3600.0;
    const long n = mean_count > 0 ? std::poisson_distribution<long>(mean_count)(rng) : 0;
    std::uniform_real_distribution<double> dur_dist(params.dur_range_s.start_s, params.dur_range_s.end_s);
    std::normal_distribution<double> loud_dist(loud_mean, params.loudness.std_lufs);
    std::uniform_real_distribution<double> conf_dist(0.8, 1.0);
    std::set<std::pair<double, double>> placed;
    int rejections = 0;
    for (long k = 0; k < n;) {
      const double dur = std::max(0.1, round_to(dur_dist(rng), 0.1));
      const double start = round_to(std::uniform_real_distribution<double>(0.0, params.duration_s - dur)(rng), 0.1);
      const double end = round_to(start + dur, 0.1);
      auto next = placed.lower_bound({start, -1.0});
      bool overlap = next != placed.end() && next->first < end;
      if (next != placed.begin() && std::prev(next)->second > start) overlap = true;
      if (overlap) {
        if (++rejections > 10000)
          throw Error(ErrorCode::PlacementFailure, fmt::format("cannot place {} events of '{}' without overlap", n, tag));
        continue;
      }
      placed.emplace(start, end);
      out.push_back(EventRecord{0, params.audio_id, tag, start, end, round_to(conf_dist(rng), 0.01),
                                round_to(loud_dist(rng), 0.1)});
      ++k;
    }
  }
  std::sort(out.begin(), out.end(), [](const EventRecord& a, const EventRecord& b) {
    return a.start_s < b.start_s || (a.start_s == b.start_s && a.tag < b.tag);
  });
  return out;
}

std::map<ExpressionType, double> expression_distribution(const DomainConfig& config) {
  std::map<ExpressionType, double> d = {
      {ExpressionType::full_day, 5.0},  {ExpressionType::shift, 15.0}, {ExpressionType::before_after, 10.0},
      {ExpressionType::duration, 10.0}, {ExpressionType::half, 5.0},   {ExpressionType::h12, 20.0},
      {ExpressionType::h24, 35.0},
  };
  if (!config.shift_queries_enabled || config.shifts.shifts.empty()) {
    d[ExpressionType::h24] += d[ExpressionType::shift];
    d.erase(ExpressionType::shift);
  }
  return d;
}

namespace {

struct Period {
  std::string phrase;  // "the night shift" | "the day"
  Span span;           // end may exceed 86400 for wrapping shifts
};

Period pick_period(Rng& rng, const DomainConfig& config) {
  const bool use_shift = config.shift_queries_enabled && !config.shifts.shifts.empty() && uniform_int(rng, 0, 2) > 0;
  if (!use_shift) return {"the day", {0.0, kDaySeconds}};
  const auto& [name, span] = pick(rng, config.shifts.shifts);
  Span s = span;
  if (s.start_s > s.end_s) s.end_s += kDaySeconds;
  return {"the " + name + " shift", s};
}

SampledExpression clock_range_expression(Rng& rng, bool twelve_hour) {
  const int len = uniform_int(rng, 10, 360);
  const int start = uniform_int(rng, 0, 1439 - len);
  const int end = start + len;
  auto fmt_clock = twelve_hour ? clock12 : clock24;
  return {fmt::format("between {} and {}", fmt_clock(start), fmt_clock(end)),
          make_interval(start * 60.0, end * 60.0, twelve_hour ? ExpressionType::h12 : ExpressionType::h24,
                        ResolutionSource::rules),
          twelve_hour ? ExpressionType::h12 : ExpressionType::h24};
}

}  // namespace

SampledExpression sample_time_expression(Rng& rng, const DomainConfig& config, bool complex_mode) {
  if (!complex_mode) {
    const double len = std::round(std::exp(std::uniform_real_distribution<double>(std::log(10.0), std::log(21600.0))(rng)));
    const int start = uniform_int(rng, 0, 86399 - static_cast<int>(len));
    const double end = start + len;
    return {fmt::format("between {} and {}", format_hms(start), format_hms(end)),
            make_interval(start, end, ExpressionType::h24, ResolutionSource::rules), ExpressionType::h24};
  }

  const auto dist = expression_distribution(config);
  double r = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
  ExpressionType type = ExpressionType::h24;
  for (auto t : {ExpressionType::full_day, ExpressionType::shift, ExpressionType::before_after, ExpressionType::duration,
                 ExpressionType::half, ExpressionType::h12, ExpressionType::h24}) {
    const auto it = dist.find(t);
    const double w = it == dist.end() ? 0.0 : it->second;
    if (r < w) {
      type = t;
      break;
    }
    r -= w;
  }

  switch (type) {
    case ExpressionType::full_day: {
      static const std::vector<std::string> kPhrases = {"over the whole day", "throughout the day",
                                                        "during the entire day"};
      return {pick(rng, kPhrases), TimeInterval::full_day(ResolutionSource::rules), type};
    }
    case ExpressionType::shift: {
      const auto& [name, span] = pick(rng, config.shifts.shifts);
      const double end = span.start_s > span.end_s ? span.end_s + kDaySeconds : span.end_s;
      return {fmt::format("during the {} shift", name),
              make_interval(span.start_s, end, type, ResolutionSource::rules), type};
    }
    case ExpressionType::before_after: {
      const int minute = uniform_int(rng, 1, 1439);
      const bool after = uniform_int(rng, 0, 1) == 0;
      const std::string clock = uniform_int(rng, 0, 1) == 0 ? clock24(minute) : clock12(minute);
      return {fmt::format("{} {}", after ? "after" : "before", clock),
              after ? make_interval(minute * 60.0, kDaySeconds, type, ResolutionSource::rules)
                    : make_interval(0.0, minute * 60.0, type, ResolutionSource::rules),
              type};
    }
    case ExpressionType::duration: {
      const Period base = pick_period(rng, config);
      const bool first = uniform_int(rng, 0, 1) == 0;
      std::string amount;
      double len = 0.0;
      if (uniform_int(rng, 0, 3) == 0) {
        const int minutes = 15 * uniform_int(rng, 1, 3);
        amount = fmt::format("{} minutes", minutes);
        len = minutes * 60.0;
      } else {
        const int hours = uniform_int(rng, 1, 4);
        amount = hours == 1 ? "1 hour" : fmt::format("{} hours", hours);
        len = hours * 3600.0;
      }
      const double s = first ? base.span.start_s : base.span.end_s - len;
      return {fmt::format("in the {} {} of {}", first ? "first" : "last", amount, base.phrase),
              make_interval(s, s + len, type, ResolutionSource::rules), type};
    }
    case ExpressionType::half: {
      const Period base = pick_period(rng, config);
      const bool first = uniform_int(rng, 0, 1) == 0;
      const double mid = base.span.start_s + base.span.length() / 2.0;
      return {fmt::format("in the {} half of {}", first ? "first" : "second", base.phrase),
              first ? make_interval(base.span.start_s, mid, type, ResolutionSource::rules)
                    : make_interval(mid, base.span.end_s, type, ResolutionSource::rules),
              type};
    }
    case ExpressionType::h12:
      return clock_range_expression(rng, true);
    default:
      return clock_range_expression(rng, false);
  }
}

TimeInterval GroundTruth::interval() const {
  return TimeInterval{start_s, end_s, time_expression_type, ResolutionSource::rules, continuation};
}

GroundTruthStats compute_ground_truth(std::span<const EventRecord> timeline, const TimeInterval& interval,
                                      std::span<const std::string> tags) {
  GroundTruthStats stats;
  for (const auto& e : timeline) {
    if (!interval.contains(e.start_s)) continue;
    if (std::find(tags.begin(), tags.end(), e.tag) == tags.end()) continue;
    ++stats.count;
    stats.first_s = stats.first_s ? std::min(*stats.first_s, e.start_s) : e.start_s;
    stats.last_s = stats.last_s ? std::max(*stats.last_s, e.start_s) : e.start_s;
  }
  stats.detected = stats.count > 0;
  return stats;
}

std::string summary_bullet(const std::string& tag, std::int64_t count, std::optional<double> first_s,
                           std::optional<double> last_s) {
  return fmt::format("- {}: {} event(s), first at {}, last at {}", tag, count,
                     first_s ? format_hms(*first_s) : "n/a", last_s ? format_hms(*last_s) : "n/a");
}

std::string summary_reference(std::span<const EventRecord> timeline, const TimeInterval& interval,
                              std::span<const std::string> tags) {
  std::vector<std::string> sorted(tags.begin(), tags.end());
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (const auto& tag : sorted) {
    const std::string one[1] = {tag};
    auto st = compute_ground_truth(timeline, interval, one);
    if (!st.count) continue;
    if (!out.empty()) out += '\n';
    out += summary_bullet(tag, st.count, st.first_s, st.last_s);
  }
  return out.empty() ? std::string(kNoEventsBullet) : out;
}

namespace {

std::string detection_question(Rng& rng, const std::string& phrase, const std::string& when) {
  switch (uniform_int(rng, 0, 2)) {
    case 0: return fmt::format("Was there any {} {}?", phrase, when);
    case 1: return fmt::format("Did {} occur {}?", phrase, when);
    default: return fmt::format("Were there any {} events {}?", phrase, when);
  }
}

std::string counting_question(Rng& rng, const std::string& phrase, const std::string& when) {
  switch (uniform_int(rng, 0, 2)) {
    case 0: return fmt::format("How many {} events occurred {}?", phrase, when);
    case 1: return fmt::format("How many times did {} occur {}?", phrase, when);
    default: return fmt::format("Count the {} events {}.", phrase, when);
  }
}

std::string specific_summary_question(Rng& rng, const std::string& phrase, const std::string& when) {
  return uniform_int(rng, 0, 1) == 0 ? fmt::format("Summarize the {} activity {}.", phrase, when)
                                     : fmt::format("Give a summary of {} events {}.", phrase, when);
}

std::string generic_summary_question(Rng& rng, const std::string& when) {
  return uniform_int(rng, 0, 1) == 0 ? fmt::format("Summarize all audio events {}.", when)
                                     : fmt::format("Provide an overview of everything heard {}.", when);
}

GroundTruth make_truth(IntentKind category, const std::string& phase, const SampledExpression& expr,
                       std::vector<std::string> tags, const GroundTruthStats& stats) {
  GroundTruth gt;
  gt.category = category;
  gt.subcategory = phase;
  gt.start_s = expr.interval.start_s;
  gt.end_s = expr.interval.end_s;
  gt.continuation = expr.interval.continuation;
  gt.tags = std::move(tags);
  gt.time_expression_type = expr.type;
  gt.stats = stats;
  return gt;
}

}  // namespace

std::vector<QAPair> generate_dataset(std::span<const EventRecord> timeline, const DomainConfig& config,
                                     std::uint64_t seed, int per_phase, bool complex_mode) {
  if (timeline.empty()) throw Error(ErrorCode::InvalidArgument, "cannot generate questions from an empty timeline");
  config.validate();
  Rng rng(seed);
  const std::string audio_id = timeline.front().audio_id;
  std::vector<QAPair> out;
  out.reserve(static_cast<std::size_t>(per_phase) * 8);

  std::vector<std::string> synonym_tags;
  for (const auto& c : config.classes)
    if (auto it = config.synonyms.find(c); it != config.synonyms.end() && !it->second.empty()) synonym_tags.push_back(c);

  for (std::size_t phase = 0; phase < phase_names().size(); ++phase) {
    const std::string& name = phase_names()[phase];
    const int cap = 10 * per_phase;
    int produced = 0;
    int attempts = 0;
    while (produced < per_phase) {
      if (attempts++ >= cap)
        throw Error(ErrorCode::GenerationExhausted,
                    fmt::format("phase '{}' produced {} of {} pairs in {} attempts", name, produced, per_phase, cap));
      if ((phase == 1 && synonym_tags.empty()) || (phase == 2 && config.unrelated.empty()))
        continue;
      const SampledExpression expr = sample_time_expression(rng, config, complex_mode);

      if (phase <= 2) {
        std::string tag, phrase;
        GroundTruthStats stats;
        if (phase < 2) {
          // Pick among tags whose presence in this window matches the wanted
          // polarity, so positives and negatives alternate.
          const bool want = produced % 2 == 0;
          const auto& pool = phase == 0 ? config.classes : synonym_tags;
          std::vector<std::pair<std::string, GroundTruthStats>> fits;
          for (const auto& t : pool) {
            const std::string one[1] = {t};
            auto st = compute_ground_truth(timeline, expr.interval, one);
            if (st.detected == want) fits.emplace_back(t, st);
          }
          if (fits.empty()) continue;
          const auto& chosen = fits[std::uniform_int_distribution<std::size_t>(0, fits.size() - 1)(rng)];
          tag = chosen.first;
          stats = chosen.second;
          phrase = phase == 0 ? humanize_tag(tag) : pick(rng, config.synonyms.at(tag));
        } else {
          tag = pick(rng, config.unrelated);
          phrase = humanize_tag(tag);
          const std::string one[1] = {tag};
          stats = compute_ground_truth(timeline, expr.interval, one);
        }
        out.push_back({audio_id, detection_question(rng, phrase, expr.phrase), stats.detected ? "Yes" : "No",
                       make_truth(IntentKind::detection, name, expr, {tag}, stats)});
        out.push_back({audio_id, counting_question(rng, phrase, expr.phrase), std::to_string(stats.count),
                       make_truth(IntentKind::counting, name, expr, {tag}, stats)});
      } else if (phase == 3) {
        const std::string tag = pick(rng, config.classes);
        const std::string tags[1] = {tag};
        const auto stats = compute_ground_truth(timeline, expr.interval, tags);
        if (!stats.detected) continue;
        out.push_back({audio_id, specific_summary_question(rng, humanize_tag(tag), expr.phrase),
                       summary_reference(timeline, expr.interval, tags),
                       make_truth(IntentKind::summary, name, expr, {tag}, stats)});
      } else {
        const auto stats = compute_ground_truth(timeline, expr.interval, config.classes);
        if (!stats.detected) continue;
        out.push_back({audio_id, generic_summary_question(rng, expr.phrase),
                       summary_reference(timeline, expr.interval, config.classes),
                       make_truth(IntentKind::summary, name, expr, config.classes, stats)});
      }
      ++produced;
    }
  }
  return out;
}

std::string qa_to_json_line(const QAPair& p) {
  const auto& gt = p.ground_truth;
  json stats{{"detected", gt.stats.detected}, {"count", gt.stats.count}};
  stats["first"] = gt.stats.first_s ? json(format_hms(*gt.stats.first_s)) : json(nullptr);
  stats["last"] = gt.stats.last_s ? json(format_hms(*gt.stats.last_s)) : json(nullptr);
  json truth{{"category", std::string(to_string(gt.category))},
             {"subcategory", gt.subcategory},
             {"start", format_hms(gt.start_s)},
             {"end", format_hms(gt.end_s)},
             {"start_s", gt.start_s},
             {"end_s", gt.end_s},
             {"tags", gt.tags},
             {"time_expression_type", std::string(to_string(gt.time_expression_type))},
             {"stats", stats}};
  if (gt.continuation) truth["continuation"] = {gt.continuation->start_s, gt.continuation->end_s};
  json doc{{"audio_id", p.audio_id},
           {"question", p.question},
           {"reference_answer", p.reference_answer},
           {"ground_truth", truth}};
  return doc.dump();
}

QAPair qa_from_json_line(std::string_view line) {
  try {
    json doc = json::parse(line.begin(), line.end());
    QAPair p;
    p.audio_id = doc.at("audio_id").get<std::string>();
    p.question = doc.at("question").get<std::string>();
    p.reference_answer = doc.at("reference_answer").get<std::string>();
    const json& t = doc.at("ground_truth");
    auto cat = intent_kind_from_string(t.at("category").get<std::string>());
    auto type = expression_type_from_string(t.at("time_expression_type").get<std::string>());
    if (!cat || !type) throw Error(ErrorCode::MalformedLog, "unknown category or expression type");
    auto& gt = p.ground_truth;
    gt.category = *cat;
    gt.subcategory = t.at("subcategory").get<std::string>();
    gt.start_s = t.at("start_s").get<double>();
    gt.end_s = t.at("end_s").get<double>();
    if (t.contains("continuation")) gt.continuation = Span{t["continuation"][0].get<double>(), t["continuation"][1].get<double>()};
    gt.tags = t.at("tags").get<std::vector<std::string>>();
    gt.time_expression_type = *type;
    const json& st = t.at("stats");
    gt.stats.detected = st.at("detected").get<bool>();
    gt.stats.count = st.at("count").get<std::int64_t>();
    if (!st.at("first").is_null()) gt.stats.first_s = parse_hms(st["first"].get<std::string>());
    if (!st.at("last").is_null()) gt.stats.last_s = parse_hms(st["last"].get<std::string>());
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedLog, std::string("dataset record: ") + e.what());
  }
}

void write_dataset(const std::string& path, std::span<const QAPair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  for (const auto& p : pairs) out << qa_to_json_line(p) << '\n';
}

std::vector<QAPair> read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open dataset " + path);
  std::vector<QAPair> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(qa_from_json_line(line));
  return out;
}

}  // namespace larag::bench
