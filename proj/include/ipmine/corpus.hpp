#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ipmine/rng.hpp"

namespace ipmine {

// One forum message, the unit of context for every downstream decision.
struct Post {
  std::string forum_id;
  std::string thread_id;
  std::string post_id;  // unique within forum_id
  std::string author_id;
  std::int64_t timestamp = 0;  // UTC seconds since epoch, >= 0
  std::string body;            // may be empty

  bool operator==(const Post&) const = default;
};

// Posts sorted by (thread_id, timestamp, post_id); iteration order is
// deterministic under that sort.
struct Forum {
  std::string forum_id;
  std::vector<Post> posts;
};

struct CorpusStats {
  std::size_t posts = 0;
  std::size_t threads = 0;
  std::size_t users = 0;

  bool operator==(const CorpusStats&) const = default;
};

// Behavioural profile of one author, used by ContextInfo features.
struct AuthorProfile {
  std::string author_id;
  std::size_t post_count = 0;
  double mean_post_length = 0.0;  // tokens per post
  std::size_t active_days = 0;    // distinct UTC days with >= 1 post
  double posts_per_active_day = 0.0;
  std::size_t thread_count = 0;
};

enum class Label { negative = 0, positive = 1 };

enum class LabelKind { identification, characterization };

// A ground-truth row. For identification the instance is a byte span inside a
// post; for characterization it is an address mentioned by a post. `key` is
// the canonical unique identifier within a dataset.
struct LabeledExample {
  std::string key;
  std::string post_id;
  std::size_t span_start = 0;  // identification only
  std::size_t span_end = 0;    // identification only
  std::string address;         // characterization only
  Label label = Label::negative;
};

inline std::string ident_key(const std::string& post_id, std::size_t start, std::size_t end) {
  return post_id + ":" + std::to_string(start) + "-" + std::to_string(end);
}

inline std::string char_key(const std::string& post_id, const std::string& address) {
  return post_id + ":" + address;
}

namespace detail {

inline bool post_order(const Post& a, const Post& b) {
  if (a.thread_id != b.thread_id) return a.thread_id < b.thread_id;
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.post_id < b.post_id;
}

[[noreturn]] inline void dump_error(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

inline std::string require_string_field(const nlohmann::json& rec, const char* field,
                                        const std::string& path, std::size_t line) {
  if (!rec.contains(field)) dump_error(path, line, std::string("missing field \"") + field + "\"");
  if (!rec[field].is_string()) dump_error(path, line, std::string("field \"") + field + "\" must be a string");
  return rec[field].get<std::string>();
}

}  // namespace detail

// Sorts posts into canonical order and rejects duplicate (forum_id, post_id)
// as well as posts tagged with a different forum_id.
inline Forum make_forum(std::string forum_id, std::vector<Post> posts) {
  std::stable_sort(posts.begin(), posts.end(), detail::post_order);
  std::unordered_set<std::string> seen;
  seen.reserve(posts.size());
  for (const Post& p : posts) {
    if (p.post_id.empty()) throw std::runtime_error("post_id must be non-empty");
    if (p.forum_id != forum_id)
      throw std::runtime_error("post \"" + p.post_id + "\" has forum_id \"" + p.forum_id +
                               "\", expected \"" + forum_id + "\"");
    if (!seen.insert(p.post_id).second)
      throw std::runtime_error("duplicate post_id \"" + p.post_id + "\" in forum \"" + forum_id + "\"");
  }
  return Forum{std::move(forum_id), std::move(posts)};
}

// Loads a line-delimited dump: one JSON record per line with the six fields
// forum_id, thread_id, post_id, author_id, timestamp, body. Whitespace-only
// lines are skipped. All records must share one forum_id.
inline Forum load_forum_dump_stream(std::istream& in, const std::string& path) {
  std::vector<Post> posts;
  std::string line;
  std::size_t lineno = 0;
  std::string forum_id;
  bool have_forum_id = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded()) detail::dump_error(path, lineno, "malformed record (invalid JSON)");
    if (!rec.is_object()) detail::dump_error(path, lineno, "record must be a JSON object");

    Post p;
    p.forum_id = detail::require_string_field(rec, "forum_id", path, lineno);
    p.thread_id = detail::require_string_field(rec, "thread_id", path, lineno);
    p.post_id = detail::require_string_field(rec, "post_id", path, lineno);
    p.author_id = detail::require_string_field(rec, "author_id", path, lineno);
    p.body = detail::require_string_field(rec, "body", path, lineno);
    if (!rec.contains("timestamp")) detail::dump_error(path, lineno, "missing field \"timestamp\"");
    if (!rec["timestamp"].is_number_integer())
      detail::dump_error(path, lineno, "field \"timestamp\" must be an integer");
    p.timestamp = rec["timestamp"].get<std::int64_t>();
    if (p.timestamp < 0) detail::dump_error(path, lineno, "field \"timestamp\" must be >= 0");
    if (p.post_id.empty()) detail::dump_error(path, lineno, "field \"post_id\" must be non-empty");

    if (!have_forum_id) {
      forum_id = p.forum_id;
      have_forum_id = true;
    } else if (p.forum_id != forum_id) {
      detail::dump_error(path, lineno, "forum_id \"" + p.forum_id + "\" does not match \"" + forum_id + "\"");
    }
    posts.push_back(std::move(p));
  }
  try {
    return make_forum(std::move(forum_id), std::move(posts));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline Forum load_forum_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open forum dump: " + path);
  return load_forum_dump_stream(in, path);
}

// One record per line, posts in canonical order; reload is identity.
inline void save_forum_dump_stream(const Forum& forum, std::ostream& out) {
  for (const Post& p : forum.posts) {
    nlohmann::json rec{{"forum_id", p.forum_id}, {"thread_id", p.thread_id},
                       {"post_id", p.post_id},   {"author_id", p.author_id},
                       {"timestamp", p.timestamp}, {"body", p.body}};
    out << rec.dump() << '\n';
  }
}

inline void save_forum_dump(const Forum& forum, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write forum dump: " + path);
  save_forum_dump_stream(forum, out);
}

inline CorpusStats corpus_stats(const Forum& forum) {
  std::unordered_set<std::string> threads;
  std::unordered_set<std::string> users;
  for (const Post& p : forum.posts) {
    threads.insert(p.thread_id);
    users.insert(p.author_id);
  }
  return CorpusStats{forum.posts.size(), threads.size(), users.size()};
}

// `token_count` maps a post body to its token count; callers normally pass a
// wrapper around tokenize(). Days are UTC buckets of the epoch timestamp.
template <class TokenCount>
std::map<std::string, AuthorProfile> author_profiles(const Forum& forum, TokenCount&& token_count) {
  struct Acc {
    std::size_t posts = 0;
    std::size_t tokens = 0;
    std::set<std::int64_t> days;
    std::set<std::string> threads;
  };
  std::map<std::string, Acc> acc;
  for (const Post& p : forum.posts) {
    Acc& a = acc[p.author_id];
    ++a.posts;
    a.tokens += token_count(std::string_view(p.body));
    a.days.insert(p.timestamp / 86400);
    a.threads.insert(p.thread_id);
  }
  std::map<std::string, AuthorProfile> profiles;
  for (const auto& [author, a] : acc) {
    AuthorProfile prof;
    prof.author_id = author;
    prof.post_count = a.posts;
    prof.mean_post_length = a.posts > 0 ? static_cast<double>(a.tokens) / static_cast<double>(a.posts) : 0.0;
    prof.active_days = a.days.size();
    prof.posts_per_active_day =
        a.days.empty() ? 0.0 : static_cast<double>(a.posts) / static_cast<double>(a.days.size());
    prof.thread_count = a.threads.size();
    profiles.emplace(author, std::move(prof));
  }
  return profiles;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::size_t parse_size_field(const std::string& s, const std::string& path, std::size_t line,
                                    const char* field) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    dump_error(path, line, std::string("field \"") + field + "\" must be a non-negative integer, got \"" + s + "\"");
  try {
    return static_cast<std::size_t>(std::stoull(s));
  } catch (const std::out_of_range&) {
    dump_error(path, line, std::string("field \"") + field + "\" is out of range: \"" + s + "\"");
  }
}

inline double parse_real_field(const std::string& s, const std::string& path, std::size_t line,
                               const char* field) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return value;
  } catch (const std::exception&) {
    dump_error(path, line, std::string("field \"") + field + "\" must be a number, got \"" + s + "\"");
  }
}

}  // namespace detail

// Ground-truth CSV loader. Identification: post_id,span_start,span_end,label
// with label in {ip, not_ip}. Characterization: post_id,address,label with
// label in {malicious, benign}. Keys must be unique.
inline std::vector<LabeledExample> load_labels_stream(std::istream& in, LabelKind kind,
                                                      const std::string& path) {
  const std::string expected_header = kind == LabelKind::identification
                                          ? "post_id,span_start,span_end,label"
                                          : "post_id,address,label";
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, expected header");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != expected_header)
    throw std::runtime_error(path + ":1: bad header \"" + line + "\", expected \"" + expected_header + "\"");

  std::vector<LabeledExample> rows;
  std::unordered_set<std::string> keys;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    LabeledExample ex;
    if (kind == LabelKind::identification) {
      if (f.size() != 4) detail::dump_error(path, lineno, "expected 4 fields, got " + std::to_string(f.size()));
      ex.post_id = f[0];
      ex.span_start = detail::parse_size_field(f[1], path, lineno, "span_start");
      ex.span_end = detail::parse_size_field(f[2], path, lineno, "span_end");
      if (ex.span_start >= ex.span_end) detail::dump_error(path, lineno, "span_start must be < span_end");
      if (f[3] == "ip") ex.label = Label::positive;
      else if (f[3] == "not_ip") ex.label = Label::negative;
      else detail::dump_error(path, lineno, "unknown label \"" + f[3] + "\" (expected ip or not_ip)");
      ex.key = ident_key(ex.post_id, ex.span_start, ex.span_end);
    } else {
      if (f.size() != 3) detail::dump_error(path, lineno, "expected 3 fields, got " + std::to_string(f.size()));
      ex.post_id = f[0];
      ex.address = f[1];
      if (f[2] == "malicious") ex.label = Label::positive;
      else if (f[2] == "benign") ex.label = Label::negative;
      else detail::dump_error(path, lineno, "unknown label \"" + f[2] + "\" (expected malicious or benign)");
      ex.key = char_key(ex.post_id, ex.address);
    }
    if (!keys.insert(ex.key).second) detail::dump_error(path, lineno, "duplicate key \"" + ex.key + "\"");
    rows.push_back(std::move(ex));
  }
  return rows;
}

inline std::vector<LabeledExample> load_labels(const std::string& path, LabelKind kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file: " + path);
  return load_labels_stream(in, kind, path);
}

inline std::string labels_to_csv(const std::vector<LabeledExample>& rows, LabelKind kind) {
  std::string out;
  if (kind == LabelKind::identification) {
    out = "post_id,span_start,span_end,label\n";
    for (const LabeledExample& r : rows) {
      out += r.post_id + "," + std::to_string(r.span_start) + "," + std::to_string(r.span_end) +
             "," + (r.label == Label::positive ? "ip" : "not_ip") + "\n";
    }
  } else {
    out = "post_id,address,label\n";
    for (const LabeledExample& r : rows) {
      out += r.post_id + "," + r.address + "," +
             (r.label == Label::positive ? "malicious" : "benign") + "\n";
    }
  }
  return out;
}

// Downsamples the majority class uniformly without replacement so both classes
// end up at min(class counts). Output preserves input order and is fully
// determined by (input order, rng_seed). Works on any element type with a
// `label` member.
template <class E>
std::vector<E> balanced_sample(const std::vector<E>& examples, std::uint64_t rng_seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (examples[i].label == Label::positive ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty())
    throw std::runtime_error("balanced_sample: need at least one example of each class");
  const std::size_t target = std::min(pos.size(), neg.size());
  Rng rng(rng_seed);
  auto downsample = [&](std::vector<std::size_t>& idx) {
    if (idx.size() == target) return;
    rng.shuffle(idx);
    idx.resize(target);
  };
  downsample(pos);
  downsample(neg);

  std::vector<std::size_t> keep;
  keep.reserve(2 * target);
  keep.insert(keep.end(), pos.begin(), pos.end());
  keep.insert(keep.end(), neg.begin(), neg.end());
  std::sort(keep.begin(), keep.end());

  std::vector<E> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(examples[i]);
  return out;
}

}  // namespace ipmine
