#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ipmine/classifier.hpp"
#include "ipmine/corpus.hpp"
#include "ipmine/extraction.hpp"
#include "ipmine/features.hpp"
#include "ipmine/synthetic.hpp"
#include "ipmine/tokenizer.hpp"
#include "ipmine/transfer.hpp"

namespace ipmine {

enum class Verdict { benign, malicious };

// One scored address mention: a candidate that passed identification,
// characterized for maliciousness.
struct Mention {
  std::string address;  // normalized dotted quad
  std::string post_id;
  std::size_t span_start = 0;
  std::size_t span_end = 0;
  double p_is_ip = 0.0;
  double p_malicious = 0.0;
  std::int64_t timestamp = 0;
};

// Per-address aggregation of mentions. Verdict is a majority vote over the
// mentions' thresholded p_malicious; ties resolve to malicious.
struct IpReport {
  std::string address;
  std::size_t mention_count = 0;
  std::vector<Mention> mentions;
  Verdict verdict = Verdict::benign;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
};

struct BlacklistComparison {
  std::vector<std::string> in_both;
  std::vector<std::string> only_report;
  std::vector<std::string> only_blacklist;
};

// ---------------------------------------------------------------------------
// Dataset assembly: resolve label rows against a forum's posts and candidates.

namespace detail {

inline std::unordered_map<std::string, const Post*> index_posts(const Forum& forum) {
  std::unordered_map<std::string, const Post*> idx;
  idx.reserve(forum.posts.size());
  for (const Post& p : forum.posts) idx.emplace(p.post_id, &p);
  return idx;
}

inline const Post& post_for(const std::unordered_map<std::string, const Post*>& idx,
                            const std::string& post_id, const std::string& key) {
  auto it = idx.find(post_id);
  if (it == idx.end())
    throw std::runtime_error("label \"" + key + "\" references unknown post \"" + post_id + "\"");
  return *it->second;
}

}  // namespace detail

// Candidates and context-window documents for identification label rows, both
// aligned with `rows`. A row whose span does not match an extracted candidate
// is an error: labels must reference real candidates.
struct IdentInstances {
  std::vector<Candidate> candidates;
  std::vector<std::vector<std::string>> documents;  // before + after window texts
};

inline IdentInstances collect_ident_instances(const Forum& forum,
                                              const std::vector<LabeledExample>& rows,
                                              WordRange word_range) {
  const auto post_idx = detail::index_posts(forum);
  std::unordered_map<std::string, std::vector<Candidate>> extracted;
  IdentInstances out;
  out.candidates.reserve(rows.size());
  out.documents.reserve(rows.size());
  for (const LabeledExample& row : rows) {
    const Post& post = detail::post_for(post_idx, row.post_id, row.key);
    auto [it, fresh] = extracted.try_emplace(row.post_id);
    if (fresh) it->second = extract_candidates(post, word_range);
    const Candidate* match = nullptr;
    for (const Candidate& c : it->second) {
      if (c.span_start == row.span_start && c.span_end == row.span_end) {
        match = &c;
        break;
      }
    }
    if (!match)
      throw std::runtime_error("label \"" + row.key + "\" does not match any extracted candidate");
    std::vector<std::string> doc = texts_of(match->context_before);
    for (const Token& t : match->context_after) doc.push_back(t.text);
    out.candidates.push_back(*match);
    out.documents.push_back(std::move(doc));
  }
  return out;
}

// One document per characterization row: the post's tokens with the labeled
// address excluded.
inline std::vector<std::vector<std::string>> collect_char_documents(
    const Forum& forum, const std::vector<LabeledExample>& rows) {
  const auto post_idx = detail::index_posts(forum);
  std::vector<std::vector<std::string>> docs;
  docs.reserve(rows.size());
  for (const LabeledExample& row : rows) {
    const Post& post = detail::post_for(post_idx, row.post_id, row.key);
    docs.push_back(post_texts_excluding_address(post, row.address));
  }
  return docs;
}

inline std::vector<Example> vectorize_ident(const SpacePtr& space, const IdentInstances& instances,
                                            const std::vector<LabeledExample>& rows,
                                            IdentFeatureSet set) {
  std::vector<Example> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back(Example{rows[i].key, rows[i].label,
                          identification_vector(instances.candidates[i], space, set)});
  }
  return out;
}

inline std::vector<Example> vectorize_char(
    const SpacePtr& space, const Forum& forum, const std::vector<LabeledExample>& rows,
    CharFeatureSet set, const std::map<std::string, AuthorProfile>* profiles = nullptr) {
  const auto post_idx = detail::index_posts(forum);
  std::vector<Example> out;
  out.reserve(rows.size());
  for (const LabeledExample& row : rows) {
    const Post& post = detail::post_for(post_idx, row.post_id, row.key);
    const AuthorProfile* profile = nullptr;
    if (set == CharFeatureSet::context_info) {
      if (!profiles) throw std::invalid_argument("vectorize_char: ContextInfo requires profiles");
      auto it = profiles->find(post.author_id);
      if (it == profiles->end())
        throw std::runtime_error("no author profile for \"" + post.author_id + "\"");
      profile = &it->second;
    }
    out.push_back(Example{row.key, row.label,
                          characterization_vector(post, row.address, space, set, profile)});
  }
  return out;
}

inline std::map<std::string, AuthorProfile> profiles_of(const Forum& forum) {
  return author_profiles(forum, [](std::string_view body) { return tokenize(body).size(); });
}

// Labeled dataset for one forum, vectorized over its own space.
struct IdentDataset {
  SpacePtr space;
  std::vector<Example> examples;
};

inline IdentDataset build_ident_dataset(const ForumDataset& data, WordRange word_range,
                                        IdentFeatureSet set, std::size_t min_df = 1) {
  const IdentInstances inst = collect_ident_instances(data.forum, data.ident_labels, word_range);
  SpaceOptions opt;
  opt.octets = set != IdentFeatureSet::text_info;
  opt.min_df = min_df;
  SpacePtr space = build_space(inst.documents, opt);
  return IdentDataset{space, vectorize_ident(space, inst, data.ident_labels, set)};
}

struct CharDataset {
  SpacePtr space;
  std::vector<Example> examples;
};

inline CharDataset build_char_dataset(const ForumDataset& data, CharFeatureSet set,
                                      std::size_t min_df = 1) {
  SpaceOptions opt;
  opt.author = set == CharFeatureSet::context_info;
  opt.min_df = min_df;
  SpacePtr space = build_space(collect_char_documents(data.forum, data.char_labels), opt);
  std::optional<std::map<std::string, AuthorProfile>> profiles;
  if (set == CharFeatureSet::context_info) profiles = profiles_of(data.forum);
  return CharDataset{space, vectorize_char(space, data.forum, data.char_labels, set,
                                           profiles ? &*profiles : nullptr)};
}

// ---------------------------------------------------------------------------
// In-domain evaluation.

inline CvResult ident_cv(const ForumDataset& data, WordRange word_range, IdentFeatureSet set,
                         int k, const Hyperparams& hp, std::uint64_t rng_seed,
                         std::size_t min_df = 1) {
  const IdentDataset ds = build_ident_dataset(data, word_range, set, min_df);
  return kfold_cv(ds.examples, k, hp, rng_seed);
}

inline CvResult char_cv(const ForumDataset& data, CharFeatureSet set, int k, const Hyperparams& hp,
                        std::uint64_t rng_seed, std::size_t min_df = 1) {
  const CharDataset ds = build_char_dataset(data, set, min_df);
  return kfold_cv(ds.examples, k, hp, rng_seed);
}

// ---------------------------------------------------------------------------
// Transfer evaluation: union space over all sources and the target, pooled
// source training, cross-port vs cross-seed scored against held-back labels.

struct TransferEval {
  Metrics cross_port;
  Metrics cross_seed;
  double threshold_used = 0.0;
  std::size_t seed_positive = 0;
  std::size_t seed_negative = 0;
  CrossSeedResult run;
};

enum class TransferTask { identification, characterization };

// The full Algorithm-1 wiring for an evaluation run: per-forum spaces are
// unioned, both sides are re-vectorized over the union, the pooled source
// model gives the cross-port baseline, and cross-seeding gives the contender.
inline TransferEval run_transfer_eval(const std::vector<const ForumDataset*>& sources,
                                      const ForumDataset& target, TransferTask task,
                                      WordRange word_range, IdentFeatureSet ident_set,
                                      CharFeatureSet char_set, const TransferConfig& config,
                                      std::size_t min_df = 1) {
  if (sources.empty()) throw std::invalid_argument("run_transfer_eval: need at least one source");

  SpaceOptions opt;
  opt.min_df = min_df;
  std::vector<IdentInstances> source_inst(sources.size());
  IdentInstances target_inst;
  SpacePtr space;
  if (task == TransferTask::identification) {
    opt.octets = ident_set != IdentFeatureSet::text_info;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      source_inst[s] = collect_ident_instances(sources[s]->forum, sources[s]->ident_labels, word_range);
      SpacePtr sp = build_space(source_inst[s].documents, opt);
      space = space ? union_spaces(space, sp) : sp;
    }
    target_inst = collect_ident_instances(target.forum, target.ident_labels, word_range);
    space = union_spaces(space, build_space(target_inst.documents, opt));
  } else {
    opt.author = char_set == CharFeatureSet::context_info;
    for (const ForumDataset* src : sources) {
      SpacePtr sp = build_space(collect_char_documents(src->forum, src->char_labels), opt);
      space = space ? union_spaces(space, sp) : sp;
    }
    space = union_spaces(space, build_space(collect_char_documents(target.forum, target.char_labels), opt));
  }

  std::vector<std::vector<Example>> source_examples;
  std::vector<Example> target_examples;
  if (task == TransferTask::identification) {
    for (std::size_t s = 0; s < sources.size(); ++s)
      source_examples.push_back(vectorize_ident(space, source_inst[s], sources[s]->ident_labels, ident_set));
    target_examples = vectorize_ident(space, target_inst, target.ident_labels, ident_set);
  } else {
    const bool with_profiles = char_set == CharFeatureSet::context_info;
    for (const ForumDataset* src : sources) {
      std::optional<std::map<std::string, AuthorProfile>> profiles;
      if (with_profiles) profiles = profiles_of(src->forum);
      source_examples.push_back(
          vectorize_char(space, src->forum, src->char_labels, char_set, profiles ? &*profiles : nullptr));
    }
    std::optional<std::map<std::string, AuthorProfile>> profiles;
    if (with_profiles) profiles = profiles_of(target.forum);
    target_examples =
        vectorize_char(space, target.forum, target.char_labels, char_set, profiles ? &*profiles : nullptr);
  }

  std::vector<TargetInstance> target_instances;
  std::vector<Label> truth;
  target_instances.reserve(target_examples.size());
  truth.reserve(target_examples.size());
  for (Example& ex : target_examples) {
    truth.push_back(ex.label);
    target_instances.push_back(TargetInstance{std::move(ex.key), std::move(ex.features)});
  }

  TransferEval eval;
  eval.run = multi_source_cross_seed(source_examples, target_instances, config);
  eval.cross_port = metrics_against(cross_port(eval.run.source_model, target_instances), truth);
  eval.cross_seed = metrics_against(eval.run.predictions, truth);
  eval.threshold_used = eval.run.seed.threshold;
  eval.seed_positive = eval.run.seed.count(Label::positive);
  eval.seed_negative = eval.run.seed.count(Label::negative);
  return eval;
}

// ---------------------------------------------------------------------------
// Cross-seeding against an unlabeled target forum (the deployment path; the
// evaluation path above uses held-back labels instead).

struct CrossSeedRun {
  CrossSeedResult result;
  std::vector<std::string> target_keys;  // aligned with result.predictions
  SpacePtr space;
};

// Identification transfer: the target instance set is every extracted
// candidate of the target forum.
inline CrossSeedRun cross_seed_ident(const std::vector<const ForumDataset*>& sources,
                                     const Forum& target, WordRange word_range, IdentFeatureSet set,
                                     const TransferConfig& config, std::size_t min_df = 1) {
  if (sources.empty()) throw std::invalid_argument("cross_seed_ident: need at least one source");
  SpaceOptions opt;
  opt.octets = set != IdentFeatureSet::text_info;
  opt.min_df = min_df;

  std::vector<IdentInstances> source_inst(sources.size());
  SpacePtr space;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    source_inst[s] = collect_ident_instances(sources[s]->forum, sources[s]->ident_labels, word_range);
    SpacePtr sp = build_space(source_inst[s].documents, opt);
    space = space ? union_spaces(space, sp) : sp;
  }

  std::vector<Candidate> target_candidates;
  std::vector<std::vector<std::string>> target_docs;
  for (const Post& post : target.posts) {
    for (Candidate& c : extract_candidates(post, word_range)) {
      std::vector<std::string> doc = texts_of(c.context_before);
      for (const Token& t : c.context_after) doc.push_back(t.text);
      target_docs.push_back(std::move(doc));
      target_candidates.push_back(std::move(c));
    }
  }
  if (target_candidates.empty())
    throw std::runtime_error("cross_seed_ident: target forum has no candidates");
  space = union_spaces(space, build_space(target_docs, opt));

  std::vector<std::vector<Example>> source_examples;
  for (std::size_t s = 0; s < sources.size(); ++s)
    source_examples.push_back(vectorize_ident(space, source_inst[s], sources[s]->ident_labels, set));

  CrossSeedRun run;
  std::vector<TargetInstance> instances;
  instances.reserve(target_candidates.size());
  for (const Candidate& c : target_candidates) {
    std::string key = ident_key(c.post_id, c.span_start, c.span_end);
    instances.push_back(TargetInstance{key, identification_vector(c, space, set)});
    run.target_keys.push_back(std::move(key));
  }
  run.result = multi_source_cross_seed(source_examples, instances, config);
  run.space = space;
  return run;
}

// Characterization transfer: the target instance set is a list of
// (post_id, address) mentions, typically the p >= 0.5 output of an
// identification model over the target forum.
inline CrossSeedRun cross_seed_char(const std::vector<const ForumDataset*>& sources,
                                    const Forum& target,
                                    const std::vector<std::pair<std::string, std::string>>& mentions,
                                    CharFeatureSet set, const TransferConfig& config,
                                    std::size_t min_df = 1) {
  if (sources.empty()) throw std::invalid_argument("cross_seed_char: need at least one source");
  if (mentions.empty()) throw std::invalid_argument("cross_seed_char: empty target mention set");
  SpaceOptions opt;
  opt.author = set == CharFeatureSet::context_info;
  opt.min_df = min_df;

  SpacePtr space;
  for (const ForumDataset* src : sources) {
    SpacePtr sp = build_space(collect_char_documents(src->forum, src->char_labels), opt);
    space = space ? union_spaces(space, sp) : sp;
  }
  std::vector<LabeledExample> target_rows;
  target_rows.reserve(mentions.size());
  for (const auto& [post_id, address] : mentions) {
    LabeledExample row;
    row.post_id = post_id;
    row.address = address;
    row.key = char_key(post_id, address);
    target_rows.push_back(std::move(row));
  }
  space = union_spaces(space, build_space(collect_char_documents(target, target_rows), opt));

  std::vector<std::vector<Example>> source_examples;
  for (const ForumDataset* src : sources) {
    std::optional<std::map<std::string, AuthorProfile>> src_profiles;
    if (set == CharFeatureSet::context_info) src_profiles = profiles_of(src->forum);
    source_examples.push_back(
        vectorize_char(space, src->forum, src->char_labels, set, src_profiles ? &*src_profiles : nullptr));
  }

  std::optional<std::map<std::string, AuthorProfile>> profiles;
  if (set == CharFeatureSet::context_info) profiles = profiles_of(target);
  std::vector<Example> target_vectors =
      vectorize_char(space, target, target_rows, set, profiles ? &*profiles : nullptr);

  CrossSeedRun run;
  std::vector<TargetInstance> instances;
  instances.reserve(target_vectors.size());
  for (Example& ex : target_vectors) {
    run.target_keys.push_back(ex.key);
    instances.push_back(TargetInstance{std::move(ex.key), std::move(ex.features)});
  }
  run.result = multi_source_cross_seed(source_examples, instances, config);
  run.space = space;
  return run;
}

// ---------------------------------------------------------------------------
// End-to-end scoring: identify -> characterize -> aggregate.

// Scores every extracted candidate of the forum with the identification model.
inline std::vector<std::pair<Candidate, double>> run_identification(const Forum& forum,
                                                                    const Model& model,
                                                                    WordRange word_range,
                                                                    IdentFeatureSet set) {
  std::vector<std::pair<Candidate, double>> out;
  for (const Post& post : forum.posts) {
    for (Candidate& c : extract_candidates(post, word_range)) {
      const double p = predict_proba(model, identification_vector(c, model.space, set));
      out.emplace_back(std::move(c), p);
    }
  }
  return out;
}

// Characterizes every identified mention (p_is_ip >= 0.5).
inline std::vector<Mention> run_characterization(
    const std::vector<std::pair<Candidate, double>>& identified, const Forum& forum,
    const Model& model, CharFeatureSet set) {
  const auto post_idx = detail::index_posts(forum);
  std::optional<std::map<std::string, AuthorProfile>> profiles;
  if (set == CharFeatureSet::context_info) profiles = profiles_of(forum);

  std::vector<Mention> mentions;
  for (const auto& [candidate, p_is_ip] : identified) {
    if (p_is_ip < 0.5) continue;
    auto it = post_idx.find(candidate.post_id);
    if (it == post_idx.end())
      throw std::runtime_error("candidate references unknown post \"" + candidate.post_id + "\"");
    const Post& post = *it->second;
    const std::string address = format_quad(candidate.octets);
    const AuthorProfile* profile = nullptr;
    if (profiles) {
      auto pit = profiles->find(post.author_id);
      if (pit == profiles->end())
        throw std::runtime_error("no author profile for \"" + post.author_id + "\"");
      profile = &pit->second;
    }
    const double p_malicious =
        predict_proba(model, characterization_vector(post, address, model.space, set, profile));
    mentions.push_back(Mention{address, candidate.post_id, candidate.span_start, candidate.span_end,
                               p_is_ip, p_malicious, post.timestamp});
  }
  return mentions;
}

// Groups mentions by address. Sorted by mention_count descending, then
// address ascending; a report never contains an address that did not appear
// as an identified mention.
inline std::vector<IpReport> aggregate_report(const std::vector<Mention>& mentions) {
  std::map<std::string, IpReport> by_address;
  for (const Mention& m : mentions) {
    IpReport& r = by_address[m.address];
    if (r.mentions.empty()) {
      r.address = m.address;
      r.first_seen = m.timestamp;
      r.last_seen = m.timestamp;
    } else {
      r.first_seen = std::min(r.first_seen, m.timestamp);
      r.last_seen = std::max(r.last_seen, m.timestamp);
    }
    r.mentions.push_back(m);
  }
  std::vector<IpReport> reports;
  reports.reserve(by_address.size());
  for (auto& [address, r] : by_address) {
    r.mention_count = r.mentions.size();
    std::size_t malicious = 0;
    for (const Mention& m : r.mentions)
      if (m.p_malicious >= 0.5) ++malicious;
    r.verdict = (2 * malicious >= r.mention_count) ? Verdict::malicious : Verdict::benign;
    reports.push_back(std::move(r));
  }
  std::sort(reports.begin(), reports.end(), [](const IpReport& a, const IpReport& b) {
    if (a.mention_count != b.mention_count) return a.mention_count > b.mention_count;
    return a.address < b.address;
  });
  return reports;
}

// Newline-delimited blacklist, one dotted quad per line, '#' comments.
inline std::vector<std::string> load_blacklist_stream(std::istream& in, const std::string& path) {
  std::vector<std::string> addresses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    const auto normalized = normalize_address(token);
    if (!normalized)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unparsable address \"" + token + "\"");
    addresses.push_back(*normalized);
  }
  return addresses;
}

inline std::vector<std::string> load_blacklist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open blacklist: " + path);
  return load_blacklist_stream(in, path);
}

// Exact set arithmetic on normalized address strings.
inline BlacklistComparison compare_blacklist(const std::vector<IpReport>& reports,
                                             const std::vector<std::string>& blacklist) {
  std::vector<std::string> report_addrs;
  report_addrs.reserve(reports.size());
  for (const IpReport& r : reports) report_addrs.push_back(r.address);
  std::sort(report_addrs.begin(), report_addrs.end());
  report_addrs.erase(std::unique(report_addrs.begin(), report_addrs.end()), report_addrs.end());

  std::vector<std::string> bl = blacklist;
  std::sort(bl.begin(), bl.end());
  bl.erase(std::unique(bl.begin(), bl.end()), bl.end());

  BlacklistComparison out;
  std::set_intersection(report_addrs.begin(), report_addrs.end(), bl.begin(), bl.end(),
                        std::back_inserter(out.in_both));
  std::set_difference(report_addrs.begin(), report_addrs.end(), bl.begin(), bl.end(),
                      std::back_inserter(out.only_report));
  std::set_difference(bl.begin(), bl.end(), report_addrs.begin(), report_addrs.end(),
                      std::back_inserter(out.only_blacklist));
  return out;
}

inline BlacklistComparison compare_blacklist(const std::vector<IpReport>& reports,
                                             const std::string& blacklist_path) {
  return compare_blacklist(reports, load_blacklist(blacklist_path));
}

// ---------------------------------------------------------------------------
// CSV emission and parsing. Output formatting is fixed so identical inputs
// produce byte-identical files.

namespace detail {

inline std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", p);
  return buf;
}

}  // namespace detail

inline std::string candidates_to_csv(const std::vector<Candidate>& candidates) {
  std::string out = "post_id,span_start,span_end,raw\n";
  for (const Candidate& c : candidates) {
    out += c.post_id + "," + std::to_string(c.span_start) + "," + std::to_string(c.span_end) +
           "," + c.raw + "\n";
  }
  return out;
}

inline std::string mentions_to_csv(const std::vector<Mention>& mentions) {
  std::string out = "address,post_id,span_start,span_end,p_is_ip,p_malicious\n";
  for (const Mention& m : mentions) {
    out += m.address + "," + m.post_id + "," + std::to_string(m.span_start) + "," +
           std::to_string(m.span_end) + "," + detail::format_prob(m.p_is_ip) + "," +
           detail::format_prob(m.p_malicious) + "\n";
  }
  return out;
}

inline std::string verdict_name(Verdict v) { return v == Verdict::malicious ? "malicious" : "benign"; }

inline std::string report_to_csv(const std::vector<IpReport>& reports) {
  std::string out = "address,mention_count,verdict,first_seen,last_seen\n";
  for (const IpReport& r : reports) {
    out += r.address + "," + std::to_string(r.mention_count) + "," + verdict_name(r.verdict) + "," +
           std::to_string(r.first_seen) + "," + std::to_string(r.last_seen) + "\n";
  }
  return out;
}

inline std::string metrics_to_csv(const CvResult& cv) {
  std::string out = "fold,precision,recall,accuracy\n";
  for (std::size_t i = 0; i < cv.folds.size(); ++i) {
    const Metrics& m = cv.folds[i];
    out += std::to_string(i) + "," + detail::format_prob(m.precision) + "," +
           detail::format_prob(m.recall) + "," + detail::format_prob(m.accuracy) + "\n";
  }
  out += "mean," + detail::format_prob(cv.mean.precision) + "," + detail::format_prob(cv.mean.recall) +
         "," + detail::format_prob(cv.mean.accuracy) + "\n";
  return out;
}

inline std::string seed_to_csv(const SeedSet& seed) {
  std::string out = "key,pseudo_label,confidence\n";
  for (const SeedInstance& s : seed.instances) {
    out += s.key + "," + (s.pseudo_label == Label::positive ? "positive" : "negative") + "," +
           detail::format_prob(s.confidence) + "\n";
  }
  return out;
}

// Parses the mentions CSV (timestamps are not part of the file format and come
// back as zero); used to recheck emitted verdicts from the file alone.
inline std::vector<Mention> parse_mentions_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("mentions csv: empty input");
  std::vector<Mention> mentions;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != 6)
      throw std::runtime_error("mentions csv line " + std::to_string(lineno) + ": expected 6 fields");
    Mention m;
    m.address = f[0];
    m.post_id = f[1];
    m.span_start = detail::parse_size_field(f[2], "mentions csv", lineno, "span_start");
    m.span_end = detail::parse_size_field(f[3], "mentions csv", lineno, "span_end");
    m.p_is_ip = detail::parse_real_field(f[4], "mentions csv", lineno, "p_is_ip");
    m.p_malicious = detail::parse_real_field(f[5], "mentions csv", lineno, "p_malicious");
    mentions.push_back(std::move(m));
  }
  return mentions;
}

// Parses the report CSV back into (timestamp-bearing) reports; mention lists
// are not part of the file format and come back empty.
inline std::vector<IpReport> parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("report csv: empty input");
  std::vector<IpReport> reports;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != 5)
      throw std::runtime_error("report csv line " + std::to_string(lineno) + ": expected 5 fields");
    IpReport r;
    r.address = f[0];
    r.mention_count = detail::parse_size_field(f[1], "report csv", lineno, "mention_count");
    if (f[2] == "malicious") r.verdict = Verdict::malicious;
    else if (f[2] == "benign") r.verdict = Verdict::benign;
    else throw std::runtime_error("report csv line " + std::to_string(lineno) + ": unknown verdict \"" + f[2] + "\"");
    r.first_seen = static_cast<std::int64_t>(detail::parse_size_field(f[3], "report csv", lineno, "first_seen"));
    r.last_seen = static_cast<std::int64_t>(detail::parse_size_field(f[4], "report csv", lineno, "last_seen"));
    reports.push_back(std::move(r));
  }
  return reports;
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << contents;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ipmine
