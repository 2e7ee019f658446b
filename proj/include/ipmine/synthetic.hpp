#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipmine/corpus.hpp"
#include "ipmine/extraction.hpp"
#include "ipmine/rng.hpp"

namespace ipmine {

// Desk-scale stand-in for real forum corpora: posts are composed from
// class-conditional word distributions around one dot-decimal candidate each.
struct SyntheticSpec {
  std::size_t vocab_size = 200;      // filler vocabulary size
  std::size_t posts_per_forum = 1000;
  double vocabulary_shift = 0.0;     // fraction of signal words replaced in the target
  double label_noise = 0.0;          // probability of flipping an emitted label
  std::uint64_t rng_seed = 1;
};

// A forum plus its ground-truth label sets (synthetic or loaded from files).
struct ForumDataset {
  Forum forum;
  std::vector<LabeledExample> ident_labels;
  std::vector<LabeledExample> char_labels;
};

struct SyntheticPair {
  ForumDataset source;
  ForumDataset target;
};

struct SyntheticMulti {
  std::vector<ForumDataset> sources;
  ForumDataset target;
};

// Class-signal vocabularies. ip/version drive identification labels via the
// words adjacent to the candidate; malicious/benign drive characterization
// labels via post-level words.
struct SignalPools {
  std::vector<std::string> ip;
  std::vector<std::string> version;
  std::vector<std::string> malicious;
  std::vector<std::string> benign;
};

inline SignalPools base_pools() {
  return SignalPools{
      {"server", "address", "proxy", "router", "dns", "firewall", "ping", "gateway",
       "subnet", "host", "port", "nameserver", "connection", "traceroute", "lookup", "lan"},
      {"version", "update", "release", "build", "firmware", "installer", "upgrade", "patch",
       "driver", "client", "beta", "changelog", "setup", "bundle", "plugin", "kernel"},
      {"hijacked", "malware", "attack", "infected", "botnet", "phishing", "spam", "trojan",
       "exploit", "scanner", "bruteforce", "ransom", "keylogger", "backdoor", "flood", "intrusion"},
      {"hosts", "config", "whitelist", "homepage", "tutorial", "settings", "backup", "manual",
       "printer", "homelab", "vpn", "nas", "dashboard", "intranet", "modem", "workstation"}};
}

namespace detail {

inline void replace_fraction(std::vector<std::string>& pool, double fraction, Rng& rng,
                             const std::string& suffix) {
  const std::size_t count = static_cast<std::size_t>(fraction * static_cast<double>(pool.size()) + 0.5);
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t k = 0; k < count; ++k) pool[order[k]] += suffix;
}

inline std::vector<std::string> pool_slice(const std::vector<std::string>& pool, std::size_t k,
                                           std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = k; i < pool.size(); i += n) out.push_back(pool[i]);
  return out;
}

}  // namespace detail

// Replaces round(shift * |pool|) words of each signal pool with fresh tokens
// (the originals suffixed); the replaced indices are drawn from `rng`.
inline SignalPools shifted_pools(const SignalPools& base, double shift, Rng& rng,
                                 const std::string& suffix) {
  SignalPools out = base;
  detail::replace_fraction(out.ip, shift, rng, suffix);
  detail::replace_fraction(out.version, shift, rng, suffix);
  detail::replace_fraction(out.malicious, shift, rng, suffix);
  detail::replace_fraction(out.benign, shift, rng, suffix);
  return out;
}

// Every source sees an interleaved 1/n slice of each signal pool; the target
// draws from the full pools, so sources are complementary by construction.
inline SignalPools complementary_slice(const SignalPools& base, std::size_t k, std::size_t n) {
  return SignalPools{detail::pool_slice(base.ip, k, n), detail::pool_slice(base.version, k, n),
                     detail::pool_slice(base.malicious, k, n), detail::pool_slice(base.benign, k, n)};
}

namespace detail {

inline void validate(const SyntheticSpec& spec) {
  if (spec.vocab_size == 0) throw std::invalid_argument("synthetic: vocab_size must be positive");
  if (spec.posts_per_forum == 0) throw std::invalid_argument("synthetic: posts_per_forum must be positive");
  if (spec.vocabulary_shift < 0.0 || spec.vocabulary_shift > 1.0)
    throw std::invalid_argument("synthetic: vocabulary_shift must be in [0, 1]");
  if (spec.label_noise < 0.0 || spec.label_noise > 1.0)
    throw std::invalid_argument("synthetic: label_noise must be in [0, 1]");
}

inline std::string zero_pad(std::size_t value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

inline const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
  return pool[rng.index(pool.size())];
}

// Genuine addresses span the full octet range; non-address dot-decimals look
// version-like with low field values.
inline std::string random_ip(Rng& rng) {
  return std::to_string(rng.int_in(1, 223)) + "." + std::to_string(rng.int_in(0, 255)) + "." +
         std::to_string(rng.int_in(0, 255)) + "." + std::to_string(rng.int_in(0, 255));
}

inline std::string random_version(Rng& rng) {
  return std::to_string(rng.int_in(0, 100)) + "." + std::to_string(rng.int_in(0, 100)) + "." +
         std::to_string(rng.int_in(0, 100)) + "." + std::to_string(rng.int_in(0, 100));
}

// Posts are topically coherent: each draws its topic words from one of two
// interleaved clusters of the pool (word i belongs to cluster i mod 2), so
// topic words never co-occur across clusters. The clusters line up with the
// slices complementary_slice hands to two sources.
inline constexpr std::size_t kTopicClusters = 2;

inline const std::string& pick_clustered(const std::vector<std::string>& pool, std::size_t cluster,
                                         Rng& rng) {
  const std::size_t count = (pool.size() - cluster + kTopicClusters - 1) / kTopicClusters;
  if (count == 0) return pick(pool, rng);
  return pool[cluster + kTopicClusters * rng.index(count)];
}

}  // namespace detail

// Builds one synthetic forum. Posts alternate between genuine-address and
// version-string candidates (balanced identification classes); genuine posts
// alternate malicious/benign (balanced characterization classes). Word layout
// per post, relative to the candidate: positions +-1 and +-2 carry the true
// identification signal; everything at distance >= 3 is filler, opposite-class
// distractor words, or post-topic (characterization) words. Topic words come
// from one cluster per post (see kTopicClusters), and version posts get random
// post-topic words so their presence does not leak the ident class.
inline ForumDataset make_synthetic_forum(const std::string& forum_id, const SignalPools& pools,
                                         const SyntheticSpec& spec, Rng& rng) {
  detail::validate(spec);
  ForumDataset out;
  std::vector<Post> posts;
  posts.reserve(spec.posts_per_forum);

  auto filler = [&]() { return "w" + std::to_string(rng.index(spec.vocab_size)); };

  for (std::size_t i = 0; i < spec.posts_per_forum; ++i) {
    const bool genuine = (i % 2 == 0);
    const bool malicious = genuine ? ((i / 2) % 2 == 0) : rng.bernoulli(0.5);
    const std::vector<std::string>& sig = genuine ? pools.ip : pools.version;
    const std::vector<std::string>& opp = genuine ? pools.version : pools.ip;
    const std::vector<std::string>& topic = malicious ? pools.malicious : pools.benign;

    const std::string candidate = genuine ? detail::random_ip(rng) : detail::random_version(rng);
    const std::size_t cluster = rng.index(detail::kTopicClusters);
    const std::string topic_a = detail::pick_clustered(topic, cluster, rng);
    std::string topic_b = detail::pick_clustered(topic, cluster, rng);
    for (int guard = 0; guard < 8 && topic_b == topic_a; ++guard)
      topic_b = detail::pick_clustered(topic, cluster, rng);

    std::vector<std::string> words;
    for (int k = rng.int_in(1, 3); k > 0; --k) words.push_back(filler());
    words.push_back(detail::pick(opp, rng));
    words.push_back(detail::pick(opp, rng));
    words.push_back(topic_b);
    words.push_back(detail::pick(sig, rng));
    words.push_back(detail::pick(sig, rng));
    const std::size_t candidate_pos = words.size();
    words.push_back(candidate);
    words.push_back(detail::pick(sig, rng));
    words.push_back(detail::pick(sig, rng));
    words.push_back(topic_a);
    words.push_back(topic_a);
    words.push_back(detail::pick(opp, rng));
    words.push_back(detail::pick(opp, rng));
    for (int k = rng.int_in(1, 3); k > 0; --k) words.push_back(filler());

    std::string body;
    std::size_t span_start = 0, span_end = 0;
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w > 0) body.push_back(' ');
      if (w == candidate_pos) span_start = body.size();
      body += words[w];
      if (w == candidate_pos) span_end = body.size();
    }

    Post post;
    post.forum_id = forum_id;
    post.thread_id = "t" + detail::zero_pad(i / 8, 5);
    post.post_id = "p" + detail::zero_pad(i, 6);
    post.author_id = "u" + std::to_string(rng.index(12));
    post.timestamp = 1500000000 + static_cast<std::int64_t>(i) * 3600;
    post.body = std::move(body);

    LabeledExample ident;
    ident.post_id = post.post_id;
    ident.span_start = span_start;
    ident.span_end = span_end;
    const bool ident_flip = rng.bernoulli(spec.label_noise);
    ident.label = (genuine != ident_flip) ? Label::positive : Label::negative;
    ident.key = ident_key(ident.post_id, span_start, span_end);
    out.ident_labels.push_back(std::move(ident));

    if (genuine) {
      LabeledExample ch;
      ch.post_id = post.post_id;
      ch.address = candidate;  // generator output is already in normalized form
      const bool char_flip = rng.bernoulli(spec.label_noise);
      ch.label = (malicious != char_flip) ? Label::positive : Label::negative;
      ch.key = char_key(ch.post_id, ch.address);
      out.char_labels.push_back(std::move(ch));
    }
    posts.push_back(std::move(post));
  }
  out.forum = make_forum(forum_id, std::move(posts));
  return out;
}

// Source and target forums: the target's signal pools have a vocabulary_shift
// fraction of words replaced. Target labels are "hidden" in the sense that a
// transfer run only consumes them for scoring.
inline SyntheticPair generate_synthetic(const SyntheticSpec& spec) {
  detail::validate(spec);
  Rng rng(spec.rng_seed);
  const SignalPools base = base_pools();
  SyntheticPair pair;
  pair.source = make_synthetic_forum("src", base, spec, rng);
  const SignalPools target_pools = shifted_pools(base, spec.vocabulary_shift, rng, "x");
  pair.target = make_synthetic_forum("tgt", target_pools, spec, rng);
  return pair;
}

// n_sources forums with complementary signal-pool slices plus one target over
// the full pools. vocabulary_shift is ignored here: the slicing itself is the
// cross-forum vocabulary disparity.
inline SyntheticMulti generate_synthetic_sources(const SyntheticSpec& spec, std::size_t n_sources) {
  detail::validate(spec);
  if (n_sources == 0) throw std::invalid_argument("synthetic: need at least one source");
  Rng rng(spec.rng_seed);
  const SignalPools base = base_pools();
  SyntheticMulti out;
  out.target = make_synthetic_forum("tgt", base, spec, rng);
  for (std::size_t k = 0; k < n_sources; ++k) {
    out.sources.push_back(
        make_synthetic_forum("src" + std::to_string(k), complementary_slice(base, k, n_sources), spec, rng));
  }
  return out;
}

}  // namespace ipmine
