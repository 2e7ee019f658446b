#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ipmine/corpus.hpp"
#include "ipmine/extraction.hpp"
#include "ipmine/tokenizer.hpp"

namespace ipmine {

enum class DimKind { word, octet, author };

struct Dimension {
  DimKind kind = DimKind::word;
  std::string name;        // "word:<token>", "octet:<i>", "author:<field>"
  std::size_t df = 0;      // word dims only: number of documents containing the token
};

enum class IdentFeatureSet { text_info, decimal_val, mixed };
enum class CharFeatureSet { post_text, context_info };

inline constexpr std::array<std::string_view, 5> kAuthorFields = {
    "post_count", "mean_post_length", "active_days", "posts_per_active_day", "thread_count"};

// Named sparse dimensions plus the idf table derived from document counts.
// Canonical dimension order: word dims sorted lexicographically, then
// octet:1..4, then the author fields — so equal content means equal layout.
class FeatureSpace {
 public:
  FeatureSpace(std::vector<Dimension> dims, std::size_t document_count)
      : dims_(std::move(dims)), document_count_(document_count) {
    if (document_count_ == 0) throw std::invalid_argument("FeatureSpace: document_count must be positive");
    idf_.resize(dims_.size(), 0.0);
    index_.reserve(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      const Dimension& d = dims_[i];
      if (!index_.emplace(d.name, i).second)
        throw std::invalid_argument("FeatureSpace: duplicate dimension \"" + d.name + "\"");
      if (d.kind == DimKind::word) {
        idf_[i] = idf_value(document_count_, d.df);
      } else if (d.kind == DimKind::octet) {
        has_octets_ = true;
      } else {
        has_author_ = true;
      }
    }
  }

  static double idf_value(std::size_t document_count, std::size_t df) {
    return std::log(static_cast<double>(document_count) / (1.0 + static_cast<double>(df))) + 1.0;
  }

  const std::vector<Dimension>& dimensions() const { return dims_; }
  std::size_t size() const { return dims_.size(); }
  std::size_t document_count() const { return document_count_; }
  double idf(std::size_t dim) const { return idf_[dim]; }
  bool has_octets() const { return has_octets_; }
  bool has_author() const { return has_author_; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> dimension_names() const {
    std::vector<std::string> names;
    names.reserve(dims_.size());
    for (const Dimension& d : dims_) names.push_back(d.name);
    return names;
  }

  nlohmann::json to_json() const {
    nlohmann::json dims = nlohmann::json::array();
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      const Dimension& d = dims_[i];
      nlohmann::json j{{"name", d.name}};
      switch (d.kind) {
        case DimKind::word:
          j["kind"] = "word";
          j["df"] = d.df;
          j["idf"] = idf_[i];
          break;
        case DimKind::octet:
          j["kind"] = "octet";
          break;
        case DimKind::author:
          j["kind"] = "author";
          break;
      }
      dims.push_back(std::move(j));
    }
    return nlohmann::json{{"version", 1}, {"document_count", document_count_}, {"dimensions", dims}};
  }

  static FeatureSpace from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j["version"].get<int>() != 1)
      throw std::runtime_error("feature space: unsupported version");
    std::vector<Dimension> dims;
    for (const auto& dj : j.at("dimensions")) {
      Dimension d;
      d.name = dj.at("name").get<std::string>();
      const std::string kind = dj.at("kind").get<std::string>();
      if (kind == "word") {
        d.kind = DimKind::word;
        d.df = dj.at("df").get<std::size_t>();
      } else if (kind == "octet") {
        d.kind = DimKind::octet;
      } else if (kind == "author") {
        d.kind = DimKind::author;
      } else {
        throw std::runtime_error("feature space: unknown dimension kind \"" + kind + "\"");
      }
      dims.push_back(std::move(d));
    }
    return FeatureSpace(std::move(dims), j.at("document_count").get<std::size_t>());
  }

 private:
  std::vector<Dimension> dims_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> idf_;
  std::size_t document_count_ = 0;
  bool has_octets_ = false;
  bool has_author_ = false;
};

using SpacePtr = std::shared_ptr<const FeatureSpace>;

// Sparse vector over one space; entries sorted by dimension index.
struct FeatureVector {
  SpacePtr space;
  std::vector<std::pair<std::size_t, double>> entries;

  double get(std::size_t dim) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), dim,
                               [](const auto& e, std::size_t d) { return e.first < d; });
    return (it != entries.end() && it->first == dim) ? it->second : 0.0;
  }

  double get(std::string_view name) const {
    if (!space) return 0.0;
    const auto dim = space->find(name);
    return dim ? get(*dim) : 0.0;
  }
};

struct SpaceOptions {
  bool octets = false;        // append octet:1..4
  bool author = false;        // append author:<field> dims
  std::size_t min_df = 1;     // drop words below this document frequency
};

inline std::vector<std::string> texts_of(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.text);
  return out;
}

// Builds the space from one document per token-list. df(w) counts documents
// containing w; idf(w) = ln(N / (1 + df(w))) + 1.
inline SpacePtr build_space(const std::vector<std::vector<std::string>>& documents,
                            const SpaceOptions& options = {}) {
  if (documents.empty()) throw std::invalid_argument("build_space: documents must be non-empty");
  std::map<std::string, std::size_t> df;  // ordered: canonical sorted word dims
  for (const auto& doc : documents) {
    std::set<std::string> seen;
    for (const std::string& tok : doc) {
      if (seen.insert(tok).second) ++df[tok];
    }
  }
  std::vector<Dimension> dims;
  for (const auto& [token, count] : df) {
    if (count < options.min_df) continue;
    dims.push_back(Dimension{DimKind::word, "word:" + token, count});
  }
  if (options.octets) {
    for (int i = 1; i <= 4; ++i) dims.push_back(Dimension{DimKind::octet, "octet:" + std::to_string(i), 0});
  }
  if (options.author) {
    for (std::string_view f : kAuthorFields)
      dims.push_back(Dimension{DimKind::author, "author:" + std::string(f), 0});
  }
  if (dims.empty()) throw std::invalid_argument("build_space: zero usable tokens");
  return std::make_shared<FeatureSpace>(std::move(dims), documents.size());
}

namespace detail {

inline void add_word_counts(const std::vector<Token>& tokens, const FeatureSpace& space,
                            std::map<std::size_t, double>& counts) {
  for (const Token& t : tokens) {
    if (const auto dim = space.find("word:" + t.text)) counts[*dim] += 1.0;
  }
}

inline FeatureVector finish_vector(SpacePtr space, std::map<std::size_t, double> counts,
                                   bool apply_idf) {
  FeatureVector v;
  v.entries.reserve(counts.size());
  for (const auto& [dim, value] : counts) {
    v.entries.emplace_back(dim, apply_idf ? value * space->idf(dim) : value);
  }
  v.space = std::move(space);
  return v;
}

}  // namespace detail

// TextInfo: tf-idf over the candidate's context windows (tf = raw count in
// the window). DecimalVal: the four raw octet values. Mixed: both.
inline FeatureVector identification_vector(const Candidate& candidate, SpacePtr space,
                                           IdentFeatureSet set) {
  const bool wants_octets = set != IdentFeatureSet::text_info;
  if (wants_octets && !space->has_octets())
    throw std::invalid_argument("identification_vector: space was built without octet dimensions");

  std::map<std::size_t, double> counts;
  if (set != IdentFeatureSet::decimal_val) {
    detail::add_word_counts(candidate.context_before, *space, counts);
    detail::add_word_counts(candidate.context_after, *space, counts);
  }
  FeatureVector v = detail::finish_vector(space, std::move(counts), /*apply_idf=*/true);
  if (wants_octets) {
    for (int i = 0; i < 4; ++i) {
      const auto dim = v.space->find("octet:" + std::to_string(i + 1));
      v.entries.emplace_back(*dim, static_cast<double>(candidate.octets[i]));
    }
    std::sort(v.entries.begin(), v.entries.end());
  }
  return v;
}

// Token texts of the post body with every mention of `address` removed; the
// comparison normalizes dot-decimals so "010.1.1.1" matches "10.1.1.1".
inline std::vector<std::string> post_texts_excluding_address(const Post& post,
                                                             const std::string& address) {
  const std::optional<std::string> norm_addr = normalize_address(address);
  std::vector<std::string> out;
  for (Token& t : tokenize(post.body)) {
    if (t.text == address) continue;
    if (norm_addr) {
      const auto norm_tok = normalize_address(t.text);
      if (norm_tok && *norm_tok == *norm_addr) continue;
    }
    out.push_back(std::move(t.text));
  }
  return out;
}

// PostText: tf-idf over the whole post body, with tokens matching the address
// itself excluded. ContextInfo: PostText plus the author profile fields.
inline FeatureVector characterization_vector(const Post& post, const std::string& address,
                                             SpacePtr space, CharFeatureSet set,
                                             const AuthorProfile* profile = nullptr) {
  if (set == CharFeatureSet::context_info) {
    if (profile == nullptr)
      throw std::invalid_argument("characterization_vector: ContextInfo requires an author profile");
    if (!space->has_author())
      throw std::invalid_argument("characterization_vector: space was built without author dimensions");
  }
  std::map<std::size_t, double> counts;
  for (const std::string& text : post_texts_excluding_address(post, address)) {
    if (const auto dim = space->find("word:" + text)) counts[*dim] += 1.0;
  }
  FeatureVector v = detail::finish_vector(space, std::move(counts), /*apply_idf=*/true);
  if (set == CharFeatureSet::context_info) {
    const std::array<double, 5> values = {
        static_cast<double>(profile->post_count), profile->mean_post_length,
        static_cast<double>(profile->active_days), profile->posts_per_active_day,
        static_cast<double>(profile->thread_count)};
    for (std::size_t i = 0; i < kAuthorFields.size(); ++i) {
      const auto dim = v.space->find("author:" + std::string(kAuthorFields[i]));
      v.entries.emplace_back(*dim, values[i]);
    }
    std::sort(v.entries.begin(), v.entries.end());
  }
  return v;
}

// Set union of dimensions with summed document counts; idf is recomputed from
// the combined df. Octet/author flags must agree between the operands.
inline SpacePtr union_spaces(const SpacePtr& a, const SpacePtr& b) {
  if (a->has_octets() != b->has_octets() || a->has_author() != b->has_author())
    throw std::invalid_argument("union_spaces: octet/author dimension flags disagree");
  std::map<std::string, std::size_t> df;
  for (const Dimension& d : a->dimensions())
    if (d.kind == DimKind::word) df[d.name] += d.df;
  for (const Dimension& d : b->dimensions())
    if (d.kind == DimKind::word) df[d.name] += d.df;

  std::vector<Dimension> dims;
  dims.reserve(df.size());
  for (const auto& [name, count] : df) dims.push_back(Dimension{DimKind::word, name, count});
  if (a->has_octets()) {
    for (int i = 1; i <= 4; ++i) dims.push_back(Dimension{DimKind::octet, "octet:" + std::to_string(i), 0});
  }
  if (a->has_author()) {
    for (std::string_view f : kAuthorFields)
      dims.push_back(Dimension{DimKind::author, "author:" + std::string(f), 0});
  }
  return std::make_shared<FeatureSpace>(std::move(dims), a->document_count() + b->document_count());
}

// Keeps entries whose dimension exists in `target`; word values are
// re-weighted from source idf to target idf, octet/author values copied.
inline FeatureVector project(const FeatureVector& v, SpacePtr target) {
  FeatureVector out;
  for (const auto& [dim, value] : v.entries) {
    const Dimension& d = v.space->dimensions()[dim];
    const auto tdim = target->find(d.name);
    if (!tdim) continue;
    double tvalue = value;
    if (d.kind == DimKind::word) {
      const double src_idf = v.space->idf(dim);
      tvalue = value / src_idf * target->idf(*tdim);
    }
    out.entries.emplace_back(*tdim, tvalue);
  }
  std::sort(out.entries.begin(), out.entries.end());
  out.space = std::move(target);
  return out;
}

}  // namespace ipmine
