#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "ipmine/corpus.hpp"
#include "ipmine/rng.hpp"
#include "ipmine/tokenizer.hpp"

using namespace ipmine;

namespace {

Post make_post(std::string thread, std::string id, std::string author, std::int64_t ts,
               std::string body) {
  return Post{"f", std::move(thread), std::move(id), std::move(author), ts, std::move(body)};
}

Forum forum_from(std::vector<Post> posts) { return make_forum("f", std::move(posts)); }

std::size_t count_tokens(std::string_view body) { return tokenize(body).size(); }

}  // namespace

TEST_CASE("load_forum_dump on an empty file yields an empty forum") {
  std::istringstream in("");
  const Forum f = load_forum_dump_stream(in, "dump");
  CHECK(f.posts.empty());
}

TEST_CASE("load_forum_dump round-trips a single record") {
  std::istringstream in(
      R"({"forum_id":"ws","thread_id":"t1","post_id":"p1","author_id":"u1","timestamp":0,"body":"hello"})"
      "\n");
  const Forum f = load_forum_dump_stream(in, "dump");
  REQUIRE(f.posts.size() == 1);
  const Post& p = f.posts[0];
  CHECK(f.forum_id == "ws");
  CHECK(p.forum_id == "ws");
  CHECK(p.thread_id == "t1");
  CHECK(p.post_id == "p1");
  CHECK(p.author_id == "u1");
  CHECK(p.timestamp == 0);
  CHECK(p.body == "hello");
}

TEST_CASE("load_forum_dump names the missing field and line") {
  std::istringstream in(
      R"({"forum_id":"ws","thread_id":"t1","post_id":"p1","author_id":"u1","timestamp":0})"
      "\n");
  CHECK_THROWS_WITH(load_forum_dump_stream(in, "dump"),
                    Catch::Matchers::ContainsSubstring("dump:1") &&
                        Catch::Matchers::ContainsSubstring("\"body\""));
}

TEST_CASE("load_forum_dump rejects malformed JSON with a line number") {
  std::istringstream in(
      R"({"forum_id":"ws","thread_id":"t1","post_id":"p1","author_id":"u1","timestamp":0,"body":"x"})"
      "\nnot json\n");
  CHECK_THROWS_WITH(load_forum_dump_stream(in, "dump"),
                    Catch::Matchers::ContainsSubstring("dump:2"));
}

TEST_CASE("load_forum_dump rejects duplicate post ids") {
  const std::string rec =
      R"({"forum_id":"ws","thread_id":"t1","post_id":"p1","author_id":"u1","timestamp":0,"body":"x"})";
  std::istringstream in(rec + "\n" + rec + "\n");
  CHECK_THROWS_WITH(load_forum_dump_stream(in, "dump"),
                    Catch::Matchers::ContainsSubstring("duplicate post_id"));
}

TEST_CASE("load_forum_dump rejects negative timestamps and non-integer timestamps") {
  std::istringstream neg(
      R"({"forum_id":"ws","thread_id":"t1","post_id":"p1","author_id":"u1","timestamp":-5,"body":"x"})"
      "\n");
  CHECK_THROWS(load_forum_dump_stream(neg, "dump"));
  std::istringstream fl(
      R"({"forum_id":"ws","thread_id":"t1","post_id":"p1","author_id":"u1","timestamp":1.5,"body":"x"})"
      "\n");
  CHECK_THROWS(load_forum_dump_stream(fl, "dump"));
}

TEST_CASE("forum posts are sorted by (thread_id, timestamp, post_id)") {
  Forum f = forum_from({make_post("t2", "p1", "u1", 5, ""), make_post("t1", "p3", "u1", 9, ""),
                        make_post("t1", "p2", "u1", 9, ""), make_post("t1", "p4", "u1", 1, "")});
  REQUIRE(f.posts.size() == 4);
  CHECK(f.posts[0].post_id == "p4");
  CHECK(f.posts[1].post_id == "p2");
  CHECK(f.posts[2].post_id == "p3");
  CHECK(f.posts[3].post_id == "p1");
}

TEST_CASE("dump save/load is identity on the post collection") {
  Rng rng(7);
  std::vector<Post> posts;
  for (int i = 0; i < 40; ++i) {
    posts.push_back(make_post("t" + std::to_string(rng.index(5)), "p" + std::to_string(i),
                              "u" + std::to_string(rng.index(4)),
                              static_cast<std::int64_t>(rng.index(1000)),
                              "body " + std::to_string(rng.index(100)) + " 1.2.3.4 \"quoted\""));
  }
  // Bodies with control characters and non-ASCII must survive the line format.
  posts.push_back(make_post("t9", "px", "u0", 3, "line one\nline two\ttabbed \xc3\xa9\xe6\x97\xa5"));
  const Forum f = make_forum("f", posts);
  std::ostringstream out;
  save_forum_dump_stream(f, out);
  std::istringstream in(out.str());
  const Forum g = load_forum_dump_stream(in, "dump");
  CHECK(f.posts == g.posts);
  CHECK(f.forum_id == g.forum_id);
}

TEST_CASE("corpus_stats") {
  SECTION("empty forum") {
    const CorpusStats s = corpus_stats(Forum{});
    CHECK(s == CorpusStats{0, 0, 0});
  }
  SECTION("3 posts in 2 threads by 1 author") {
    const Forum f = forum_from({make_post("t1", "p1", "u1", 0, ""), make_post("t1", "p2", "u1", 1, ""),
                                make_post("t2", "p3", "u1", 2, "")});
    CHECK(corpus_stats(f) == CorpusStats{3, 2, 1});
  }
  SECTION("counts are invariant under input reordering") {
    std::vector<Post> posts = {make_post("t1", "p1", "u1", 3, ""), make_post("t2", "p2", "u2", 2, ""),
                               make_post("t3", "p3", "u1", 1, "")};
    const CorpusStats a = corpus_stats(make_forum("f", posts));
    std::reverse(posts.begin(), posts.end());
    const CorpusStats b = corpus_stats(make_forum("f", posts));
    CHECK(a == b);
  }
}

TEST_CASE("author_profiles follows the stated definitions") {
  SECTION("2 posts of 3 and 5 tokens on one day") {
    const Forum f = forum_from(
        {make_post("t1", "p1", "u1", 100, "one two three"), make_post("t2", "p2", "u1", 200, "a b c d e")});
    const auto profiles = author_profiles(f, count_tokens);
    REQUIRE(profiles.count("u1") == 1);
    const AuthorProfile& p = profiles.at("u1");
    CHECK(p.post_count == 2);
    CHECK(p.mean_post_length == Catch::Approx(4.0));
    CHECK(p.active_days == 1);
    CHECK(p.posts_per_active_day == Catch::Approx(2.0));
    CHECK(p.thread_count == 2);
  }
  SECTION("absent author is not present") {
    const Forum f = forum_from({make_post("t1", "p1", "u1", 0, "x")});
    CHECK(author_profiles(f, count_tokens).count("ghost") == 0);
  }
}

TEST_CASE("author_profiles matches a direct recount on a 10-author synthetic forum") {
  Rng rng(13);
  std::vector<Post> posts;
  for (int i = 0; i < 200; ++i) {
    std::string body;
    for (std::size_t k = rng.index(9); k > 0; --k) body += "tok" + std::to_string(rng.index(30)) + " ";
    posts.push_back(make_post("t" + std::to_string(rng.index(12)), "p" + std::to_string(i),
                              "u" + std::to_string(rng.index(10)),
                              static_cast<std::int64_t>(rng.index(10) * 86400 + rng.index(86400)), body));
  }
  const Forum f = make_forum("f", posts);
  const auto profiles = author_profiles(f, count_tokens);

  // Independent recount.
  std::map<std::string, std::vector<const Post*>> by_author;
  for (const Post& p : f.posts) by_author[p.author_id].push_back(&p);
  REQUIRE(profiles.size() == by_author.size());
  std::size_t total_posts = 0;
  for (const auto& [author, ps] : by_author) {
    const AuthorProfile& prof = profiles.at(author);
    std::size_t tokens = 0;
    std::set<std::int64_t> days;
    std::set<std::string> threads;
    for (const Post* p : ps) {
      tokens += tokenize(p->body).size();
      days.insert(p->timestamp / 86400);
      threads.insert(p->thread_id);
    }
    CHECK(prof.post_count == ps.size());
    CHECK(prof.mean_post_length ==
          Catch::Approx(static_cast<double>(tokens) / static_cast<double>(ps.size())));
    CHECK(prof.active_days == days.size());
    CHECK(prof.posts_per_active_day ==
          Catch::Approx(static_cast<double>(ps.size()) / static_cast<double>(days.size())));
    CHECK(prof.thread_count == threads.size());
    total_posts += prof.post_count;
  }
  CHECK(total_posts == f.posts.size());
}

TEST_CASE("load_labels identification") {
  SECTION("header only") {
    std::istringstream in("post_id,span_start,span_end,label\n");
    CHECK(load_labels_stream(in, LabelKind::identification, "gt").empty());
  }
  SECTION("row round-trip") {
    std::istringstream in("post_id,span_start,span_end,label\np7,12,26,ip\n");
    const auto rows = load_labels_stream(in, LabelKind::identification, "gt");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].post_id == "p7");
    CHECK(rows[0].span_start == 12);
    CHECK(rows[0].span_end == 26);
    CHECK(rows[0].label == Label::positive);
    CHECK(rows[0].key == "p7:12-26");
  }
  SECTION("not_ip maps to negative") {
    std::istringstream in("post_id,span_start,span_end,label\np7,1,8,not_ip\n");
    CHECK(load_labels_stream(in, LabelKind::identification, "gt")[0].label == Label::negative);
  }
  SECTION("unknown label token") {
    std::istringstream in("post_id,span_start,span_end,label\np7,1,8,bogus\n");
    CHECK_THROWS_WITH(load_labels_stream(in, LabelKind::identification, "gt"),
                      Catch::Matchers::ContainsSubstring("unknown label"));
  }
  SECTION("duplicate key") {
    std::istringstream in("post_id,span_start,span_end,label\np7,1,8,ip\np7,1,8,not_ip\n");
    CHECK_THROWS_WITH(load_labels_stream(in, LabelKind::identification, "gt"),
                      Catch::Matchers::ContainsSubstring("duplicate key"));
  }
  SECTION("bad header") {
    std::istringstream in("post,start,end,label\n");
    CHECK_THROWS(load_labels_stream(in, LabelKind::identification, "gt"));
  }
}

TEST_CASE("load_labels characterization") {
  std::istringstream in("post_id,address,label\np9,69.50.191.51,malicious\np2,10.0.0.1,benign\n");
  const auto rows = load_labels_stream(in, LabelKind::characterization, "gt");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].post_id == "p9");
  CHECK(rows[0].address == "69.50.191.51");
  CHECK(rows[0].label == Label::positive);
  CHECK(rows[0].key == "p9:69.50.191.51");
  CHECK(rows[1].label == Label::negative);
}

namespace {

LabeledExample labeled(std::string key, Label label) {
  LabeledExample ex;
  ex.key = std::move(key);
  ex.label = label;
  return ex;
}

}  // namespace

TEST_CASE("balanced_sample") {
  SECTION("already balanced input is returned unchanged") {
    std::vector<LabeledExample> in;
    for (int i = 0; i < 4; ++i) in.push_back(labeled("pos" + std::to_string(i), Label::positive));
    for (int i = 0; i < 4; ++i) in.push_back(labeled("neg" + std::to_string(i), Label::negative));
    const auto out = balanced_sample(in, 42);
    REQUIRE(out.size() == 8);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].key == in[i].key);
  }
  SECTION("10 positive / 4 negative downsamples the majority deterministically") {
    std::vector<LabeledExample> in;
    for (int i = 0; i < 10; ++i) in.push_back(labeled("pos" + std::to_string(i), Label::positive));
    for (int i = 0; i < 4; ++i) in.push_back(labeled("neg" + std::to_string(i), Label::negative));
    const auto out = balanced_sample(in, 7);
    std::size_t pos = 0, neg = 0;
    for (const auto& e : out) (e.label == Label::positive ? pos : neg)++;
    CHECK(pos == 4);
    CHECK(neg == 4);

    // Oracle: re-run the seeded selection directly.
    std::vector<std::size_t> pos_idx;
    for (std::size_t i = 0; i < 10; ++i) pos_idx.push_back(i);
    Rng rng(7);
    rng.shuffle(pos_idx);
    pos_idx.resize(4);
    std::sort(pos_idx.begin(), pos_idx.end());
    std::vector<std::string> expected;
    for (std::size_t i : pos_idx) expected.push_back("pos" + std::to_string(i));
    std::vector<std::string> got;
    for (const auto& e : out)
      if (e.label == Label::positive) got.push_back(e.key);
    CHECK(got == expected);

    // Same seed, same output.
    const auto again = balanced_sample(in, 7);
    REQUIRE(again.size() == out.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].key == out[i].key);
  }
  SECTION("one class absent is an error") {
    std::vector<LabeledExample> in;
    for (int i = 0; i < 5; ++i) in.push_back(labeled("neg" + std::to_string(i), Label::negative));
    CHECK_THROWS(balanced_sample(in, 1));
  }
  SECTION("output is a sub-multiset with equal class counts for random inputs") {
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<LabeledExample> in;
      const std::size_t npos = 1 + rng.index(12), nneg = 1 + rng.index(12);
      for (std::size_t i = 0; i < npos; ++i) in.push_back(labeled("p" + std::to_string(i), Label::positive));
      for (std::size_t i = 0; i < nneg; ++i) in.push_back(labeled("n" + std::to_string(i), Label::negative));
      rng.shuffle(in);
      const auto out = balanced_sample(in, rng.next());
      std::size_t pos = 0, neg = 0;
      std::set<std::string> in_keys, out_keys;
      for (const auto& e : in) in_keys.insert(e.key);
      for (const auto& e : out) {
        (e.label == Label::positive ? pos : neg)++;
        CHECK(in_keys.count(e.key) == 1);
        out_keys.insert(e.key);
      }
      CHECK(pos == neg);
      CHECK(pos == std::min(npos, nneg));
      CHECK(out_keys.size() == out.size());  // no duplicates introduced
    }
  }
}
