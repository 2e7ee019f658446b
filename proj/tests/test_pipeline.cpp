#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ipmine/ipmine.hpp"

using namespace ipmine;

namespace {

SyntheticSpec small_spec(std::uint64_t seed, std::size_t posts = 400) {
  SyntheticSpec spec;
  spec.vocab_size = 120;
  spec.posts_per_forum = posts;
  spec.vocabulary_shift = 0.0;
  spec.label_noise = 0.0;
  spec.rng_seed = seed;
  return spec;
}

Hyperparams fast_hp() {
  Hyperparams hp;
  hp.max_epochs = 300;
  return hp;
}

std::string dump_string(const Forum& f) {
  std::ostringstream out;
  save_forum_dump_stream(f, out);
  return out.str();
}

Post post_with(std::string body, std::string id = "x1") {
  return Post{"x", "t1", std::move(id), "u1", 1234, std::move(body)};
}

}  // namespace

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec = small_spec(1);
  spec.vocab_size = 0;
  CHECK_THROWS(generate_synthetic(spec));
  spec = small_spec(1);
  spec.vocabulary_shift = 1.5;
  CHECK_THROWS(generate_synthetic(spec));
  spec = small_spec(1);
  spec.label_noise = -0.1;
  CHECK_THROWS(generate_synthetic(spec));
}

TEST_CASE("synthetic generation is deterministic per seed") {
  const SyntheticPair a = generate_synthetic(small_spec(9));
  const SyntheticPair b = generate_synthetic(small_spec(9));
  CHECK(dump_string(a.source.forum) == dump_string(b.source.forum));
  CHECK(dump_string(a.target.forum) == dump_string(b.target.forum));
  REQUIRE(a.source.ident_labels.size() == b.source.ident_labels.size());
  for (std::size_t i = 0; i < a.source.ident_labels.size(); ++i)
    CHECK(a.source.ident_labels[i].key == b.source.ident_labels[i].key);
  const SyntheticPair c = generate_synthetic(small_spec(10));
  CHECK(dump_string(a.source.forum) != dump_string(c.source.forum));
}

TEST_CASE("vocabulary shift replaces the stated fraction of signal words") {
  const SignalPools base = base_pools();
  Rng rng(3);
  SECTION("shift 0 leaves pools identical") {
    const SignalPools same = shifted_pools(base, 0.0, rng, "x");
    CHECK(same.ip == base.ip);
    CHECK(same.malicious == base.malicious);
  }
  SECTION("shift 0.5 replaces half of each pool") {
    const SignalPools half = shifted_pools(base, 0.5, rng, "x");
    auto changed = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++n;
      return n;
    };
    CHECK(changed(base.ip, half.ip) == 8);
    CHECK(changed(base.version, half.version) == 8);
    CHECK(changed(base.malicious, half.malicious) == 8);
    CHECK(changed(base.benign, half.benign) == 8);
  }
  SECTION("complementary slices partition the pools") {
    const SignalPools s0 = complementary_slice(base, 0, 2);
    const SignalPools s1 = complementary_slice(base, 1, 2);
    std::set<std::string> all(base.malicious.begin(), base.malicious.end());
    std::set<std::string> seen;
    for (const auto& w : s0.malicious) seen.insert(w);
    for (const auto& w : s1.malicious) seen.insert(w);
    CHECK(seen == all);
    CHECK(s0.malicious.size() + s1.malicious.size() == base.malicious.size());
  }
}

TEST_CASE("synthetic labels are balanced and resolve against extraction") {
  const SyntheticPair pair = generate_synthetic(small_spec(4));
  const ForumDataset& src = pair.source;
  std::size_t pos = 0, neg = 0;
  for (const auto& row : src.ident_labels) (row.label == Label::positive ? pos : neg)++;
  CHECK(pos == neg);
  CHECK(src.ident_labels.size() == 400);
  CHECK(src.char_labels.size() == 200);

  // Every labeled span must match an extracted candidate (throws otherwise).
  const IdentInstances inst = collect_ident_instances(src.forum, src.ident_labels, WordRange(2));
  CHECK(inst.candidates.size() == src.ident_labels.size());

  std::size_t cpos = 0, cneg = 0;
  for (const auto& row : src.char_labels) (row.label == Label::positive ? cpos : cneg)++;
  CHECK(cpos == cneg);
}

TEST_CASE("collect_ident_instances rejects unresolvable labels") {
  const SyntheticPair pair = generate_synthetic(small_spec(5, 40));
  std::vector<LabeledExample> rows = pair.source.ident_labels;
  SECTION("unknown post") {
    rows[0].post_id = "ghost";
    rows[0].key = "ghost:0-1";
    CHECK_THROWS_WITH(collect_ident_instances(pair.source.forum, rows, WordRange(2)),
                      Catch::Matchers::ContainsSubstring("unknown post"));
  }
  SECTION("span that is not a candidate") {
    rows[0].span_start += 1;
    CHECK_THROWS_WITH(collect_ident_instances(pair.source.forum, rows, WordRange(2)),
                      Catch::Matchers::ContainsSubstring("does not match any extracted candidate"));
  }
}

TEST_CASE("in-domain accuracy approaches one as the corpus grows") {
  double small_acc = 0.0, large_acc = 0.0;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    small_acc += ident_cv(generate_synthetic(small_spec(seed, 120)).source, WordRange(2),
                          IdentFeatureSet::mixed, 5, fast_hp(), seed)
                     .mean.accuracy;
    large_acc += ident_cv(generate_synthetic(small_spec(seed, 1200)).source, WordRange(2),
                          IdentFeatureSet::mixed, 5, fast_hp(), seed)
                     .mean.accuracy;
  }
  small_acc /= 3.0;
  large_acc /= 3.0;
  CHECK(large_acc >= 0.97);
  CHECK(large_acc + 0.02 >= small_acc);
}

TEST_CASE("characterization cross-validation learns the synthetic signal") {
  const SyntheticPair pair = generate_synthetic(small_spec(21, 600));
  const CvResult cv = char_cv(pair.source, CharFeatureSet::post_text, 5, fast_hp(), 21);
  CHECK(cv.mean.accuracy >= 0.9);
  const CvResult ci = char_cv(pair.source, CharFeatureSet::context_info, 5, fast_hp(), 21);
  CHECK(ci.mean.accuracy >= 0.8);  // author dims are uninformative noise here
}

TEST_CASE("identification pipeline scores candidates with a trained model") {
  const SyntheticPair pair = generate_synthetic(small_spec(31, 600));
  const IdentDataset ds = build_ident_dataset(pair.source, WordRange(2), IdentFeatureSet::mixed);
  const Model model = train(ds.examples, fast_hp(), 31);

  SECTION("forum with no dot-decimals yields nothing") {
    const Forum empty = make_forum("x", {post_with("just words here nothing numeric")});
    CHECK(run_identification(empty, model, WordRange(2), IdentFeatureSet::mixed).empty());
  }
  SECTION("version-like analog scores below 0.5, address-like analog above") {
    const Forum f = make_forum(
        "x", {post_with("version update 2.25.100.15 installer build", "x1"),
              post_with("server address 64.91.255.87 dns host", "x2")});
    const auto scored = run_identification(f, model, WordRange(2), IdentFeatureSet::mixed);
    REQUIRE(scored.size() == 2);
    double p_version = 0.0, p_address = 0.0;
    for (const auto& [cand, p] : scored) {
      if (cand.post_id == "x1") p_version = p;
      if (cand.post_id == "x2") p_address = p;
    }
    CHECK(p_version < 0.5);
    CHECK(p_address >= 0.5);
  }
}

TEST_CASE("characterization pipeline scores identified mentions") {
  const SyntheticPair pair = generate_synthetic(small_spec(41, 600));
  const CharDataset ds = build_char_dataset(pair.source, CharFeatureSet::post_text);
  const Model model = train(ds.examples, fast_hp(), 41);

  SECTION("empty identification output yields nothing") {
    const Forum f = make_forum("x", {post_with("whatever")});
    CHECK(run_characterization({}, f, model, CharFeatureSet::post_text).empty());
  }
  SECTION("hijack-style analog is malicious, hosts-style analog benign") {
    const Forum f = make_forum(
        "x", {post_with("homepage hijacked malware 69.50.191.51 infected botnet", "x1"),
              post_with("hosts config whitelist 10.1.1.1 backup settings", "x2")});
    std::vector<std::pair<Candidate, double>> identified;
    for (const Post& p : f.posts)
      for (Candidate& c : extract_candidates(p, WordRange(2))) identified.emplace_back(c, 0.9);
    const auto mentions = run_characterization(identified, f, model, CharFeatureSet::post_text);
    REQUIRE(mentions.size() == 2);
    double p_mal = 0.0, p_ben = 1.0;
    for (const Mention& m : mentions) {
      if (m.post_id == "x1") {
        p_mal = m.p_malicious;
        CHECK(m.address == "69.50.191.51");
        CHECK(m.timestamp == 1234);
      }
      if (m.post_id == "x2") p_ben = m.p_malicious;
    }
    CHECK(p_mal >= 0.5);
    CHECK(p_ben < 0.5);
  }
  SECTION("sub-threshold identifications are dropped") {
    const Forum f = make_forum("x", {post_with("a 1.2.3.4 b")});
    const auto cands = extract_candidates(f.posts[0], WordRange(2));
    REQUIRE(cands.size() == 1);
    const auto mentions =
        run_characterization({{cands[0], 0.4}}, f, model, CharFeatureSet::post_text);
    CHECK(mentions.empty());
  }
}

namespace {

Mention mention(std::string address, std::string post_id, double p_mal, std::int64_t ts = 0) {
  Mention m;
  m.address = std::move(address);
  m.post_id = std::move(post_id);
  m.p_is_ip = 0.9;
  m.p_malicious = p_mal;
  m.timestamp = ts;
  return m;
}

}  // namespace

TEST_CASE("aggregate_report majority vote and ordering") {
  SECTION("single malicious mention") {
    const auto reports = aggregate_report({mention("1.2.3.4", "p1", 0.9)});
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].verdict == Verdict::malicious);
    CHECK(reports[0].mention_count == 1);
  }
  SECTION("majority benign") {
    const auto reports = aggregate_report({mention("1.2.3.4", "p1", 0.9), mention("1.2.3.4", "p2", 0.2),
                                           mention("1.2.3.4", "p3", 0.3)});
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].verdict == Verdict::benign);
    CHECK(reports[0].mention_count == 3);
  }
  SECTION("ties go malicious") {
    const auto reports = aggregate_report({mention("1.2.3.4", "p1", 0.9), mention("1.2.3.4", "p2", 0.2)});
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].verdict == Verdict::malicious);
  }
  SECTION("sorted by mention count then address") {
    const auto reports =
        aggregate_report({mention("9.9.9.9", "p1", 0.9), mention("2.2.2.2", "p2", 0.1),
                          mention("2.2.2.2", "p3", 0.1), mention("1.1.1.1", "p4", 0.9)});
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].address == "2.2.2.2");
    CHECK(reports[1].address == "1.1.1.1");
    CHECK(reports[2].address == "9.9.9.9");
  }
  SECTION("first and last seen") {
    const auto reports = aggregate_report(
        {mention("1.2.3.4", "p1", 0.9, 50), mention("1.2.3.4", "p2", 0.9, 10), mention("1.2.3.4", "p3", 0.1, 99)});
    CHECK(reports[0].first_seen == 10);
    CHECK(reports[0].last_seen == 99);
  }
}

TEST_CASE("compare_blacklist") {
  SECTION("empty blacklist") {
    std::istringstream in("# nothing here\n\n");
    const auto bl = load_blacklist_stream(in, "bl");
    const auto cmp = compare_blacklist({IpReport{"1.2.3.4", 1, {}, Verdict::malicious, 0, 0}}, bl);
    CHECK(cmp.in_both.empty());
    CHECK(cmp.only_blacklist.empty());
    CHECK(cmp.only_report == std::vector<std::string>{"1.2.3.4"});
  }
  SECTION("set algebra") {
    std::istringstream in("2.2.2.2\n3.3.3.3\n");
    const auto bl = load_blacklist_stream(in, "bl");
    const auto cmp = compare_blacklist({IpReport{"1.1.1.1", 1, {}, Verdict::malicious, 0, 0},
                                        IpReport{"2.2.2.2", 1, {}, Verdict::benign, 0, 0}},
                                       bl);
    CHECK(cmp.in_both == std::vector<std::string>{"2.2.2.2"});
    CHECK(cmp.only_report == std::vector<std::string>{"1.1.1.1"});
    CHECK(cmp.only_blacklist == std::vector<std::string>{"3.3.3.3"});
  }
  SECTION("leading zeros normalize before comparison") {
    std::istringstream in("010.1.1.1 # padded\n");
    const auto bl = load_blacklist_stream(in, "bl");
    const auto cmp = compare_blacklist({IpReport{"10.1.1.1", 1, {}, Verdict::malicious, 0, 0}}, bl);
    CHECK(cmp.in_both == std::vector<std::string>{"10.1.1.1"});
    CHECK(cmp.only_report.empty());
    CHECK(cmp.only_blacklist.empty());
  }
  SECTION("unparsable line reports its number") {
    std::istringstream in("1.2.3.4\nbogus line\n");
    CHECK_THROWS_WITH(load_blacklist_stream(in, "bl"),
                      Catch::Matchers::ContainsSubstring("bl:2"));
  }
}

TEST_CASE("csv parsers reject malformed numeric fields with line numbers") {
  CHECK_THROWS_WITH(parse_mentions_csv("address,post_id,span_start,span_end,p_is_ip,p_malicious\n"
                                       "1.2.3.4,p1,0,7,not_a_number,0.5\n"),
                    Catch::Matchers::ContainsSubstring(":2:") &&
                        Catch::Matchers::ContainsSubstring("p_is_ip"));
  CHECK_THROWS_WITH(parse_report_csv("address,mention_count,verdict,first_seen,last_seen\n"
                                     "1.2.3.4,99999999999999999999999,malicious,0,0\n"),
                    Catch::Matchers::ContainsSubstring("out of range"));
  CHECK_THROWS_WITH(parse_report_csv("address,mention_count,verdict,first_seen,last_seen\n"
                                     "1.2.3.4,1,maybe,0,0\n"),
                    Catch::Matchers::ContainsSubstring("unknown verdict"));
}

TEST_CASE("mentions csv round-trips and verdicts recompute from the file") {
  const std::vector<Mention> mentions = {mention("1.2.3.4", "p1", 0.91, 5), mention("1.2.3.4", "p2", 0.12, 9),
                                         mention("5.6.7.8", "p3", 0.77, 2)};
  const std::string csv = mentions_to_csv(mentions);
  const auto parsed = parse_mentions_csv(csv);
  REQUIRE(parsed.size() == mentions.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].address == mentions[i].address);
    CHECK(parsed[i].post_id == mentions[i].post_id);
    CHECK(parsed[i].p_malicious == Catch::Approx(mentions[i].p_malicious).margin(1e-6));
  }
  const auto direct = aggregate_report(mentions);
  const auto from_file = aggregate_report(parsed);
  REQUIRE(direct.size() == from_file.size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(direct[i].address == from_file[i].address);
    CHECK(direct[i].verdict == from_file[i].verdict);
    CHECK(direct[i].mention_count == from_file[i].mention_count);
  }
}

TEST_CASE("end-to-end pipeline is deterministic and self-consistent") {
  auto run_once = [](std::uint64_t seed) {
    const SyntheticPair pair = generate_synthetic(small_spec(seed, 500));
    const IdentDataset ident = build_ident_dataset(pair.source, WordRange(2), IdentFeatureSet::mixed);
    const Model ident_model = train(ident.examples, fast_hp(), seed);
    const CharDataset chars = build_char_dataset(pair.source, CharFeatureSet::post_text);
    const Model char_model = train(chars.examples, fast_hp(), seed);
    const auto identified =
        run_identification(pair.target.forum, ident_model, WordRange(2), IdentFeatureSet::mixed);
    const auto mentions =
        run_characterization(identified, pair.target.forum, char_model, CharFeatureSet::post_text);
    const auto reports = aggregate_report(mentions);
    return std::pair{mentions_to_csv(mentions), report_to_csv(reports)};
  };
  const auto [mentions_a, report_a] = run_once(77);
  const auto [mentions_b, report_b] = run_once(77);
  CHECK(mentions_a == mentions_b);
  CHECK(report_a == report_b);

  // Every reported address appeared among the mentions; none are invented.
  const auto parsed = parse_mentions_csv(mentions_a);
  std::set<std::string> mention_addrs;
  for (const auto& m : parsed) mention_addrs.insert(m.address);
  const auto reports = aggregate_report(parsed);
  for (const auto& r : reports) CHECK(mention_addrs.count(r.address) == 1);
}

TEST_CASE("transfer evaluation wires identification and characterization") {
  SyntheticSpec spec = small_spec(51, 400);
  spec.vocabulary_shift = 0.5;
  const SyntheticPair pair = generate_synthetic(spec);
  TransferConfig config;
  config.hyperparams = fast_hp();
  config.min_seed_per_class = 10;

  SECTION("characterization transfer: cross-seed does not lose to cross-port") {
    const TransferEval eval =
        run_transfer_eval({&pair.source}, pair.target, TransferTask::characterization, WordRange(2),
                          IdentFeatureSet::mixed, CharFeatureSet::post_text, config);
    CHECK(eval.cross_seed.accuracy >= eval.cross_port.accuracy - 0.01);
    CHECK(eval.seed_positive > 0);
    CHECK(eval.seed_negative > 0);
    CHECK(eval.threshold_used <= config.threshold + 1e-12);
  }
  SECTION("identification transfer runs end to end") {
    const TransferEval eval =
        run_transfer_eval({&pair.source}, pair.target, TransferTask::identification, WordRange(2),
                          IdentFeatureSet::mixed, CharFeatureSet::post_text, config);
    CHECK(eval.cross_seed.accuracy > 0.8);
  }
  SECTION("context-info transfer builds author profiles for every forum") {
    const TransferEval eval =
        run_transfer_eval({&pair.source}, pair.target, TransferTask::characterization, WordRange(2),
                          IdentFeatureSet::mixed, CharFeatureSet::context_info, config);
    CHECK(eval.cross_seed.accuracy > 0.6);
  }
  SECTION("seed pseudo-label error rate stays under five percent") {
    const TransferEval eval =
        run_transfer_eval({&pair.source}, pair.target, TransferTask::characterization, WordRange(2),
                          IdentFeatureSet::mixed, CharFeatureSet::post_text, config);
    std::map<std::string, Label> truth;
    for (const auto& row : pair.target.char_labels) truth[row.key] = row.label;
    std::size_t wrong = 0;
    REQUIRE(!eval.run.seed.instances.empty());
    for (const auto& si : eval.run.seed.instances) {
      REQUIRE(truth.count(si.key) == 1);
      if (truth.at(si.key) != si.pseudo_label) ++wrong;
    }
    CHECK(static_cast<double>(wrong) / static_cast<double>(eval.run.seed.instances.size()) <= 0.05);
  }
}

TEST_CASE("passing the same source twice does not grow the union space") {
  const SyntheticPair pair = generate_synthetic(small_spec(61, 200));
  TransferConfig config;
  config.hyperparams = fast_hp();
  config.min_seed_per_class = 5;
  const CrossSeedRun once = cross_seed_ident({&pair.source}, pair.target.forum, WordRange(2),
                                             IdentFeatureSet::mixed, config);
  const CrossSeedRun twice = cross_seed_ident({&pair.source, &pair.source}, pair.target.forum,
                                              WordRange(2), IdentFeatureSet::mixed, config);
  CHECK(once.space->dimension_names() == twice.space->dimension_names());
}
