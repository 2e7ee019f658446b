// ipmine command line: mine forum dumps for IP addresses, train and evaluate
// the identification/characterization classifiers, and run cross-forum
// transfer without target-forum ground truth.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipmine/ipmine.hpp"

namespace {

using namespace ipmine;

IdentFeatureSet parse_ident_set(const std::string& name) {
  if (name == "textinfo") return IdentFeatureSet::text_info;
  if (name == "decimalval") return IdentFeatureSet::decimal_val;
  if (name == "mixed") return IdentFeatureSet::mixed;
  throw CLI::ValidationError("--feature-set", "expected textinfo, decimalval, or mixed");
}

CharFeatureSet parse_char_set(const std::string& name) {
  if (name == "posttext") return CharFeatureSet::post_text;
  if (name == "contextinfo") return CharFeatureSet::context_info;
  throw CLI::ValidationError("--feature-set", "expected posttext or contextinfo");
}

struct CommonOpts {
  int word_range = 2;
  std::string feature_set;
  double threshold = 0.85;
  std::uint64_t rng_seed = 1;
  int kfold = 10;
  std::size_t min_df = 1;
  Hyperparams hp;
};

void add_common(CLI::App* cmd, CommonOpts& o, const std::string& default_set) {
  o.feature_set = default_set;
  cmd->add_option("--word-range", o.word_range, "Context words per side (W)")->capture_default_str();
  cmd->add_option("--feature-set", o.feature_set,
                  "textinfo|decimalval|mixed (identification), posttext|contextinfo (characterization)")
      ->capture_default_str();
  cmd->add_option("--threshold", o.threshold, "Cross-seeding confidence threshold")->capture_default_str();
  cmd->add_option("--rng-seed", o.rng_seed, "Seed for all randomized steps")->capture_default_str();
  cmd->add_option("--kfold", o.kfold, "Cross-validation folds")->capture_default_str();
  cmd->add_option("--min-df", o.min_df, "Minimum document frequency for vocabulary words")
      ->capture_default_str();
  cmd->add_option("--l2", o.hp.l2_lambda, "L2 regularization strength")->capture_default_str();
  cmd->add_option("--learning-rate", o.hp.learning_rate, "Gradient descent step size")
      ->capture_default_str();
  cmd->add_option("--max-epochs", o.hp.max_epochs, "Training epoch cap")->capture_default_str();
  cmd->add_option("--tolerance", o.hp.tolerance, "Stop when loss improvement falls below this")
      ->capture_default_str();
}

void write_or_print(const std::optional<std::string>& path, const std::string& contents) {
  if (path) {
    write_file(*path, contents);
  } else {
    std::fputs(contents.c_str(), stdout);
  }
}

ForumDataset load_dataset(const std::string& dump, const std::string& ident_labels,
                          const std::string& char_labels) {
  ForumDataset data;
  data.forum = load_forum_dump(dump);
  if (!ident_labels.empty()) data.ident_labels = load_labels(ident_labels, LabelKind::identification);
  if (!char_labels.empty()) data.char_labels = load_labels(char_labels, LabelKind::characterization);
  return data;
}

// --- subcommand bodies ------------------------------------------------------

int cmd_ingest(const std::string& input, const std::optional<std::string>& output) {
  const Forum forum = load_forum_dump(input);
  const CorpusStats stats = corpus_stats(forum);
  std::string csv = "posts,threads,users\n";
  csv += std::to_string(stats.posts) + "," + std::to_string(stats.threads) + "," +
         std::to_string(stats.users) + "\n";
  write_or_print(output, csv);
  return 0;
}

int cmd_extract(const std::string& input, int word_range, const std::optional<std::string>& output) {
  const Forum forum = load_forum_dump(input);
  std::vector<Candidate> all;
  for (const Post& post : forum.posts)
    for (Candidate& c : extract_candidates(post, WordRange(word_range))) all.push_back(std::move(c));
  write_or_print(output, candidates_to_csv(all));
  return 0;
}

int cmd_train_ident(const std::string& input, const std::string& labels, const std::string& model_out,
                    const CommonOpts& o, bool balance) {
  ForumDataset data = load_dataset(input, labels, "");
  if (balance) data.ident_labels = balanced_sample(data.ident_labels, o.rng_seed);
  const IdentDataset ds =
      build_ident_dataset(data, WordRange(o.word_range), parse_ident_set(o.feature_set), o.min_df);
  const Model model = train(ds.examples, o.hp, o.rng_seed);
  save_model(model, model_out);
  std::fprintf(stderr, "trained on %zu examples over %zu dimensions -> %s\n", ds.examples.size(),
               model.space->size(), model_out.c_str());
  return 0;
}

int cmd_train_char(const std::string& input, const std::string& labels, const std::string& model_out,
                   const CommonOpts& o, bool balance) {
  ForumDataset data = load_dataset(input, "", labels);
  if (balance) data.char_labels = balanced_sample(data.char_labels, o.rng_seed);
  const CharDataset ds = build_char_dataset(data, parse_char_set(o.feature_set), o.min_df);
  const Model model = train(ds.examples, o.hp, o.rng_seed);
  save_model(model, model_out);
  std::fprintf(stderr, "trained on %zu examples over %zu dimensions -> %s\n", ds.examples.size(),
               model.space->size(), model_out.c_str());
  return 0;
}

int cmd_eval_cv(const std::string& task, const std::string& input, const std::string& labels,
                const CommonOpts& o, const std::optional<std::string>& output) {
  CvResult cv;
  if (task == "ident") {
    const ForumDataset data = load_dataset(input, labels, "");
    cv = ident_cv(data, WordRange(o.word_range), parse_ident_set(o.feature_set), o.kfold, o.hp,
                  o.rng_seed, o.min_df);
  } else {
    const ForumDataset data = load_dataset(input, "", labels);
    cv = char_cv(data, parse_char_set(o.feature_set), o.kfold, o.hp, o.rng_seed, o.min_df);
  }
  write_or_print(output, metrics_to_csv(cv));
  return 0;
}

int cmd_eval_transfer(const std::string& task, const std::vector<std::string>& sources,
                      const std::vector<std::string>& source_labels, const std::string& target,
                      const std::string& target_labels, const CommonOpts& o,
                      const std::optional<std::string>& output) {
  if (sources.size() != source_labels.size())
    throw CLI::ValidationError("--source-labels", "need one label file per --source");
  std::vector<ForumDataset> datasets;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    datasets.push_back(task == "ident" ? load_dataset(sources[i], source_labels[i], "")
                                       : load_dataset(sources[i], "", source_labels[i]));
  }
  const ForumDataset tgt = task == "ident" ? load_dataset(target, target_labels, "")
                                           : load_dataset(target, "", target_labels);
  std::vector<const ForumDataset*> ptrs;
  for (const ForumDataset& d : datasets) ptrs.push_back(&d);

  TransferConfig config;
  config.threshold = o.threshold;
  config.hyperparams = o.hp;
  config.rng_seed = o.rng_seed;
  const TransferEval eval = run_transfer_eval(
      ptrs, tgt, task == "ident" ? TransferTask::identification : TransferTask::characterization,
      WordRange(o.word_range),
      task == "ident" ? parse_ident_set(o.feature_set) : IdentFeatureSet::mixed,
      task == "char" ? parse_char_set(o.feature_set) : CharFeatureSet::post_text, config, o.min_df);

  auto row = [](const char* name, const Metrics& m) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f\n", name, m.precision, m.recall, m.accuracy);
    return std::string(buf);
  };
  std::string csv = "run,precision,recall,accuracy\n";
  csv += row("cross_port", eval.cross_port);
  csv += row("cross_seed", eval.cross_seed);
  write_or_print(output, csv);
  std::fprintf(stderr, "threshold_used=%.2f seed_positive=%zu seed_negative=%zu\n",
               eval.threshold_used, eval.seed_positive, eval.seed_negative);
  return 0;
}

int cmd_cross_seed(const std::string& task, const std::vector<std::string>& sources,
                   const std::vector<std::string>& source_labels, const std::string& target,
                   const std::string& ident_model_path, const CommonOpts& o,
                   const std::string& model_out, const std::optional<std::string>& seed_out,
                   const std::optional<std::string>& manifest_out) {
  if (sources.size() != source_labels.size())
    throw CLI::ValidationError("--source-labels", "need one label file per --source");
  std::vector<ForumDataset> datasets;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    datasets.push_back(task == "ident" ? load_dataset(sources[i], source_labels[i], "")
                                       : load_dataset(sources[i], "", source_labels[i]));
  }
  std::vector<const ForumDataset*> ptrs;
  for (const ForumDataset& d : datasets) ptrs.push_back(&d);
  const Forum target_forum = load_forum_dump(target);

  TransferConfig config;
  config.threshold = o.threshold;
  config.hyperparams = o.hp;
  config.rng_seed = o.rng_seed;

  CrossSeedRun run;
  if (task == "ident") {
    run = cross_seed_ident(ptrs, target_forum, WordRange(o.word_range),
                           parse_ident_set(o.feature_set), config, o.min_df);
  } else {
    if (ident_model_path.empty())
      throw CLI::ValidationError("--ident-model",
                                 "characterization cross-seeding needs an identification model "
                                 "to pick the target mentions");
    const Model ident_model = load_model(ident_model_path);
    // Wire identification output into the characterization instance set.
    std::vector<std::pair<std::string, std::string>> mentions;
    for (const auto& [cand, p] :
         run_identification(target_forum, ident_model, WordRange(o.word_range), IdentFeatureSet::mixed)) {
      if (p >= 0.5) mentions.emplace_back(cand.post_id, format_quad(cand.octets));
    }
    std::sort(mentions.begin(), mentions.end());
    mentions.erase(std::unique(mentions.begin(), mentions.end()), mentions.end());
    run = cross_seed_char(ptrs, target_forum, mentions, parse_char_set(o.feature_set), config, o.min_df);
  }

  save_model(run.result.model, model_out);
  if (seed_out) write_file(*seed_out, seed_to_csv(run.result.seed));
  nlohmann::json manifest{{"task", task},
                          {"requested_threshold", o.threshold},
                          {"threshold_used", run.result.seed.threshold},
                          {"seed_positive", run.result.seed.count(Label::positive)},
                          {"seed_negative", run.result.seed.count(Label::negative)},
                          {"target_instances", run.target_keys.size()}};
  nlohmann::json source_ids = nlohmann::json::array();
  for (const ForumDataset& d : datasets) source_ids.push_back(d.forum.forum_id);
  manifest["source_ids"] = source_ids;
  if (manifest_out) write_file(*manifest_out, manifest.dump(2) + "\n");
  std::fprintf(stderr, "%s\n", manifest.dump().c_str());
  return 0;
}

int cmd_identify(const std::string& input, const std::string& model_path, const CommonOpts& o,
                 const std::optional<std::string>& output) {
  const Forum forum = load_forum_dump(input);
  const Model model = load_model(model_path);
  std::string csv = "post_id,span_start,span_end,raw,p_is_ip\n";
  for (const auto& [cand, p] :
       run_identification(forum, model, WordRange(o.word_range), parse_ident_set(o.feature_set))) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", p);
    csv += cand.post_id + "," + std::to_string(cand.span_start) + "," +
           std::to_string(cand.span_end) + "," + cand.raw + "," + buf + "\n";
  }
  write_or_print(output, csv);
  return 0;
}

int cmd_characterize(const std::string& input, const std::string& ident_model_path,
                     const std::string& char_model_path, const CommonOpts& o,
                     const std::string& ident_set, const std::optional<std::string>& output) {
  const Forum forum = load_forum_dump(input);
  const Model ident_model = load_model(ident_model_path);
  const Model char_model = load_model(char_model_path);
  const auto identified =
      run_identification(forum, ident_model, WordRange(o.word_range), parse_ident_set(ident_set));
  const auto mentions =
      run_characterization(identified, forum, char_model, parse_char_set(o.feature_set));
  write_or_print(output, mentions_to_csv(mentions));
  return 0;
}

int cmd_report(const std::string& mentions_path, const std::string& dump_path,
               const std::optional<std::string>& output) {
  std::vector<Mention> mentions = parse_mentions_csv(read_file(mentions_path));
  if (!dump_path.empty()) {
    const Forum forum = load_forum_dump(dump_path);
    std::map<std::string, std::int64_t> ts;
    for (const Post& p : forum.posts) ts[p.post_id] = p.timestamp;
    for (Mention& m : mentions) {
      auto it = ts.find(m.post_id);
      if (it != ts.end()) m.timestamp = it->second;
    }
  }
  write_or_print(output, report_to_csv(aggregate_report(mentions)));
  return 0;
}

int cmd_compare_blacklist(const std::string& report_path, const std::string& blacklist_path,
                          bool verbose) {
  const auto reports = parse_report_csv(read_file(report_path));
  const BlacklistComparison cmp = compare_blacklist(reports, blacklist_path);
  std::printf("in_both,%zu\nonly_report,%zu\nonly_blacklist,%zu\n", cmp.in_both.size(),
              cmp.only_report.size(), cmp.only_blacklist.size());
  if (verbose) {
    for (const auto& a : cmp.in_both) std::printf("in_both:%s\n", a.c_str());
    for (const auto& a : cmp.only_report) std::printf("only_report:%s\n", a.c_str());
    for (const auto& a : cmp.only_blacklist) std::printf("only_blacklist:%s\n", a.c_str());
  }
  return 0;
}

int cmd_synth(const std::string& out_dir, const SyntheticSpec& spec, std::size_t n_sources) {
  auto write_dataset = [&](const ForumDataset& d, const std::string& stem) {
    save_forum_dump(d.forum, out_dir + "/" + stem + ".jsonl");
    write_file(out_dir + "/" + stem + "_ident.csv",
               labels_to_csv(d.ident_labels, LabelKind::identification));
    write_file(out_dir + "/" + stem + "_char.csv",
               labels_to_csv(d.char_labels, LabelKind::characterization));
  };
  if (n_sources <= 1) {
    const SyntheticPair pair = generate_synthetic(spec);
    write_dataset(pair.source, "source");
    write_dataset(pair.target, "target");
  } else {
    const SyntheticMulti multi = generate_synthetic_sources(spec, n_sources);
    for (std::size_t k = 0; k < multi.sources.size(); ++k)
      write_dataset(multi.sources[k], "source" + std::to_string(k));
    write_dataset(multi.target, "target");
  }
  std::fprintf(stderr, "wrote synthetic corpora to %s\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine security-forum dumps for IP addresses: extract dot-decimal candidates, "
               "separate genuine addresses from look-alikes, label mentions malicious or benign, "
               "and transfer classifiers to unlabeled forums by cross-seeding."};
  app.require_subcommand(1);

  // ingest
  std::string in_input;
  std::optional<std::string> in_output;
  auto* ingest = app.add_subcommand("ingest", "Validate a forum dump and report corpus statistics");
  ingest->add_option("--input", in_input, "Forum dump (JSON lines)")->required();
  ingest->add_option("--output", in_output, "Stats CSV path (default: stdout)");

  // extract
  std::string ex_input;
  std::optional<std::string> ex_output;
  int ex_word_range = 2;
  auto* extract = app.add_subcommand("extract", "Dump dot-decimal candidates as CSV");
  extract->add_option("--input", ex_input, "Forum dump")->required();
  extract->add_option("--word-range", ex_word_range, "Context words per side")->capture_default_str();
  extract->add_option("--output", ex_output, "Candidates CSV path (default: stdout)");

  // train-ident
  std::string ti_input, ti_labels, ti_model;
  bool ti_balance = false;
  CommonOpts ti_opts;
  auto* train_ident = app.add_subcommand("train-ident", "Train the identification classifier");
  train_ident->add_option("--input", ti_input, "Forum dump")->required();
  train_ident->add_option("--labels", ti_labels, "Identification ground-truth CSV")->required();
  train_ident->add_option("--model-out", ti_model, "Output model file")->required();
  train_ident->add_flag("--balance", ti_balance, "Downsample the majority class before training");
  add_common(train_ident, ti_opts, "mixed");

  // train-char
  std::string tc_input, tc_labels, tc_model;
  bool tc_balance = false;
  CommonOpts tc_opts;
  auto* train_char = app.add_subcommand("train-char", "Train the characterization classifier");
  train_char->add_option("--input", tc_input, "Forum dump")->required();
  train_char->add_option("--labels", tc_labels, "Characterization ground-truth CSV")->required();
  train_char->add_option("--model-out", tc_model, "Output model file")->required();
  train_char->add_flag("--balance", tc_balance, "Downsample the majority class before training");
  add_common(train_char, tc_opts, "posttext");

  // eval
  std::string ev_task, ev_mode = "cv", ev_input, ev_labels, ev_target, ev_target_labels;
  std::vector<std::string> ev_sources, ev_source_labels;
  std::optional<std::string> ev_output;
  CommonOpts ev_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Cross-validate in-domain or score a transfer run");
  eval_cmd->add_option("--task", ev_task, "ident or char")->required()
      ->check(CLI::IsMember({"ident", "char"}));
  eval_cmd->add_option("--mode", ev_mode, "cv or transfer")->capture_default_str()
      ->check(CLI::IsMember({"cv", "transfer"}));
  eval_cmd->add_option("--input", ev_input, "Forum dump (cv mode)");
  eval_cmd->add_option("--labels", ev_labels, "Ground-truth CSV (cv mode)");
  eval_cmd->add_option("--source", ev_sources, "Source forum dump (repeatable; transfer mode)");
  eval_cmd->add_option("--source-labels", ev_source_labels, "Source ground-truth CSV (one per source)");
  eval_cmd->add_option("--target", ev_target, "Target forum dump (transfer mode)");
  eval_cmd->add_option("--target-labels", ev_target_labels, "Held-back target ground truth");
  eval_cmd->add_option("--output", ev_output, "Metrics CSV path (default: stdout)");
  add_common(eval_cmd, ev_opts, "");

  // cross-seed
  std::string cs_task, cs_target, cs_model, cs_ident_model;
  std::vector<std::string> cs_sources, cs_source_labels;
  std::optional<std::string> cs_seed_out, cs_manifest_out;
  CommonOpts cs_opts;
  auto* cross_seed_cmd =
      app.add_subcommand("cross-seed", "Train a target-forum classifier without target labels");
  cross_seed_cmd->add_option("--task", cs_task, "ident or char")->required()
      ->check(CLI::IsMember({"ident", "char"}));
  cross_seed_cmd->add_option("--source", cs_sources, "Source forum dump (repeatable)")->required();
  cross_seed_cmd->add_option("--source-labels", cs_source_labels, "Source ground-truth CSV (one per source)")
      ->required();
  cross_seed_cmd->add_option("--target", cs_target, "Target forum dump")->required();
  cross_seed_cmd->add_option("--ident-model", cs_ident_model,
                             "Identification model used to pick target mentions (char task)");
  cross_seed_cmd->add_option("--model-out", cs_model, "Output model file")->required();
  cross_seed_cmd->add_option("--seed-out", cs_seed_out, "Seed-set CSV for audit");
  cross_seed_cmd->add_option("--manifest-out", cs_manifest_out, "Transfer-run manifest JSON");
  add_common(cross_seed_cmd, cs_opts, "");

  // identify
  std::string id_input, id_model;
  std::optional<std::string> id_output;
  CommonOpts id_opts;
  auto* identify = app.add_subcommand("identify", "Score every candidate with a trained model");
  identify->add_option("--input", id_input, "Forum dump")->required();
  identify->add_option("--model", id_model, "Identification model file")->required();
  identify->add_option("--output", id_output, "Scored candidates CSV (default: stdout)");
  add_common(identify, id_opts, "mixed");

  // characterize
  std::string ch_input, ch_ident_model, ch_char_model, ch_ident_set = "mixed";
  std::optional<std::string> ch_output;
  CommonOpts ch_opts;
  auto* characterize =
      app.add_subcommand("characterize", "Identify and characterize every address mention");
  characterize->add_option("--input", ch_input, "Forum dump")->required();
  characterize->add_option("--ident-model", ch_ident_model, "Identification model file")->required();
  characterize->add_option("--char-model", ch_char_model, "Characterization model file")->required();
  characterize->add_option("--ident-feature-set", ch_ident_set, "Feature set of the identification model")
      ->capture_default_str();
  characterize->add_option("--output", ch_output, "Mentions CSV (default: stdout)");
  add_common(characterize, ch_opts, "posttext");

  // report
  std::string rp_mentions, rp_dump;
  std::optional<std::string> rp_output;
  auto* report = app.add_subcommand("report", "Aggregate a mentions CSV into per-address verdicts");
  report->add_option("--mentions", rp_mentions, "Mentions CSV from characterize")->required();
  report->add_option("--input", rp_dump, "Forum dump (fills first/last seen timestamps)");
  report->add_option("--output", rp_output, "Report CSV (default: stdout)");

  // compare-blacklist
  std::string bl_report, bl_path;
  bool bl_verbose = false;
  auto* compare = app.add_subcommand("compare-blacklist", "Set arithmetic between a report and a blacklist");
  compare->add_option("--report", bl_report, "Report CSV")->required();
  compare->add_option("--blacklist", bl_path, "Blacklist file, one address per line, # comments")
      ->required();
  compare->add_flag("--verbose", bl_verbose, "List the addresses in each bucket");

  // synth
  std::string sy_out_dir;
  SyntheticSpec sy_spec;
  std::size_t sy_sources = 1;
  auto* synth = app.add_subcommand("synth", "Generate synthetic source/target corpora with labels");
  synth->add_option("--out-dir", sy_out_dir, "Output directory (must exist)")->required();
  synth->add_option("--vocab-size", sy_spec.vocab_size, "Filler vocabulary size")->capture_default_str();
  synth->add_option("--posts", sy_spec.posts_per_forum, "Posts per forum")->capture_default_str();
  synth->add_option("--shift", sy_spec.vocabulary_shift, "Fraction of signal words replaced in the target")
      ->capture_default_str();
  synth->add_option("--label-noise", sy_spec.label_noise, "Probability of flipping an emitted label")
      ->capture_default_str();
  synth->add_option("--rng-seed", sy_spec.rng_seed, "Generator seed")->capture_default_str();
  synth->add_option("--sources", sy_sources, "Number of complementary source forums")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(ingest)) return cmd_ingest(in_input, in_output);
    if (app.got_subcommand(extract)) return cmd_extract(ex_input, ex_word_range, ex_output);
    if (app.got_subcommand(train_ident))
      return cmd_train_ident(ti_input, ti_labels, ti_model, ti_opts, ti_balance);
    if (app.got_subcommand(train_char))
      return cmd_train_char(tc_input, tc_labels, tc_model, tc_opts, tc_balance);
    if (app.got_subcommand(eval_cmd)) {
      if (ev_opts.feature_set.empty()) ev_opts.feature_set = ev_task == "ident" ? "mixed" : "posttext";
      if (ev_mode == "cv") return cmd_eval_cv(ev_task, ev_input, ev_labels, ev_opts, ev_output);
      return cmd_eval_transfer(ev_task, ev_sources, ev_source_labels, ev_target, ev_target_labels,
                               ev_opts, ev_output);
    }
    if (app.got_subcommand(cross_seed_cmd)) {
      if (cs_opts.feature_set.empty()) cs_opts.feature_set = cs_task == "ident" ? "mixed" : "posttext";
      return cmd_cross_seed(cs_task, cs_sources, cs_source_labels, cs_target, cs_ident_model, cs_opts,
                            cs_model, cs_seed_out, cs_manifest_out);
    }
    if (app.got_subcommand(identify)) return cmd_identify(id_input, id_model, id_opts, id_output);
    if (app.got_subcommand(characterize))
      return cmd_characterize(ch_input, ch_ident_model, ch_char_model, ch_opts, ch_ident_set, ch_output);
    if (app.got_subcommand(report)) return cmd_report(rp_mentions, rp_dump, rp_output);
    if (app.got_subcommand(compare)) return cmd_compare_blacklist(bl_report, bl_path, bl_verbose);
    if (app.got_subcommand(synth)) return cmd_synth(sy_out_dir, sy_spec, sy_sources);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
