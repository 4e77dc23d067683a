#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fossil/config.hpp"
#include "fossil/dataset.hpp"
#include "fossil/difficulty.hpp"
#include "fossil/images.hpp"
#include "fossil/learner.hpp"
#include "fossil/manifest.hpp"
#include "fossil/oco.hpp"
#include "fossil/stats.hpp"
#include "fossil/textio.hpp"
#include "fossil/version.hpp"

namespace fossil {

struct CliOptions {
  std::string config_path;
  std::string seed_list;  // "42,77,123" overrides the config seeds
  bool force = false;
  std::size_t workers = 0;  // 0 = take from config
  std::string out_dir;      // --out override
};

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) throw ConfigError("--seed-list: empty entry");
    const long long v = parse_int(cur, "--seed-list");
    if (v < 0) throw ConfigError("--seed-list: seeds must be non-negative");
    seeds.push_back(static_cast<std::uint64_t>(v));
    cur.clear();
  };
  for (char c : s) {
    if (c == ',') flush();
    else cur.push_back(c);
  }
  flush();
  return seeds;
}

inline ExperimentConfig load_config(const CliOptions& opts) {
  if (opts.config_path.empty())
    throw ConfigError("--config is required for this subcommand");
  const std::string text = read_text_file(opts.config_path);
  const std::string name =
      std::filesystem::path(opts.config_path).filename().string();
  ExperimentConfig cfg = parse_experiment_config(text, name);
  if (!opts.seed_list.empty()) {
    cfg.seeds = parse_seed_list(opts.seed_list);
    cfg.validate();
  }
  if (opts.workers > 0) cfg.workers = opts.workers;
  return cfg;
}

// Output root precedence: --out flag, then config output.dir, then the
// FOSSIL_OUT environment variable, then ./out.
inline std::filesystem::path resolve_out_dir(const std::string& flag_dir,
                                             const std::string& config_dir) {
  if (!flag_dir.empty()) return flag_dir;
  if (!config_dir.empty()) return config_dir;
  if (const char* env = std::getenv("FOSSIL_OUT"); env && *env) return env;
  return "out";
}

// ============================================================
// Probability file ingestion
// ============================================================

struct ProbabilityRow {
  std::string sample_id;
  int label = 0;
  ProbabilityVector probs;
};

// CSV schema: sample_id,label,p_0,...,p_{C-1} with C >= 2.
inline std::vector<ProbabilityRow> parse_probability_csv(
    const std::string& text, const std::string& name) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw IoError(name + ": empty probability file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 4 || header[0] != "sample_id" || header[1] != "label")
    throw IoError(name +
                  ": header must be sample_id,label,p_0,...,p_{C-1} with at "
                  "least two classes");
  for (std::size_t c = 0; c + 2 < header.size(); ++c)
    if (header[c + 2] != "p_" + std::to_string(c))
      throw IoError(name + ": bad probability column at position " +
                    std::to_string(c));
  std::vector<ProbabilityRow> rows;
  std::set<std::string> seen;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const std::string where = name + ":" + std::to_string(ln + 1);
    const auto fields = split_csv_line(lines[ln]);
    if (fields.size() != header.size())
      throw IoError(where + ": expected " + std::to_string(header.size()) +
                    " fields, got " + std::to_string(fields.size()));
    ProbabilityRow row;
    row.sample_id = fields[0];
    require_plain_id(row.sample_id, where);
    if (!seen.insert(row.sample_id).second)
      throw IoError(where + ": duplicate sample_id '" + row.sample_id + "'");
    const long long lab = parse_int(fields[1], where);
    if (lab < 0) throw IoError(where + ": label must be >= 0");
    row.label = static_cast<int>(lab);
    for (std::size_t c = 2; c < fields.size(); ++c)
      row.probs.probs.push_back(parse_double(fields[c], where));
    try {
      row.probs.validate();
    } catch (const std::exception& e) {
      throw IoError(where + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(name + ": no rows after header");
  return rows;
}

// ============================================================
// Dataset acquisition (load if present, otherwise generate)
// ============================================================

struct LoadedData {
  Dataset ds;
  std::vector<TinyImage> images;  // populated for image datasets
  bool generated = false;
};

inline LoadedData obtain_dataset(const ExperimentConfig& cfg, Workspace& ws) {
  LoadedData out;
  const std::string csv_rel = cfg.data.name + ".csv";
  const auto csv_path = ws.path(csv_rel);
  if (cfg.data.kind == "blobs") {
    if (std::filesystem::exists(csv_path)) {
      out.ds = dataset_from_csv(ws.read_input(csv_path), csv_rel);
    } else {
      out.ds = generate_blobs(cfg.blob_spec(cfg.seeds[0]));
      out.generated = true;
    }
    return out;
  }

  const std::string meta_rel = cfg.data.name + "_meta.json";
  const auto meta_path = ws.path(meta_rel);
  if (std::filesystem::exists(csv_path) && std::filesystem::exists(meta_path)) {
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(ws.read_input(meta_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(meta_rel + ": " + e.what());
    }
    if (!meta.is_object() || !meta.contains("h") || !meta.contains("w") ||
        !meta["h"].is_number_integer() || !meta["w"].is_number_integer())
      throw IoError(meta_rel + ": expected {\"h\":H,\"w\":W}");
    out.images = images_from_csv(ws.read_input(csv_path),
                                 meta["h"].get<std::size_t>(),
                                 meta["w"].get<std::size_t>(), csv_rel);
  } else {
    out.images = generate_tiny_images(cfg.data.n_per_class, cfg.data.image_size,
                                      cfg.seeds[0], cfg.data.image_noise_scale);
    out.generated = true;
  }
  out.ds = images_to_dataset(out.images, "img");
  return out;
}

// ============================================================
// generate
// ============================================================

inline int cmd_generate(const ExperimentConfig& cfg, Workspace& ws) {
  const std::string csv_rel = cfg.data.name + ".csv";
  if (cfg.data.kind == "blobs") {
    ws.require_fresh({csv_rel});
    const Dataset ds = generate_blobs(cfg.blob_spec(cfg.seeds[0]));
    ws.write_output(csv_rel, dataset_to_csv(ds));
  } else {
    const std::string meta_rel = cfg.data.name + "_meta.json";
    ws.require_fresh({csv_rel, meta_rel});
    const auto images =
        generate_tiny_images(cfg.data.n_per_class, cfg.data.image_size,
                             cfg.seeds[0], cfg.data.image_noise_scale);
    ws.write_output(csv_rel, images_to_csv(images, "img"));
    nlohmann::json meta;
    meta["h"] = cfg.data.image_size;
    meta["w"] = cfg.data.image_size;
    ws.write_output(meta_rel, meta.dump() + "\n");
  }
  ws.write_manifest("generate", cfg.config_hash());
  return 0;
}

// ============================================================
// difficulty
// ============================================================

namespace detail {

inline nlohmann::json test_result_json(const TestResult& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["exact"] = r.exact;
  j["n1"] = r.n1;
  j["n2"] = r.n2;
  return j;
}

}  // namespace detail

inline int cmd_difficulty(const ExperimentConfig& cfg, Workspace& ws,
                          const std::string& probs_arg) {
  const std::string probs_path =
      !probs_arg.empty() ? probs_arg : cfg.difficulty.probabilities;
  if (probs_path.empty())
    throw ConfigError(
        "difficulty needs a probability file (--probs or "
        "difficulty.probabilities in the config)");

  const auto rows = parse_probability_csv(
      ws.read_input(probs_path),
      std::filesystem::path(probs_path).filename().string());
  const DifficultyMetric metric = difficulty_metric_from(cfg.difficulty.metric);

  std::vector<DifficultyRecord> records;
  records.reserve(rows.size());
  for (const auto& row : rows)
    records.push_back(DifficultyRecord{row.sample_id, row.label,
                                       difficulty_score(metric, row.probs), -1});

  const CurriculumPartition part = stratify(records, cfg.difficulty.n_stages);
  apply_stages(records, part);

  ws.require_fresh({"difficulty.csv", "partition.csv", "partition.json",
                    "difficulty_stats.json"});

  std::string csv = "sample_id,label,score,stage\n";
  std::string pcsv = "sample_id,score,stage\n";
  for (const auto& r : records) {
    csv += r.sample_id;
    csv += ',';
    csv += std::to_string(r.label);
    csv += ',';
    csv += format_double(r.score);
    csv += ',';
    csv += std::to_string(r.stage);
    csv += "\n";
    pcsv += r.sample_id;
    pcsv += ',';
    pcsv += format_double(r.score);
    pcsv += ',';
    pcsv += std::to_string(r.stage);
    pcsv += "\n";
  }
  ws.write_output("difficulty.csv", csv);
  ws.write_output("partition.csv", pcsv);

  nlohmann::json pj;
  pj["config_hash"] = cfg.config_hash();
  pj["requested_stages"] = part.requested_stages;
  pj["n_stages"] = part.n_stages();
  pj["thresholds"] = part.thresholds;
  pj["warnings"] = part.warnings;
  ws.write_output("partition.json", pj.dump(2) + "\n");

  nlohmann::json sj;
  sj["config_hash"] = cfg.config_hash();
  if (part.n_stages() >= 2) {
    const StageValidationReport rep = validate_stages(records, part);
    nlohmann::json pairwise = nlohmann::json::array();
    for (const auto& pt : rep.pairwise) {
      nlohmann::json e = detail::test_result_json(pt.result);
      e["stage_a"] = pt.stage_a;
      e["stage_b"] = pt.stage_b;
      pairwise.push_back(e);
    }
    sj["pairwise"] = pairwise;
    sj["omnibus"] = detail::test_result_json(rep.omnibus);
  } else {
    sj["validation_skipped"] = "partition degenerated to a single stage";
  }
  {
    bool has0 = false, has1 = false;
    for (const auto& r : records) (r.label == 0 ? has0 : has1) = true;
    if (has0 && has1)
      sj["class_bias"] = detail::test_result_json(class_bias_check(records));
    else
      sj["class_bias_skipped"] = "both classes required";
  }
  ws.write_output("difficulty_stats.json", sj.dump(2) + "\n");
  ws.write_manifest("difficulty", cfg.config_hash());
  return 0;
}

// ============================================================
// train
// ============================================================

namespace detail {

inline std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss,val_auc,active_n,temperature\n";
  for (const auto& h : history) {
    out += std::to_string(h.epoch);
    out += ',';
    out += format_double(h.train_loss);
    out += ',';
    out += format_double(h.val_loss);
    out += ',';
    if (h.val_auc) out += format_double(*h.val_auc);
    out += ',';
    out += std::to_string(h.active_n);
    out += ',';
    out += format_double(h.temperature);
    out += "\n";
  }
  return out;
}

inline std::string run_tag(const RunRecord& rec) {
  return "s" + std::to_string(rec.seed) + "_f" + std::to_string(rec.fold);
}

}  // namespace detail

inline int cmd_train(const ExperimentConfig& cfg, Workspace& ws) {
  LoadedData data = obtain_dataset(cfg, ws);

  std::unique_ptr<DifficultySource> source;
  if (!cfg.difficulty.probabilities.empty()) {
    const auto rows = parse_probability_csv(
        ws.read_input(cfg.difficulty.probabilities),
        std::filesystem::path(cfg.difficulty.probabilities).filename().string());
    std::map<std::string, ProbabilityVector> table;
    for (const auto& row : rows) table[row.sample_id] = row.probs;
    source = std::make_unique<TableSource>(std::move(table));
  } else {
    source = std::make_unique<SelfProbeSource>(cfg.train.probe.epochs,
                                               cfg.train.probe.learning_rate,
                                               cfg.train.probe.l2);
  }

  const CvSettings settings = cfg.cv_settings();
  std::vector<std::string> planned = {"report.json"};
  for (std::uint64_t seed : cfg.seeds)
    for (std::size_t f = 0; f < settings.k; ++f) {
      const std::string tag =
          "s" + std::to_string(seed) + "_f" + std::to_string(f);
      planned.push_back("history_" + tag + ".csv");
      planned.push_back("checkpoint_" + tag + ".json");
    }
  ws.require_fresh(planned);

  const CvReport report = run_cv(data.ds, settings, cfg.seeds, *source);
  const std::string hash = cfg.config_hash();

  std::vector<std::string> failures;
  for (const auto& rec : report.runs) {
    const std::string tag = detail::run_tag(rec);
    if (rec.failed) {
      failures.push_back("run " + tag + ": " + rec.error);
      continue;
    }
    ws.write_output("history_" + tag + ".csv", detail::history_csv(rec.history));
    nlohmann::json ck;
    ck["config_hash"] = hash;
    ck["tool_version"] = kVersion;
    ck["seed"] = rec.seed;
    ck["fold"] = rec.fold;
    ck["theta"] = rec.model.theta;
    ck["bias"] = rec.model.bias;
    ck["best_epoch"] = rec.best_epoch;
    ws.write_output("checkpoint_" + tag + ".json", ck.dump(2) + "\n");
  }

  nlohmann::json rj;
  rj["config_hash"] = hash;
  rj["tool_version"] = kVersion;
  rj["weighting"] = to_string(cfg.weighting.scheme);
  rj["k"] = settings.k;
  rj["seeds"] = cfg.seeds;
  rj["dataset_generated_in_memory"] = data.generated;
  for (const auto& name : metric_names()) {
    const MetricAggregate& agg = report.aggregate.at(name);
    nlohmann::json m;
    m["mean"] = agg.mean;
    m["std"] = agg.stddev;
    m["n"] = agg.n;
    nlohmann::json pf = nlohmann::json::array();
    for (const auto& v : agg.per_fold)
      pf.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    m["per_fold"] = pf;
    rj["metrics"][name] = m;
  }
  {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& rec : report.runs) {
      nlohmann::json r;
      r["seed"] = rec.seed;
      r["fold"] = rec.fold;
      r["failed"] = rec.failed;
      if (rec.failed) r["error"] = rec.error;
      r["warnings"] = rec.warnings;
      r["best_epoch"] = rec.best_epoch;
      for (const auto& [k, v] : rec.metrics)
        r["metrics"][k] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
      r["val_sample_ids"] = rec.val_ids;
      r["difficulty_input_sample_ids"] = rec.difficulty_input_ids;
      runs.push_back(r);
    }
    rj["runs"] = runs;
  }
  ws.write_output("report.json", rj.dump(2) + "\n");
  ws.write_manifest("train", hash);

  if (!failures.empty()) {
    for (const auto& f : failures) std::fprintf(stderr, "%s\n", f.c_str());
    return 1;
  }
  return 0;
}

// ============================================================
// regret
// ============================================================

inline int cmd_regret(const ExperimentConfig& cfg, Workspace& ws) {
  std::vector<std::size_t> horizons = cfg.regret.horizons;
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  const std::size_t max_h = horizons.back();

  std::vector<LossFamily> families;
  for (const auto& f : cfg.regret.families)
    families.push_back(loss_family_from(f));

  std::vector<std::string> planned = {"regret_report.json"};
  for (std::size_t i = 0; i < cfg.regret.streams; ++i)
    planned.push_back("trace_stream" + std::to_string(i) + ".csv");
  ws.require_fresh(planned);

  const std::string hash = cfg.config_hash();
  nlohmann::json streams_json = nlohmann::json::array();
  std::vector<double> mean_regret(horizons.size(), 0.0);
  bool all_within = true;

  for (std::size_t i = 0; i < cfg.regret.streams; ++i) {
    StreamGenSpec spec;
    spec.seed = mix_seed(cfg.seeds[0], "stream" + std::to_string(i));
    spec.rounds = max_h;
    spec.dim = cfg.regret.dim;
    spec.families = families;
    spec.radius = cfg.regret.radius;
    spec.weight_temperature = cfg.regret.weight_temperature;
    const ConvexLossStream full = generate_stream(spec);

    nlohmann::json sj;
    sj["index"] = i;
    sj["seed"] = spec.seed;
    nlohmann::json rows = nlohmann::json::array();

    std::vector<double> warm;
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
      const std::size_t T = horizons[hi];
      ConvexLossStream sub;
      sub.ball = full.ball;
      sub.rounds.assign(full.rounds.begin(),
                        full.rounds.begin() + static_cast<std::ptrdiff_t>(T));
      RegretTrace trace = run_weighted_ogd(sub, nullptr, nullptr, false);
      const std::vector<double>* warm_ptr = warm.empty() ? nullptr : &warm;
      attach_hindsight(trace, sub,
                       hindsight_optimum(sub, T, 1e-10, 200000, warm_ptr));
      warm = trace.optimum;

      const bool within = trace.regret <= trace.bound;
      all_within = all_within && within;
      mean_regret[hi] += trace.regret / static_cast<double>(cfg.regret.streams);
      nlohmann::json row;
      row["T"] = T;
      row["regret"] = trace.regret;
      row["bound"] = trace.bound;
      row["within_bound"] = within;
      rows.push_back(row);

      if (T == max_h) {
        std::string csv = "t,loss,cum_regret,bound\n";
        for (std::size_t t = 0; t < T; ++t) {
          csv += std::to_string(t + 1);
          csv += ',';
          csv += format_double(trace.losses[t]);
          csv += ',';
          csv += format_double(trace.cum_regret[t]);
          csv += ',';
          csv += format_double(trace.bound_curve[t]);
          csv += "\n";
        }
        ws.write_output("trace_stream" + std::to_string(i) + ".csv", csv);
      }
    }
    sj["horizons"] = rows;
    streams_json.push_back(sj);
  }

  nlohmann::json rj;
  rj["config_hash"] = hash;
  rj["tool_version"] = kVersion;
  rj["streams"] = streams_json;
  {
    nlohmann::json mr = nlohmann::json::array();
    for (std::size_t hi = 0; hi < horizons.size(); ++hi)
      mr.push_back({{"T", horizons[hi]}, {"mean_regret", mean_regret[hi]}});
    rj["mean_regret"] = mr;
  }
  rj["all_within_bound"] = all_within;
  if (horizons.size() < 2) {
    rj["slope_omitted"] = "need at least two distinct horizons for a fit";
  } else {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t hi = 0; hi < horizons.size(); ++hi)
      pts.emplace_back(static_cast<double>(horizons[hi]), mean_regret[hi]);
    try {
      const SlopeFit fit = regret_slope(pts);
      rj["slope"] = fit.slope;
      rj["slope_horizons_used"] = fit.used;
      rj["slope_horizons_excluded"] = fit.excluded;
    } catch (const ValidationError& e) {
      rj["slope_omitted"] = e.what();
    }
  }
  ws.write_output("regret_report.json", rj.dump(2) + "\n");
  ws.write_manifest("regret", hash);
  return 0;
}

// ============================================================
// stats (paired comparison of two training reports)
// ============================================================

inline int cmd_stats(Workspace& ws, const std::string& report_a,
                     const std::string& report_b) {
  auto load_report = [&](const std::string& path) {
    try {
      return nlohmann::json::parse(ws.read_input(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(path + ": " + e.what());
    }
  };
  const nlohmann::json ja = load_report(report_a);
  const nlohmann::json jb = load_report(report_b);

  using Key = std::pair<std::uint64_t, std::size_t>;
  auto collect = [](const nlohmann::json& j, const std::string& which) {
    if (!j.contains("runs") || !j["runs"].is_array())
      throw ValidationError(which + ": not a training report (no runs array)");
    std::map<Key, std::map<std::string, std::optional<double>>> out;
    for (const auto& r : j["runs"]) {
      if (r.value("failed", false)) continue;
      const Key key{r.at("seed").get<std::uint64_t>(),
                    r.at("fold").get<std::size_t>()};
      std::map<std::string, std::optional<double>> metrics;
      for (const auto& [k, v] : r.at("metrics").items())
        metrics[k] = v.is_null() ? std::nullopt
                                 : std::optional<double>(v.get<double>());
      out[key] = std::move(metrics);
    }
    return out;
  };
  const auto runs_a = collect(ja, report_a);
  const auto runs_b = collect(jb, report_b);

  {
    std::vector<std::string> missing;
    for (const auto& [k, v] : runs_a)
      if (!runs_b.count(k))
        missing.push_back("seed=" + std::to_string(k.first) +
                          ",fold=" + std::to_string(k.second) +
                          " missing from " + report_b);
    for (const auto& [k, v] : runs_b)
      if (!runs_a.count(k))
        missing.push_back("seed=" + std::to_string(k.first) +
                          ",fold=" + std::to_string(k.second) +
                          " missing from " + report_a);
    if (!missing.empty())
      throw ValidationError("reports do not share fold/seed structure: " +
                            join(missing, "; "));
  }

  ws.require_fresh({"comparison.json", "comparison.csv"});

  auto mean_std = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    const double sd =
        v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair<double, double>{m, sd};
  };

  nlohmann::json mj;
  std::string csv =
      "metric,mean_a,std_a,mean_b,std_b,mean_diff,t_statistic,t_p,"
      "wilcoxon_statistic,wilcoxon_p,n_pairs\n";
  for (const auto& name : metric_names()) {
    std::vector<double> va, vb, diffs;
    for (const auto& [key, ma] : runs_a) {
      const auto& mb = runs_b.at(key);
      const auto ia = ma.find(name);
      const auto ib = mb.find(name);
      if (ia == ma.end() || ib == mb.end() || !ia->second || !ib->second)
        continue;
      va.push_back(*ia->second);
      vb.push_back(*ib->second);
      diffs.push_back(*ia->second - *ib->second);
    }
    nlohmann::json entry;
    entry["n_pairs"] = va.size();
    csv += name;
    if (va.size() < 2) {
      entry["degenerate"] = "fewer than two complete pairs";
      csv += ",,,,,,,,,," + std::to_string(va.size()) + "\n";
      mj[name] = entry;
      continue;
    }
    const auto [ma, sa] = mean_std(va);
    const auto [mb, sb] = mean_std(vb);
    entry["mean_a"] = ma;
    entry["std_a"] = sa;
    entry["mean_b"] = mb;
    entry["std_b"] = sb;
    entry["mean_diff"] = ma - mb;
    std::string t_stat_cell, t_p_cell, w_stat_cell, w_p_cell;
    try {
      const TestResult t = paired_t(va, vb);
      entry["t"] = detail::test_result_json(t);
      t_stat_cell = format_double(t.statistic);
      t_p_cell = format_double(t.p_value);
    } catch (const DegenerateInputError& e) {
      entry["t"] = {{"degenerate", e.what()}};
    }
    try {
      const TestResult w = wilcoxon_signed_rank(diffs);
      entry["wilcoxon"] = detail::test_result_json(w);
      w_stat_cell = format_double(w.statistic);
      w_p_cell = format_double(w.p_value);
    } catch (const DegenerateInputError& e) {
      entry["wilcoxon"] = {{"degenerate", e.what()}};
    }
    mj[name] = entry;
    csv += ',' + format_double(ma) + ',' + format_double(sa) + ',' +
           format_double(mb) + ',' + format_double(sb) + ',' +
           format_double(ma - mb) + ',' + t_stat_cell + ',' + t_p_cell + ',' +
           w_stat_cell + ',' + w_p_cell + ',' + std::to_string(va.size()) +
           "\n";
  }

  nlohmann::json out;
  // Filenames only: absolute paths would make otherwise identical runs in
  // different directories produce different bytes.
  out["report_a"] = std::filesystem::path(report_a).filename().string();
  out["report_b"] = std::filesystem::path(report_b).filename().string();
  out["config_hash_a"] = ja.value("config_hash", std::string{});
  out["config_hash_b"] = jb.value("config_hash", std::string{});
  out["n_shared_runs"] = runs_a.size();
  out["metrics"] = mj;
  ws.write_output("comparison.json", out.dump(2) + "\n");
  ws.write_output("comparison.csv", csv);
  // No experiment config here; the comparison is identified by its inputs.
  ws.write_manifest("stats", content_digest(out["config_hash_a"].get<std::string>() +
                                            out["config_hash_b"].get<std::string>()));
  return 0;
}

// ============================================================
// perturb
// ============================================================

inline int cmd_perturb(const ExperimentConfig& cfg, Workspace& ws,
                       const std::string& checkpoint_path) {
  if (cfg.data.kind != "images")
    throw ConfigError("perturb requires data.kind = \"images\"");
  if (checkpoint_path.empty())
    throw ConfigError("perturb needs --checkpoint");

  nlohmann::json ck;
  try {
    ck = nlohmann::json::parse(ws.read_input(checkpoint_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(checkpoint_path + ": " + e.what());
  }
  const std::string hash = cfg.config_hash();
  const std::string ck_hash = ck.value("config_hash", std::string{});
  if (ck_hash != hash)
    throw RefusalError("stale checkpoint: trained under config hash " +
                       ck_hash + " but the current config hashes to " + hash);

  LogisticModel model;
  model.theta = ck.at("theta").get<std::vector<double>>();
  model.bias = ck.at("bias").get<double>();

  LoadedData data = obtain_dataset(cfg, ws);
  ws.require_fresh({"robustness.csv", "robustness.json"});

  const auto rows =
      robustness_eval(model, data.images, cfg.perturb_specs(), cfg.seeds[0]);

  std::string csv = "kind,severity,auc,accuracy,delta_auc\n";
  nlohmann::json jrows = nlohmann::json::array();
  for (const auto& r : rows) {
    csv += r.kind + ',' + std::to_string(r.severity) + ',' +
           format_double(r.auc) + ',' + format_double(r.accuracy) + ',' +
           format_double(r.delta_auc) + "\n";
    jrows.push_back({{"kind", r.kind},
                     {"severity", r.severity},
                     {"auc", r.auc},
                     {"accuracy", r.accuracy},
                     {"delta_auc", r.delta_auc}});
  }
  ws.write_output("robustness.csv", csv);
  nlohmann::json rj;
  rj["config_hash"] = hash;
  rj["tool_version"] = kVersion;
  rj["rows"] = jrows;
  ws.write_output("robustness.json", rj.dump(2) + "\n");
  ws.write_manifest("perturb", hash);
  return 0;
}

}  // namespace fossil
