#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "fossil/common.hpp"
#include "fossil/difficulty.hpp"
#include "fossil/images.hpp"
#include "fossil/learner.hpp"
#include "fossil/oco.hpp"
#include "fossil/weighting.hpp"

namespace fossil {

// Object view that tracks which keys were consumed; finish() rejects
// anything left over, which is what makes the config strict at every level.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double dflt) {
    const auto* v = get(key);
    if (!v) return dflt;
    if (!v->is_number())
      throw ConfigError(path_ + "." + key + ": expected a number");
    return v->get<double>();
  }

  std::size_t index(const std::string& key, std::size_t dflt) {
    const auto* v = get(key);
    if (!v) return dflt;
    if (!v->is_number_integer() || v->get<long long>() < 0)
      throw ConfigError(path_ + "." + key + ": expected a non-negative integer");
    return static_cast<std::size_t>(v->get<long long>());
  }

  std::string text(const std::string& key, std::string dflt) {
    const auto* v = get(key);
    if (!v) return dflt;
    if (!v->is_string())
      throw ConfigError(path_ + "." + key + ": expected a string");
    return v->get<std::string>();
  }

  // Present-or-null pointers for nested structures.
  const nlohmann::json* object(const std::string& key) {
    const auto* v = get(key);
    if (v && !v->is_object())
      throw ConfigError(path_ + "." + key + ": expected an object");
    return v;
  }

  const nlohmann::json* array(const std::string& key) {
    const auto* v = get(key);
    if (v && !v->is_array())
      throw ConfigError(path_ + "." + key + ": expected an array");
    return v;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
  }

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

struct DataSection {
  std::string kind = "blobs";  // blobs | images
  std::string name = "dataset";
  std::vector<std::size_t> n_per_class = {126, 102};
  std::size_t dim = 2;
  std::vector<std::vector<double>> means;  // default set in normalize()
  double cov_scale = 1.0;
  double label_noise = 0.0;
  std::size_t image_size = 16;
  double image_noise_scale = 0.05;
};

struct DifficultySection {
  std::string metric = "softmax";
  int n_stages = 4;
  std::string probabilities;  // CSV path; empty = self-probe on fold train rows
};

struct ProbeSection {
  std::size_t epochs = 100;
  double learning_rate = 0.5;
  double l2 = 0.0;
};

struct TrainSection {
  double learning_rate = 0.5;
  std::size_t max_epochs = 200;
  std::size_t patience = 25;
  std::string early_stop_metric = "val_auc";
  double l2 = 0.0;
  std::string curriculum = "all_at_once";
  std::size_t epochs_per_stage = 50;
  double init_scale = 0.01;
  ProbeSection probe;
};

struct CvSection {
  std::size_t k = 5;
};

struct RegretSection {
  std::vector<std::size_t> horizons = {100, 1000, 10000};
  std::size_t streams = 10;
  std::size_t dim = 2;
  std::vector<std::string> families = {"quadratic", "logistic"};
  double radius = 3.0;
  double weight_temperature = 1.0;
};

struct PerturbSection {
  bool specs_given = false;  // absent list means the full 5x3 grid
  std::vector<PerturbationSpec> specs;
};

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds = {42, 77, 123};
  std::size_t workers = 1;
  DataSection data;
  DifficultySection difficulty;
  WeightingConfig weighting;
  TrainSection train;
  CvSection cv;
  RegretSection regret;
  PerturbSection perturb;
  std::string output_dir;  // from output.dir; empty = unset

  void normalize() {
    if (data.means.empty()) {
      data.means.assign(2, std::vector<double>(data.dim, 0.0));
      data.means[1].assign(data.dim, 1.5);
    }
  }

  void validate() const {
    if (seeds.empty()) throw ConfigError("seeds: at least one seed required");
    {
      std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
      if (uniq.size() != seeds.size())
        throw ConfigError("seeds: duplicate seed values");
    }
    if (workers == 0) throw ConfigError("workers: must be >= 1");
    if (data.kind != "blobs" && data.kind != "images")
      throw ConfigError("data.kind: expected 'blobs' or 'images'");
    if (data.name.empty()) throw ConfigError("data.name: must be non-empty");
    if (data.n_per_class.size() != 2)
      throw ConfigError("data.n_per_class: exactly two class counts required");
    difficulty_metric_from(difficulty.metric);
    if (difficulty.n_stages < 2)
      throw ConfigError("difficulty.n_stages: must be >= 2");
    weighting.validate();
    curriculum_mode_from(train.curriculum);
    if (cv.k < 2) throw ConfigError("cv.k: must be >= 2");
    if (regret.horizons.empty())
      throw ConfigError("regret.horizons: at least one horizon required");
    for (std::size_t h : regret.horizons)
      if (h == 0) throw ConfigError("regret.horizons: horizons must be >= 1");
    if (regret.streams == 0) throw ConfigError("regret.streams: must be >= 1");
    for (const auto& f : regret.families) loss_family_from(f);
    for (const auto& s : perturb.specs) s.validate();
    train_config().validate();  // cross-field checks on the assembled config
  }

  TrainConfig train_config() const {
    TrainConfig cfg;
    cfg.weighting = weighting;
    cfg.curriculum = curriculum_mode_from(train.curriculum);
    cfg.epochs_per_stage = train.epochs_per_stage;
    cfg.learning_rate = train.learning_rate;
    cfg.max_epochs = train.max_epochs;
    cfg.early_stop_patience = train.patience;
    cfg.early_stop_metric = early_stop_metric_from(train.early_stop_metric);
    cfg.l2 = train.l2;
    cfg.init_scale = train.init_scale;
    return cfg;
  }

  CvSettings cv_settings() const {
    CvSettings s;
    s.k = cv.k;
    s.metric = difficulty_metric_from(difficulty.metric);
    s.n_stages = difficulty.n_stages;
    s.train = train_config();
    s.workers = workers;
    return s;
  }

  BlobSpec blob_spec(std::uint64_t seed) const {
    BlobSpec spec;
    spec.n_per_class = data.n_per_class;
    spec.dim = data.dim;
    spec.means = data.means;
    spec.cov_scale = data.cov_scale;
    spec.label_noise = data.label_noise;
    spec.seed = seed;
    return spec;
  }

  std::vector<PerturbationSpec> perturb_specs() const {
    return perturb.specs_given ? perturb.specs : full_perturbation_grid();
  }

  // Everything that shapes results, with defaults materialized. The output
  // location and the worker count are operational knobs: they may not change
  // a single computed number, so they stay out of the hash.
  nlohmann::json canonical_json() const {
    nlohmann::json j;
    j["seeds"] = seeds;
    j["data"]["kind"] = data.kind;
    j["data"]["name"] = data.name;
    j["data"]["n_per_class"] = data.n_per_class;
    j["data"]["dim"] = data.dim;
    j["data"]["means"] = data.means;
    j["data"]["cov_scale"] = data.cov_scale;
    j["data"]["label_noise"] = data.label_noise;
    j["data"]["image_size"] = data.image_size;
    j["data"]["image_noise_scale"] = data.image_noise_scale;
    j["difficulty"]["metric"] = difficulty.metric;
    j["difficulty"]["n_stages"] = difficulty.n_stages;
    j["difficulty"]["probabilities"] = difficulty.probabilities;
    j["weighting"]["scheme"] = to_string(weighting.scheme);
    j["weighting"]["temperature"] = weighting.temperature;
    j["weighting"]["gamma"] = weighting.gamma;
    j["weighting"]["meta_transform"] = to_string(weighting.meta_transform);
    if (weighting.has_schedule) {
      j["weighting"]["schedule"]["kind"] = to_string(weighting.schedule.kind);
      j["weighting"]["schedule"]["t0"] = weighting.schedule.t0;
      j["weighting"]["schedule"]["t_min"] = weighting.schedule.t_min;
      j["weighting"]["schedule"]["decay"] = weighting.schedule.decay;
    }
    j["train"]["learning_rate"] = train.learning_rate;
    j["train"]["max_epochs"] = train.max_epochs;
    j["train"]["patience"] = train.patience;
    j["train"]["early_stop_metric"] = train.early_stop_metric;
    j["train"]["l2"] = train.l2;
    j["train"]["curriculum"] = train.curriculum;
    j["train"]["epochs_per_stage"] = train.epochs_per_stage;
    j["train"]["init_scale"] = train.init_scale;
    j["train"]["probe"]["epochs"] = train.probe.epochs;
    j["train"]["probe"]["learning_rate"] = train.probe.learning_rate;
    j["train"]["probe"]["l2"] = train.probe.l2;
    j["cv"]["k"] = cv.k;
    j["regret"]["horizons"] = regret.horizons;
    j["regret"]["streams"] = regret.streams;
    j["regret"]["dim"] = regret.dim;
    j["regret"]["families"] = regret.families;
    j["regret"]["radius"] = regret.radius;
    j["regret"]["weight_temperature"] = regret.weight_temperature;
    {
      nlohmann::json specs = nlohmann::json::array();
      for (const auto& s : perturb_specs())
        specs.push_back({{"kind", to_string(s.kind)}, {"severity", s.severity}});
      j["perturb"]["specs"] = specs;
    }
    return j;
  }

  std::string config_hash() const {
    return hex64(fnv1a64(canonical_json().dump()));
  }
};

namespace detail {

inline std::vector<std::uint64_t> parse_seed_array(const nlohmann::json& arr,
                                                   const std::string& path) {
  std::vector<std::uint64_t> out;
  for (const auto& v : arr) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(path + ": seeds must be non-negative integers");
    out.push_back(v.get<std::uint64_t>());
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text,
                                                const std::string& name) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(name + ": " + e.what());
  }

  ExperimentConfig cfg;
  StrictObject top(root, name);

  if (const auto* arr = top.array("seeds"))
    cfg.seeds = detail::parse_seed_array(*arr, name + ".seeds");
  cfg.workers = top.index("workers", cfg.workers);

  if (const auto* jd = top.object("data")) {
    StrictObject d(*jd, name + ".data");
    cfg.data.kind = d.text("kind", cfg.data.kind);
    cfg.data.name = d.text("name", cfg.data.name);
    if (const auto* arr = d.array("n_per_class")) {
      cfg.data.n_per_class.clear();
      for (const auto& v : *arr) {
        if (!v.is_number_integer() || v.get<long long>() < 1)
          throw ConfigError(name + ".data.n_per_class: counts must be >= 1");
        cfg.data.n_per_class.push_back(v.get<std::size_t>());
      }
    }
    cfg.data.dim = d.index("dim", cfg.data.dim);
    if (const auto* arr = d.array("means")) {
      cfg.data.means.clear();
      for (const auto& row : *arr) {
        if (!row.is_array())
          throw ConfigError(name + ".data.means: expected an array of arrays");
        std::vector<double> m;
        for (const auto& v : row) {
          if (!v.is_number())
            throw ConfigError(name + ".data.means: expected numbers");
          m.push_back(v.get<double>());
        }
        cfg.data.means.push_back(std::move(m));
      }
    }
    cfg.data.cov_scale = d.number("cov_scale", cfg.data.cov_scale);
    cfg.data.label_noise = d.number("label_noise", cfg.data.label_noise);
    cfg.data.image_size = d.index("image_size", cfg.data.image_size);
    cfg.data.image_noise_scale =
        d.number("image_noise_scale", cfg.data.image_noise_scale);
    d.finish();
  }

  if (const auto* jd = top.object("difficulty")) {
    StrictObject d(*jd, name + ".difficulty");
    cfg.difficulty.metric = d.text("metric", cfg.difficulty.metric);
    cfg.difficulty.n_stages =
        static_cast<int>(d.index("n_stages",
                                 static_cast<std::size_t>(cfg.difficulty.n_stages)));
    cfg.difficulty.probabilities =
        d.text("probabilities", cfg.difficulty.probabilities);
    d.finish();
  }

  if (const auto* jw = top.object("weighting")) {
    StrictObject w(*jw, name + ".weighting");
    cfg.weighting.scheme =
        weight_scheme_from(w.text("scheme", to_string(cfg.weighting.scheme)));
    cfg.weighting.temperature = w.number("temperature", cfg.weighting.temperature);
    cfg.weighting.gamma = w.number("gamma", cfg.weighting.gamma);
    cfg.weighting.meta_transform = meta_transform_from(
        w.text("meta_transform", to_string(cfg.weighting.meta_transform)));
    if (const auto* js = w.object("schedule")) {
      StrictObject s(*js, name + ".weighting.schedule");
      cfg.weighting.has_schedule = true;
      cfg.weighting.schedule.kind =
          schedule_kind_from(s.text("kind", "constant"));
      cfg.weighting.schedule.t0 = s.number("t0", cfg.weighting.temperature);
      cfg.weighting.schedule.t_min =
          s.number("t_min", cfg.weighting.schedule.t_min);
      cfg.weighting.schedule.decay =
          s.number("decay", cfg.weighting.schedule.decay);
      s.finish();
    }
    w.finish();
  }

  if (const auto* jt = top.object("train")) {
    StrictObject t(*jt, name + ".train");
    cfg.train.learning_rate = t.number("learning_rate", cfg.train.learning_rate);
    cfg.train.max_epochs = t.index("max_epochs", cfg.train.max_epochs);
    cfg.train.patience = t.index("patience", cfg.train.patience);
    cfg.train.early_stop_metric =
        t.text("early_stop_metric", cfg.train.early_stop_metric);
    cfg.train.l2 = t.number("l2", cfg.train.l2);
    cfg.train.curriculum = t.text("curriculum", cfg.train.curriculum);
    cfg.train.epochs_per_stage =
        t.index("epochs_per_stage", cfg.train.epochs_per_stage);
    cfg.train.init_scale = t.number("init_scale", cfg.train.init_scale);
    if (const auto* jp = t.object("probe")) {
      StrictObject p(*jp, name + ".train.probe");
      cfg.train.probe.epochs = p.index("epochs", cfg.train.probe.epochs);
      cfg.train.probe.learning_rate =
          p.number("learning_rate", cfg.train.probe.learning_rate);
      cfg.train.probe.l2 = p.number("l2", cfg.train.probe.l2);
      p.finish();
    }
    t.finish();
  }

  if (const auto* jc = top.object("cv")) {
    StrictObject c(*jc, name + ".cv");
    cfg.cv.k = c.index("k", cfg.cv.k);
    c.finish();
  }

  if (const auto* jr = top.object("regret")) {
    StrictObject r(*jr, name + ".regret");
    if (const auto* arr = r.array("horizons")) {
      cfg.regret.horizons.clear();
      for (const auto& v : *arr) {
        if (!v.is_number_integer() || v.get<long long>() < 1)
          throw ConfigError(name + ".regret.horizons: expected integers >= 1");
        cfg.regret.horizons.push_back(v.get<std::size_t>());
      }
    }
    cfg.regret.streams = r.index("streams", cfg.regret.streams);
    cfg.regret.dim = r.index("dim", cfg.regret.dim);
    if (const auto* arr = r.array("families")) {
      cfg.regret.families.clear();
      for (const auto& v : *arr) {
        if (!v.is_string())
          throw ConfigError(name + ".regret.families: expected strings");
        cfg.regret.families.push_back(v.get<std::string>());
      }
    }
    cfg.regret.radius = r.number("radius", cfg.regret.radius);
    cfg.regret.weight_temperature =
        r.number("weight_temperature", cfg.regret.weight_temperature);
    r.finish();
  }

  if (const auto* jp = top.object("perturb")) {
    StrictObject p(*jp, name + ".perturb");
    if (const auto* arr = p.array("specs")) {
      cfg.perturb.specs_given = true;
      cfg.perturb.specs.clear();
      for (const auto& v : *arr) {
        StrictObject s(v, name + ".perturb.specs[]");
        PerturbationSpec spec;
        spec.kind = perturbation_kind_from(s.text("kind", ""));
        spec.severity = static_cast<int>(s.index("severity", 1));
        s.finish();
        cfg.perturb.specs.push_back(spec);
      }
    }
    p.finish();
  }

  if (const auto* jo = top.object("output")) {
    StrictObject o(*jo, name + ".output");
    cfg.output_dir = o.text("dir", cfg.output_dir);
    o.finish();
  }

  top.finish();
  cfg.normalize();
  cfg.validate();
  return cfg;
}

}  // namespace fossil
