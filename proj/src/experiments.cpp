#include "emogan/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "emogan/errors.hpp"
#include "emogan/plots.hpp"
#include "emogan/rng.hpp"

#ifndef EMOGAN_VERSION
#define EMOGAN_VERSION "0.0.0"
#endif

namespace emogan {

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::toy_compare: return "toy-compare";
    case ExperimentKind::cv_indomain: return "cv-indomain";
    case ExperimentKind::cross_corpus: return "cross-corpus";
    case ExperimentKind::low_resource: return "low-resource";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  if (name == "toy-compare") return ExperimentKind::toy_compare;
  if (name == "cv-indomain" || name == "cv") return ExperimentKind::cv_indomain;
  if (name == "cross-corpus") return ExperimentKind::cross_corpus;
  if (name == "low-resource") return ExperimentKind::low_resource;
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

TrainPlan TrainSettings::plan_for(ModelKind kind, std::uint64_t seed) const {
  TrainPlan plan = TrainPlan::defaults(kind);
  plan.epochs = epochs;
  plan.batch_size = batch_size;
  plan.d2_gen_ratio = d2_gen_ratio;
  plan.info_weight = info_weight;
  plan.seed = seed;
  SgdConfig* configs[] = {&plan.step1_autoencoder, &plan.step2_d1, &plan.step3_encoder,
                          &plan.step4_d2, &plan.step5_generator};
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].learning_rate) configs[i]->learning_rate = *steps[i].learning_rate;
    if (steps[i].momentum) configs[i]->momentum = *steps[i].momentum;
  }
  return plan;
}

ScaleProfile ExperimentConfig::scale_for(int feature_dim) const {
  if (profile == "proportional") return ScaleProfile::proportional(feature_dim);
  if (profile == "full") return ScaleProfile::full();
  if (profile == "quarter") return ScaleProfile::quarter();
  double ratio = 0.0;
  const auto [ptr, ec] = std::from_chars(profile.data(), profile.data() + profile.size(), ratio);
  if (ec != std::errc() || ptr != profile.data() + profile.size() || !(ratio > 0.0)) {
    throw ConfigError("profile must be proportional, full, quarter or a positive ratio, got '" +
                      profile + "'");
  }
  return ScaleProfile{ratio};
}

bool ExperimentConfig::wants(std::string_view metric) const {
  return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw ConfigError("experiment.models: at least one model required");
  for (const auto* src : {&corpus, &target}) {
    if (src->path && !std::filesystem::exists(*src->path)) {
      throw ConfigError("corpus path does not exist: " + src->path->string());
    }
    if (!src->path && src->toy.feature_dim < 4) {
      throw ConfigError("toy corpus feature_dim must be >= 4");
    }
  }
  if (checkpoints && !std::filesystem::is_directory(*checkpoints)) {
    throw ConfigError("low_resource.checkpoints is not a directory: " + checkpoints->string());
  }
  static_cast<void>(scale_for(kReferenceFeatureDim));
  for (const auto& m : metrics) {
    if (m != "metric1" && m != "metric2" && m != "fid") {
      throw ConfigError("unknown metric '" + m + "'");
    }
  }
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  try {
    for (ModelKind k : models) train.plan_for(k, 0).validate();
    toy.generator.validate();
    toy.discriminator.validate();
    SgdConfig{evaluator.learning_rate, evaluator.momentum}.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (toy.epochs == 0) throw ConfigError("toy.epochs must be >= 1");
  if (toy_seeds == 0) throw ConfigError("toy.seeds must be >= 1");
  if (!(toy_separation > 0.0) || !(toy_stddev > 0.0)) {
    throw ConfigError("toy.separation and toy.stddev must be positive");
  }
  if (p_grid.empty() || n_grid.empty()) throw ConfigError("low_resource grids must be nonempty");
  for (double p : p_grid) {
    if (!(p > 0.0 && p <= 100.0)) throw ConfigError("low_resource.p_grid entries must be in (0, 100]");
  }
  if (evaluator.batch_size == 0) throw ConfigError("evaluator.batch_size must be >= 1");
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.corpus.toy.seed = 7;
  c.corpus.toy.name = "toy-source";
  c.target.toy.seed = 11;
  c.target.toy.shift = 1.0;
  c.target.toy.class_counts = std::array<std::size_t, 4>{300, 150, 350, 200};
  c.target.toy.name = "toy-target";
  return c;
}

// ---------------------------------------------------------------- config text

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string&)>;

void corpus_keys(std::vector<std::pair<std::string, Setter>>& keys, const std::string& section,
                 CorpusSource ExperimentConfig::*member) {
  auto add = [&](const std::string& name, auto fn) {
    keys.emplace_back(section + "." + name,
                      [member, fn](ExperimentConfig& c, const std::string& k, const std::string& v) {
                        fn(c.*member, k, v);
                      });
  };
  add("path", [](CorpusSource& s, const std::string&, const std::string& v) {
    if (v.empty()) s.path.reset(); else s.path = v;
  });
  add("label_column", [](CorpusSource& s, const std::string&, const std::string& v) {
    s.csv.label_column = v;
  });
  add("session_column", [](CorpusSource& s, const std::string&, const std::string& v) {
    if (v.empty()) s.csv.session_column.reset(); else s.csv.session_column = v;
  });
  add("feature_dim", [](CorpusSource& s, const std::string& k, const std::string& v) {
    s.toy.feature_dim = static_cast<int>(parse_count(k, v));
  });
  add("per_class", [](CorpusSource& s, const std::string& k, const std::string& v) {
    s.toy.per_class = parse_count(k, v);
  });
  add("separation", [](CorpusSource& s, const std::string& k, const std::string& v) {
    s.toy.class_mean_separation = parse_real(k, v);
  });
  add("noise", [](CorpusSource& s, const std::string& k, const std::string& v) {
    s.toy.noise_stddev = parse_real(k, v);
  });
  add("seed", [](CorpusSource& s, const std::string& k, const std::string& v) {
    s.toy.seed = parse_count(k, v);
  });
  add("direction_seed", [](CorpusSource& s, const std::string& k, const std::string& v) {
    if (v.empty()) s.toy.direction_seed.reset(); else s.toy.direction_seed = parse_count(k, v);
  });
  add("shift", [](CorpusSource& s, const std::string& k, const std::string& v) {
    s.toy.shift = parse_real(k, v);
  });
  add("class_counts", [](CorpusSource& s, const std::string& k, const std::string& v) {
    const auto items = split_list(v);
    if (items.empty()) {
      s.toy.class_counts.reset();
      return;
    }
    if (items.size() != 4) throw ConfigError(k + ": expected four counts");
    std::array<std::size_t, 4> counts{};
    for (std::size_t i = 0; i < 4; ++i) counts[i] = parse_count(k, items[i]);
    s.toy.class_counts = counts;
  });
  add("sessions", [](CorpusSource& s, const std::string& k, const std::string& v) {
    s.toy.sessions = static_cast<int>(parse_count(k, v));
  });
  add("name", [](CorpusSource& s, const std::string&, const std::string& v) { s.toy.name = v; });
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const auto table = [] {
    std::vector<std::pair<std::string, Setter>> t;
    auto add = [&](std::string name, Setter fn) { t.emplace_back(std::move(name), std::move(fn)); };
    add("experiment.kind", [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.kind = experiment_kind_from_string(v);
    });
    add("experiment.seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.seed = parse_count(k, v);
    });
    add("experiment.out", [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.out = v;
    });
    add("experiment.models", [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.models.clear();
      for (const auto& m : split_list(v)) {
        try {
          c.models.push_back(model_kind_from_string(m));
        } catch (const Error&) {
          throw ConfigError("experiment.models: unknown model '" + m + "'");
        }
      }
    });
    add("experiment.profile", [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.profile = v;
    });
    add("experiment.metrics", [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.metrics = split_list(v);
    });
    add("experiment.n_synth", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.n_synth = parse_count(k, v);
    });
    add("experiment.max_folds", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.max_folds = parse_count(k, v);
    });
    add("experiment.standardize",
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.standardize = parse_bool(k, v);
        });
    corpus_keys(t, "corpus", &ExperimentConfig::corpus);
    corpus_keys(t, "target", &ExperimentConfig::target);
    add("prior.separation", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.prior.separation = parse_real(k, v);
    });
    add("prior.stddev", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.prior.stddev = parse_real(k, v);
    });
    add("prior.noise_dim", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.prior.noise_dim = static_cast<int>(parse_count(k, v));
    });
    add("train.epochs", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.epochs = parse_count(k, v);
    });
    add("train.batch_size", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.batch_size = parse_count(k, v);
    });
    add("train.d2_gen_ratio", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.d2_gen_ratio = static_cast<int>(parse_count(k, v));
    });
    add("train.info_weight", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.info_weight = parse_real(k, v);
    });
    for (std::size_t i = 0; i < 5; ++i) {
      const std::string step = "train.step" + std::to_string(i + 1);
      add(step + "_lr", [i](ExperimentConfig& c, const std::string& k, const std::string& v) {
        if (v.empty()) c.train.steps[i].learning_rate.reset();
        else c.train.steps[i].learning_rate = parse_real(k, v);
      });
      add(step + "_momentum", [i](ExperimentConfig& c, const std::string& k, const std::string& v) {
        if (v.empty()) c.train.steps[i].momentum.reset();
        else c.train.steps[i].momentum = parse_real(k, v);
      });
    }
    add("svm.iterations", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.svm_iterations = parse_count(k, v);
    });
    add("evaluator.epochs", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.evaluator.epochs = parse_count(k, v);
    });
    add("evaluator.batch_size", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.evaluator.batch_size = parse_count(k, v);
    });
    add("evaluator.learning_rate",
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.evaluator.learning_rate = parse_real(k, v);
        });
    add("evaluator.momentum", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.evaluator.momentum = parse_real(k, v);
    });
    add("toy.seeds", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.toy_seeds = parse_count(k, v);
    });
    add("toy.epochs", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.toy.epochs = parse_count(k, v);
    });
    add("toy.batches_per_epoch",
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.toy.batches_per_epoch = parse_count(k, v);
        });
    add("toy.batch_size", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.toy.batch_size = parse_count(k, v);
    });
    add("toy.hidden", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.toy.hidden = static_cast<int>(parse_count(k, v));
    });
    add("toy.generator_lr", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.toy.generator.learning_rate = parse_real(k, v);
    });
    add("toy.generator_momentum",
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.toy.generator.momentum = parse_real(k, v);
        });
    add("toy.discriminator_lr",
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.toy.discriminator.learning_rate = parse_real(k, v);
        });
    add("toy.discriminator_momentum",
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.toy.discriminator.momentum = parse_real(k, v);
        });
    add("toy.info_weight", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.toy.info_weight = parse_real(k, v);
    });
    add("toy.samples", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.toy.output_samples = parse_count(k, v);
    });
    add("toy.separation", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.toy_separation = parse_real(k, v);
    });
    add("toy.stddev", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.toy_stddev = parse_real(k, v);
    });
    add("low_resource.p_grid", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.p_grid.clear();
      for (const auto& item : split_list(v)) c.p_grid.push_back(parse_real(k, item));
    });
    add("low_resource.n_grid", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.n_grid.clear();
      for (const auto& item : split_list(v)) c.n_grid.push_back(parse_count(k, item));
    });
    add("low_resource.checkpoints",
        [](ExperimentConfig& c, const std::string&, const std::string& v) {
          if (v.empty()) c.checkpoints.reset(); else c.checkpoints = v;
        });
    return t;
  }();
  return table;
}

template <typename T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += f(items[i]);
  }
  return out;
}

std::string opt_real(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = setters();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const auto& entry) { return entry.first == key; });
    if (it == table.end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    it->second(base, key, value);
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
  os << "[experiment]\n";
  kv("kind", std::string(to_string(c.kind)));
  kv("seed", std::to_string(c.seed));
  kv("out", c.out.string());
  kv("models", join<ModelKind>(c.models, [](const ModelKind& m) { return std::string(to_string(m)); }));
  kv("profile", c.profile);
  kv("metrics", join<std::string>(c.metrics, [](const std::string& s) { return s; }));
  kv("n_synth", std::to_string(c.n_synth));
  kv("max_folds", std::to_string(c.max_folds));
  kv("standardize", c.standardize ? "true" : "false");
  auto corpus = [&](const char* name, const CorpusSource& s) {
    os << "\n[" << name << "]\n";
    kv("path", s.path ? s.path->string() : "");
    kv("label_column", s.csv.label_column);
    kv("session_column", s.csv.session_column.value_or(""));
    kv("feature_dim", std::to_string(s.toy.feature_dim));
    kv("per_class", std::to_string(s.toy.per_class));
    kv("separation", format_double(s.toy.class_mean_separation));
    kv("noise", format_double(s.toy.noise_stddev));
    kv("seed", std::to_string(s.toy.seed));
    kv("direction_seed", s.toy.direction_seed ? std::to_string(*s.toy.direction_seed) : "");
    kv("shift", format_double(s.toy.shift));
    std::string counts;
    if (s.toy.class_counts) {
      for (std::size_t i = 0; i < 4; ++i) {
        counts += (i ? ", " : "") + std::to_string((*s.toy.class_counts)[i]);
      }
    }
    kv("class_counts", counts);
    kv("sessions", std::to_string(s.toy.sessions));
    kv("name", s.toy.name);
  };
  corpus("corpus", c.corpus);
  corpus("target", c.target);
  os << "\n[prior]\n";
  kv("separation", format_double(c.prior.separation));
  kv("stddev", format_double(c.prior.stddev));
  kv("noise_dim", std::to_string(c.prior.noise_dim));
  os << "\n[train]\n";
  kv("epochs", std::to_string(c.train.epochs));
  kv("batch_size", std::to_string(c.train.batch_size));
  kv("d2_gen_ratio", std::to_string(c.train.d2_gen_ratio));
  kv("info_weight", format_double(c.train.info_weight));
  for (std::size_t i = 0; i < 5; ++i) {
    kv("step" + std::to_string(i + 1) + "_lr", opt_real(c.train.steps[i].learning_rate));
    kv("step" + std::to_string(i + 1) + "_momentum", opt_real(c.train.steps[i].momentum));
  }
  os << "\n[svm]\n";
  kv("iterations", std::to_string(c.svm_iterations));
  os << "\n[evaluator]\n";
  kv("epochs", std::to_string(c.evaluator.epochs));
  kv("batch_size", std::to_string(c.evaluator.batch_size));
  kv("learning_rate", format_double(c.evaluator.learning_rate));
  kv("momentum", format_double(c.evaluator.momentum));
  os << "\n[toy]\n";
  kv("seeds", std::to_string(c.toy_seeds));
  kv("epochs", std::to_string(c.toy.epochs));
  kv("batches_per_epoch", std::to_string(c.toy.batches_per_epoch));
  kv("batch_size", std::to_string(c.toy.batch_size));
  kv("hidden", std::to_string(c.toy.hidden));
  kv("generator_lr", format_double(c.toy.generator.learning_rate));
  kv("generator_momentum", format_double(c.toy.generator.momentum));
  kv("discriminator_lr", format_double(c.toy.discriminator.learning_rate));
  kv("discriminator_momentum", format_double(c.toy.discriminator.momentum));
  kv("info_weight", format_double(c.toy.info_weight));
  kv("samples", std::to_string(c.toy.output_samples));
  kv("separation", format_double(c.toy_separation));
  kv("stddev", format_double(c.toy_stddev));
  os << "\n[low_resource]\n";
  kv("p_grid", join<double>(c.p_grid, [](const double& p) { return format_double(p); }));
  kv("n_grid", join<std::size_t>(c.n_grid, [](const std::size_t& n) { return std::to_string(n); }));
  kv("checkpoints", c.checkpoints ? c.checkpoints->string() : "");
  return os.str();
}

// ------------------------------------------------------------------ manifest

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["artifact"] = "emogan";
  j["artifact_version"] = artifact_version;
  j["master_seed"] = master_seed;
  j["config"] = config_text;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : stages) {
    j["stages"].push_back({{"name", s.name}, {"seed", s.seed}, {"seconds", s.seconds}});
  }
  j["outputs"] = nlohmann::json::array();
  for (const auto& o : outputs) {
    j["outputs"].push_back({{"file", o.file}, {"bytes", o.bytes}, {"fnv1a", o.fnv1a}});
  }
  j["warnings"] = warnings;
  return j;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

namespace {

using Clock = std::chrono::steady_clock;

// Collects stage timings and seeds while an experiment runs, then writes
// config.ini and manifest.json.
class RunLog {
 public:
  explicit RunLog(const ExperimentConfig& config) : config_(config) {
    std::filesystem::create_directories(config.out);
    manifest_.artifact_version = EMOGAN_VERSION;
    manifest_.config_text = to_text(config);
    manifest_.master_seed = config.seed;
  }

  std::uint64_t seed(const std::string& stage, std::uint64_t index = 0) const {
    return derive_seed(config_.seed, stage, index);
  }

  template <typename F>
  auto stage(const std::string& name, std::uint64_t seed, F&& fn) {
    const auto t0 = Clock::now();
    auto record = [&] {
      manifest_.stages.push_back(
          {name, seed, std::chrono::duration<double>(Clock::now() - t0).count()});
    };
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record();
      } else {
        auto out = fn();
        record();
        return out;
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(name + ": " + e.what(), e.layer());
    } catch (const DegenerateDataError& e) {
      throw DegenerateDataError(name + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(name + ": " + e.what(), e.row());
    }
  }

  void warn(std::string message) { manifest_.warnings.push_back(std::move(message)); }

  void write(const std::string& file, const std::string& text) {
    write_text(config_.out / file, text);
  }

  RunManifest finish() {
    write("config.ini", manifest_.config_text);
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(config_.out)) {
      if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      manifest_.outputs.push_back({std::filesystem::relative(f, config_.out).generic_string(),
                                   std::filesystem::file_size(f), file_hash(f)});
    }
    write("manifest.json", manifest_.to_json().dump(2) + "\n");
    return manifest_;
  }

 private:
  const ExperimentConfig& config_;
  RunManifest manifest_;
};

Corpus load_source(const CorpusSource& source, std::optional<std::uint64_t> direction_seed = {}) {
  if (source.path) {
    Corpus c = load_csv(*source.path, source.csv);
    if (c.name.empty()) c.name = source.path->stem().string();
    return c;
  }
  ToyCorpusSpec spec = source.toy;
  if (!spec.direction_seed && direction_seed) spec.direction_seed = direction_seed;
  return make_toy_corpus(spec);
}

std::uint64_t direction_of(const CorpusSource& s) {
  return s.toy.direction_seed.value_or(s.toy.seed);
}

std::string xy_csv(const Matrix& points, const Labels& labels, const char* label_name) {
  std::ostringstream os;
  os << "x,y";
  if (!labels.empty()) os << ',' << label_name;
  os << '\n';
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    os << format_double(points(i, 0)) << ',' << format_double(points(i, 1));
    if (!labels.empty()) os << ',' << labels[static_cast<std::size_t>(i)];
    os << '\n';
  }
  return os.str();
}

std::string model_name(ModelKind k) { return std::string(to_string(k)); }

struct Prepared {
  Standardizer standardizer;
  Corpus train;
  Corpus validation;
};

Standardizer fit_or_identity(const ExperimentConfig& config, const Corpus& train) {
  if (config.standardize) return Standardizer::fit(train);
  return Standardizer::from_stats(RowVector::Zero(train.feature_dim()),
                                  RowVector::Ones(train.feature_dim()));
}

SvmOptions svm_options(const ExperimentConfig& config, std::uint64_t seed) {
  SvmOptions o;
  o.iterations = config.svm_iterations;
  o.seed = seed;
  return o;
}

std::string loss_svg(const LossHistory& history, const std::string& title) {
  std::vector<LineSeries> series;
  auto add = [&](const char* name, int color, auto pick) {
    for (int split = 0; split < 2; ++split) {
      LineSeries s;
      s.name = std::string(name) + (split ? " (validation)" : " (train)");
      s.color_index = color;
      s.dashed = split == 1;
      for (const auto& r : history.records) {
        const std::optional<double> v = pick(split ? r.validation : r.train);
        if (!v) return;
        s.x.push_back(static_cast<double>(r.epoch));
        s.y.push_back(*v);
      }
      series.push_back(std::move(s));
    }
  };
  add("D1", 1, [](const LossSet& l) { return std::optional<double>(l.d1); });
  add("encoder", 0, [](const LossSet& l) { return std::optional<double>(l.encoder); });
  add("D2", 5, [](const LossSet& l) { return l.d2; });
  add("generator", 4, [](const LossSet& l) { return l.generator; });
  return line_svg({title, "epoch", "loss"}, series);
}

// Trains `kind` on `train` (validation only monitored), or loads it from the
// checkpoint directory when one is configured.
GanModel obtain_model(RunLog& log, const ExperimentConfig& config, ModelKind kind,
                      const Corpus& train, const Corpus& validation, std::size_t index,
                      LossHistory* history, StepCounters* counters) {
  const std::string m = model_name(kind);
  if (config.checkpoints) {
    const auto path = *config.checkpoints / ("model_" + m + ".emgb");
    if (std::filesystem::exists(path)) {
      return log.stage("load-" + m, 0, [&] { return load_model(path); });
    }
  }
  const std::uint64_t build_seed = log.seed("build-" + m, index);
  GanModel model = build(kind, train.feature_dim(), config.scale_for(train.feature_dim()),
                         build_seed, config.prior);
  const TrainPlan plan = config.train.plan_for(kind, log.seed("train-" + m, index));
  TrainResult r = log.stage("train-" + m + "-" + std::to_string(index), plan.seed,
                            [&] { return emogan::train(model, train, validation, plan); });
  if (history) *history = std::move(r.history);
  if (counters) *counters = r.counters;
  return model;
}

nlohmann::json standardizer_json(const Standardizer& s) {
  return {{"mean", std::vector<double>(s.mean().data(), s.mean().data() + s.mean().size())},
          {"stddev",
           std::vector<double>(s.stddev().data(), s.stddev().data() + s.stddev().size())}};
}

}  // namespace

int classes_nearest_own_mode(const GanModel& m1, const Matrix& features, const Labels& labels) {
  if (m1.kind == ModelKind::m3) throw UnsupportedOperation("mixture modes exist for M1/M2 only");
  const Matrix codes = encode(m1, features);
  const Matrix modes = m1.mixture().means();
  int ok = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    RowVector mean = RowVector::Zero(codes.cols());
    std::size_t count = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != k) continue;
      mean += codes.row(static_cast<Eigen::Index>(i));
      ++count;
    }
    if (count == 0) continue;
    mean /= static_cast<double>(count);
    if (nearest_modes(Matrix(mean), modes)[0] == k) ++ok;
  }
  return ok;
}

// ---------------------------------------------------------------- toy-compare

ToyCompareResult run_toy_compare(const ExperimentConfig& config) {
  config.validate();
  RunLog log(config);
  ToyCompareResult result;
  const MixturePrior target = orthogonal_mixture(config.toy_separation, config.toy_stddev);
  const Matrix modes = target.means();
  std::ostringstream report;
  report << "seed_index,seed,vanilla_coverage,info_purity,info_bijective\n";
  std::ostringstream losses;
  losses << "seed_index,variant,epoch,discriminator,generator,info\n";

  for (std::size_t i = 0; i < config.toy_seeds; ++i) {
    const std::uint64_t seed = log.seed("toy", i);
    const ToyResult vanilla = log.stage("toy-vanilla-" + std::to_string(i), seed, [&] {
      return toy_train_and_sample(ToyVariant::vanilla, target, config.toy, seed);
    });
    const ToyResult info = log.stage("toy-info-" + std::to_string(i), seed, [&] {
      return toy_train_and_sample(ToyVariant::info, target, config.toy, seed);
    });
    ToyCompareResult::SeedOutcome outcome;
    outcome.seed = seed;
    outcome.vanilla_coverage = mode_coverage(vanilla.generated, modes);
    outcome.info = cluster_purity(info.generated, info.conditioning, modes);
    if (outcome.vanilla_coverage >= 3) ++result.vanilla_passes;
    if (outcome.info.purity >= 0.95 && outcome.info.bijective) ++result.info_passes;
    report << i << ',' << seed << ',' << outcome.vanilla_coverage << ','
           << format_double(outcome.info.purity) << ',' << (outcome.info.bijective ? 1 : 0)
           << '\n';
    for (const ToyResult* r : {&vanilla, &info}) {
      for (std::size_t e = 0; e < r->losses.size(); ++e) {
        losses << i << ',' << to_string(r->variant) << ',' << e + 1 << ','
               << format_double(r->losses[e].discriminator) << ','
               << format_double(r->losses[e].generator) << ',' << format_double(r->losses[e].info)
               << '\n';
      }
    }
    if (i == 0) {
      log.write("toy_source.csv", xy_csv(vanilla.source, {}, ""));
      log.write("toy_target.csv", xy_csv(vanilla.target, vanilla.target_modes, "mode"));
      log.write("toy_vanilla.csv", xy_csv(vanilla.generated, {}, ""));
      log.write("toy_info.csv", xy_csv(info.generated, info.conditioning, "label"));
      log.write("toy_source.svg",
                scatter_svg({"Source noise", "x", "y"}, {{"noise", vanilla.source, {}, 2, 'o'}}));
      log.write("toy_target.svg", scatter_svg({"Target mixture", "x", "y"},
                                              {{"target", vanilla.target, vanilla.target_modes}}));
      log.write("toy_vanilla.svg", scatter_svg({"Vanilla GAN samples", "x", "y"},
                                               {{"vanilla", vanilla.generated, {}, 1, 'o'}}));
      log.write("toy_info.svg", scatter_svg({"Info-regularized GAN samples by code", "x", "y"},
                                            {{"info", info.generated, info.conditioning}}));
    }
    result.seeds.push_back(std::move(outcome));
  }
  log.write("toy_report.csv", report.str());
  log.write("toy_losses.csv", losses.str());
  result.manifest = log.finish();
  return result;
}

// ---------------------------------------------------------------- cv in-domain

namespace {

const std::vector<std::string> kCvColumns = {"metric1_set1", "metric1_set2", "metric2_set1",
                                             "metric2_set2", "fid"};

}  // namespace

CvResult run_cv_indomain(const ExperimentConfig& config) {
  config.validate();
  RunLog log(config);
  CvResult result;
  result.report.columns = kCvColumns;
  const Corpus corpus = log.stage("load-corpus", 0, [&] { return load_source(config.corpus); });
  if (!corpus.has_sessions()) {
    throw DegenerateDataError("cv-indomain needs session ids in corpus '" + corpus.name + "'");
  }
  std::vector<Fold> folds = split(corpus, SplitPlan{});
  if (config.max_folds > 0 && folds.size() > config.max_folds) folds.resize(config.max_folds);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream codes_csv;
  codes_csv << "fold,set,label,x,y\n";
  std::ostringstream nearest_csv;
  nearest_csv << "fold,classes_nearest_train,classes_nearest_validation\n";

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::string fold_name = "fold" + std::to_string(f);
    const Standardizer st = fit_or_identity(config, folds[f].train);
    const Corpus train = st.apply(folds[f].train);
    const Corpus validation = st.apply(folds[f].validation);
    const Matrix full = st.apply(corpus.features);

    std::optional<EvaluatorNet> evaluator;
    if (config.wants("fid")) {
      EvaluatorOptions eo = config.evaluator;
      eo.seed = log.seed("evaluator", f);
      evaluator = log.stage("evaluator-" + fold_name, eo.seed,
                            [&] { return evaluator_train(full, corpus.labels, eo); });
      for (const auto& w : evaluator->warnings) log.warn(fold_name + ": " + w);
    }

    std::optional<GanModel> m1;
    std::vector<std::pair<std::string, SyntheticBatch>> synthetic;
    for (ModelKind kind : config.models) {
      const std::string m = model_name(kind);
      FoldModelRun run;
      run.model = kind;
      run.fold = f;
      GanModel model = obtain_model(log, config, kind, train, validation, f, &run.history,
                                    &run.counters);
      log.write("loss_" + m + "_" + fold_name + ".csv", run.history.to_csv());
      log.write("loss_" + m + "_" + fold_name + ".svg",
                loss_svg(run.history, m + " losses, " + fold_name));
      const std::size_t n = config.n_synth > 0 ? config.n_synth : train.size();
      const std::uint64_t gen_seed = log.seed("generate-" + m, f);
      SyntheticBatch syn = generate(model, n, std::nullopt, gen_seed);

      std::vector<double> values(kCvColumns.size(), nan);
      log.stage("metrics-" + m + "-" + fold_name, gen_seed, [&] {
        const SvmOptions svm = svm_options(config, log.seed("svm-" + m, f));
        if (config.wants("metric1")) {
          values[0] = metric1(train, syn.features, syn.labels, svm);
          values[1] = metric1(validation, syn.features, syn.labels, svm);
        }
        if (config.wants("metric2")) {
          try {
            values[2] = metric2(syn.features, syn.labels, train, svm);
            values[3] = metric2(syn.features, syn.labels, validation, svm);
          } catch (const DegenerateDataError& e) {
            log.warn(m + " " + fold_name + ": mode collapse, " + e.what());
          }
        }
        if (evaluator) values[4] = fid_pipeline(*evaluator, full, syn.features);
      });
      result.report.add(m, fold_name, values);
      if (kind == ModelKind::m1 && !m1) m1 = model;
      synthetic.emplace_back(m, std::move(syn));
      result.runs.push_back(std::move(run));
    }

    // Code-space and PCA scatters.
    std::vector<ScatterSeries> pca_series;
    const Projection pca = pca2(train.features);
    pca_series.push_back({"train", pca.apply(train.features), train.labels, 0, 'o'});
    for (const auto& [m, syn] : synthetic) {
      pca_series.push_back({"synthetic " + m, pca.apply(syn.features), syn.labels, 0, 'x'});
    }
    std::ostringstream pca_csv;
    pca_csv << "set,label,x,y\n";
    for (const auto& s : pca_series) {
      for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
        pca_csv << s.name << ',' << s.classes[static_cast<std::size_t>(i)] << ','
                << format_double(s.points(i, 0)) << ',' << format_double(s.points(i, 1)) << '\n';
      }
    }
    log.write("pca_" + fold_name + ".csv", pca_csv.str());
    log.write("pca_" + fold_name + ".svg",
              scatter_svg({"PCA projection, " + fold_name, "pc1", "pc2"}, pca_series));

    if (m1) {
      const int near_train = classes_nearest_own_mode(*m1, train.features, train.labels);
      const int near_val = classes_nearest_own_mode(*m1, validation.features, validation.labels);
      result.code_classes_nearest.push_back(near_train);
      nearest_csv << f << ',' << near_train << ',' << near_val << '\n';
      std::vector<std::pair<std::string, std::pair<Matrix, Labels>>> sets = {
          {"train", {train.features, train.labels}},
          {"validation", {validation.features, validation.labels}}};
      for (const auto& [m, syn] : synthetic) {
        sets.push_back({"synthetic-" + m, {syn.features, syn.labels}});
      }
      for (const auto& [set, data] : sets) {
        const Matrix codes = encode(*m1, data.first);
        for (Eigen::Index i = 0; i < codes.rows(); ++i) {
          codes_csv << f << ',' << set << ',' << data.second[static_cast<std::size_t>(i)] << ','
                    << format_double(codes(i, 0)) << ',' << format_double(codes(i, 1)) << '\n';
        }
        log.write("codes_" + fold_name + "_" + set + ".svg",
                  scatter_svg({"M1 codes, " + set + ", " + fold_name, "code 1", "code 2"},
                              {{set, codes, data.second}}));
      }
    }
  }
  if (!result.code_classes_nearest.empty()) {
    log.write("codes.csv", codes_csv.str());
    log.write("code_modes.csv", nearest_csv.str());
  }
  result.report.add_means();
  log.write("metrics.csv", result.report.to_csv());
  log.write("metrics.txt", result.report.to_table());
  result.manifest = log.finish();
  return result;
}

// ---------------------------------------------------------------- cross-corpus

namespace {

struct SourceTarget {
  Corpus raw_source;
  Standardizer standardizer;
  Corpus source;
  Corpus target;
};

SourceTarget load_pair(RunLog& log, const ExperimentConfig& config) {
  SourceTarget p;
  p.raw_source = log.stage("load-source", 0, [&] { return load_source(config.corpus); });
  Corpus target = log.stage("load-target", 0, [&] {
    return load_source(config.target, direction_of(config.corpus));
  });
  if (target.feature_dim() != p.raw_source.feature_dim()) {
    throw DegenerateDataError("source and target feature dimensions differ");
  }
  p.standardizer = fit_or_identity(config, p.raw_source);
  p.source = p.standardizer.apply(p.raw_source);
  p.target = p.standardizer.apply(target);
  return p;
}

void save_trained(const ExperimentConfig& config, const GanModel& model, const Standardizer& st) {
  const auto path = config.out / ("model_" + model_name(model.kind) + ".emgb");
  save_model(path, model, {{"standardizer", standardizer_json(st)}});
}

}  // namespace

CrossCorpusResult run_cross_corpus(const ExperimentConfig& config) {
  config.validate();
  RunLog log(config);
  CrossCorpusResult result;
  result.report.columns = {"metric1", "metric2", "fid"};
  const SourceTarget pair = load_pair(log, config);
  const Corpus balanced = balance(pair.target, log.seed("balance"));

  std::optional<EvaluatorNet> evaluator;
  if (config.wants("fid")) {
    EvaluatorOptions eo = config.evaluator;
    eo.seed = log.seed("evaluator-target");
    evaluator = log.stage("evaluator-target", eo.seed, [&] {
      return evaluator_train(pair.target.features, pair.target.labels, eo);
    });
    for (const auto& w : evaluator->warnings) log.warn(w);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (ModelKind kind : config.models) {
    const std::string m = model_name(kind);
    LossHistory history;
    GanModel model = obtain_model(log, config, kind, pair.source, pair.target, 0, &history, nullptr);
    if (!history.records.empty()) {
      log.write("loss_" + m + ".csv", history.to_csv());
      log.write("loss_" + m + ".svg", loss_svg(history, m + " losses, source training"));
    }
    save_trained(config, model, pair.standardizer);
    const std::size_t n = config.n_synth > 0 ? config.n_synth : pair.source.size();
    const std::uint64_t gen_seed = log.seed("generate-" + m);
    const SyntheticBatch syn = generate(model, n, std::nullopt, gen_seed);
    std::vector<double> values(3, nan);
    log.stage("metrics-" + m, gen_seed, [&] {
      const SvmOptions svm = svm_options(config, log.seed("svm-" + m));
      if (config.wants("metric1")) values[0] = metric1(balanced, syn.features, syn.labels, svm);
      if (config.wants("metric2")) {
        try {
          values[1] = metric2(syn.features, syn.labels, pair.target, svm);
        } catch (const DegenerateDataError& e) {
          log.warn(m + ": mode collapse, " + e.what());
        }
      }
      if (evaluator) values[2] = fid_pipeline(*evaluator, pair.target.features, syn.features);
    });
    result.report.add(m, "all", values);
  }
  log.write("metrics.csv", result.report.to_csv());
  log.write("metrics.txt", result.report.to_table());
  result.manifest = log.finish();
  return result;
}

// ---------------------------------------------------------------- low-resource

std::optional<double> LowResourceResult::value(const std::string& model, double p,
                                               std::size_t n) const {
  for (const auto& c : cells) {
    if (c.model == model && c.p == p && c.n_synth == n) return c.uwa;
  }
  return std::nullopt;
}

LowResourceResult run_low_resource(const ExperimentConfig& config) {
  config.validate();
  RunLog log(config);
  LowResourceResult result;
  const SourceTarget pair = load_pair(log, config);

  std::vector<Corpus> portions;
  for (std::size_t i = 0; i < config.p_grid.size(); ++i) {
    const double p = config.p_grid[i];
    portions.push_back(p >= 100.0 ? pair.source
                                  : stratified_subsample(pair.source, p / 100.0,
                                                         log.seed("portion", i)));
  }
  std::ostringstream csv;
  csv << "model,p,n_synth,uwa\n";
  for (ModelKind kind : config.models) {
    const std::string m = model_name(kind);
    GanModel model = obtain_model(log, config, kind, pair.source, pair.target, 0, nullptr, nullptr);
    std::vector<SyntheticBatch> pools;
    for (std::size_t j = 0; j < config.n_grid.size(); ++j) {
      pools.push_back(config.n_grid[j] == 0
                          ? SyntheticBatch{}
                          : generate(model, config.n_grid[j], std::nullopt,
                                     log.seed("augment-" + m, j)));
    }
    std::vector<LineSeries> lines;
    for (std::size_t j = 0; j < config.n_grid.size(); ++j) {
      LineSeries line;
      line.name = "N_synth " + std::to_string(config.n_grid[j]);
      line.color_index = static_cast<int>(j);
      line.dashed = config.n_grid[j] == 0;
      for (std::size_t i = 0; i < config.p_grid.size(); ++i) {
        const Corpus& real = portions[i];
        Matrix x = real.features;
        Labels y = real.labels;
        if (config.n_grid[j] > 0) {
          x = vconcat(x, pools[j].features);
          y.insert(y.end(), pools[j].labels.begin(), pools[j].labels.end());
        }
        EvaluatorOptions eo = config.evaluator;
        eo.seed = log.seed("classifier", i * config.n_grid.size() + j);
        const std::string cell = m + "-p" + format_double(config.p_grid[i]) + "-n" +
                                 std::to_string(config.n_grid[j]);
        const double acc = log.stage("cell-" + cell, eo.seed, [&] {
          const EvaluatorNet net = evaluator_train(x, y, eo);
          return uwa(net.predict(pair.target.features), pair.target.labels);
        });
        result.cells.push_back({m, config.p_grid[i], config.n_grid[j], acc});
        csv << m << ',' << format_double(config.p_grid[i]) << ',' << config.n_grid[j] << ','
            << format_double(acc) << '\n';
        line.x.push_back(config.p_grid[i]);
        line.y.push_back(acc);
      }
      lines.push_back(std::move(line));
    }
    log.write("low_resource_" + m + ".svg",
              line_svg({"Target UWA vs real portion, " + m, "P (%)", "UWA"}, lines));
  }
  log.write("low_resource.csv", csv.str());
  result.manifest = log.finish();
  return result;
}

RunManifest run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::toy_compare: return run_toy_compare(config).manifest;
    case ExperimentKind::cv_indomain: return run_cv_indomain(config).manifest;
    case ExperimentKind::cross_corpus: return run_cross_corpus(config).manifest;
    case ExperimentKind::low_resource: return run_low_resource(config).manifest;
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace emogan
