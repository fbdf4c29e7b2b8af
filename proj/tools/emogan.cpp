// emogan: experiment runner.
//
//   emogan toy-compare  [--config F] [--seed N] [--out DIR]
//   emogan cv           [--config F] [--seed N] [--out DIR] [--model m1 ...]
//   emogan cross-corpus [--config F] [--seed N] [--out DIR] [--model m1 ...]
//   emogan low-resource [--config F] [--seed N] [--out DIR] [--model m1 ...]
//   emogan generate     --checkpoint model.emgb [--count N] [--class K] [--seed N] [--out DIR]
//   emogan metrics      --real a.csv --synthetic b.csv [--config F] [--seed N] [--out DIR]
//
// Exit status: 0 ok, 2 configuration error, 3 data error, 4 divergence.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "emogan/errors.hpp"
#include "emogan/experiments.hpp"
#include "emogan/plots.hpp"

namespace {

using namespace emogan;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> models;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_models) {
  cmd->add_option("--config", f.config, "Experiment config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory");
  if (with_models) {
    cmd->add_option("--model", f.models, "Model kind (m1, m2, m3); repeatable")
        ->check(CLI::IsMember({"m1", "m2", "m3"}));
  }
}

ExperimentConfig resolve(ExperimentKind kind, const CommonFlags& f) {
  ExperimentConfig c = default_config(kind);
  if (!f.config.empty()) c = load_config(f.config, c);
  c.kind = kind;
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.out = f.out;
  if (!f.models.empty()) {
    c.models.clear();
    for (const auto& m : f.models) c.models.push_back(model_kind_from_string(m));
  }
  c.validate();
  return c;
}

void print_outputs(const RunManifest& m, const std::filesystem::path& out) {
  std::cout << "wrote " << m.outputs.size() + 1 << " files to " << out.string() << '\n';
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
}

int run_toy(const CommonFlags& f) {
  const ExperimentConfig c = resolve(ExperimentKind::toy_compare, f);
  const ToyCompareResult r = run_toy_compare(c);
  std::cout << "seed  vanilla-coverage  info-purity  bijective\n";
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    std::printf("%4zu  %16d  %11.4f  %9s\n", i, r.seeds[i].vanilla_coverage,
                r.seeds[i].info.purity, r.seeds[i].info.bijective ? "yes" : "no");
  }
  std::printf("vanilla covers >=3 modes on %d/%zu seeds; info purity >=0.95 on %d/%zu seeds\n",
              r.vanilla_passes, r.seeds.size(), r.info_passes, r.seeds.size());
  print_outputs(r.manifest, c.out);
  return kExitOk;
}

int run_cv(const CommonFlags& f) {
  const ExperimentConfig c = resolve(ExperimentKind::cv_indomain, f);
  const CvResult r = run_cv_indomain(c);
  std::cout << r.report.to_table();
  print_outputs(r.manifest, c.out);
  return kExitOk;
}

int run_cross(const CommonFlags& f) {
  const ExperimentConfig c = resolve(ExperimentKind::cross_corpus, f);
  const CrossCorpusResult r = run_cross_corpus(c);
  std::cout << r.report.to_table();
  print_outputs(r.manifest, c.out);
  return kExitOk;
}

int run_low(const CommonFlags& f) {
  const ExperimentConfig c = resolve(ExperimentKind::low_resource, f);
  const LowResourceResult r = run_low_resource(c);
  std::cout << "model  P(%)  N_synth  UWA(%)\n";
  for (const auto& cell : r.cells) {
    std::printf("%-5s %5.0f %8zu %7.2f\n", cell.model.c_str(), cell.p, cell.n_synth,
                100.0 * cell.uwa);
  }
  print_outputs(r.manifest, c.out);
  return kExitOk;
}

int run_generate(const std::string& checkpoint, std::size_t count, std::optional<int> cls,
                 std::uint64_t seed, const std::string& out) {
  nlohmann::json extra;
  const GanModel model = load_model(checkpoint, &extra);
  if (cls && (*cls < 0 || *cls >= kNumClasses)) {
    throw ConfigError("--class must be in 0..3");
  }
  SyntheticBatch batch = generate(model, count, cls, seed);
  Corpus corpus;
  corpus.name = "synthetic-" + std::string(to_string(model.kind));
  corpus.features = std::move(batch.features);
  corpus.labels = std::move(batch.labels);
  if (extra.contains("standardizer")) {
    const auto mean = extra["standardizer"]["mean"].get<std::vector<double>>();
    const auto sd = extra["standardizer"]["stddev"].get<std::vector<double>>();
    const Standardizer st = Standardizer::from_stats(
        Eigen::Map<const RowVector>(mean.data(), static_cast<Eigen::Index>(mean.size())),
        Eigen::Map<const RowVector>(sd.data(), static_cast<Eigen::Index>(sd.size())));
    corpus.features = st.inverse(corpus.features);
  }
  const std::filesystem::path dir = out.empty() ? "." : out;
  std::filesystem::create_directories(dir);
  const auto path = dir / (corpus.name + ".csv");
  save_csv(corpus, path);
  std::cout << "wrote " << corpus.size() << " samples to " << path.string() << '\n';
  return kExitOk;
}

int run_metrics(const std::string& real_path, const std::string& synth_path,
                const CommonFlags& f) {
  const ExperimentConfig c = resolve(ExperimentKind::cv_indomain, f);
  const Corpus real_raw = load_csv(real_path, c.corpus.csv);
  const Corpus synth_raw = load_csv(synth_path, c.corpus.csv);
  if (real_raw.feature_dim() != synth_raw.feature_dim()) {
    throw DegenerateDataError("real and synthetic feature dimensions differ");
  }
  const Standardizer st = c.standardize
                              ? Standardizer::fit(real_raw)
                              : Standardizer::from_stats(RowVector::Zero(real_raw.feature_dim()),
                                                         RowVector::Ones(real_raw.feature_dim()));
  const Corpus real = st.apply(real_raw);
  const Corpus synth = st.apply(synth_raw);
  SvmOptions svm;
  svm.iterations = c.svm_iterations;
  svm.seed = derive_seed(c.seed, "svm");
  MetricsReport report;
  report.columns = {"metric1", "metric2", "fid"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values(3, nan);
  if (c.wants("metric1")) values[0] = metric1(real, synth.features, synth.labels, svm);
  if (c.wants("metric2")) values[1] = metric2(synth.features, synth.labels, real, svm);
  if (c.wants("fid")) {
    EvaluatorOptions eo = c.evaluator;
    eo.seed = derive_seed(c.seed, "evaluator");
    const EvaluatorNet ev = evaluator_train(real.features, real.labels, eo);
    values[2] = fid_pipeline(ev, real.features, synth.features);
  }
  report.add(synth_raw.name, "all", values);
  std::cout << report.to_table();
  if (!f.out.empty()) {
    write_text(std::filesystem::path(f.out) / "metrics.csv", report.to_csv());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial feature-generator experiments"};
  app.require_subcommand(1);

  CommonFlags toy, cv, cross, low, gen, met;
  add_common(app.add_subcommand("toy-compare", "2-D vanilla vs info-regularized GAN study"), toy,
             false);
  add_common(app.add_subcommand("cv", "Leave-one-session-out in-domain evaluation"), cv, true);
  add_common(app.add_subcommand("cross-corpus", "Train on source corpus, evaluate on target"),
             cross, true);
  add_common(app.add_subcommand("low-resource", "Real-portion x synthetic-count grid"), low, true);

  auto* g = app.add_subcommand("generate", "Dump synthetic samples from a model bundle");
  std::string checkpoint;
  std::size_t count = 6000;
  std::optional<int> cls;
  std::uint64_t gen_seed = 0;
  g->add_option("--checkpoint", checkpoint, "Model bundle (.emgb)")
      ->required()
      ->check(CLI::ExistingFile);
  g->add_option("--count", count, "Number of samples");
  g->add_option("--class", cls, "Class id 0..3 (default: uniform)");
  g->add_option("--seed", gen_seed, "Sampling seed");
  g->add_option("--out", gen.out, "Output directory");

  auto* m = app.add_subcommand("metrics", "Metric 1, metric 2 and FID between two CSV corpora");
  std::string real_path, synth_path;
  m->add_option("--real", real_path, "Real feature CSV")->required()->check(CLI::ExistingFile);
  m->add_option("--synthetic", synth_path, "Synthetic feature CSV")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(m, met, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const std::string verb = app.get_subcommands().front()->get_name();
    if (verb == "toy-compare") return run_toy(toy);
    if (verb == "cv") return run_cv(cv);
    if (verb == "cross-corpus") return run_cross(cross);
    if (verb == "low-resource") return run_low(low);
    if (verb == "generate") return run_generate(checkpoint, count, cls, gen_seed, gen.out);
    if (verb == "metrics") return run_metrics(real_path, synth_path, met);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DegenerateDataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
