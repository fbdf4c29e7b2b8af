#include "emogan/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "emogan/errors.hpp"
#include "emogan/rng.hpp"

namespace emogan {

int emotion_id(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i) {
    if (lower == kEmotionNames[i]) return static_cast<int>(i);
  }
  throw ParseError("unknown emotion label '" + std::string(name) + "'");
}

std::string_view emotion_name(int id) {
  if (id < 0 || id >= static_cast<int>(kEmotionNames.size())) {
    throw ContractError("emotion id " + std::to_string(id) + " out of range");
  }
  return kEmotionNames[static_cast<std::size_t>(id)];
}

ClassHistogram histogram(const Labels& labels) {
  ClassHistogram h{};
  for (int l : labels) {
    if (l < 0 || l >= 4) throw ContractError("label " + std::to_string(l) + " out of range");
    ++h[static_cast<std::size_t>(l)];
  }
  return h;
}

ClassHistogram Corpus::histogram() const { return emogan::histogram(labels); }

Corpus Corpus::subset(const std::vector<std::size_t>& index) const {
  Corpus out;
  out.name = name;
  out.feature_names = feature_names;
  out.features = take_rows(features, index);
  out.labels.reserve(index.size());
  for (std::size_t i : index) out.labels.push_back(labels.at(i));
  if (has_sessions()) {
    out.sessions.reserve(index.size());
    for (std::size_t i : index) out.sessions.push_back(sessions.at(i));
  }
  return out;
}

void Corpus::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ContractError("corpus '" + name + "': " + std::to_string(features.rows()) +
                        " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  if (has_sessions() && sessions.size() != labels.size()) {
    throw ContractError("corpus '" + name + "': session tags do not cover every sample");
  }
  for (int l : labels) {
    if (l < 0 || l >= 4) throw ContractError("corpus '" + name + "': label out of range");
  }
  if (!features.allFinite()) throw ContractError("corpus '" + name + "': non-finite feature");
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

}  // namespace

Corpus load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row", 1);
  const std::vector<std::string> header = split_line(line);

  std::ptrdiff_t label_col = -1;
  std::ptrdiff_t session_col = -1;
  const std::string session_name = options.session_column.value_or("session");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == options.label_column) label_col = static_cast<std::ptrdiff_t>(i);
    if (header[i] == session_name) session_col = static_cast<std::ptrdiff_t>(i);
  }
  if (label_col < 0) {
    throw ParseError(path.string() + ": no label column '" + options.label_column + "'", 1);
  }
  if (options.session_column && session_col < 0) {
    throw ParseError(path.string() + ": no session column '" + session_name + "'", 1);
  }

  Corpus c;
  c.name = path.stem().string();
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (static_cast<std::ptrdiff_t>(i) == label_col || static_cast<std::ptrdiff_t>(i) == session_col)
      continue;
    feature_cols.push_back(i);
    c.feature_names.push_back(header[i]);
  }
  if (feature_cols.empty()) throw ParseError(path.string() + ": no feature columns", 1);

  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(header.size()),
                       line_no);
    }
    for (std::size_t col : feature_cols) {
      double v = 0.0;
      if (!parse_double(cells[col], v) || !std::isfinite(v)) {
        throw ParseError(path.string() + ": line " + std::to_string(line_no) + ", column '" +
                             header[col] + "': non-numeric cell '" + cells[col] + "'",
                         line_no);
      }
      values.push_back(v);
    }
    try {
      c.labels.push_back(emotion_id(cells[static_cast<std::size_t>(label_col)]));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what(),
                       line_no);
    }
    if (session_col >= 0) c.sessions.push_back(cells[static_cast<std::size_t>(session_col)]);
  }
  c.features = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(c.labels.size()),
                                        static_cast<Eigen::Index>(feature_cols.size()));
  return c;
}

void save_csv(const Corpus& corpus, const std::filesystem::path& path) {
  corpus.validate();
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  std::vector<std::string> names = corpus.feature_names;
  if (names.size() != static_cast<std::size_t>(corpus.features.cols())) {
    names.clear();
    for (Eigen::Index j = 0; j < corpus.features.cols(); ++j) names.push_back("f" + std::to_string(j));
  }
  for (const auto& n : names) out << n << ',';
  out << "label";
  if (corpus.has_sessions()) out << ",session";
  out << '\n';
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (Eigen::Index j = 0; j < corpus.features.cols(); ++j) {
      out << format_double(corpus.features(static_cast<Eigen::Index>(i), j)) << ',';
    }
    out << emotion_name(corpus.labels[i]);
    if (corpus.has_sessions()) out << ',' << corpus.sessions[i];
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

Corpus make_toy_corpus(const ToyCorpusSpec& spec) {
  if (spec.feature_dim < 4) {
    throw ConfigError("make_toy_corpus: feature_dim must be >= 4, got " +
                      std::to_string(spec.feature_dim));
  }
  if (spec.sessions < 1) throw ConfigError("make_toy_corpus: need at least one session");
  const int d = spec.feature_dim;

  // Gram-Schmidt on Gaussian vectors gives random orthonormal directions.
  Rng dir_rng(derive_seed(spec.direction_seed.value_or(spec.seed), "toy-directions"));
  Matrix directions(4, d);
  for (int k = 0; k < 4; ++k) {
    RowVector v(d);
    for (int j = 0; j < d; ++j) v(j) = dir_rng.normal();
    for (int p = 0; p < k; ++p) v -= v.dot(directions.row(p)) * directions.row(p);
    directions.row(k) = v / v.norm();
  }
  RowVector offset = RowVector::Zero(d);
  if (spec.shift != 0.0) {
    Rng shift_rng(derive_seed(spec.seed, "toy-shift"));
    for (int j = 0; j < d; ++j) offset(j) = shift_rng.normal();
    offset *= spec.shift / offset.norm();
  }

  std::array<std::size_t, 4> counts{};
  counts.fill(spec.per_class);
  if (spec.class_counts) counts = *spec.class_counts;
  const std::size_t rounds = *std::max_element(counts.begin(), counts.end());

  // Interleave classes so any prefix or session stays roughly balanced.
  Labels labels;
  for (std::size_t r = 0; r < rounds; ++r) {
    for (int k = 0; k < 4; ++k) {
      if (r < counts[static_cast<std::size_t>(k)]) labels.push_back(k);
    }
  }

  Rng rng(derive_seed(spec.seed, "toy-samples"));
  Corpus c;
  c.name = spec.name;
  c.labels = labels;
  c.features.resize(static_cast<Eigen::Index>(labels.size()), d);
  c.sessions.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    RowVector x = spec.class_mean_separation * directions.row(labels[i]) + offset;
    for (int j = 0; j < d; ++j) x(j) += spec.noise_stddev * rng.normal();
    c.features.row(static_cast<Eigen::Index>(i)) = x;
    c.sessions.push_back("session" + std::to_string(i % static_cast<std::size_t>(spec.sessions) + 1));
  }
  for (int j = 0; j < d; ++j) c.feature_names.push_back("f" + std::to_string(j));
  return c;
}

std::vector<Fold> split(const Corpus& corpus, const SplitPlan& plan) {
  std::vector<Fold> folds;
  auto make_fold = [&](std::vector<std::size_t> train, std::vector<std::size_t> val) {
    Fold f;
    f.train = corpus.subset(train);
    f.validation = corpus.subset(val);
    f.train_index = std::move(train);
    f.validation_index = std::move(val);
    folds.push_back(std::move(f));
  };

  switch (plan.mode) {
    case SplitMode::leave_one_session_out: {
      if (!corpus.has_sessions()) {
        throw ContractError("split: leave-one-session-out needs session ids");
      }
      const std::set<std::string> distinct(corpus.sessions.begin(), corpus.sessions.end());
      for (const auto& held_out : distinct) {
        std::vector<std::size_t> train, val;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          (corpus.sessions[i] == held_out ? val : train).push_back(i);
        }
        make_fold(std::move(train), std::move(val));
      }
      break;
    }
    case SplitMode::ratio: {
      if (!(plan.train_ratio > 0.0 && plan.train_ratio < 1.0)) {
        throw ConfigError("split: train ratio must lie in (0, 1)");
      }
      std::vector<std::size_t> order(corpus.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(derive_seed(plan.seed, "split-ratio"));
      rng.shuffle(order);
      const auto n_train =
          static_cast<std::size_t>(std::llround(plan.train_ratio * static_cast<double>(order.size())));
      std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
      std::vector<std::size_t> val(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
      std::sort(train.begin(), train.end());
      std::sort(val.begin(), val.end());
      make_fold(std::move(train), std::move(val));
      break;
    }
    case SplitMode::explicit_sessions: {
      if (!corpus.has_sessions()) throw ContractError("split: explicit split needs session ids");
      const std::set<std::string> held(plan.validation_sessions.begin(),
                                       plan.validation_sessions.end());
      std::vector<std::size_t> train, val;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        (held.count(corpus.sessions[i]) ? val : train).push_back(i);
      }
      make_fold(std::move(train), std::move(val));
      break;
    }
  }
  return folds;
}

namespace {

std::array<std::vector<std::size_t>, 4> indices_by_class(const Corpus& corpus) {
  std::array<std::vector<std::size_t>, 4> by_class;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_class[static_cast<std::size_t>(corpus.labels[i])].push_back(i);
  }
  return by_class;
}

Corpus keep_per_class(const Corpus& corpus, const std::array<std::size_t, 4>& keep,
                      std::uint64_t seed, std::string_view stage) {
  auto by_class = indices_by_class(corpus);
  std::vector<std::size_t> chosen;
  for (std::size_t k = 0; k < 4; ++k) {
    Rng rng(derive_seed(seed, stage, k));
    rng.shuffle(by_class[k]);
    chosen.insert(chosen.end(), by_class[k].begin(),
                  by_class[k].begin() + static_cast<std::ptrdiff_t>(keep[k]));
  }
  std::sort(chosen.begin(), chosen.end());
  return corpus.subset(chosen);
}

}  // namespace

Corpus balance(const Corpus& corpus, std::uint64_t seed) {
  const ClassHistogram h = corpus.histogram();
  for (std::size_t k = 0; k < 4; ++k) {
    if (h[k] == 0) {
      throw DegenerateDataError("balance: class '" + std::string(kEmotionNames[k]) +
                                "' is empty");
    }
  }
  const std::size_t minority = *std::min_element(h.begin(), h.end());
  std::array<std::size_t, 4> keep{};
  keep.fill(minority);
  return keep_per_class(corpus, keep, seed, "balance");
}

Corpus stratified_subsample(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("stratified_subsample: fraction must lie in (0, 1]");
  }
  const ClassHistogram h = corpus.histogram();
  std::array<std::size_t, 4> keep{};
  for (std::size_t k = 0; k < 4; ++k) {
    if (h[k] == 0) continue;
    keep[k] = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(h[k]))), 1, h[k]);
  }
  return keep_per_class(corpus, keep, seed, "subsample");
}

Standardizer Standardizer::fit(const Matrix& train) {
  if (train.rows() == 0) throw DegenerateDataError("Standardizer: empty training split");
  Standardizer s;
  s.mean_ = train.colwise().mean();
  const Matrix centered = train.rowwise() - s.mean_;
  s.stddev_ = (centered.colwise().squaredNorm() / static_cast<double>(train.rows())).cwiseSqrt();
  s.stddev_ = s.stddev_.cwiseMax(kStddevFloor);
  return s;
}

Standardizer Standardizer::fit(const Corpus& train) { return fit(train.features); }

Standardizer Standardizer::from_stats(RowVector mean, RowVector stddev) {
  if (mean.size() != stddev.size()) throw ShapeError("Standardizer: mean/stddev size mismatch");
  if (!mean.allFinite() || !stddev.allFinite()) throw ContractError("Standardizer: non-finite stats");
  Standardizer s;
  s.mean_ = std::move(mean);
  s.stddev_ = stddev.cwiseMax(kStddevFloor);
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (features.cols() != mean_.size()) {
    throw ShapeError("Standardizer: fitted on " + std::to_string(mean_.size()) +
                     " features, got " + std::to_string(features.cols()));
  }
  return (features.rowwise() - mean_).array().rowwise() / stddev_.array();
}

Corpus Standardizer::apply(const Corpus& corpus) const {
  Corpus out = corpus;
  out.features = apply(corpus.features);
  return out;
}

Matrix Standardizer::inverse(const Matrix& standardized) const {
  if (standardized.cols() != mean_.size()) {
    throw ShapeError("Standardizer: fitted on " + std::to_string(mean_.size()) +
                     " features, got " + std::to_string(standardized.cols()));
  }
  return (standardized.array().rowwise() * stddev_.array()).matrix().rowwise() + mean_;
}

}  // namespace emogan
