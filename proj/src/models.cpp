#include "emogan/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "emogan/checkpoint.hpp"
#include "emogan/errors.hpp"

namespace emogan {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::m1:
      return "m1";
    case ModelKind::m2:
      return "m2";
    case ModelKind::m3:
      return "m3";
  }
  return "m1";
}

ModelKind model_kind_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "m1") return ModelKind::m1;
  if (lower == "m2") return ModelKind::m2;
  if (lower == "m3") return ModelKind::m3;
  throw ConfigError("unknown model kind '" + std::string(name) + "' (expected m1, m2 or m3)");
}

int ScaleProfile::width(int reference_width) const {
  if (width_ratio == 1.0) return reference_width;
  return std::max(8, static_cast<int>(std::lround(reference_width * width_ratio)));
}

const MixturePrior& GanModel::mixture() const {
  if (const auto* m = std::get_if<MixturePrior>(&prior)) return *m;
  throw UnsupportedOperation("model " + std::string(to_string(kind)) + " has no mixture prior");
}

const NormalPrior& GanModel::noise_prior() const {
  if (const auto* n = std::get_if<NormalPrior>(&prior)) return *n;
  throw UnsupportedOperation("model " + std::string(to_string(kind)) + " has no normal prior");
}

namespace {

constexpr auto R = Activation::relu;
constexpr auto L = Activation::linear;
constexpr auto S = Activation::sigmoid;
constexpr auto X = Activation::softmax;

// Every component gets its own stream so adding a component never shifts
// the initialization of the others.
Mlp make_net(std::uint64_t seed, std::string_view name, const std::vector<int>& dims,
             const std::vector<Activation>& acts) {
  Rng rng(derive_seed(seed, name));
  return Mlp(dims, acts, rng);
}

}  // namespace

GanModel build(ModelKind kind, int feature_dim, ScaleProfile profile, std::uint64_t seed,
               const PriorSettings& prior) {
  if (feature_dim < 4) {
    throw ConfigError("build: feature_dim must be >= 4, got " + std::to_string(feature_dim));
  }
  if (!(profile.width_ratio > 0.0)) throw ConfigError("build: width ratio must be positive");
  GanModel m;
  m.kind = kind;
  m.feature_dim = feature_dim;
  m.profile = profile;
  m.prior_settings = prior;
  m.seed = seed;
  const auto w = [&](int reference) { return profile.width(reference); };

  if (kind == ModelKind::m3) {
    m.code_dim = w(256);
  } else {
    m.code_dim = 2;
  }
  if (feature_dim < m.code_dim) {
    throw ConfigError("build: feature_dim " + std::to_string(feature_dim) +
                      " is smaller than the bottleneck " + std::to_string(m.code_dim));
  }

  if (kind == ModelKind::m3) {
    m.prior = NormalPrior(prior.noise_dim);
    m.encoder = make_net(seed, "encoder", {feature_dim, w(1000), w(700), w(300), m.code_dim},
                         {R, R, R, L});
    m.decoder = make_net(seed, "decoder", {m.code_dim, w(300), w(700), w(1000), feature_dim},
                         {R, R, R, L});
    m.code_generator = make_net(seed, "code_generator",
                                {prior.noise_dim + kNumClasses, w(140), m.code_dim}, {R, L});
  } else {
    m.prior = orthogonal_mixture(prior.separation, prior.stddev);
    m.encoder = make_net(seed, "encoder", {feature_dim, w(1000), w(500), w(100), m.code_dim},
                         {R, R, R, L});
    m.decoder = make_net(seed, "decoder", {m.code_dim, w(100), w(500), w(1000), feature_dim},
                         {R, R, R, L});
  }
  m.d1 = make_net(seed, "d1", {m.code_dim + kNumClasses, w(1000), w(500), w(100), 1},
                  {R, R, R, S});
  if (kind != ModelKind::m1) {
    m.d2_trunk = make_net(seed, "d2_trunk", {feature_dim + kNumClasses, w(1000), w(500), w(100)},
                          {R, R, R});
    m.d2_head = make_net(seed, "d2_head", {w(100), 1}, {S});
  }
  if (kind == ModelKind::m3) {
    m.aux_head = make_net(seed, "aux_head", {w(100), w(128), kNumClasses}, {R, X});
  }
  return m;
}

Matrix encode(const GanModel& model, const Matrix& features) {
  if (features.cols() != model.feature_dim) {
    throw ShapeError("encode: expected " + std::to_string(model.feature_dim) +
                     " features, got " + std::to_string(features.cols()));
  }
  return model.encoder.predict(features);
}

Matrix decode(const GanModel& model, const Matrix& codes) {
  if (codes.cols() != model.code_dim) {
    throw ShapeError("decode: expected codes of width " + std::to_string(model.code_dim) +
                     ", got " + std::to_string(codes.cols()));
  }
  return model.decoder.predict(codes);
}

namespace {

Labels class_ids(std::size_t n, std::optional<int> cls, Rng& rng) {
  Labels ids(n);
  if (cls) {
    if (*cls < 0 || *cls >= kNumClasses) {
      throw ContractError("unknown class id " + std::to_string(*cls));
    }
    std::fill(ids.begin(), ids.end(), *cls);
  } else {
    for (auto& id : ids) id = static_cast<int>(rng.below(kNumClasses));
  }
  return ids;
}

}  // namespace

PriorCodes sample_prior_codes(const GanModel& model, std::size_t n, std::optional<int> cls,
                              Rng& rng) {
  PriorCodes out;
  if (model.kind == ModelKind::m3) {
    out.ids = class_ids(n, cls, rng);
    out.one_hot = one_hot_rows(out.ids, kNumClasses);
    const PriorSample z = sample(model.noise_prior(), n, rng);
    out.generator_input = hconcat(z.values, out.one_hot);
    out.codes = model.code_generator->predict(out.generator_input);
  } else {
    const MixturePrior& mix = model.mixture();
    if (cls) {
      if (*cls < 0 || static_cast<std::size_t>(*cls) >= mix.size()) {
        throw ContractError("unknown class id " + std::to_string(*cls));
      }
      out.ids.assign(n, *cls);
      out.codes = sample_components(mix, out.ids, rng);
    } else {
      PriorSample s = sample(mix, n, rng);
      out.codes = std::move(s.values);
      out.ids = std::move(s.component);
    }
    out.one_hot = one_hot_rows(out.ids, kNumClasses);
  }
  return out;
}

SyntheticBatch generate(const GanModel& model, std::size_t n, std::optional<int> cls, Rng& rng) {
  PriorCodes codes = sample_prior_codes(model, n, cls, rng);
  SyntheticBatch batch;
  batch.features = model.decoder.predict(codes.codes);
  batch.labels = std::move(codes.ids);
  return batch;
}

SyntheticBatch generate(const GanModel& model, std::size_t n, std::optional<int> cls,
                        std::uint64_t seed) {
  Rng rng(seed);
  return generate(model, n, cls, rng);
}

Vector discriminate_code(const GanModel& model, const Matrix& code, const Matrix& one_hot) {
  if (code.cols() != model.code_dim || one_hot.cols() != kNumClasses) {
    throw ShapeError("discriminate_code: expected code width " + std::to_string(model.code_dim) +
                     " and " + std::to_string(kNumClasses) + " label columns");
  }
  return model.d1.predict(hconcat(code, one_hot)).col(0);
}

Matrix aux_input(const Matrix& features) {
  return hconcat(features, Matrix::Zero(features.rows(), kNumClasses));
}

DataVerdict discriminate_data(const GanModel& model, const Matrix& features,
                              const Matrix& one_hot) {
  if (!model.has_data_discriminator()) {
    throw UnsupportedOperation("discriminate_data: model " + std::string(to_string(model.kind)) +
                               " has no data discriminator");
  }
  if (features.cols() != model.feature_dim || one_hot.cols() != kNumClasses) {
    throw ShapeError("discriminate_data: expected " + std::to_string(model.feature_dim) +
                     " features and " + std::to_string(kNumClasses) + " label columns");
  }
  DataVerdict v;
  const Matrix hidden = model.d2_trunk->predict(hconcat(features, one_hot));
  v.probability = model.d2_head->predict(hidden).col(0);
  if (model.aux_head) {
    v.aux = model.aux_head->predict(model.d2_trunk->predict(aux_input(features)));
  }
  return v;
}

namespace {

std::vector<std::pair<std::string, const Mlp*>> components(const GanModel& m) {
  std::vector<std::pair<std::string, const Mlp*>> out = {
      {"encoder", &m.encoder}, {"decoder", &m.decoder}, {"d1", &m.d1}};
  if (m.d2_trunk) out.emplace_back("d2_trunk", &*m.d2_trunk);
  if (m.d2_head) out.emplace_back("d2_head", &*m.d2_head);
  if (m.aux_head) out.emplace_back("aux_head", &*m.aux_head);
  if (m.code_generator) out.emplace_back("code_generator", &*m.code_generator);
  return out;
}

}  // namespace

std::uint64_t model_checksum(const GanModel& model) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, net] : components(model)) {
    const std::uint64_t c = net->parameter_checksum();
    h = fnv1a(&c, sizeof c, h);
  }
  return h;
}

void save_model(const std::filesystem::path& path, const GanModel& model,
                const nlohmann::json& extra) {
  nlohmann::json header;
  header["model_kind"] = std::string(to_string(model.kind));
  header["feature_dim"] = model.feature_dim;
  header["code_dim"] = model.code_dim;
  header["width_ratio"] = model.profile.width_ratio;
  header["seed"] = model.seed;
  header["prior"] = {{"kind", model.kind == ModelKind::m3 ? "normal" : "mixture"},
                     {"separation", model.prior_settings.separation},
                     {"stddev", model.prior_settings.stddev},
                     {"dim", prior_dim(model.prior)},
                     {"weights", model.kind == ModelKind::m3
                                     ? std::vector<double>{}
                                     : model.mixture().weights()}};
  header["extra"] = extra;
  const auto parts = components(model);
  header["components"] = nlohmann::json::array();
  for (const auto& [name, net] : parts) header["components"].push_back(name);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_model: cannot open " + path.string());
  detail::write_header(out, "EMGB", header);
  for (const auto& [name, net] : parts) {
    std::ostringstream blob(std::ios::binary);
    write_network(blob, *net, {{"component", name}});
    const std::string bytes = blob.str();
    detail::write_u64(out, bytes.size());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw Error("save_model: write failed for " + path.string());
}

GanModel load_model(const std::filesystem::path& path, nlohmann::json* extra) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("load_model: cannot open " + path.string());
  const nlohmann::json header = detail::read_header(in, "EMGB");
  GanModel m;
  try {
    PriorSettings ps;
    ps.separation = header.at("prior").at("separation").get<double>();
    ps.stddev = header.at("prior").at("stddev").get<double>();
    const ModelKind kind = model_kind_from_string(header.at("model_kind").get<std::string>());
    if (kind == ModelKind::m3) ps.noise_dim = header.at("prior").at("dim").get<int>();
    // Build for the layout and prior, then overwrite every component.
    m = build(kind, header.at("feature_dim").get<int>(),
              ScaleProfile{header.at("width_ratio").get<double>()},
              header.at("seed").get<std::uint64_t>(), ps);
    for (const auto& name : header.at("components")) {
      const std::uint64_t size = detail::read_u64(in);
      std::string bytes(size, '\0');
      if (!in.read(bytes.data(), static_cast<std::streamsize>(size))) {
        throw ParseError("load_model: truncated component");
      }
      std::istringstream blob(bytes, std::ios::binary);
      Mlp net = read_network(blob);
      const std::string n = name.get<std::string>();
      if (n == "encoder") m.encoder = std::move(net);
      else if (n == "decoder") m.decoder = std::move(net);
      else if (n == "d1") m.d1 = std::move(net);
      else if (n == "d2_trunk") m.d2_trunk = std::move(net);
      else if (n == "d2_head") m.d2_head = std::move(net);
      else if (n == "aux_head") m.aux_head = std::move(net);
      else if (n == "code_generator") m.code_generator = std::move(net);
      else throw ParseError("load_model: unknown component '" + n + "'");
    }
    if (extra != nullptr) *extra = header.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("load_model: malformed header: ") + e.what());
  }
  return m;
}

}  // namespace emogan
