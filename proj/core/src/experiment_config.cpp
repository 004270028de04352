#include "sgdlab/experiment_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "sgdlab/bounds.hpp"

namespace sgdlab {

std::size_t DimensionRule::resolve(std::size_t n) const {
  const double nn = static_cast<double>(n);
  switch (kind) {
    case Kind::kFixed: return static_cast<std::size_t>(value);
    case Kind::kPower: return static_cast<std::size_t>(std::ceil(std::pow(nn, value) - 1e-9));
    case Kind::kPerSample: return static_cast<std::size_t>(std::ceil(value * nn - 1e-9));
  }
  return 0;
}

std::size_t TailSpec::resolve(std::size_t n) const {
  switch (rule) {
    case Rule::kFixed: return value;
    case Rule::kHalf: return n / 2;
    case Rule::kFull: return n;
  }
  return 0;
}

Vector VectorSpec::build(std::size_t dim) const {
  const auto d = static_cast<Eigen::Index>(dim);
  Vector v = Vector::Zero(d);
  switch (pattern) {
    case Pattern::kZeros: break;
    case Pattern::kOnes: v.setOnes(); break;
    case Pattern::kFirstCoordinate: v[0] = 1.0; break;
    case Pattern::kUniformTail: {
      const Eigen::Index width = (d + 1) / 2;
      v.tail(width).setConstant(1.0 / std::sqrt(static_cast<double>(width)));
      break;
    }
    case Pattern::kExplicit:
      if (values.size() != dim) {
        throw ConfigError("explicit vector has " + std::to_string(values.size()) +
                          " entries, dimension is " + std::to_string(dim));
      }
      for (Eigen::Index i = 0; i < d; ++i) v[i] = values[static_cast<std::size_t>(i)];
      break;
  }
  return scale * v;
}

RegressionModel ExperimentConfig::model_for(std::size_t n) const {
  const std::size_t d = model.spectrum.dim.resolve(n);
  if (d < 1) throw ConfigError("model.spectrum: resolved dimension is 0");
  SpectrumParams params = model.spectrum.params;
  if (model.spectrum.family == SpectrumFamily::kPiecewise && model.spectrum.head_exponent) {
    const double s = std::ceil(std::pow(static_cast<double>(n), *model.spectrum.head_exponent) - 1e-9);
    params.head = std::min<std::size_t>(static_cast<std::size_t>(s), d);
  }
  Spectrum spectrum = Spectrum::build(model.spectrum.family, params, d);
  return RegressionModel(std::move(spectrum), model.w_star.build(d), model.noise_std,
                         model.well_specified);
}

SgdConfig ExperimentConfig::sgd_for(const RegressionModel& m, std::size_t n, bool tail) const {
  SgdConfig cfg;
  switch (sgd.gamma.rule) {
    case GammaSpec::Rule::kExplicit: cfg.gamma = sgd.gamma.value; break;
    case GammaSpec::Rule::kLargeStep: cfg.gamma = large_step_gamma(m.spectrum(), run.alpha); break;
    case GammaSpec::Rule::kInverseTrace:
      cfg.gamma = 1.0 / (sgd.gamma.value * m.spectrum().trace());
      break;
  }
  cfg.n_samples = n;
  cfg.tail_start = tail ? sgd.tail.resolve(n) : 0;
  cfg.w0 = sgd.w0.build(m.dim());
  cfg.seed = run.seed;
  return cfg;
}

std::size_t ExperimentConfig::threads() const {
  return run.threads == 0 ? default_thread_count() : run.threads;
}

namespace {

using Json = nlohmann::json;

// Object accessor that knows its field path and rejects unknown keys.
class Reader {
 public:
  Reader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected a mapping");
  }

  ~Reader() = default;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((path_.empty() ? std::string("<root>") : path_) + ": " + what);
  }

  std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const Json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() || it->is_null() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const Json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(child_path(key) + ": expected a number");
    return v->get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const Json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
      throw ConfigError(child_path(key) + ": expected a non-negative integer");
    }
    return v->get<std::size_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    const Json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(child_path(key) + ": expected true or false");
    return v->get<bool>();
  }

  std::optional<std::string> text(const std::string& key) {
    const Json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(child_path(key) + ": expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const Json* v = get(key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(child_path(key) + ": expected a list of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) throw ConfigError(child_path(key) + ": expected a list of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.contains(key)) throw ConfigError(child_path(key) + ": unknown key");
    }
  }

 private:
  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

VectorSpec parse_vector(const Json& node, const std::string& path) {
  VectorSpec spec;
  auto from_name = [&](const std::string& name) {
    if (name == "zeros") return VectorSpec::Pattern::kZeros;
    if (name == "ones") return VectorSpec::Pattern::kOnes;
    if (name == "first_coordinate") return VectorSpec::Pattern::kFirstCoordinate;
    if (name == "uniform_tail") return VectorSpec::Pattern::kUniformTail;
    throw ConfigError(path + ": unknown vector pattern '" + name + "'");
  };
  if (node.is_string()) {
    spec.pattern = from_name(node.get<std::string>());
  } else if (node.is_array()) {
    spec.pattern = VectorSpec::Pattern::kExplicit;
    for (const auto& e : node) {
      if (!e.is_number()) throw ConfigError(path + ": explicit vector entries must be numbers");
      spec.values.push_back(e.get<double>());
    }
  } else if (node.is_object()) {
    Reader r(node, path);
    if (auto name = r.text("pattern")) spec.pattern = from_name(*name);
    if (const Json* values = r.get("values")) {
      spec = parse_vector(*values, r.child_path("values"));
    }
    spec.scale = r.number("scale", 1.0);
    r.finish();
  } else {
    throw ConfigError(path + ": expected a pattern name, list, or mapping");
  }
  return spec;
}

SpectrumSpec parse_spectrum(const Json& node, const std::string& path) {
  Reader r(node, path);
  SpectrumSpec spec;
  const auto family = r.text("family");
  if (!family) r.fail("missing 'family'");
  const auto parsed = parse_spectrum_family(*family);
  if (!parsed) throw ConfigError(r.child_path("family") + ": unknown spectrum family '" + *family + "'");
  spec.family = *parsed;

  spec.params.r = r.number("r", 1.0);
  spec.params.beta = r.number("beta", 2.0);
  spec.params.values = r.numbers("values");
  if (spec.family == SpectrumFamily::kPiecewise) {
    if (const Json* head = r.get("head")) {
      if (!head->is_number_integer()) throw ConfigError(r.child_path("head") + ": expected an integer");
      spec.params.head = head->get<std::size_t>();
    } else {
      if (!(spec.params.r > 0.0 && spec.params.r <= 1.0)) {
        throw ConfigError(r.child_path("r") + ": piecewise head exponent must be in (0, 1]");
      }
      spec.head_exponent = spec.params.r;
    }
  } else {
    r.get("head");
  }

  const Json* d = r.get("d");
  const Json* q = r.get("q");
  const Json* per_n = r.get("d_per_n");
  const int given = (d != nullptr) + (q != nullptr) + (per_n != nullptr);
  if (spec.family == SpectrumFamily::kExplicit && given == 0) {
    spec.dim = {DimensionRule::Kind::kFixed, static_cast<double>(spec.params.values.size())};
  } else if (given != 1) {
    r.fail("exactly one of 'd', 'q', 'd_per_n' is required");
  } else if (d) {
    if (!d->is_number_integer() || d->get<std::int64_t>() < 1) {
      throw ConfigError(r.child_path("d") + ": expected a positive integer");
    }
    spec.dim = {DimensionRule::Kind::kFixed, d->get<double>()};
  } else if (q) {
    if (!q->is_number() || !(q->get<double>() > 0.0)) {
      throw ConfigError(r.child_path("q") + ": expected a positive number");
    }
    spec.dim = {DimensionRule::Kind::kPower, q->get<double>()};
  } else {
    if (!per_n->is_number() || !(per_n->get<double>() > 0.0)) {
      throw ConfigError(r.child_path("d_per_n") + ": expected a positive number");
    }
    spec.dim = {DimensionRule::Kind::kPerSample, per_n->get<double>()};
  }
  if (spec.family == SpectrumFamily::kExplicit) {
    if (spec.params.values.empty()) r.fail("explicit family needs 'values'");
    if (spec.dim.kind != DimensionRule::Kind::kFixed ||
        spec.dim.resolve(1) != spec.params.values.size()) {
      r.fail("explicit family dimension must equal the number of values");
    }
  }
  r.finish();
  return spec;
}

ModelSpec parse_model(const Json& node) {
  Reader r(node, "model");
  ModelSpec spec;
  const Json* spectrum = r.get("spectrum");
  if (!spectrum) r.fail("missing 'spectrum'");
  spec.spectrum = parse_spectrum(*spectrum, "model.spectrum");
  if (const Json* w = r.get("w_star")) spec.w_star = parse_vector(*w, "model.w_star");
  spec.noise_std = r.number("noise_std", 1.0);
  if (!(spec.noise_std >= 0.0)) throw ConfigError("model.noise_std: must be >= 0");
  spec.well_specified = r.flag("well_specified", true);
  r.finish();
  return spec;
}

SgdSpec parse_sgd(const Json& node) {
  Reader r(node, "sgd");
  SgdSpec spec;
  if (const Json* g = r.get("gamma")) {
    if (g->is_number()) {
      spec.gamma = {GammaSpec::Rule::kExplicit, g->get<double>()};
      if (!(spec.gamma.value > 0.0)) throw ConfigError("sgd.gamma: must be > 0");
    } else if (g->is_string() && g->get<std::string>() == "large_step") {
      spec.gamma = {GammaSpec::Rule::kLargeStep, 0.0};
    } else if (g->is_object()) {
      Reader gr(*g, "sgd.gamma");
      const double c = gr.number("inverse_trace", -1.0);
      if (!(c > 0.0)) gr.fail("expected 'inverse_trace: <positive number>'");
      gr.finish();
      spec.gamma = {GammaSpec::Rule::kInverseTrace, c};
    } else {
      throw ConfigError("sgd.gamma: expected a number, 'large_step', or {inverse_trace: c}");
    }
  }

  const Json* n = r.get("n");
  if (!n) r.fail("missing 'n'");
  if (n->is_number_integer()) {
    spec.n_list.push_back(n->get<std::size_t>());
  } else if (n->is_array()) {
    for (const auto& e : *n) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 1) {
        throw ConfigError("sgd.n: entries must be positive integers");
      }
      spec.n_list.push_back(e.get<std::size_t>());
    }
  } else {
    throw ConfigError("sgd.n: expected an integer or a list of integers");
  }
  if (spec.n_list.empty()) throw ConfigError("sgd.n: list is empty");
  if (spec.n_list.front() < 1) throw ConfigError("sgd.n: entries must be positive integers");
  for (std::size_t i = 1; i < spec.n_list.size(); ++i) {
    if (spec.n_list[i] <= spec.n_list[i - 1]) {
      throw ConfigError("sgd.n: list must be strictly increasing");
    }
  }

  if (const Json* s = r.get("tail_start")) {
    if (s->is_number_integer() && s->get<std::int64_t>() >= 0) {
      spec.tail = {TailSpec::Rule::kFixed, s->get<std::size_t>()};
    } else if (s->is_string() && s->get<std::string>() == "half") {
      spec.tail = {TailSpec::Rule::kHalf, 0};
    } else if (s->is_string() && s->get<std::string>() == "full") {
      spec.tail = {TailSpec::Rule::kFull, 0};
    } else {
      throw ConfigError("sgd.tail_start: expected a non-negative integer, 'half', or 'full'");
    }
  }
  if (const Json* w0 = r.get("w0")) spec.w0 = parse_vector(*w0, "sgd.w0");
  r.finish();
  return spec;
}

RunSpec parse_run(const Json& node) {
  Reader r(node, "run");
  RunSpec spec;
  spec.replicates = r.count("replicates", spec.replicates);
  spec.seed = r.count("seed", 0);
  if (auto mode = r.text("oracle")) {
    if (*mode == "auto") spec.oracle = OracleMode::kAuto;
    else if (*mode == "oracle") spec.oracle = OracleMode::kForceOracle;
    else if (*mode == "monte_carlo") spec.oracle = OracleMode::kForceMonteCarlo;
    else throw ConfigError("run.oracle: expected auto, oracle, or monte_carlo");
  }
  spec.alpha = r.number("alpha", spec.alpha);
  spec.beta = r.number("beta", spec.beta);
  spec.moment_trials = r.count("moment_trials", spec.moment_trials);
  spec.order_steps = r.count("order_steps", spec.order_steps);
  spec.strict_beta_claim = r.flag("strict_beta_claim", false);
  spec.ridge_lambdas = r.numbers("ridge_lambdas");
  for (double l : spec.ridge_lambdas) {
    if (!(l > 0.0)) throw ConfigError("run.ridge_lambdas: entries must be > 0");
  }
  if (const Json* ridge = r.get("ridge")) {
    Reader rr(*ridge, "run.ridge");
    spec.ridge.b = rr.number("b", 1.0);
    spec.ridge.c1 = rr.number("c1", 1.0);
    spec.ridge.c2 = rr.number("c2", 1.0);
    spec.ridge.c1_upper = rr.number("c1_upper", 1.0);
    spec.ridge.c2_upper = rr.number("c2_upper", 1.0);
    rr.finish();
  }
  if (const Json* ols = r.get("ols")) {
    Reader orr(*ols, "run.ols");
    spec.ols_b = orr.number("b", 1.0);
    spec.ols_c = orr.number("c", 1.0);
    orr.finish();
  }
  spec.threads = r.count("threads", 0);
  if (spec.alpha < 1.0) throw ConfigError("run.alpha: must be >= 1");
  if (spec.beta < 0.0) throw ConfigError("run.beta: must be >= 0");
  r.finish();
  return spec;
}

Json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& e : node) out.push_back(yaml_to_json(e));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return out;
    }
    case YAML::NodeType::Scalar: {
      const std::string& s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted
      std::int64_t i = 0;
      if (YAML::convert<std::int64_t>::decode(node, i)) return i;
      double d = 0.0;
      if (YAML::convert<double>::decode(node, d)) return d;
      bool b = false;
      if (YAML::convert<bool>::decode(node, b)) return b;
      if (s == "~" || s == "null") return nullptr;
      return s;
    }
  }
  return nullptr;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc) {
  Reader r(doc, "");
  ExperimentConfig cfg;
  const Json* model = r.get("model");
  if (!model) r.fail("missing 'model'");
  cfg.model = parse_model(*model);
  const Json* sgd = r.get("sgd");
  if (!sgd) r.fail("missing 'sgd'");
  cfg.sgd = parse_sgd(*sgd);
  if (const Json* run = r.get("run")) cfg.run = parse_run(*run);
  if (const Json* output = r.get("output")) {
    Reader orr(*output, "output");
    if (auto dir = orr.text("dir")) cfg.out_dir = *dir;
    orr.finish();
  }
  r.finish();

  // Resolve once so spectrum/vector errors surface at load time.
  for (std::size_t n : cfg.sgd.n_list) {
    const std::string at = " (N=" + std::to_string(n) + "): ";
    std::optional<RegressionModel> m;
    try {
      m.emplace(cfg.model_for(n));
    } catch (const std::exception& e) {
      throw ConfigError("model" + at + e.what());
    }
    try {
      cfg.sgd_for(*m, n, true).validate(m->dim());
    } catch (const std::exception& e) {
      throw ConfigError("sgd" + at + e.what());
    }
  }
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ", column " +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  return parse_config(yaml_to_json(root));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc);
  }
  return parse_config_text(buf.str());
}

}  // namespace sgdlab
