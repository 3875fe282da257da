#include "metastab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "metastab/errors.hpp"
#include "metastab/rng.hpp"

namespace metastab {

using Json = nlohmann::ordered_json;

namespace {

bool same_vector(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

bool same_opt_vector(const std::optional<Vector>& a, const std::optional<Vector>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_vector(*a, *b);
}

class Block {
 public:
  Block(const Json& json, std::string path) : json_(json), path_(std::move(path)) {
    if (!json_.is_object()) throw ConfigError(path_, path_ + ": expected an object");
  }

  void allow(const std::set<std::string>& keys) const {
    for (const auto& item : json_.items()) {
      if (!keys.count(item.key())) throw ConfigError(at(item.key()), "unknown key " + at(item.key()));
    }
  }

  bool has(const std::string& key) const { return json_.contains(key); }
  std::string at(const std::string& key) const { return path_ + "." + key; }
  const Json& raw(const std::string& key) const { return json_.at(key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const Json& v = json_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), at(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(at(key), at(key) + ": must be finite");
    return x;
  }

  double positive(const std::string& key, double fallback) const {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(at(key), at(key) + ": must be > 0");
    return x;
  }

  double nonnegative(const std::string& key, double fallback) const {
    const double x = number(key, fallback);
    if (!(x >= 0.0)) throw ConfigError(at(key), at(key) + ": must be >= 0");
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const Json& v = json_.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(at(key), at(key) + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = json_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key), at(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback, const std::set<std::string>& choices) const {
    if (!has(key)) return fallback;
    const Json& v = json_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), at(key) + ": expected a string");
    std::string s = v.get<std::string>();
    if (!choices.empty() && !choices.count(s)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      throw ConfigError(at(key), at(key) + ": unknown value '" + s + "' (expected one of " + list + ")");
    }
    return s;
  }

  std::vector<double> numbers(const std::string& key) const {
    const Json& v = json_.at(key);
    if (!v.is_array()) throw ConfigError(at(key), at(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = at(key) + "[" + std::to_string(i) + "]";
      if (!v[i].is_number()) throw ConfigError(p, p + ": expected a number");
      out.push_back(v[i].get<double>());
      if (!std::isfinite(out.back())) throw ConfigError(p, p + ": must be finite");
    }
    return out;
  }

  Vector vector(const std::string& key) const {
    const std::vector<double> xs = numbers(key);
    if (xs.empty()) throw ConfigError(at(key), at(key) + ": must not be empty");
    return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  }

 private:
  const Json& json_;
  std::string path_;
};

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void require_dimension(const Vector& v, std::size_t d, const std::string& path) {
  if (static_cast<std::size_t>(v.size()) != d) {
    throw ConfigError(path, path + ": expected " + std::to_string(d) + " entries, got " + std::to_string(v.size()));
  }
}

std::size_t spec_dimension(const LandscapeSpec& s) {
  if (s.family == "double_well") return s.dimension;
  if (s.family == "gaussian_location") return static_cast<std::size_t>(s.mean.size());
  return static_cast<std::size_t>(s.curvatures.size());
}

LandscapeSpec parse_landscape(const Block& b) {
  LandscapeSpec s;
  s.family = b.string("family", "", {"quadratic", "double_well", "gaussian_location", "perturbed_quadratic"});
  if (s.family.empty()) throw ConfigError(b.at("family"), b.at("family") + ": required");
  std::set<std::string> keys{"family", "minimum_start"};
  if (s.family == "quadratic") {
    keys.insert({"curvatures", "dissipativity_offset", "hessian_lipschitz"});
    b.allow(keys);
    if (b.has("curvatures")) s.curvatures = b.vector("curvatures");
    for (Eigen::Index i = 0; i < s.curvatures.size(); ++i) {
      if (!(s.curvatures(i) > 0.0)) throw ConfigError(b.at("curvatures"), b.at("curvatures") + ": entries must be > 0");
    }
    s.dissipativity_offset = b.nonnegative("dissipativity_offset", s.dissipativity_offset);
    s.hessian_lipschitz = b.positive("hessian_lipschitz", s.hessian_lipschitz);
  } else if (s.family == "double_well") {
    keys.insert({"dimension", "barrier_scale"});
    b.allow(keys);
    s.dimension = b.unsigned_integer("dimension", s.dimension);
    if (s.dimension == 0) throw ConfigError(b.at("dimension"), b.at("dimension") + ": must be >= 1");
    s.barrier_scale = b.positive("barrier_scale", s.barrier_scale);
  } else if (s.family == "gaussian_location") {
    keys.insert({"mean", "truncation", "ridge", "hessian_lipschitz", "n", "data_seed"});
    b.allow(keys);
    if (b.has("mean")) s.mean = b.vector("mean");
    s.truncation = b.positive("truncation", s.truncation);
    s.ridge = b.nonnegative("ridge", s.ridge);
    s.hessian_lipschitz = b.positive("hessian_lipschitz", s.hessian_lipschitz);
  } else {
    keys.insert({"curvatures", "curvature_spread", "tilt_spread", "hessian_lipschitz", "n", "data_seed"});
    b.allow(keys);
    if (b.has("curvatures")) s.curvatures = b.vector("curvatures");
    s.curvature_spread = b.nonnegative("curvature_spread", s.curvature_spread);
    s.tilt_spread = b.nonnegative("tilt_spread", s.tilt_spread);
    s.hessian_lipschitz = b.positive("hessian_lipschitz", s.hessian_lipschitz);
    for (Eigen::Index i = 0; i < s.curvatures.size(); ++i) {
      if (!(s.curvatures(i) > s.curvature_spread)) {
        throw ConfigError(b.at("curvatures"), b.at("curvatures") + ": entries must exceed curvature_spread");
      }
    }
  }
  if (s.is_erm()) {
    s.n = b.unsigned_integer("n", s.n);
    if (s.n < 2) throw ConfigError(b.at("n"), b.at("n") + ": must be >= 2");
    if (b.has("data_seed")) s.data_seed = b.unsigned_integer("data_seed", 0);
  }
  if (b.has("minimum_start")) {
    s.minimum_start = b.vector("minimum_start");
    require_dimension(*s.minimum_start, spec_dimension(s), b.at("minimum_start"));
  }
  return s;
}

ProblemParams parse_params(const Block& b) {
  b.allow({"epsilon", "delta", "r", "T", "eps0", "c1", "c2", "c", "c0", "c_prime", "c_reflection"});
  ProblemParams p;
  p.epsilon = b.positive("epsilon", p.epsilon);
  p.delta = b.positive("delta", p.delta);
  if (!(p.delta < 1.0)) throw ConfigError(b.at("delta"), b.at("delta") + ": must be < 1");
  p.r = b.positive("r", p.r);
  p.T = b.nonnegative("T", p.T);
  p.eps0 = b.positive("eps0", p.eps0);
  p.c1 = b.positive("c1", p.c1);
  p.c2 = b.positive("c2", p.c2);
  p.c = b.positive("c", p.c);
  p.c0 = b.positive("c0", p.c0);
  p.c_prime = b.positive("c_prime", p.c_prime);
  p.c_reflection = b.positive("c_reflection", p.c_reflection);
  return p;
}

RunSpec parse_run(const Block& b) {
  b.allow({"seed", "replicas", "kind", "substep_factor", "noise_substeps", "eta", "beta", "noiseless",
           "override_admissibility", "initial_point", "write_trajectories", "betas", "budget_K", "workers"});
  RunSpec r;
  r.seed = b.unsigned_integer("seed", r.seed);
  r.replicas = b.unsigned_integer("replicas", r.replicas);
  if (r.replicas == 0) throw ConfigError(b.at("replicas"), b.at("replicas") + ": must be >= 1");
  r.kind = b.string("kind", r.kind, {"discrete", "diffusion_proxy", "exact_ou"});
  const auto sub = b.unsigned_integer("substep_factor", r.substep_factor);
  if (sub == 0 || sub > 0xffffffffULL) throw ConfigError(b.at("substep_factor"), b.at("substep_factor") + ": out of range");
  r.substep_factor = static_cast<std::uint32_t>(sub);
  const auto ns = b.unsigned_integer("noise_substeps", r.noise_substeps);
  if (ns == 0 || ns > 0xffffffffULL) throw ConfigError(b.at("noise_substeps"), b.at("noise_substeps") + ": out of range");
  r.noise_substeps = static_cast<std::uint32_t>(ns);
  if (b.has("eta")) r.eta = b.nonnegative("eta", 0.0);
  if (b.has("beta")) r.beta = b.positive("beta", 1.0);
  r.noiseless = b.boolean("noiseless", r.noiseless);
  r.override_admissibility = b.boolean("override_admissibility", r.override_admissibility);
  if (b.has("initial_point")) r.initial_point = b.vector("initial_point");
  r.write_trajectories = b.unsigned_integer("write_trajectories", r.write_trajectories);
  if (b.has("betas")) {
    r.betas = b.numbers("betas");
    for (double beta : r.betas) {
      if (!(beta > 0.0)) throw ConfigError(b.at("betas"), b.at("betas") + ": entries must be > 0");
    }
  }
  r.budget_K = b.unsigned_integer("budget_K", r.budget_K);
  if (r.budget_K == 0) throw ConfigError(b.at("budget_K"), b.at("budget_K") + ": must be >= 1");
  r.workers = b.unsigned_integer("workers", r.workers);
  return r;
}

OutputSpec parse_output(const Block& b) {
  b.allow({"directory", "formats", "trajectory_format"});
  OutputSpec o;
  o.directory = b.string("directory", o.directory, {});
  if (b.has("formats")) {
    const Json& v = b.raw("formats");
    if (!v.is_array()) throw ConfigError(b.at("formats"), b.at("formats") + ": expected an array of strings");
    o.formats.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = b.at("formats") + "[" + std::to_string(i) + "]";
      if (!v[i].is_string()) throw ConfigError(p, p + ": expected a string");
      const std::string f = v[i].get<std::string>();
      if (f != "json" && f != "csv" && f != "md") throw ConfigError(p, p + ": unknown format '" + f + "'");
      o.formats.push_back(f);
    }
  }
  o.trajectory_format = b.string("trajectory_format", o.trajectory_format, {"csv", "binary"});
  return o;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

bool LandscapeSpec::operator==(const LandscapeSpec& o) const {
  return family == o.family && same_vector(curvatures, o.curvatures) && dissipativity_offset == o.dissipativity_offset &&
         hessian_lipschitz == o.hessian_lipschitz && dimension == o.dimension && barrier_scale == o.barrier_scale &&
         same_vector(mean, o.mean) && truncation == o.truncation && ridge == o.ridge &&
         curvature_spread == o.curvature_spread && tilt_spread == o.tilt_spread && n == o.n &&
         data_seed == o.data_seed && same_opt_vector(minimum_start, o.minimum_start);
}

bool RunSpec::operator==(const RunSpec& o) const {
  return seed == o.seed && replicas == o.replicas && kind == o.kind && substep_factor == o.substep_factor &&
         noise_substeps == o.noise_substeps && eta == o.eta && beta == o.beta && noiseless == o.noiseless &&
         override_admissibility == o.override_admissibility && same_opt_vector(initial_point, o.initial_point) &&
         write_trajectories == o.write_trajectories && betas == o.betas && budget_K == o.budget_K &&
         workers == o.workers;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  const auto& p = params;
  const auto& q = o.params;
  return schema_version == o.schema_version && landscape == o.landscape && run == o.run && output == o.output &&
         p.epsilon == q.epsilon && p.delta == q.delta && p.r == q.r && p.T == q.T && p.eps0 == q.eps0 &&
         p.c1 == q.c1 && p.c2 == q.c2 && p.c == q.c && p.c0 == q.c0 && p.c_prime == q.c_prime &&
         p.c_reflection == q.c_reflection;
}

ExperimentConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw ConfigError("$", "parse error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                               ": " + e.what());
  }
  const Block top(root, "$");
  top.allow({"schema_version", "landscape", "params", "run", "output"});
  ExperimentConfig config;
  if (!top.has("schema_version")) throw ConfigError("$.schema_version", "$.schema_version: required");
  const auto version = top.unsigned_integer("schema_version", 0);
  if (version != static_cast<std::uint64_t>(kConfigSchemaVersion)) {
    throw ConfigError("$.schema_version", "$.schema_version: unsupported version " + std::to_string(version) +
                                              " (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }
  if (!top.has("landscape")) throw ConfigError("$.landscape", "$.landscape: required");
  config.landscape = parse_landscape(Block(root.at("landscape"), "$.landscape"));
  if (top.has("params")) config.params = parse_params(Block(root.at("params"), "$.params"));
  if (top.has("run")) config.run = parse_run(Block(root.at("run"), "$.run"));
  if (top.has("output")) config.output = parse_output(Block(root.at("output"), "$.output"));
  if (config.run.initial_point) {
    require_dimension(*config.run.initial_point, spec_dimension(config.landscape), "$.run.initial_point");
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("$", "cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  const LandscapeSpec& s = config.landscape;
  Json land;
  land["family"] = s.family;
  if (s.family == "quadratic") {
    land["curvatures"] = to_json(s.curvatures);
    land["dissipativity_offset"] = s.dissipativity_offset;
    land["hessian_lipschitz"] = s.hessian_lipschitz;
  } else if (s.family == "double_well") {
    land["dimension"] = s.dimension;
    land["barrier_scale"] = s.barrier_scale;
  } else if (s.family == "gaussian_location") {
    land["mean"] = to_json(s.mean);
    land["truncation"] = s.truncation;
    land["ridge"] = s.ridge;
    land["hessian_lipschitz"] = s.hessian_lipschitz;
  } else {
    land["curvatures"] = to_json(s.curvatures);
    land["curvature_spread"] = s.curvature_spread;
    land["tilt_spread"] = s.tilt_spread;
    land["hessian_lipschitz"] = s.hessian_lipschitz;
  }
  if (s.is_erm()) {
    land["n"] = s.n;
    if (s.data_seed) land["data_seed"] = *s.data_seed;
  }
  if (s.minimum_start) land["minimum_start"] = to_json(*s.minimum_start);

  const ProblemParams& p = config.params;
  Json params;
  params["epsilon"] = p.epsilon;
  params["delta"] = p.delta;
  params["r"] = p.r;
  params["T"] = p.T;
  params["eps0"] = p.eps0;
  params["c1"] = p.c1;
  params["c2"] = p.c2;
  params["c"] = p.c;
  params["c0"] = p.c0;
  params["c_prime"] = p.c_prime;
  params["c_reflection"] = p.c_reflection;

  const RunSpec& r = config.run;
  Json run;
  run["seed"] = r.seed;
  run["replicas"] = r.replicas;
  run["kind"] = r.kind;
  run["substep_factor"] = r.substep_factor;
  run["noise_substeps"] = r.noise_substeps;
  if (r.eta) run["eta"] = *r.eta;
  if (r.beta) run["beta"] = *r.beta;
  run["noiseless"] = r.noiseless;
  run["override_admissibility"] = r.override_admissibility;
  if (r.initial_point) run["initial_point"] = to_json(*r.initial_point);
  run["write_trajectories"] = r.write_trajectories;
  run["betas"] = r.betas;
  run["budget_K"] = r.budget_K;
  run["workers"] = r.workers;

  Json out;
  out["directory"] = config.output.directory;
  out["formats"] = config.output.formats;
  out["trajectory_format"] = config.output.trajectory_format;

  Json root;
  root["schema_version"] = config.schema_version;
  root["landscape"] = land;
  root["params"] = params;
  root["run"] = run;
  root["output"] = out;
  return root.dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << value;
  return os.str();
}

BuiltLandscape build_landscape(const ExperimentConfig& config) {
  const LandscapeSpec& s = config.landscape;
  BuiltLandscape out;
  if (s.family == "quadratic") {
    out.landscape = build_quadratic(s.curvatures, s.dissipativity_offset, s.hessian_lipschitz);
  } else if (s.family == "double_well") {
    out.landscape = build_double_well(s.dimension, s.barrier_scale);
  } else {
    if (s.family == "gaussian_location") {
      out.family = std::make_shared<GaussianLocationFamily>(TruncatedGaussianLaw{s.mean, s.truncation}, s.ridge,
                                                            s.hessian_lipschitz);
    } else if (s.family == "perturbed_quadratic") {
      out.family = std::make_shared<PerturbedQuadraticFamily>(
          PerturbedQuadraticLaw{s.curvatures, s.curvature_spread, s.tilt_spread}, s.hessian_lipschitz);
    } else {
      throw ConfigError("$.landscape.family", "$.landscape.family: unknown family '" + s.family + "'");
    }
    const std::uint64_t data_seed = s.data_seed.value_or(derive_seed(config.run.seed, 0xda7aULL));
    out.dataset = out.family->draw(s.n, data_seed);
    out.landscape = out.family->empirical(*out.dataset);
  }
  out.params = config.params;
  out.params.constants = out.landscape->constants();
  out.params.d = out.landscape->dimension();
  return out;
}

Vector default_minimum_start(const ExperimentConfig& config, std::size_t dimension) {
  if (config.landscape.minimum_start) return *config.landscape.minimum_start;
  Vector w = Vector::Zero(static_cast<Eigen::Index>(dimension));
  if (config.landscape.family == "double_well") w(0) = 1.0;
  return w;
}

std::string RunManifest::to_json() const {
  Json j;
  j["command"] = command;
  j["config_hash"] = hex64(config_hash);
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["complete"] = complete;
  if (!error.empty()) j["error"] = error;
  Json outs = Json::array();
  for (const auto& o : outputs) {
    Json e;
    e["path"] = o.path;
    e["fnv1a64"] = hex64(o.checksum);
    e["bytes"] = o.bytes;
    outs.push_back(e);
  }
  j["outputs"] = outs;
  Json t;
  for (const auto& [name, seconds] : timings) t[name] = seconds;
  j["timings_seconds"] = t;
  return j.dump(2) + "\n";
}

}  // namespace metastab
