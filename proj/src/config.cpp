#include "margsmc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "margsmc/util.hpp"

namespace margsmc {

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw std::invalid_argument("config: " + where + ": " + what);
}

void check_keys(const ojson& j, const std::string& where, const std::vector<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      bad(where, "unknown key `" + it.key() + "`");
}

const ojson& want_object(const ojson& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  return j;
}

double get_num(const ojson& j, const std::string& where, const std::string& key, double def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number()) bad(where, "`" + key + "` must be a number");
  return j.at(key).get<double>();
}

double need_num(const ojson& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) bad(where, "missing required key `" + key + "`");
  if (!j.at(key).is_number()) bad(where, "`" + key + "` must be a number");
  return j.at(key).get<double>();
}

long get_int(const ojson& j, const std::string& where, const std::string& key, long def) {
  if (!j.contains(key)) return def;
  const ojson& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    bad(where, "`" + key + "` must be an integer");
  return v.get<long>();
}

bool get_bool(const ojson& j, const std::string& where, const std::string& key, bool def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean()) bad(where, "`" + key + "` must be a boolean");
  return j.at(key).get<bool>();
}

std::string get_str(const ojson& j, const std::string& where, const std::string& key,
                    const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_string()) bad(where, "`" + key + "` must be a string");
  return j.at(key).get<std::string>();
}

std::map<std::string, double> get_named_map(const ojson& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object of name: number entries");
  std::map<std::string, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) bad(where, "`" + it.key() + "` must be a number");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

// --- model section ----------------------------------------------------------

ModelConfig parse_model(const ojson& jm, ojson& echo) {
  const std::string where = "model";
  want_object(jm, where);
  ModelConfig mc;
  mc.id = get_str(jm, where, "id", "");
  if (mc.id.empty()) bad(where, "missing required key `id`");

  echo["id"] = mc.id;
  if (mc.id == "benchmark" || mc.id == "linear-gaussian") {
    std::vector<std::string> keys = {"id",      "alpha_v", "beta_v", "alpha_w",
                                     "beta_w",  "x0_mean", "x0_var"};
    if (mc.id == "linear-gaussian") keys.push_back("phi");
    check_keys(jm, where, keys);
    if (mc.id == "linear-gaussian") {
      mc.phi = get_num(jm, where, "phi", 0.9);
      echo["phi"] = mc.phi;
    }
    mc.alpha_v = get_num(jm, where, "alpha_v", 1.0);
    mc.beta_v = get_num(jm, where, "beta_v", 1.0);
    mc.alpha_w = get_num(jm, where, "alpha_w", 1.0);
    mc.beta_w = get_num(jm, where, "beta_w", 1.0);
    mc.x0_mean = get_num(jm, where, "x0_mean", 0.0);
    mc.x0_var = get_num(jm, where, "x0_var", mc.id == "benchmark" ? 5.0 : 1.0);
    echo["alpha_v"] = mc.alpha_v;
    echo["beta_v"] = mc.beta_v;
    echo["alpha_w"] = mc.alpha_w;
    echo["beta_w"] = mc.beta_w;
    echo["x0_mean"] = *mc.x0_mean;
    echo["x0_var"] = mc.x0_var;
  } else if (mc.id == "population") {
    check_keys(jm, where,
               {"id", "c", "mu", "lambda", "alpha_v", "beta_v", "alpha_w", "beta_w", "x0_mean",
                "x0_var", "c_prior_var"});
    mc.c = get_num(jm, where, "c", 0.0);
    if (jm.contains("mu")) {
      const ojson& v = jm.at("mu");
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        bad(where, "`mu` must be an array of two numbers");
      mc.mu << v[0].get<double>(), v[1].get<double>();
    }
    if (jm.contains("lambda")) {
      const ojson& v = jm.at("lambda");
      auto row_ok = [](const ojson& r) {
        return r.is_array() && r.size() == 2 && r[0].is_number() && r[1].is_number();
      };
      if (!v.is_array() || v.size() != 2 || !row_ok(v[0]) || !row_ok(v[1]))
        bad(where, "`lambda` must be a 2x2 array of numbers");
      mc.lambda << v[0][0].get<double>(), v[0][1].get<double>(), v[1][0].get<double>(),
          v[1][1].get<double>();
      if (mc.lambda(0, 1) != mc.lambda(1, 0)) bad(where, "`lambda` must be symmetric");
    }
    mc.alpha_v = get_num(jm, where, "alpha_v", 1.0);
    mc.beta_v = get_num(jm, where, "beta_v", 1.0);
    mc.alpha_w = get_num(jm, where, "alpha_w", 1.0);
    mc.beta_w = get_num(jm, where, "beta_w", 1.0);
    if (jm.contains("x0_mean") && jm.at("x0_mean").is_string()) {
      if (jm.at("x0_mean").get<std::string>() != "auto")
        bad(where, "`x0_mean` must be a number or \"auto\"");
      mc.x0_mean.reset();
    } else if (jm.contains("x0_mean")) {
      mc.x0_mean = get_num(jm, where, "x0_mean", 0.0);
    } else {
      mc.x0_mean.reset();  // default: log of the first observation
    }
    mc.x0_var = get_num(jm, where, "x0_var", 1.0);
    mc.c_prior_var = get_num(jm, where, "c_prior_var", 1.0);
    if (mc.c_prior_var <= 0.0) bad(where, "`c_prior_var` must be positive");
    echo["c"] = mc.c;
    echo["mu"] = {mc.mu[0], mc.mu[1]};
    echo["lambda"] = {{mc.lambda(0, 0), mc.lambda(0, 1)}, {mc.lambda(1, 0), mc.lambda(1, 1)}};
    echo["alpha_v"] = mc.alpha_v;
    echo["beta_v"] = mc.beta_v;
    echo["alpha_w"] = mc.alpha_w;
    echo["beta_w"] = mc.beta_w;
    if (mc.x0_mean)
      echo["x0_mean"] = *mc.x0_mean;
    else
      echo["x0_mean"] = "auto";
    echo["x0_var"] = mc.x0_var;
    echo["c_prior_var"] = mc.c_prior_var;
  } else if (mc.id == "epidemic") {
    check_keys(jm, where, {"id", "x0", "survival", "a", "b"});
    mc.x0_count = get_int(jm, where, "x0", -1);
    if (mc.x0_count < 0) bad(where, "`x0` must be a nonnegative integer");
    mc.survival = need_num(jm, where, "survival");
    if (!(mc.survival > 0.0 && mc.survival < 1.0)) bad(where, "`survival` must lie in (0,1)");
    mc.a = get_num(jm, where, "a", 1.0);
    mc.b = get_num(jm, where, "b", 1.0);
    if (mc.a <= 0.0 || mc.b <= 0.0) bad(where, "`a` and `b` must be positive");
    echo["x0"] = mc.x0_count;
    echo["survival"] = mc.survival;
    echo["a"] = mc.a;
    echo["b"] = mc.b;
  } else {
    bad(where, "unknown model id `" + mc.id +
                   "` (valid: benchmark, linear-gaussian, population, epidemic)");
  }

  if (mc.id != "epidemic") {
    if (mc.alpha_v <= 0.0 || mc.beta_v <= 0.0 || mc.alpha_w <= 0.0 || mc.beta_w <= 0.0)
      bad(where, "prior shapes and rates must be positive");
    if (mc.x0_var <= 0.0) bad(where, "`x0_var` must be positive");
  }
  return mc;
}

// --- data section ----------------------------------------------------------

DataConfig parse_data(const ojson& jd, ojson& echo) {
  const std::string where = "data";
  want_object(jd, where);
  check_keys(jd, where, {"simulate", "path"});
  DataConfig dc;
  const bool has_sim = jd.contains("simulate");
  const bool has_path = jd.contains("path");
  if (has_sim == has_path) bad(where, "need exactly one of `simulate` or `path`");
  if (has_path) {
    dc.simulate = false;
    dc.path = get_str(jd, where, "path", "");
    if (dc.path.empty()) bad(where, "`path` must be a nonempty string");
    echo["path"] = dc.path;
    return dc;
  }
  dc.simulate = true;
  const ojson& js = want_object(jd.at("simulate"), "data.simulate");
  check_keys(js, "data.simulate", {"theta", "T", "seed"});
  if (!js.contains("theta")) bad("data.simulate", "missing required key `theta`");
  dc.theta = get_named_map(js.at("theta"), "data.simulate.theta");
  dc.T = static_cast<int>(get_int(js, "data.simulate", "T", 0));
  if (dc.T < 1) bad("data.simulate", "`T` must be a positive integer");
  const long seed = get_int(js, "data.simulate", "seed", 0);
  if (seed < 0) bad("data.simulate", "`seed` must be nonnegative");
  dc.seed = static_cast<std::uint64_t>(seed);
  ojson echo_sim;
  ojson theta_echo = ojson::object();
  for (const auto& [k, v] : dc.theta) theta_echo[k] = v;
  echo_sim["theta"] = theta_echo;
  echo_sim["T"] = dc.T;
  echo_sim["seed"] = seed;
  echo["simulate"] = echo_sim;
  return dc;
}

// --- sampler sections --------------------------------------------------------

const std::vector<std::string> sampler_keys = {
    "method",       "num_particles", "iterations",          "seed",
    "stream",       "threads",       "block_prefix",        "block_overlap",
    "init_params",  "rw_var",        "init_unmarginalized", "store_trajectories"};

void parse_sampler_into(const ojson& js, const std::string& where, VariantConfig& vc) {
  want_object(js, where);
  check_keys(js, where, [&] {
    std::vector<std::string> keys = sampler_keys;
    if (where != "sampler") keys.push_back("name");
    return keys;
  }());

  SamplerConfig& sc = vc.sampler;
  if (js.contains("method")) {
    const std::string tag = get_str(js, where, "method", "");
    sc.method = method_from_string(tag);  // throws listing the valid tags
  }
  sc.num_particles = static_cast<int>(get_int(js, where, "num_particles", sc.num_particles));
  sc.iterations = static_cast<int>(get_int(js, where, "iterations", sc.iterations));
  const long seed = get_int(js, where, "seed", static_cast<long>(sc.seed));
  if (seed < 0) bad(where, "`seed` must be nonnegative");
  sc.seed = static_cast<std::uint64_t>(seed);
  const long stream = get_int(js, where, "stream", static_cast<long>(sc.stream));
  if (stream < 0) bad(where, "`stream` must be nonnegative");
  sc.stream = static_cast<std::uint64_t>(stream);
  sc.threads = static_cast<int>(get_int(js, where, "threads", sc.threads));
  sc.block_prefix = static_cast<int>(get_int(js, where, "block_prefix", sc.block_prefix));
  sc.block_overlap = static_cast<int>(get_int(js, where, "block_overlap", sc.block_overlap));
  sc.rw_var = get_num(js, where, "rw_var", sc.rw_var);
  sc.init_unmarginalized = get_num(js, where, "init_unmarginalized", sc.init_unmarginalized);
  sc.store_trajectories = get_bool(js, where, "store_trajectories", sc.store_trajectories);
  if (js.contains("init_params"))
    vc.init_params = get_named_map(js.at("init_params"), where + ".init_params");

  if (sc.num_particles < 1) bad(where, "`num_particles` must be positive");
  if (sc.iterations < 1) bad(where, "`iterations` must be positive");
  if (sc.threads < 1) bad(where, "`threads` must be positive");
  if (sc.rw_var <= 0.0) bad(where, "`rw_var` must be positive");
  const bool blocked =
      sc.method == Method::blocked_mpg || sc.method == Method::blocked_mpgas;
  if (blocked) {
    if (sc.block_prefix < 1) bad(where, "`block_prefix` must be at least 1");
    if (sc.block_overlap < 0) bad(where, "`block_overlap` must be nonnegative");
  }
}

void echo_sampler(const VariantConfig& vc, ojson& echo) {
  const SamplerConfig& sc = vc.sampler;
  echo["method"] = method_to_string(sc.method);
  echo["num_particles"] = sc.num_particles;
  echo["iterations"] = sc.iterations;
  echo["seed"] = sc.seed;
  echo["stream"] = sc.stream;
  echo["threads"] = sc.threads;
  echo["block_prefix"] = sc.block_prefix;
  echo["block_overlap"] = sc.block_overlap;
  if (!vc.init_params.empty()) {
    ojson ip = ojson::object();
    for (const auto& [k, v] : vc.init_params) ip[k] = v;
    echo["init_params"] = ip;
  }
  echo["rw_var"] = sc.rw_var;
  echo["init_unmarginalized"] = sc.init_unmarginalized;
  echo["store_trajectories"] = sc.store_trajectories;
}

// --- diagnostics / output sections ---------------------------------------------

DiagnosticsConfig parse_diagnostics(const ojson* jd, ojson& echo) {
  DiagnosticsConfig dc;
  const std::string where = "diagnostics";
  if (jd) {
    want_object(*jd, where);
    check_keys(*jd, where,
               {"burn_in", "acf_max_lag", "histogram_bins", "update_frequency", "thin",
                "filtered"});
    dc.burn_in = static_cast<int>(get_int(*jd, where, "burn_in", dc.burn_in));
    dc.acf_max_lag = static_cast<int>(get_int(*jd, where, "acf_max_lag", dc.acf_max_lag));
    dc.histogram_bins = static_cast<int>(get_int(*jd, where, "histogram_bins", dc.histogram_bins));
    dc.update_frequency = get_bool(*jd, where, "update_frequency", dc.update_frequency);
    dc.thin = static_cast<int>(get_int(*jd, where, "thin", dc.thin));
    dc.filtered = get_str(*jd, where, "filtered", dc.filtered);
  }
  if (dc.burn_in < 0) bad(where, "`burn_in` must be nonnegative");
  if (dc.acf_max_lag < 0) bad(where, "`acf_max_lag` must be nonnegative");
  if (dc.histogram_bins < 0) bad(where, "`histogram_bins` must be nonnegative");
  if (dc.thin < 1) bad(where, "`thin` must be positive");
  if (dc.filtered != "none" && dc.filtered != "state" && dc.filtered != "exp-state")
    bad(where, "`filtered` must be one of none, state, exp-state");
  echo["burn_in"] = dc.burn_in;
  echo["acf_max_lag"] = dc.acf_max_lag;
  echo["histogram_bins"] = dc.histogram_bins;
  echo["update_frequency"] = dc.update_frequency;
  echo["thin"] = dc.thin;
  echo["filtered"] = dc.filtered;
  return dc;
}

OutputConfig parse_output(const ojson* jo, ojson& echo) {
  OutputConfig oc;
  const std::string where = "output";
  if (jo) {
    want_object(*jo, where);
    check_keys(*jo, where, {"directory", "chains"});
    oc.directory = get_str(*jo, where, "directory", oc.directory);
    oc.chains = static_cast<int>(get_int(*jo, where, "chains", oc.chains));
  }
  if (oc.directory.empty()) bad(where, "`directory` must be nonempty");
  if (oc.chains < 1) bad(where, "`chains` must be positive");
  echo["directory"] = oc.directory;
  echo["chains"] = oc.chains;
  return oc;
}

// --- overrides ----------------------------------------------------------------

void apply_override(ojson& root, const std::string& spec) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override must look like key.path=value: " + spec);
  const std::string path = spec.substr(0, eq);
  const std::string value = spec.substr(eq + 1);

  std::vector<std::string> segs;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    segs.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }

  ojson* node = &root;
  for (size_t i = 0; i + 1 < segs.size(); ++i) {
    const std::string& s = segs[i];
    if (node->is_array()) {
      if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("override path `" + path + "`: `" + s +
                                    "` is not an array index");
      const size_t idx = std::stoul(s);
      if (idx >= node->size())
        throw std::invalid_argument("override path `" + path + "`: index " + s + " out of range");
      node = &(*node)[idx];
    } else if (node->is_object() || node->is_null()) {
      node = &(*node)[s];
    } else {
      throw std::invalid_argument("override path `" + path + "` crosses a non-object value");
    }
  }

  ojson parsed;
  try {
    parsed = ojson::parse(value);
  } catch (const ojson::parse_error&) {
    parsed = value;  // bare strings allowed without quotes
  }
  if (node->is_array()) {
    const std::string& s = segs.back();
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("override path `" + path + "`: `" + s +
                                  "` is not an array index");
    const size_t idx = std::stoul(s);
    if (idx >= node->size())
      throw std::invalid_argument("override path `" + path + "`: index " + s + " out of range");
    (*node)[idx] = parsed;
  } else if (node->is_object() || node->is_null()) {
    (*node)[segs.back()] = parsed;
  } else {
    throw std::invalid_argument("override path `" + path + "` crosses a non-object value");
  }
}

ExperimentConfig resolve(const ojson& raw, const std::string& origin) {
  want_object(raw, origin);
  check_keys(raw, "top level", {"model", "data", "sampler", "variants", "diagnostics", "output"});
  for (const char* req : {"model", "data", "sampler"})
    if (!raw.contains(req)) bad("top level", std::string("missing required section `") + req + "`");

  ExperimentConfig cfg;
  ojson res = ojson::object();

  ojson model_echo = ojson::object();
  cfg.model = parse_model(raw.at("model"), model_echo);
  res["model"] = model_echo;

  ojson data_echo = ojson::object();
  cfg.data = parse_data(raw.at("data"), data_echo);
  res["data"] = data_echo;

  VariantConfig base;
  parse_sampler_into(raw.at("sampler"), "sampler", base);
  ojson sampler_echo = ojson::object();
  echo_sampler(base, sampler_echo);
  res["sampler"] = sampler_echo;

  if (raw.contains("variants")) {
    const ojson& jv = raw.at("variants");
    if (!jv.is_array() || jv.empty()) bad("variants", "must be a nonempty array");
    std::set<std::string> seen;
    ojson variants_echo = ojson::array();
    for (size_t i = 0; i < jv.size(); ++i) {
      const std::string where = "variants[" + std::to_string(i) + "]";
      const ojson& item = want_object(jv[i], where);
      VariantConfig vc = base;
      vc.name = get_str(item, where, "name", "");
      if (vc.name.empty()) bad(where, "missing required key `name`");
      if (!seen.insert(vc.name).second) bad(where, "duplicate variant name `" + vc.name + "`");
      parse_sampler_into(item, where, vc);
      ojson ve = ojson::object();
      ve["name"] = vc.name;
      echo_sampler(vc, ve);
      variants_echo.push_back(ve);
      cfg.variants.push_back(std::move(vc));
    }
    res["variants"] = variants_echo;
  } else {
    base.name = method_to_string(base.sampler.method);
    cfg.variants.push_back(base);
  }

  ojson diag_echo = ojson::object();
  cfg.diagnostics = parse_diagnostics(raw.contains("diagnostics") ? &raw.at("diagnostics") : nullptr,
                                      diag_echo);
  res["diagnostics"] = diag_echo;

  ojson out_echo = ojson::object();
  cfg.output = parse_output(raw.contains("output") ? &raw.at("output") : nullptr, out_echo);
  res["output"] = out_echo;

  // Cross-field checks that do not need the data loaded.
  for (const VariantConfig& vc : cfg.variants) {
    const SamplerConfig& sc = vc.sampler;
    const bool blocked =
        sc.method == Method::blocked_mpg || sc.method == Method::blocked_mpgas;
    if (blocked && cfg.data.simulate && sc.block_prefix + sc.block_overlap >= cfg.data.T)
      bad("variant `" + vc.name + "`",
          "block_prefix + block_overlap must be smaller than T (" +
              std::to_string(sc.block_prefix) + " + " + std::to_string(sc.block_overlap) +
              " >= " + std::to_string(cfg.data.T) + ")");
    if (sc.method == Method::mpmmh && cfg.model.id != "population")
      bad("variant `" + vc.name + "`",
          "mpmmh needs a model with an unmarginalized parameter (population)");
  }
  if (cfg.model.id == "population" && !cfg.model.x0_mean && cfg.data.simulate)
    bad("model", "`x0_mean: auto` needs observed data; give a number when simulating");

  cfg.resolved_text = res.dump(2) + "\n";
  return cfg;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin,
                                   const std::vector<std::string>& overrides) {
  ojson raw;
  try {
    raw = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw std::invalid_argument(origin + ": JSON parse error at byte " +
                                std::to_string(e.byte) + ": " + e.what());
  }
  for (const std::string& ov : overrides) apply_override(raw, ov);
  return resolve(raw, origin);
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path, overrides);
}

std::unique_ptr<Ssm> build_model(const ModelConfig& mc, std::optional<double> first_obs) {
  if (mc.id == "benchmark")
    return std::make_unique<BenchmarkModel>(mc.alpha_v, mc.beta_v, mc.alpha_w, mc.beta_w,
                                            *mc.x0_mean, mc.x0_var);
  if (mc.id == "linear-gaussian")
    return std::make_unique<LinearGaussianModel>(mc.phi, mc.alpha_v, mc.beta_v, mc.alpha_w,
                                                 mc.beta_w, *mc.x0_mean, mc.x0_var);
  if (mc.id == "population") {
    double x0_mean;
    if (mc.x0_mean) {
      x0_mean = *mc.x0_mean;
    } else {
      require(first_obs.has_value() && *first_obs > 0.0,
              "population model with automatic x0_mean needs a positive first observation");
      x0_mean = std::log(*first_obs);
    }
    return std::make_unique<PopulationModel>(mc.c, mc.mu, mc.lambda, mc.alpha_v, mc.beta_v,
                                             mc.alpha_w, mc.beta_w, x0_mean, mc.x0_var,
                                             mc.c_prior_var);
  }
  if (mc.id == "epidemic")
    return std::make_unique<EpidemicModel>(mc.x0_count, mc.survival, mc.a, mc.b);
  throw std::invalid_argument("build_model: unknown model id `" + mc.id + "`");
}

ParamDraw named_params(const Ssm& model, const std::map<std::string, double>& named) {
  const std::vector<std::string> names = model.param_names();
  if (named.size() != names.size()) {
    std::string have;
    for (const auto& [k, v] : named) have += (have.empty() ? "" : ", ") + k;
    std::string want;
    for (const auto& n : names) want += (want.empty() ? "" : ", ") + n;
    throw std::invalid_argument("parameters for " + model.name() + " must be exactly {" + want +
                                "}, got {" + have + "}");
  }
  ParamDraw theta(names.size());
  for (size_t i = 0; i < names.size(); ++i) {
    auto it = named.find(names[i]);
    if (it == named.end())
      throw std::invalid_argument("missing parameter `" + names[i] + "` for model " +
                                  model.name());
    theta[static_cast<Eigen::Index>(i)] = it->second;
  }
  return theta;
}

}  // namespace margsmc
