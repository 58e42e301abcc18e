#include "margsmc/experiment.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "margsmc/csv.hpp"
#include "margsmc/diagnostics.hpp"
#include "margsmc/util.hpp"

namespace margsmc {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

SimulatedPath simulate_data(const ExperimentConfig& cfg) {
  std::unique_ptr<Ssm> model = build_model(cfg.model);
  const ParamDraw theta = named_params(*model, cfg.data.theta);
  model->validate_params(theta);
  RngStream rng(cfg.data.seed, 0);
  return simulate(*model, theta, cfg.data.T, rng);
}

void write_observations(const std::string& path, const Eigen::VectorXd& y) {
  Eigen::MatrixXd rows(y.size(), 2);
  for (Eigen::Index t = 0; t < y.size(); ++t) rows.row(t) << static_cast<double>(t + 1), y[t];
  write_csv(path, {"t", "y"}, rows);
}

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '-';
  return out;
}

// Per-variant chain output reduced to named record columns.
struct VariantRun {
  const VariantConfig* vc = nullptr;
  Chain chain;
  double seconds = 0.0;

  bool is_mis() const { return vc->sampler.method == Method::mis; }
  bool is_mpmmh() const { return vc->sampler.method == Method::mpmmh; }

  std::vector<std::string> series_names() const {
    std::vector<std::string> names = chain.param_names;
    if (is_mpmmh()) names.push_back("c");
    return names;
  }

  // Full (unburned, unthinned) series matrix, one column per series name.
  Eigen::MatrixXd series() const {
    const Eigen::Index n = chain.params.rows();
    Eigen::MatrixXd out(n, chain.params.cols() + (is_mpmmh() ? 1 : 0));
    out.leftCols(chain.params.cols()) = chain.params;
    if (is_mpmmh()) out.col(out.cols() - 1) = chain.unmarginalized;
    return out;
  }
};

struct ExtractedSeries {
  std::vector<std::string> names;
  Eigen::MatrixXd post_burn;  // burn-in removed, unthinned
  Eigen::MatrixXd thinned;    // additionally thinned (what samples.csv holds)
  Eigen::VectorXd iteration;  // absolute iteration index per thinned row
  Eigen::VectorXd weights;    // size 0 unless weighted records (mis)
  Eigen::MatrixXd trajectories_post_burn;  // 0x0 when not stored
};

ExtractedSeries extract(const VariantRun& run, const DiagnosticsConfig& diag) {
  ExtractedSeries ex;
  ex.names = run.series_names();
  const Eigen::MatrixXd all = run.series();

  if (run.is_mis()) {
    // Weighted records from independent runs: burn-in and thinning do not apply.
    ex.post_burn = all;
    ex.thinned = all;
    ex.weights = run.chain.weights;
    ex.iteration = Eigen::VectorXd::LinSpaced(all.rows(), 0, static_cast<double>(all.rows() - 1));
    return ex;
  }

  const int n = static_cast<int>(all.rows());
  require(diag.burn_in < n, "burn_in must be smaller than the number of iterations");
  ex.post_burn = all.bottomRows(n - diag.burn_in);
  const int kept = static_cast<int>(ex.post_burn.rows());
  const int m = (kept + diag.thin - 1) / diag.thin;
  ex.thinned.resize(m, all.cols());
  ex.iteration.resize(m);
  for (int i = 0; i < m; ++i) {
    ex.thinned.row(i) = ex.post_burn.row(static_cast<Eigen::Index>(i) * diag.thin);
    ex.iteration[i] = diag.burn_in + static_cast<double>(i) * diag.thin;
  }
  if (run.chain.trajectories.size() > 0)
    ex.trajectories_post_burn = run.chain.trajectories.bottomRows(n - diag.burn_in);
  return ex;
}

std::string col_name(bool single_variant, const std::string& variant, const std::string& series) {
  return single_variant ? series : variant + "." + series;
}

void write_samples(const std::string& path, const std::vector<VariantRun>& runs,
                   const std::vector<ExtractedSeries>& ex, bool single) {
  const Eigen::Index rows = ex.front().thinned.rows();
  for (const auto& e : ex)
    require(e.thinned.rows() == rows,
            "samples.csv needs every variant to produce the same number of records; adjust "
            "iterations/burn_in/thin");

  std::vector<std::string> header = {"iteration"};
  Eigen::Index cols = 1;
  for (size_t v = 0; v < runs.size(); ++v) {
    cols += ex[v].thinned.cols() + (ex[v].weights.size() > 0 ? 1 : 0);
    for (const auto& name : ex[v].names) header.push_back(col_name(single, runs[v].vc->name, name));
    if (ex[v].weights.size() > 0) header.push_back(col_name(single, runs[v].vc->name, "weight"));
  }

  Eigen::MatrixXd table(rows, cols);
  table.col(0) = ex.front().iteration;
  Eigen::Index at = 1;
  for (size_t v = 0; v < runs.size(); ++v) {
    table.middleCols(at, ex[v].thinned.cols()) = ex[v].thinned;
    at += ex[v].thinned.cols();
    if (ex[v].weights.size() > 0) table.col(at++) = ex[v].weights;
  }
  write_csv(path, header, table);
}

void write_acf(const std::string& path, const std::vector<VariantRun>& runs,
               const std::vector<ExtractedSeries>& ex, const DiagnosticsConfig& diag,
               bool single) {
  std::vector<std::string> header = {"lag"};
  std::vector<Eigen::VectorXd> cols;
  for (size_t v = 0; v < runs.size(); ++v) {
    if (runs[v].is_mis()) continue;  // weighted records, not a chain
    const int max_lag = std::min<int>(diag.acf_max_lag, static_cast<int>(ex[v].post_burn.rows()) - 1);
    for (Eigen::Index j = 0; j < ex[v].post_burn.cols(); ++j) {
      header.push_back(col_name(single, runs[v].vc->name, ex[v].names[j]));
      Eigen::VectorXd col = Eigen::VectorXd::Constant(diag.acf_max_lag + 1,
                                                      std::numeric_limits<double>::quiet_NaN());
      try {
        col.head(max_lag + 1) = acf(ex[v].post_burn.col(j), max_lag);
      } catch (const std::exception& e) {
        std::cerr << "acf skipped for " << header.back() << ": " << e.what() << "\n";
      }
      cols.push_back(col);
    }
  }
  if (cols.empty()) return;
  Eigen::MatrixXd table(diag.acf_max_lag + 1, static_cast<Eigen::Index>(cols.size()) + 1);
  table.col(0) = Eigen::VectorXd::LinSpaced(diag.acf_max_lag + 1, 0, diag.acf_max_lag);
  for (size_t j = 0; j < cols.size(); ++j) table.col(static_cast<Eigen::Index>(j) + 1) = cols[j];
  write_csv(path, header, table);
}

void write_update_frequency(const std::string& path, const std::vector<VariantRun>& runs,
                            const std::vector<ExtractedSeries>& ex, bool single) {
  std::vector<std::string> header = {"t"};
  std::vector<Eigen::VectorXd> cols;
  for (size_t v = 0; v < runs.size(); ++v) {
    if (ex[v].trajectories_post_burn.rows() < 2) continue;
    header.push_back(col_name(single, runs[v].vc->name, "update_frequency"));
    cols.push_back(update_frequency(ex[v].trajectories_post_burn));
  }
  if (cols.empty()) return;
  Eigen::MatrixXd table(cols.front().size(), static_cast<Eigen::Index>(cols.size()) + 1);
  table.col(0) = Eigen::VectorXd::LinSpaced(cols.front().size(), 0, cols.front().size() - 1.0);
  for (size_t j = 0; j < cols.size(); ++j) table.col(static_cast<Eigen::Index>(j) + 1) = cols[j];
  write_csv(path, header, table);
}

void write_filtered(const std::string& path, const std::vector<VariantRun>& runs,
                    const std::vector<ExtractedSeries>& ex, const DiagnosticsConfig& diag,
                    bool single) {
  std::vector<std::string> header = {"t"};
  std::vector<Eigen::VectorXd> cols;
  for (size_t v = 0; v < runs.size(); ++v) {
    if (ex[v].trajectories_post_burn.rows() < 1) continue;
    Eigen::MatrixXd tr = ex[v].trajectories_post_burn;
    if (diag.filtered == "exp-state") tr = tr.array().exp().matrix();
    const Eigen::Index n = tr.rows();
    Eigen::VectorXd mean = tr.colwise().mean();
    Eigen::VectorXd sd(tr.cols());
    for (Eigen::Index t = 0; t < tr.cols(); ++t) {
      const double var =
          n > 1 ? (tr.col(t).array() - mean[t]).square().sum() / static_cast<double>(n - 1) : 0.0;
      sd[t] = std::sqrt(var);
    }
    header.push_back(col_name(single, runs[v].vc->name, "mean"));
    header.push_back(col_name(single, runs[v].vc->name, "sd"));
    cols.push_back(mean);
    cols.push_back(sd);
  }
  if (cols.empty()) return;
  Eigen::MatrixXd table(cols.front().size(), static_cast<Eigen::Index>(cols.size()) + 1);
  table.col(0) = Eigen::VectorXd::LinSpaced(cols.front().size(), 0, cols.front().size() - 1.0);
  for (size_t j = 0; j < cols.size(); ++j) table.col(static_cast<Eigen::Index>(j) + 1) = cols[j];
  write_csv(path, header, table);
}

void write_histograms(const std::string& dir, const std::vector<VariantRun>& runs,
                      const std::vector<ExtractedSeries>& ex, const DiagnosticsConfig& diag,
                      bool single) {
  for (size_t v = 0; v < runs.size(); ++v) {
    for (Eigen::Index j = 0; j < ex[v].thinned.cols(); ++j) {
      const Eigen::VectorXd& col = ex[v].thinned.col(j);
      double lo = col.minCoeff(), hi = col.maxCoeff();
      if (!(lo < hi)) {
        lo -= 0.5;
        hi += 0.5;
      }
      const Histogram h = histogram(col, diag.histogram_bins, lo, hi);
      Eigen::MatrixXd table(diag.histogram_bins, 3);
      table.col(0) = h.edges.head(diag.histogram_bins);
      table.col(1) = h.edges.tail(diag.histogram_bins);
      table.col(2) = h.counts;
      const std::string name = col_name(single, runs[v].vc->name, ex[v].names[j]);
      write_csv(dir + "/histogram-" + sanitize(name) + ".csv", {"lo", "hi", "count"}, table);
    }
  }
}

ojson summarize_variant(const VariantRun& run, const ExtractedSeries& ex,
                        const DiagnosticsConfig& diag) {
  const SamplerConfig& sc = run.vc->sampler;
  ojson out = ojson::object();
  out["method"] = method_to_string(sc.method);
  out["num_particles"] = sc.num_particles;
  out["iterations"] = sc.iterations;
  out["records"] = ex.thinned.rows();
  out["burn_in"] = run.is_mis() ? 0 : diag.burn_in;
  out["thin"] = run.is_mis() ? 1 : diag.thin;
  out["seconds"] = run.seconds;
  if (run.is_mpmmh()) {
    double acc = 0.0;
    const int n = static_cast<int>(run.chain.accepted.size());
    for (int i = diag.burn_in; i < n; ++i) acc += run.chain.accepted[i];
    out["acceptance_rate"] = acc / std::max(1, n - diag.burn_in);
  }
  if (run.is_mpmmh() || run.is_mis()) out["log_z_mean"] = run.chain.log_z.mean();

  ojson series = ojson::object();
  for (Eigen::Index j = 0; j < ex.post_burn.cols(); ++j) {
    ojson s = ojson::object();
    if (run.is_mis()) {
      const Eigen::VectorXd& w = ex.weights;
      const Eigen::VectorXd& x = ex.post_burn.col(j);
      const double mean = (w.array() * x.array()).sum();
      s["mean"] = mean;
      s["variance"] = (w.array() * (x.array() - mean).square()).sum();
      s["ess"] = 1.0 / w.array().square().sum();
    } else {
      const Summary sum = summarize(ex.post_burn.col(j));
      s["mean"] = sum.mean;
      s["variance"] = sum.sd * sum.sd;
      try {
        s["ess"] = effective_sample_size(ex.post_burn.col(j));
        s["se"] = batch_means_se(ex.post_burn.col(j));
      } catch (const std::exception&) {
        s["ess"] = nullptr;
        s["se"] = nullptr;
      }
    }
    series[ex.names[j]] = s;
  }
  out["series"] = series;
  return out;
}

// One full pass: run all variants with the given stream offset, write files
// into dir, return the per-variant summaries.
ojson run_into(const ExperimentConfig& cfg, const Ssm& model, const Eigen::VectorXd& y,
               std::uint64_t stream_offset, const std::string& dir) {
  const bool single = cfg.variants.size() == 1;
  std::vector<VariantRun> runs;
  runs.reserve(cfg.variants.size());
  for (const VariantConfig& vc : cfg.variants) {
    VariantRun run;
    run.vc = &vc;
    SamplerConfig sc = vc.sampler;
    sc.stream += stream_offset;
    if (!vc.init_params.empty()) sc.init_params = named_params(model, vc.init_params);
    const auto t0 = std::chrono::steady_clock::now();
    run.chain = run_sampler(model, sc, y);
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    runs.push_back(std::move(run));
  }

  std::vector<ExtractedSeries> ex;
  ex.reserve(runs.size());
  for (const VariantRun& run : runs) ex.push_back(extract(run, cfg.diagnostics));

  write_samples(dir + "/samples.csv", runs, ex, single);
  write_acf(dir + "/acf.csv", runs, ex, cfg.diagnostics, single);
  if (cfg.diagnostics.update_frequency) write_update_frequency(dir + "/update_frequency.csv", runs, ex, single);
  if (cfg.diagnostics.filtered != "none") write_filtered(dir + "/filtered.csv", runs, ex, cfg.diagnostics, single);
  if (cfg.diagnostics.histogram_bins > 0) write_histograms(dir, runs, ex, cfg.diagnostics, single);

  ojson variants = ojson::object();
  for (size_t v = 0; v < runs.size(); ++v)
    variants[runs[v].vc->name] = summarize_variant(runs[v], ex[v], cfg.diagnostics);
  return variants;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace

Eigen::VectorXd resolve_observations(const ExperimentConfig& cfg) {
  if (cfg.data.simulate) return simulate_data(cfg).obs;
  return load_observations(cfg.data.path);
}

void run_experiment(const ExperimentConfig& cfg) {
  const Eigen::VectorXd y = resolve_observations(cfg);
  require(y.size() >= 2, "need at least two observations");
  const std::unique_ptr<Ssm> model = build_model(cfg.model, y[0]);

  const std::string dir = cfg.output.directory;
  fs::create_directories(dir);
  write_text(dir + "/resolved_config.json", cfg.resolved_text);
  write_observations(dir + "/observations.csv", y);

  ojson summary = ojson::object();
  summary["model"] = cfg.model.id;
  summary["T"] = y.size();
  summary["chains"] = cfg.output.chains;

  if (cfg.output.chains == 1) {
    summary["variants"] = run_into(cfg, *model, y, 0, dir);
  } else {
    ojson per_chain = ojson::array();
    for (int k = 0; k < cfg.output.chains; ++k) {
      const std::string cdir = dir + "/chain-" + std::to_string(k);
      fs::create_directories(cdir);
      per_chain.push_back(run_into(cfg, *model, y, static_cast<std::uint64_t>(k), cdir));
    }
    // Pooled view: average of per-chain means, summed ESS.
    ojson pooled = ojson::object();
    for (const VariantConfig& vc : cfg.variants) {
      ojson pv = ojson::object();
      const ojson& first = per_chain[0].at(vc.name).at("series");
      for (auto it = first.begin(); it != first.end(); ++it) {
        double mean = 0.0, ess = 0.0;
        bool have_ess = true;
        for (const auto& chain : per_chain) {
          const ojson& s = chain.at(vc.name).at("series").at(it.key());
          mean += s.at("mean").get<double>();
          if (s.contains("ess") && s.at("ess").is_number())
            ess += s.at("ess").get<double>();
          else
            have_ess = false;
        }
        ojson ps = ojson::object();
        ps["mean"] = mean / cfg.output.chains;
        if (have_ess) ps["ess"] = ess;
        pv[it.key()] = ps;
      }
      pooled[vc.name] = pv;
    }
    summary["per_chain"] = per_chain;
    summary["pooled"] = pooled;
  }

  write_text(dir + "/summary.json", summary.dump(2) + "\n");
}

void run_simulate(const ExperimentConfig& cfg) {
  require(cfg.data.simulate, "simulate needs a config with a data.simulate section");
  const SimulatedPath path = simulate_data(cfg);
  const std::string dir = cfg.output.directory;
  fs::create_directories(dir);
  write_text(dir + "/resolved_config.json", cfg.resolved_text);
  write_observations(dir + "/observations.csv", path.obs);
  Eigen::MatrixXd states(path.states.size(), 2);
  for (Eigen::Index t = 0; t < path.states.size(); ++t)
    states.row(t) << static_cast<double>(t), path.states[t];
  write_csv(dir + "/states.csv", {"t", "x"}, states);
}

}  // namespace margsmc
