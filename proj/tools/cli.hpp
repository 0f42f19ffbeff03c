#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bergm/bergm.hpp"

namespace bergm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

/// Exit status per error category; 0 is success.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return 2;
    case ErrorKind::io: return 3;
    case ErrorKind::parse: return 4;
    case ErrorKind::model: return 5;
    case ErrorKind::dimension: return 6;
    case ErrorKind::data: return 7;
    case ErrorKind::numeric: return 8;
  }
  return 1;
}

/// Comma- or whitespace-separated numbers.
inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    const std::string t = io::trim(text.substr(start, end - start));
    if (!t.empty()) {
      const auto v = io::parse_number(t);
      if (!v) throw Error(ErrorKind::parse, what + ": cannot parse '" + t + "' at position " + std::to_string(start));
      out.push_back(*v);
    }
  };
  for (std::size_t k = 0; k <= text.size(); ++k) {
    if (k == text.size() || text[k] == ',' || text[k] == ' ' || text[k] == '\t' || text[k] == '\n') {
      flush(k);
      start = k + 1;
    }
  }
  return out;
}

/// "diag:v" (v I), "diag:v1,...,vd" (diagonal), or a file with one matrix
/// row per line.
inline Matrix parse_matrix(const std::string& text, int d, const std::string& what) {
  if (text.rfind("diag:", 0) == 0) {
    const auto v = parse_list(text.substr(5), what);
    if (v.size() == 1) return Matrix::Identity(d, d) * v[0];
    if (static_cast<int>(v.size()) != d) {
      throw Error(ErrorKind::dimension, what + " has " + std::to_string(v.size()) + " diagonal entries, expected " +
                                            std::to_string(d));
    }
    Matrix m = Matrix::Zero(d, d);
    for (int k = 0; k < d; ++k) m(k, k) = v[k];
    return m;
  }
  std::vector<std::vector<double>> rows;
  for (const auto& line : io::read_lines(text)) {
    if (io::trim(line).empty()) continue;
    rows.push_back(parse_list(line, what));
  }
  if (rows.empty()) throw Error(ErrorKind::data, what + ": empty matrix file " + text);
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw Error(ErrorKind::parse, what + ": ragged matrix in " + text);
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  if (m.rows() != d || m.cols() != d) {
    throw Error(ErrorKind::dimension, what + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                          ", expected " + std::to_string(d) + "x" + std::to_string(d));
  }
  return m;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_number(v[k]);
  return s;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

struct NetworkOptions {
  std::string network;
  std::string attrs;
  std::string missing;
  int n = 0;
  bool directed = false;
  int index_base = 0;
};

struct CommonOptions {
  std::string model;
  std::string offset_coef;
  std::string prior_mean;
  std::string prior_sigma;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out = ".";
  std::string format = "csv";
};

struct Options {
  NetworkOptions net;
  CommonOptions common;
  // fit / fit-missing
  std::string method = "bayes";
  int burn_in = 100;
  int main_iters = 1000;
  std::uint64_t aux_iters = 1000;
  int nchains = 0;
  double gamma = 0.5;
  std::string v_proposal;
  int n_imp = 0;
  std::uint64_t missing_update = 0;
  // mple
  std::string design_csv;
  // evidence
  std::string evidence_method = "cj";
  std::string estimate = "cd";
  std::uint64_t apl_aux_iters = 2500;
  int ev_burn_in = 5000;
  int ev_main_iters = 30000;
  int n_aux_draws = 50;
  std::uint64_t aux_thin = 50;
  int ladder = 200;
  int mle_draws = 200;
  int max_iter = 25;
  double tol = 0.1;
  std::uint64_t cd_steps = 0;
  int curvature_draws = 1000;
  bool exact_independent = true;
  double ev_v_proposal = 1.5;
  int num_samples = 25000;
  int rungs = 20;
  double ladder_power = 5.0;
  int rung_burn_in = 500;
  int rung_iters = 5000;
  bool cold_start = false;
  // compare
  std::vector<std::string> evidence_files;
  std::string prior_probs;
  // gof
  std::string fit_draws;
  int sample_size = 100;
  std::uint64_t gof_aux_iters = 10000;
  int n_deg = 0, n_ideg = 0, n_odeg = 0, n_dist = 0, n_esp = 0;
  bool start_empty = false;
  // simulate
  std::string theta;
  std::uint64_t sim_aux_iters = 10000;
  int draws = 1;
};

inline Graph load_graph(const NetworkOptions& o) {
  if (o.network.empty() && o.attrs.empty() && o.n <= 0) {
    throw Error(ErrorKind::usage, "a network is required: --network, --attrs, or --n");
  }
  if (o.network.empty()) {
    if (!o.attrs.empty()) {
      const auto table = io::read_attributes(o.attrs);
      Graph g(static_cast<int>(table.labels.size()), o.directed);
      g.set_labels(table.labels);
      for (const auto& [name, values] : table.columns) g.set_attribute(name, values);
      return g;
    }
    return Graph(o.n, o.directed);
  }
  io::NetworkFiles files;
  files.edges = o.network;
  files.attributes = o.attrs;
  files.missing = o.missing;
  if (o.n > 0) files.n = o.n;
  files.directed = o.directed;
  files.index_base = o.index_base;
  return io::load_network(files);
}

inline Model load_model(const CommonOptions& c, const Graph& g) {
  if (c.model.empty()) throw Error(ErrorKind::usage, "--model is required");
  const auto offsets = parse_list(c.offset_coef, "--offset-coef");
  return validate(parse_formula(c.model), g, offsets);
}

/// Prior over the free coordinates; mean 0 and covariance 100 I by default.
/// A mean of full model dimension is reduced to the free block.
inline GaussianPrior load_prior(const CommonOptions& c, const Model& m) {
  const int free = m.free_dim();
  Vector mean = Vector::Zero(free);
  int d = free;
  if (!c.prior_mean.empty()) {
    const auto v = parse_list(c.prior_mean, "--prior-mean");
    if (static_cast<int>(v.size()) != free && static_cast<int>(v.size()) != m.dim()) {
      throw Error(ErrorKind::dimension, "--prior-mean has " + std::to_string(v.size()) + " entries, model has " +
                                            std::to_string(free) + " free coordinates");
    }
    d = static_cast<int>(v.size());
    mean = Eigen::Map<const Vector>(v.data(), d);
  }
  const Matrix sigma = c.prior_sigma.empty() ? Matrix(Matrix::Identity(d, d) * 100.0)
                                             : parse_matrix(c.prior_sigma, d, "--prior-sigma");
  return GaussianPrior(mean, sigma).for_model(m);
}

inline void write_summary(const SummaryTable& t, const std::string& dir, const std::string& format,
                          std::vector<std::string>& outputs) {
  if (format == "json") {
    json j;
    j["acceptance_rate"] = t.acceptance_rate;
    j["draws"] = t.draws;
    for (const auto& r : t.rows) {
      j["parameters"].push_back({{"name", r.name},
                                 {"mean", r.mean},
                                 {"sd", r.sd},
                                 {"naive_se", r.naive_se},
                                 {"ts_se", r.ts_se},
                                 {"quantiles", r.quantiles}});
    }
    std::ofstream out(fs::path(dir) / "summary.json");
    if (!out) throw Error(ErrorKind::io, "cannot write file: " + (fs::path(dir) / "summary.json").string());
    out << j.dump(2) << '\n';
    outputs.push_back("summary.json");
  } else {
    write_summary_csv(t, (fs::path(dir) / "summary.csv").string());
    outputs.push_back("summary.csv");
  }
}

inline void print_summary(const SummaryTable& t, std::ostream& os) {
  os << std::left << std::setw(28) << "parameter" << std::right;
  for (const char* h : {"mean", "sd", "naive_se", "ts_se", "2.5%", "50%", "97.5%"}) os << std::setw(11) << h;
  os << '\n' << std::fixed << std::setprecision(4);
  for (const auto& r : t.rows) {
    os << std::left << std::setw(28) << r.name << std::right << std::setw(11) << r.mean << std::setw(11) << r.sd
       << std::setw(11) << r.naive_se << std::setw(11) << r.ts_se << std::setw(11) << r.quantiles[0]
       << std::setw(11) << r.quantiles[2] << std::setw(11) << r.quantiles[4] << '\n';
  }
  os << "acceptance rate: " << t.acceptance_rate << '\n';
  os.unsetf(std::ios::fixed);
}

inline PosteriorSample read_draws(const std::string& path) {
  const auto lines = io::read_lines(path);
  if (lines.empty()) throw Error(ErrorKind::data, "empty draws file: " + path);
  const auto header = io::split_fields(lines[0], ',');
  if (header.size() < 3 || io::trim(header[0]) != "chain" || io::trim(header[1]) != "iter") {
    throw Error(ErrorKind::parse, path + ": expected header 'chain,iter,<parameters>'");
  }
  PosteriorSample s;
  for (std::size_t c = 2; c < header.size(); ++c) s.names.push_back(io::trim(header[c]));
  std::vector<std::vector<double>> rows;
  int max_chain = 0;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (io::trim(lines[l]).empty()) continue;
    const auto f = io::split_fields(lines[l], ',');
    if (f.size() != header.size()) {
      throw Error(ErrorKind::parse, path + ": line " + std::to_string(l + 1) + " has " + std::to_string(f.size()) +
                                        " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < f.size(); ++c) {
      const auto v = io::parse_number(io::trim(f[c]));
      if (!v) throw Error(ErrorKind::parse, path + ": line " + std::to_string(l + 1) + ", field " + std::to_string(c + 1));
      row.push_back(*v);
    }
    max_chain = std::max(max_chain, static_cast<int>(row[0]));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::data, "no draws in " + path);
  s.draws.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(s.names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < s.names.size(); ++c) s.draws(r, c) = rows[r][c + 2];
  s.nchains = max_chain + 1;
  s.main_iters = static_cast<int>((rows.size() + s.nchains - 1) / s.nchains);
  return s;
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, path + ": " + e.what());
  }
}

inline void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write file: " + path.string());
  out << j.dump(2) << '\n';
}

inline std::string absolute_or_empty(const std::string& p) { return p.empty() ? p : fs::absolute(p).string(); }

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(std::vector<std::string> args) {
    if (!args.empty() && args[0] == "--manifest") return rerun(args);
    CLI::App app{"Bayesian exponential random graph models"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", "bergm 1.0.0");
    Options o;
    std::map<std::string, CLI::App*> subs;
    add_fit(app, o, subs);
    add_fit_missing(app, o, subs);
    add_mple(app, o, subs);
    add_evidence(app, o, subs);
    add_compare(app, o, subs);
    add_gof(app, o, subs);
    add_simulate(app, o, subs);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
      out_ << app.help();
      return 0;
    } catch (const CLI::CallForVersion& e) {
      out_ << "bergm 1.0.0\n";
      return 0;
    } catch (const CLI::ParseError& e) {
      err_ << "error: usage: " << e.what() << '\n';
      return exit_code(ErrorKind::usage);
    }
    std::string name;
    for (const auto& [n, sub] : subs)
      if (sub->parsed()) name = n;
    try {
      fs::create_directories(o.common.out);
      std::vector<std::string> outputs;
      if (name == "fit") {
        fit(o, outputs);
      } else if (name == "fit-missing") {
        fit_missing(o, outputs);
      } else if (name == "mple") {
        run_mple(o, outputs);
      } else if (name == "evidence") {
        evidence(o, outputs);
      } else if (name == "compare") {
        run_compare(o, outputs);
      } else if (name == "gof") {
        gof(o, outputs);
      } else if (name == "simulate") {
        simulate(o, outputs);
      }
      write_manifest(name, *subs.at(name), o, outputs);
    } catch (const Error& e) {
      err_ << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
      return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
      err_ << "error: io: " << e.what() << '\n';
      return exit_code(ErrorKind::io);
    }
    return 0;
  }

 private:
  // --- option groups ---

  static void add_network(CLI::App* s, NetworkOptions& n, bool missing) {
    s->add_option("--network", n.network, "edge list file (i j or i,j per line)");
    s->add_option("--attrs", n.attrs, "attribute table: label column then attributes, header row");
    if (missing) s->add_option("--missing-file", n.missing, "unobserved dyads, same format as the edge list")->required();
    s->add_option("--n", n.n, "node count when no attribute file is given");
    s->add_flag("--directed", n.directed, "directed network");
    s->add_option("--index-base", n.index_base, "numeric node ids start at 0 or 1")->check(CLI::IsMember({0, 1}));
  }

  static void add_common(CLI::App* s, CommonOptions& c, bool prior) {
    s->add_option("--model", c.model, "formula, e.g. \"edges + gwesp(0.5, fixed=TRUE)\"")->required();
    s->add_option("--offset-coef", c.offset_coef, "fixed coefficients of offset terms, in order");
    if (prior) {
      s->add_option("--prior-mean", c.prior_mean, "prior mean (default 0)");
      s->add_option("--prior-sigma", c.prior_sigma, "prior covariance: diag:v, diag:v1,...,vd, or a matrix file (default diag:100)");
    }
    s->add_option("--seed", c.seed, "random seed");
    s->add_option("--threads", c.threads, "worker threads (0: BERGM_THREADS or 1)");
    s->add_option("--out", c.out, "output directory");
    s->add_option("--format", c.format, "summary format")->check(CLI::IsMember({"csv", "json"}));
  }

  static void add_exchange(CLI::App* s, Options& o) {
    s->add_option("--burn-in", o.burn_in, "burn-in iterations per chain");
    s->add_option("--main-iters", o.main_iters, "kept iterations per chain");
    s->add_option("--aux-iters", o.aux_iters, "toggles per auxiliary network");
    s->add_option("--nchains", o.nchains, "chains (0: twice the dimension, at least 4)");
    s->add_option("--gamma", o.gamma, "ADS move factor");
    s->add_option("--v-proposal", o.v_proposal, "proposal noise covariance (diag:v or matrix file; default diag:0.0025)");
  }

  void add_fit(CLI::App& app, Options& o, std::map<std::string, CLI::App*>& subs) {
    auto* s = app.add_subcommand("fit", "posterior sample by the exchange algorithm, or the MPLE");
    add_network(s, o.net, false);
    add_common(s, o.common, true);
    add_exchange(s, o);
    s->add_option("--method", o.method, "bayes or mple")->check(CLI::IsMember({"bayes", "mple"}));
    subs["fit"] = s;
  }

  void add_fit_missing(CLI::App& app, Options& o, std::map<std::string, CLI::App*>& subs) {
    auto* s = app.add_subcommand("fit-missing", "posterior sample with unobserved dyads imputed");
    add_network(s, o.net, true);
    add_common(s, o.common, true);
    add_exchange(s, o);
    s->add_option("--n-imp", o.n_imp, "imputed networks to keep");
    s->add_option("--missing-update", o.missing_update, "toggles per imputation update (0: masked dyad count)");
    subs["fit-missing"] = s;
  }

  void add_mple(CLI::App& app, Options& o, std::map<std::string, CLI::App*>& subs) {
    auto* s = app.add_subcommand("mple", "maximum pseudo-likelihood estimate");
    add_network(s, o.net, false);
    add_common(s, o.common, false);
    s->add_option("--design-csv", o.design_csv, "also write the logistic-regression design to this file");
    subs["mple"] = s;
  }

  void add_evidence(CLI::App& app, Options& o, std::map<std::string, CLI::App*>& subs) {
    auto* s = app.add_subcommand("evidence", "log evidence from the adjusted pseudo-likelihood");
    add_network(s, o.net, false);
    add_common(s, o.common, true);
    s->add_option("--method", o.evidence_method, "cj or pp")->check(CLI::IsMember({"cj", "pp"}));
    s->add_option("--estimate", o.estimate, "MLE step: cd or mle")->check(CLI::IsMember({"cd", "mle"}));
    s->add_option("--aux-iters", o.apl_aux_iters, "burn-in toggles per simulation run");
    s->add_option("--n-aux-draws", o.n_aux_draws, "draws per path-sampling rung");
    s->add_option("--aux-thin", o.aux_thin, "toggles between draws");
    s->add_option("--ladder", o.ladder, "path-sampling points");
    s->add_option("--mle-draws", o.mle_draws, "simulations per Newton step");
    s->add_option("--max-iter", o.max_iter, "Newton steps");
    s->add_option("--tol", o.tol, "standardized discrepancy for convergence");
    s->add_option("--cd-steps", o.cd_steps, "toggles per contrastive run (0: dyad count)");
    s->add_option("--curvature-draws", o.curvature_draws, "simulations for the likelihood Hessian");
    s->add_option("--exact-independent", o.exact_independent, "use exact quantities for dyad-independent models");
    s->add_option("--v-proposal", o.ev_v_proposal, "random-walk proposal scale");
    s->add_option("--burn-in", o.ev_burn_in, "random-walk burn-in");
    s->add_option("--main-iters", o.ev_main_iters, "random-walk iterations");
    s->add_option("--num-samples", o.num_samples, "draws for the posterior ordinate");
    s->add_option("--rungs", o.rungs, "power-posterior temperature steps");
    s->add_option("--ladder-power", o.ladder_power, "temperature exponent");
    s->add_option("--rung-burn-in", o.rung_burn_in, "burn-in per rung");
    s->add_option("--rung-iters", o.rung_iters, "iterations per rung");
    s->add_flag("--cold-start", o.cold_start, "run power-posterior rungs in parallel from the MLE");
    subs["evidence"] = s;
  }

  void add_compare(CLI::App& app, Options& o, std::map<std::string, CLI::App*>& subs) {
    auto* s = app.add_subcommand("compare", "Bayes factors from evidence files");
    s->add_option("--evidence-files", o.evidence_files, "evidence JSON files")->required()->expected(2, 1000);
    s->add_option("--prior-probs", o.prior_probs, "prior model probabilities (default uniform)");
    s->add_option("--out", o.common.out, "output directory");
    subs["compare"] = s;
  }

  void add_gof(CLI::App& app, Options& o, std::map<std::string, CLI::App*>& subs) {
    auto* s = app.add_subcommand("gof", "posterior-predictive goodness of fit");
    add_network(s, o.net, false);
    add_common(s, o.common, false);
    s->add_option("--fit", o.fit_draws, "draws CSV from fit")->required();
    s->add_option("--sample-size", o.sample_size, "simulated networks");
    s->add_option("--aux-iters", o.gof_aux_iters, "toggles per simulated network");
    s->add_option("--n-deg", o.n_deg, "degree bins (0: all)");
    s->add_option("--n-ideg", o.n_ideg, "in-degree bins (0: all)");
    s->add_option("--n-odeg", o.n_odeg, "out-degree bins (0: all)");
    s->add_option("--n-dist", o.n_dist, "geodesic bins including NR (0: all)");
    s->add_option("--n-esp", o.n_esp, "edgewise shared partner bins (0: all)");
    s->add_flag("--start-empty", o.start_empty, "simulate from the empty graph");
    subs["gof"] = s;
  }

  void add_simulate(CLI::App& app, Options& o, std::map<std::string, CLI::App*>& subs) {
    auto* s = app.add_subcommand("simulate", "draw networks at a fixed parameter");
    add_network(s, o.net, false);
    add_common(s, o.common, false);
    s->add_option("--theta", o.theta, "coefficients of every model term, offsets included")->required();
    s->add_option("--aux-iters", o.sim_aux_iters, "toggles before each draw");
    s->add_option("--draws", o.draws, "networks to draw");
    subs["simulate"] = s;
  }

  // --- subcommands ---

  ExchangeSettings exchange_settings(const Options& o, const Model& m) const {
    ExchangeSettings s;
    s.burn_in = o.burn_in;
    s.main_iters = o.main_iters;
    s.aux_iters = o.aux_iters;
    s.nchains = o.nchains;
    s.gamma = o.gamma;
    s.seed = o.common.seed;
    if (!o.v_proposal.empty()) s.v_proposal = parse_matrix(o.v_proposal, m.free_dim(), "--v-proposal");
    s.n_imp = o.n_imp;
    s.missing_update = o.missing_update;
    return s;
  }

  void report_fit(const PosteriorSample& post, const Options& o, std::vector<std::string>& outputs) {
    const SummaryTable t = summarize(post);
    write_summary(t, o.common.out, o.common.format, outputs);
    write_draws_csv(post, (fs::path(o.common.out) / "draws.csv").string());
    outputs.push_back("draws.csv");
    print_summary(t, out_);
  }

  void fit(Options& o, std::vector<std::string>& outputs) {
    if (o.method == "mple") {
      run_mple(o, outputs);
      return;
    }
    const Graph g = load_graph(o.net);
    const Model m = load_model(o.common, g);
    const GaussianPrior prior = load_prior(o.common, m);
    resolved_prior_ = prior;
    report_fit(exchange_fit(m, g, prior, exchange_settings(o, m)), o, outputs);
  }

  void fit_missing(Options& o, std::vector<std::string>& outputs) {
    const Graph g = load_graph(o.net);
    const Model m = load_model(o.common, g);
    const GaussianPrior prior = load_prior(o.common, m);
    resolved_prior_ = prior;
    const PosteriorSample post = exchange_fit_missing(m, g, prior, exchange_settings(o, m));
    report_fit(post, o, outputs);
    for (std::size_t k = 0; k < post.imputed.size(); ++k) {
      const std::string name = "imputed_" + std::to_string(k + 1) + ".csv";
      io::write_edge_list(post.imputed[k], (fs::path(o.common.out) / name).string());
      outputs.push_back(name);
    }
  }

  void run_mple(const Options& o, std::vector<std::string>& outputs) {
    const Graph g = load_graph(o.net);
    const Model m = load_model(o.common, g);
    const PseudoLikelihood pl(m, g);
    const PseudoFit fit = mple(pl);
    const Vector se = fit.naive_se();
    const auto path = fs::path(o.common.out) / "mple.csv";
    std::ofstream csv(path);
    if (!csv) throw Error(ErrorKind::io, "cannot write file: " + path.string());
    csv << "parameter,estimate,naive_se\n";
    out_ << "Maximum pseudo-likelihood estimate\n"
         << "Standard errors are naive: the inverse negative Hessian of the log pseudo-likelihood, which\n"
         << "ignores dyad dependence and is typically too small.\n";
    out_ << std::left << std::setw(28) << "parameter" << std::right << std::setw(12) << "estimate" << std::setw(12)
         << "naive_se" << '\n'
         << std::fixed << std::setprecision(4);
    const auto names = m.free_names();
    for (int k = 0; k < m.free_dim(); ++k) {
      csv << names[k] << ',' << format_number(fit.theta_mple[k]) << ',' << format_number(se[k]) << '\n';
      out_ << std::left << std::setw(28) << names[k] << std::right << std::setw(12) << fit.theta_mple[k]
           << std::setw(12) << se[k] << '\n';
    }
    out_ << "log pseudo-likelihood at the estimate: " << fit.log_pl_at_mode << '\n';
    out_.unsetf(std::ios::fixed);
    outputs.push_back("mple.csv");
    if (!o.design_csv.empty()) {
      write_design_csv(dyad_design(m, g), m.names(), o.design_csv);
      outputs.push_back(o.design_csv);
    }
  }

  void evidence(Options& o, std::vector<std::string>& outputs) {
    const Graph g = load_graph(o.net);
    const Model m = load_model(o.common, g);
    const GaussianPrior prior = load_prior(o.common, m);
    resolved_prior_ = prior;
    AplSettings a;
    a.aux_iters = o.apl_aux_iters;
    a.n_aux_draws = o.n_aux_draws;
    a.aux_thin = o.aux_thin;
    a.ladder = o.ladder;
    a.estimate = o.estimate == "mle" ? MleMethod::mle : MleMethod::cd;
    a.mle_draws = o.mle_draws;
    a.max_iter = o.max_iter;
    a.tol = o.tol;
    a.cd_steps = o.cd_steps;
    a.curvature_draws = o.curvature_draws;
    a.exact_independent = o.exact_independent;
    a.seed = o.common.seed;
    a.threads = o.common.threads;
    EvidenceSettings e;
    e.v_proposal = o.ev_v_proposal;
    e.burn_in = o.ev_burn_in;
    e.main_iters = o.ev_main_iters;
    e.num_samples = o.num_samples;
    e.rungs = o.rungs;
    e.ladder_power = o.ladder_power;
    e.rung_burn_in = o.rung_burn_in;
    e.rung_iters = o.rung_iters;
    e.warm_start = !o.cold_start;
    e.seed = o.common.seed;
    e.threads = o.common.threads;

    const auto started = std::chrono::steady_clock::now();
    const AdjustedPseudoLikelihood apl = ergm_apl(m, g, a);
    const EvidenceEstimate est = o.evidence_method == "pp" ? evidence_pp(apl, prior, e) : evidence_cj(apl, prior, e);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const SummaryTable t = summarize(est.sample);

    json j;
    j["model"] = o.common.model;
    j["method"] = to_string(est.method);
    j["log_evidence"] = est.log_evidence;
    j["wall_seconds"] = wall;
    j["names"] = apl.names;
    j["theta_mple"] = to_std(apl.theta_mple);
    j["theta_mle"] = to_std(apl.theta_mle);
    j["log_C"] = apl.log_C;
    j["mle_method"] = apl.exact ? "exact" : to_string(a.estimate);
    j["mle_converged"] = apl.mle_converged;
    j["warnings"] = apl.warnings;
    if (est.method == EvidenceMethod::cj) {
      j["theta_star"] = to_std(est.theta_star);
      j["log_ordinate"] = est.log_ordinate;
    } else {
      j["temperatures"] = est.temperatures;
      j["rung_means"] = est.rung_means;
      j["rung_variances"] = est.rung_variances;
    }
    j["acceptance_rate"] = t.acceptance_rate;
    for (const auto& r : t.rows) {
      j["summary"].push_back({{"name", r.name}, {"mean", r.mean}, {"sd", r.sd}, {"quantiles", r.quantiles}});
    }
    write_json(j, fs::path(o.common.out) / "evidence.json");
    outputs.push_back("evidence.json");
    write_summary(t, o.common.out, o.common.format, outputs);
    write_draws_csv(est.sample, (fs::path(o.common.out) / "draws.csv").string());
    outputs.push_back("draws.csv");
    for (const auto& w : apl.warnings) err_ << "warning: " << w << '\n';
    out_ << "log evidence (" << to_string(est.method) << "): " << format_number(est.log_evidence) << '\n'
         << "wall time: " << std::fixed << std::setprecision(2) << wall << " s\n";
    out_.unsetf(std::ios::fixed);
    print_summary(t, out_);
  }

  void run_compare(const Options& o, std::vector<std::string>& outputs) {
    const std::size_t k = o.evidence_files.size();
    Vector logz(static_cast<Eigen::Index>(k));
    std::vector<json> docs;
    for (std::size_t i = 0; i < k; ++i) {
      docs.push_back(read_json(o.evidence_files[i]));
      if (!docs.back().contains("log_evidence") || !docs.back()["log_evidence"].is_number()) {
        throw Error(ErrorKind::data, o.evidence_files[i] + ": no numeric log_evidence");
      }
      logz[static_cast<Eigen::Index>(i)] = docs.back()["log_evidence"].get<double>();
    }
    Vector pri = Vector::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
    if (!o.prior_probs.empty()) {
      const auto v = parse_list(o.prior_probs, "--prior-probs");
      if (v.size() != k) throw Error(ErrorKind::dimension, "--prior-probs needs one value per evidence file");
      pri = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(k));
    }
    const ModelComparison c = compare(logz, pri);
    json j;
    out_ << std::left << std::setw(6) << "model" << std::right << std::setw(18) << "log evidence" << std::setw(12)
         << "wall (s)" << std::setw(16) << "log BF vs m1" << std::setw(14) << "post. prob" << "  formula\n";
    std::ofstream csv(fs::path(o.common.out) / "compare.csv");
    if (!csv) throw Error(ErrorKind::io, "cannot write compare.csv");
    csv << "model,file,formula,method,log_evidence,wall_seconds,log_bf_vs_m1,posterior_prob\n";
    for (std::size_t i = 0; i < k; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const std::string label = "m" + std::to_string(i + 1);
      const std::string formula = docs[i].value("model", std::string());
      const std::string method = docs[i].value("method", std::string());
      const double wall = docs[i].value("wall_seconds", 0.0);
      out_ << std::left << std::setw(6) << label << std::right << std::fixed << std::setprecision(2) << std::setw(18)
           << logz[ii] << std::setw(12) << wall << std::setw(16) << c.log_bayes_factors(ii, 0) << std::setw(14)
           << std::setprecision(4) << c.posterior_probs[ii] << "  " << formula << '\n';
      csv << label << ',' << o.evidence_files[i] << ",\"" << formula << "\"," << method << ','
          << format_number(logz[ii]) << ',' << format_number(wall) << ',' << format_number(c.log_bayes_factors(ii, 0))
          << ',' << format_number(c.posterior_probs[ii]) << '\n';
      j["models"].push_back({{"label", label},
                             {"file", o.evidence_files[i]},
                             {"formula", formula},
                             {"method", method},
                             {"log_evidence", logz[ii]},
                             {"posterior_prob", c.posterior_probs[ii]}});
    }
    out_.unsetf(std::ios::fixed);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b) {
        const double lbf = c.log_bayes_factors(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        out_ << "log BF(m" << a + 1 << ", m" << b + 1 << ") = " << std::fixed << std::setprecision(2) << lbf
             << "  (BF = " << std::scientific << std::setprecision(3) << std::exp(lbf) << ")\n";
        out_.unsetf(std::ios::fixed);
        out_.unsetf(std::ios::scientific);
        j["log_bayes_factors"].push_back({{"a", a + 1}, {"b", b + 1}, {"log_bf", lbf}});
      }
    write_json(j, fs::path(o.common.out) / "compare.json");
    outputs.push_back("compare.csv");
    outputs.push_back("compare.json");
  }

  void gof(const Options& o, std::vector<std::string>& outputs) {
    const Graph g = load_graph(o.net);
    const Model m = load_model(o.common, g);
    const PosteriorSample post = read_draws(o.fit_draws);
    if (post.names != m.free_names()) {
      throw Error(ErrorKind::dimension, o.fit_draws + ": draw columns do not match the model's free coordinates");
    }
    GofSettings s;
    s.sample_size = o.sample_size;
    s.aux_iters = o.gof_aux_iters;
    s.caps = {o.n_deg, o.n_ideg, o.n_odeg, o.n_dist, o.n_esp};
    s.start_empty = o.start_empty;
    s.seed = o.common.seed;
    s.threads = o.common.threads;
    const GofReport r = bgof(post, m, g, s);
    write_gof_csv(r, (fs::path(o.common.out) / "gof.csv").string());
    write_gof_counts_csv(gof_stats(g), (fs::path(o.common.out) / "observed_counts.csv").string());
    outputs.push_back("gof.csv");
    outputs.push_back("observed_counts.csv");
    out_ << std::fixed << std::setprecision(3);
    for (const auto& f : r.families) {
      out_ << f.name << "\n  " << std::left << std::setw(6) << "bin" << std::right << std::setw(10) << "observed"
           << std::setw(10) << "2.5%" << std::setw(10) << "50%" << std::setw(10) << "97.5%" << '\n';
      for (std::size_t b = 0; b < f.bins.size(); ++b) {
        const bool outside = f.observed[b] < f.quantiles[b][0] || f.observed[b] > f.quantiles[b][4];
        out_ << "  " << std::left << std::setw(6) << f.bins[b] << std::right << std::setw(10) << f.observed[b]
             << std::setw(10) << f.quantiles[b][0] << std::setw(10) << f.quantiles[b][2] << std::setw(10)
             << f.quantiles[b][4] << (outside ? "  *" : "") << '\n';
      }
    }
    out_.unsetf(std::ios::fixed);
    out_ << "* observed value outside the central 95% band\n";
  }

  void simulate(const Options& o, std::vector<std::string>& outputs) {
    const Graph g0 = load_graph(o.net);
    const Model m = load_model(o.common, g0);
    const auto t = parse_list(o.theta, "--theta");
    if (static_cast<int>(t.size()) != m.dim()) {
      throw Error(ErrorKind::dimension, "--theta has " + std::to_string(t.size()) + " entries, model has " +
                                            std::to_string(m.dim()) + " terms");
    }
    if (o.draws < 1) throw Error(ErrorKind::usage, "--draws must be at least 1");
    const Vector theta = Eigen::Map<const Vector>(t.data(), m.dim());
    Rng rng(o.common.seed, 0x5151ULL);
    ToggleSampler sampler(m);
    Graph y = g0;
    const auto path = fs::path(o.common.out) / "stats.csv";
    std::ofstream stats(path);
    if (!stats) throw Error(ErrorKind::io, "cannot write file: " + path.string());
    stats << "draw";
    for (const auto& nm : m.names()) stats << ',' << nm;
    stats << '\n';
    for (int k = 1; k <= o.draws; ++k) {
      sampler.run(theta, y, o.sim_aux_iters, rng);
      const Vector s = suff_stats(m, y);
      stats << k;
      for (Eigen::Index c = 0; c < s.size(); ++c) stats << ',' << format_number(s[c]);
      stats << '\n';
      const std::string edges = "sim_" + std::to_string(k) + ".csv";
      const std::string counts = "sim_" + std::to_string(k) + "_gof.csv";
      io::write_edge_list(y, (fs::path(o.common.out) / edges).string());
      write_gof_counts_csv(gof_stats(y), (fs::path(o.common.out) / counts).string());
      outputs.push_back(edges);
      outputs.push_back(counts);
    }
    outputs.push_back("stats.csv");
    out_ << "wrote " << o.draws << " network(s) to " << o.common.out << '\n';
  }

  // --- manifest ---

  void write_manifest(const std::string& name, const CLI::App& sub, const Options& o,
                      const std::vector<std::string>& outputs) {
    static const std::vector<std::string> path_options{"--network", "--attrs", "--missing-file", "--fit",
                                                       "--evidence-files", "--design-csv"};
    json j;
    j["subcommand"] = name;
    std::vector<std::string> argv{name};
    json config = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
      const std::string lname = opt->get_name();
      if (lname == "--help" || lname == "--out") continue;
      std::vector<std::string> values = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
      if (values.empty()) {
        const std::string def = opt->get_default_str();
        if (!def.empty()) values.push_back(def);
      }
      if (opt->get_expected_max() == 0 && values.empty()) values.push_back("false");
      if (lname == "--prior-mean" && resolved_prior_) values = {join(to_std(resolved_prior_->mean()))};
      if (lname == "--prior-sigma" && resolved_prior_) values = {sigma_string(resolved_prior_->sigma())};
      if (std::find(path_options.begin(), path_options.end(), lname) != path_options.end()) {
        for (auto& v : values) v = absolute_or_empty(v);
      }
      if (values.empty()) continue;
      config[lname.substr(2)] = values.size() == 1 ? json(values[0]) : json(values);
      if (opt->get_expected_max() == 0) {
        argv.push_back(lname + "=" + values[0]);
      } else if (opt->get_expected_max() > 1) {
        argv.push_back(lname);
        for (const auto& v : values) argv.push_back(v);
      } else {
        argv.push_back(lname + "=" + values[0]);
      }
    }
    j["config"] = config;
    j["argv"] = argv;
    j["seed"] = o.common.seed;
    j["outputs"] = outputs;
    write_json(j, fs::path(o.common.out) / "manifest.json");
  }

  // sigma as diag:... when diagonal, otherwise written next to the manifest
  std::string sigma_string(const Matrix& s) const {
    if (s.isDiagonal()) {
      const Vector d = s.diagonal();
      if ((d.array() == d[0]).all()) return "diag:" + format_number(d[0]);
      return "diag:" + join(to_std(d));
    }
    std::string rows;
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      std::vector<double> row(s.cols());
      for (Eigen::Index c = 0; c < s.cols(); ++c) row[c] = s(r, c);
      rows += join(row) + "\n";
    }
    return rows;
  }

  int rerun(const std::vector<std::string>& args) {
    if (args.size() < 2) {
      err_ << "error: usage: --manifest needs a file\n";
      return exit_code(ErrorKind::usage);
    }
    json j;
    try {
      j = read_json(args[1]);
    } catch (const Error& e) {
      err_ << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
      return exit_code(e.kind());
    }
    if (!j.contains("argv") || !j["argv"].is_array()) {
      err_ << "error: parse: " << args[1] << ": no argv array\n";
      return exit_code(ErrorKind::parse);
    }
    std::vector<std::string> argv = j["argv"].get<std::vector<std::string>>();
    // a covariance matrix that is not diagonal is stored inline; write it out
    for (auto& a : argv) {
      if (a.rfind("--prior-sigma=", 0) == 0 && a.find('\n') != std::string::npos) {
        const fs::path tmp = fs::temp_directory_path() / ("bergm_sigma_" + std::to_string(std::hash<std::string>{}(a)));
        std::ofstream(tmp) << a.substr(14);
        a = "--prior-sigma=" + tmp.string();
      }
    }
    std::string out_dir = ".";
    for (std::size_t k = 2; k < args.size(); ++k) {
      if (args[k] == "--out" && k + 1 < args.size()) {
        out_dir = args[++k];
      } else if (args[k].rfind("--out=", 0) == 0) {
        out_dir = args[k].substr(6);
      } else {
        err_ << "error: usage: unexpected argument after --manifest: " << args[k] << '\n';
        return exit_code(ErrorKind::usage);
      }
    }
    argv.push_back("--out=" + out_dir);
    return run(argv);
  }

  std::ostream& out_;
  std::ostream& err_;
  std::optional<GaussianPrior> resolved_prior_;
};

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return Runner(out, err).run(args);
}

}  // namespace bergm::cli
