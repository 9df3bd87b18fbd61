#include "impatience/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "impatience/bootstrap.hpp"
#include "impatience/config.hpp"
#include "impatience/csv.hpp"
#include "impatience/error.hpp"
#include "impatience/estimators.hpp"
#include "impatience/log_io.hpp"
#include "impatience/offline_eval.hpp"
#include "impatience/optimizer.hpp"
#include "impatience/policy_io.hpp"
#include "impatience/predictor.hpp"
#include "impatience/provenance.hpp"
#include "impatience/simulator.hpp"
#include "impatience/two_auction.hpp"
#include "impatience/weight_profile.hpp"

namespace impatience {

namespace {

struct Common {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
  cmd->add_option("--config", c.config_path, "Experiment configuration (JSON)");
  cmd->add_option("--out", c.out_path, "Output file (default: standard output)");
  if (with_seed) cmd->add_option("--seed", c.seed, "Root seed (overrides experiment.seed)");
  cmd->add_option("--threads", c.threads, "Worker threads, 0 = all cores")->capture_default_str();
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  if (c.seed) cfg.experiment.seed = *c.seed;
  cfg.validate();
  return cfg;
}

Provenance provenance_of(const ExperimentConfig& cfg) { return {std::string(kToolVersion), cfg.hash()}; }

// Writes to --out when given, otherwise to the command's output stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : path_(path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw IoError("cannot open '" + path + "' for writing");
    }
    stream_ = file_ ? file_.get() : &fallback;
  }
  std::ostream& stream() { return *stream_; }
  bool to_file() const { return static_cast<bool>(file_); }
  void close() {
    if (file_) {
      file_->flush();
      if (!*file_) throw IoError("write to '" + path_ + "' failed");
    }
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::string fmt(double x) { return format_double(x); }

std::string pct(double x) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << 100.0 * x << "%";
  return s.str();
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string trace_path;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.common.out_path.empty()) throw ValidationError("out", "simulate requires --out");
  const auto cfg = load(a.common);
  auto log = simulate_log(cfg.simulation, cfg.randomization, cfg.experiment.seed, a.common.threads);
  log.provenance = provenance_of(cfg);
  write_log(log, a.common.out_path);

  if (!a.trace_path.empty()) {
    const auto trace = simulate_display_trace(cfg.simulation, cfg.randomization, cfg.experiment.seed,
                                              a.common.threads);
    Sink sink(a.trace_path, out);
    CsvWriter w(sink.stream(), log.provenance);
    w.header({"user_index", "exposure", "conversion_prob", "converted", "price", "bid"});
    for (const auto& d : trace) {
      w.row({std::to_string(d.user_index), std::to_string(d.exposure), fmt(d.conversion_prob),
             d.converted ? "1" : "0", fmt(d.price), fmt(d.bid)});
    }
    sink.close();
  }

  double cost = 0.0, value = 0.0;
  for (const auto& u : log.users) {
    cost += u.cost;
    value += u.value_predicted;
  }
  out << "wrote " << log.users.size() << " users to " << a.common.out_path << " (config " << log.provenance.config_hash
      << ")\n";
  out << "total cost " << fmt(cost) << ", total predicted value " << fmt(value) << "\n";
  return 0;
}

// --- marginals --------------------------------------------------------------

struct MarginalsArgs {
  Common common;
  std::string log_path;
  std::optional<std::size_t> resamples;
};

int cmd_marginals(const MarginalsArgs& a, std::ostream& out) {
  auto cfg = load(a.common);
  if (a.resamples) cfg.experiment.resamples = *a.resamples;
  cfg.validate();
  const auto log = read_log(std::filesystem::path(a.log_path));
  const PreparedLog prepared(log);
  BootstrapOptions opts{cfg.experiment.resamples, cfg.experiment.level, cfg.experiment.seed, a.common.threads};
  const auto est = cluster_estimates(prepared, cfg.experiment.value_metric, opts);

  Sink sink(a.common.out_path, out);
  CsvWriter w(sink.stream(), provenance_of(cfg));
  w.comment("source_log_hash", file_hash(a.log_path));
  w.comment("value_metric", to_string(cfg.experiment.value_metric));
  w.header({"cluster", "label", "n_users", "dcost", "dcost_ci_low", "dcost_ci_high", "dvalue", "dvalue_ci_low",
            "dvalue_ci_high", "mroi", "ci_low", "ci_high"});
  for (const auto& e : est) {
    const bool defined = e.mroi.has_value();
    w.row({std::to_string(e.cluster), log.buckets.label(e.cluster), std::to_string(e.n_users), fmt(e.dcost),
           fmt(e.dcost_ci.low), fmt(e.dcost_ci.high), fmt(e.dvalue), fmt(e.dvalue_ci.low), fmt(e.dvalue_ci.high),
           format_optional(e.mroi), defined ? fmt(e.mroi_ci.low) : "", defined ? fmt(e.mroi_ci.high) : ""});
  }
  sink.close();
  if (sink.to_file()) {
    out << "cluster  label  n_users      mroi  [ci_low, ci_high]\n";
    for (const auto& e : est) {
      out << std::setw(7) << e.cluster << "  " << std::setw(5) << log.buckets.label(e.cluster) << "  " << std::setw(7)
          << e.n_users << "  ";
      if (e.mroi) {
        out << std::setw(8) << std::fixed << std::setprecision(4) << *e.mroi << "  [" << e.mroi_ci.low << ", "
            << e.mroi_ci.high << "]\n";
      } else {
        out << "undefined\n";
      }
      out.unsetf(std::ios::floatfield);
    }
  }
  return 0;
}

// --- optimize ---------------------------------------------------------------

struct OptimizeArgs {
  Common common;
  std::string marginals_path;
  std::optional<double> cap;
};

int cmd_optimize(const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
  if (a.common.out_path.empty()) throw ValidationError("out", "optimize requires --out");
  auto cfg = load(a.common);
  if (a.cap) cfg.experiment.cap = *a.cap;
  cfg.validate();

  const auto table = read_csv_file(a.marginals_path);
  const auto c_cluster = table.column("cluster");
  const auto c_dcost = table.column("dcost");
  const auto c_dvalue = table.column("dvalue");
  const auto c_mroi = table.column("mroi");
  ReallocationProblem problem;
  problem.cap_delta = cfg.experiment.cap;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.lines[r];
    problem.clusters.push_back({static_cast<int>(parse_int(row[c_cluster], line)), parse_double(row[c_dcost], line),
                                parse_double(row[c_dvalue], line), !row[c_mroi].empty()});
  }

  const auto result = solve_reallocation(problem);
  PolicyFile file;
  file.policy = result.policy;
  file.policy.source_log_hash = table.comment("source_log_hash").value_or("");
  file.provenance = provenance_of(cfg);
  file.predicted_dvalue = result.predicted_dvalue;
  file.predicted_dcost = result.predicted_dcost;
  file.frozen = result.frozen;
  write_policy(file, std::filesystem::path(a.common.out_path));

  for (const auto& [c, alpha] : result.policy.multipliers) out << "cluster " << c << ": alpha = " << fmt(alpha) << "\n";
  out << "predicted dvalue " << fmt(result.predicted_dvalue) << " per unit, dcost " << fmt(result.predicted_dcost)
      << "\n";
  if (!result.diagnostic.empty()) err << result.diagnostic << "\n";
  return result.feasible ? 0 : 2;
}

// --- offline-eval -----------------------------------------------------------

struct OfflineEvalArgs {
  Common common;
  std::string log_path;
  std::string policy_path;
  std::vector<double> sweep;
  std::optional<std::size_t> resamples;
};

int cmd_offline_eval(const OfflineEvalArgs& a, std::ostream& out) {
  auto cfg = load(a.common);
  if (a.resamples) cfg.experiment.resamples = *a.resamples;
  if (!a.sweep.empty()) cfg.experiment.sweep = a.sweep;
  cfg.validate();
  const auto log = read_log(std::filesystem::path(a.log_path));
  const PreparedLog prepared(log);
  BootstrapOptions opts{cfg.experiment.resamples, cfg.experiment.level, cfg.experiment.seed, a.common.threads};
  const auto metric = cfg.experiment.value_metric;

  std::vector<OfflineEvalRow> rows;
  if (!a.policy_path.empty()) {
    rows = offline_eval(prepared, {read_policy(std::filesystem::path(a.policy_path)).policy}, metric, opts);
  } else {
    rows = amplitude_sweep(prepared, cluster_point_estimates(prepared, metric), cfg.experiment.sweep, metric, opts);
  }

  Sink sink(a.common.out_path, out);
  CsvWriter w(sink.stream(), provenance_of(cfg));
  w.comment("source_log_hash", file_hash(a.log_path));
  w.comment("value_metric", to_string(metric));
  w.header({"delta", "dvalue_linear", "dvalue_linear_ci_low", "dvalue_linear_ci_high", "dcost_linear",
            "dcost_linear_ci_low", "dcost_linear_ci_high", "dvalue_exact", "dvalue_exact_ci_low",
            "dvalue_exact_ci_high", "dcost_exact", "dcost_exact_ci_low", "dcost_exact_ci_high"});
  for (const auto& r : rows) {
    w.row({fmt(r.cap_delta), fmt(r.dvalue_linear.point), fmt(r.dvalue_linear.low), fmt(r.dvalue_linear.high),
           fmt(r.dcost_linear.point), fmt(r.dcost_linear.low), fmt(r.dcost_linear.high), fmt(r.dvalue_exact.point),
           fmt(r.dvalue_exact.low), fmt(r.dvalue_exact.high), fmt(r.dcost_exact.point), fmt(r.dcost_exact.low),
           fmt(r.dcost_exact.high)});
  }
  sink.close();
  if (sink.to_file()) {
    out << "delta   dV linear (CI width)    dV exact (CI width)\n";
    for (const auto& r : rows) {
      out << fmt(r.cap_delta) << "   " << fmt(r.dvalue_linear.point) << " (" << fmt(r.dvalue_linear.width()) << ")   "
          << fmt(r.dvalue_exact.point) << " (" << fmt(r.dvalue_exact.width()) << ")\n";
    }
  }
  return 0;
}

// --- ab-simulate ------------------------------------------------------------

struct AbArgs {
  Common common;
  std::string policy_path;
  std::optional<std::size_t> users;
  bool crn = false;
};

int cmd_ab_simulate(const AbArgs& a, std::ostream& out) {
  auto cfg = load(a.common);
  if (a.users) cfg.experiment.ab_users = *a.users;
  if (a.crn) cfg.experiment.common_random_numbers = true;
  cfg.validate();
  const auto policy = read_policy(std::filesystem::path(a.policy_path)).policy;
  const int k = cfg.simulation.buckets.count();
  const auto baseline = BidPolicy::randomized(cfg.randomization);
  const std::size_t per_arm = cfg.experiment.ab_users / 2;

  struct Variant {
    const char* name;
    ArmComparison result;
  };
  std::vector<Variant> variants;
  for (bool dynamic : {false, true}) {
    const auto treated = BidPolicy::from_policy(cfg.randomization, policy, k, dynamic);
    variants.push_back({dynamic ? "dynamic" : "fixed",
                        ab_compare(cfg.simulation, baseline, treated, per_arm, cfg.experiment.seed,
                                   cfg.experiment.common_random_numbers, cfg.experiment.value_metric,
                                   a.common.threads)});
  }

  Sink sink(a.common.out_path, out);
  CsvWriter w(sink.stream(), provenance_of(cfg));
  w.comment("policy_hash", file_hash(a.policy_path));
  w.header({"variant", "users_per_arm", "common_random_numbers", "rel_dvalue", "rel_dvalue_se", "rel_dvalue_ci_low",
            "rel_dvalue_ci_high", "rel_dcost", "rel_dcost_se", "rel_dcost_ci_low", "rel_dcost_ci_high",
            "baseline_value", "treated_value", "baseline_cost", "treated_cost"});
  for (const auto& v : variants) {
    const auto& r = v.result;
    w.row({v.name, std::to_string(r.users_per_arm), r.common_random_numbers ? "1" : "0", fmt(r.rel_dvalue),
           fmt(r.rel_dvalue_se), fmt(r.rel_dvalue_ci.low), fmt(r.rel_dvalue_ci.high), fmt(r.rel_dcost),
           fmt(r.rel_dcost_se), fmt(r.rel_dcost_ci.low), fmt(r.rel_dcost_ci.high), fmt(r.baseline_value),
           fmt(r.treated_value), fmt(r.baseline_cost), fmt(r.treated_cost)});
  }
  sink.close();
  if (sink.to_file()) {
    for (const auto& v : variants) {
      const auto& r = v.result;
      out << v.name << ": value " << pct(r.rel_dvalue) << " [" << pct(r.rel_dvalue_ci.low) << ", "
          << pct(r.rel_dvalue_ci.high) << "], cost " << pct(r.rel_dcost) << " [" << pct(r.rel_dcost_ci.low) << ", "
          << pct(r.rel_dcost_ci.high) << "]\n";
    }
  }
  return 0;
}

// --- weight-profile ---------------------------------------------------------

struct ProfileArgs {
  Common common;
  std::vector<double> alphas;
  std::optional<std::size_t> samples;
};

int cmd_weight_profile(const ProfileArgs& a, std::ostream& out) {
  auto cfg = load(a.common);
  if (!a.alphas.empty()) cfg.experiment.profile_alphas = a.alphas;
  if (a.samples) cfg.experiment.profile_samples = *a.samples;
  cfg.validate();
  const auto rows = weight_std_profile(cfg.randomization, cfg.experiment.profile_alphas,
                                       cfg.experiment.profile_samples, cfg.experiment.seed);
  Sink sink(a.common.out_path, out);
  CsvWriter w(sink.stream(), provenance_of(cfg));
  w.header({"alpha", "std_exact", "std_linear", "std_exact_analytic", "mean_exact", "se_mean", "n_samples"});
  for (const auto& r : rows) {
    w.row({fmt(r.alpha), fmt(r.std_exact), fmt(r.std_linear), fmt(r.std_exact_analytic), fmt(r.mean_exact),
           fmt(r.se_mean), std::to_string(r.n_samples)});
  }
  sink.close();
  if (sink.to_file()) out << "wrote " << rows.size() << " rows to " << a.common.out_path << "\n";
  return 0;
}

// --- two-auctions -----------------------------------------------------------

struct TwoAuctionArgs {
  Common common;
  std::optional<double> value;
  std::string first, second;
  std::optional<double> step;
};

int cmd_two_auctions(const TwoAuctionArgs& a, std::ostream& out) {
  auto cfg = load(a.common);
  auto& t = cfg.two_auctions;
  if (a.value) t.ticket_value = *a.value;
  if (!a.first.empty()) t.first = PriceDistribution::parse(a.first);
  if (!a.second.empty()) t.second = PriceDistribution::parse(a.second);
  if (a.step) t.grid_step = *a.step;
  cfg.validate();
  const auto res = two_auction_demo(t.ticket_value, t.first, t.second, t.grid_step);

  Sink sink(a.common.out_path, out);
  CsvWriter w(sink.stream(), provenance_of(cfg));
  w.comment("best_first_bid", fmt(res.best_first_bid));
  w.comment("continuation_value", fmt(res.continuation_value));
  w.header({"bid", "expected_profit"});
  for (const auto& p : res.curve) w.row({fmt(p.bid), fmt(p.expected_profit)});
  sink.close();
  if (sink.to_file()) {
    out << "best first bid " << fmt(res.best_first_bid) << " (ticket value " << fmt(t.ticket_value)
        << "), expected profit " << fmt(res.best_profit) << "\n";
  }
  return 0;
}

// --- fit-ctr ----------------------------------------------------------------

struct FitArgs {
  Common common;
  std::string events_path;
  std::vector<std::string> features;
  std::string fatigue_column = "exposure";
  std::string label_column = "converted";
  std::string delimiter = ",";
  bool no_header = false;
  std::optional<double> l2;
};

int cmd_fit_ctr(const FitArgs& a, std::ostream& out) {
  auto cfg = load(a.common);
  if (a.l2) cfg.predictor.l2 = *a.l2;
  cfg.validate();

  std::vector<DisplayEvent> events;
  if (!a.events_path.empty()) {
    const std::string delim = a.delimiter == "\\t" || a.delimiter == "tab" ? "\t" : a.delimiter;
    if (delim.size() != 1) throw ValidationError("delimiter", "must be a single character");
    events = read_events_csv(a.events_path, {a.features, a.fatigue_column, a.label_column}, delim[0], !a.no_header);
  } else {
    events = events_from_trace(
        simulate_display_trace(cfg.simulation, cfg.randomization, cfg.experiment.seed, a.common.threads));
  }

  const FatigueEncoding encoding(cfg.predictor.fatigue_buckets);
  FitOptions opts;
  opts.encoding = encoding;
  opts.l2 = cfg.predictor.l2;
  opts.max_iters = cfg.predictor.max_iters;
  opts.tol = cfg.predictor.tol;

  Sink sink(a.common.out_path, out);
  CsvWriter w(sink.stream(), provenance_of(cfg));
  if (!a.events_path.empty()) w.comment("events_hash", file_hash(a.events_path));
  w.comment("n_events", std::to_string(events.size()));
  w.header({"model", "bucket", "label", "n", "empirical", "predicted", "binomial_se"});
  std::ostringstream summary;
  for (bool fatigue : {false, true}) {
    opts.include_fatigue = fatigue;
    const auto fit = fit_ctr(events, opts);
    const char* name = fatigue ? "fatigue" : "no_fatigue";
    for (const auto& r : calibration_curve(fit.model, events, encoding)) {
      w.row({name, std::to_string(r.bucket), r.label, std::to_string(r.n), fmt(r.empirical_rate),
             fmt(r.mean_predicted), fmt(r.binomial_se)});
      if (r.n > 0) {
        summary << name << " bucket " << r.label << ": empirical " << fmt(r.empirical_rate) << ", predicted "
                << fmt(r.mean_predicted) << ", gap " << fmt((r.mean_predicted - r.empirical_rate) / r.binomial_se)
                << " se\n";
      }
    }
  }
  sink.close();
  if (sink.to_file()) out << summary.str();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual bid-multiplier estimation and reallocation for repeated auctions", "impatience"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate a randomized log");
  add_common(c_sim, sim.common);
  c_sim->add_option("--trace", sim.trace_path, "Also write the per-display trace (CSV)");

  MarginalsArgs marg;
  auto* c_marg = app.add_subcommand("marginals", "Per-cluster marginal cost, value and ROI with bootstrap CIs");
  add_common(c_marg, marg.common);
  c_marg->add_option("--log", marg.log_path, "Randomized log (JSONL)")->required();
  c_marg->add_option("--resamples", marg.resamples, "Bootstrap resamples");

  OptimizeArgs opt;
  auto* c_opt = app.add_subcommand("optimize", "Cost-neutral reallocation from a marginals table");
  add_common(c_opt, opt.common, false);
  c_opt->add_option("--marginals", opt.marginals_path, "Table written by 'marginals'")->required();
  c_opt->add_option("--cap", opt.cap, "Amplitude cap on |alpha - 1|");

  OfflineEvalArgs off;
  auto* c_off = app.add_subcommand("offline-eval", "Exact and linearized offline estimates of a policy or sweep");
  add_common(c_off, off.common);
  c_off->add_option("--log", off.log_path, "Randomized log (JSONL)")->required();
  auto* o_policy = c_off->add_option("--policy", off.policy_path, "Policy file to evaluate");
  auto* o_sweep = c_off->add_option("--sweep", off.sweep, "Comma-separated amplitudes to re-solve at")->delimiter(',');
  o_policy->excludes(o_sweep);
  c_off->add_option("--resamples", off.resamples, "Bootstrap resamples");

  AbArgs ab;
  auto* c_ab = app.add_subcommand("ab-simulate", "Simulated A/B test of a policy, fixed and dynamic variants");
  add_common(c_ab, ab.common);
  c_ab->add_option("--policy", ab.policy_path, "Policy file")->required();
  c_ab->add_option("--users", ab.users, "Total users over both arms");
  c_ab->add_flag("--crn", ab.crn, "Use common random numbers for the two arms");

  ProfileArgs prof;
  auto* c_prof = app.add_subcommand("weight-profile", "Standard deviation of exact and linearized weights");
  add_common(c_prof, prof.common);
  c_prof->add_option("--alphas", prof.alphas, "Comma-separated multipliers")->delimiter(',');
  c_prof->add_option("--samples", prof.samples, "Lognormal draws");

  TwoAuctionArgs two;
  auto* c_two = app.add_subcommand("two-auctions", "Optimal first bid in two sequential auctions");
  add_common(c_two, two.common, false);
  c_two->add_option("--value", two.value, "Ticket value");
  c_two->add_option("--first", two.first, "Competition in auction 1, e.g. uniform:0:100");
  c_two->add_option("--second", two.second, "Competition in auction 2");
  c_two->add_option("--step", two.step, "Bid grid step");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit-ctr", "Fit conversion models with and without fatigue; calibration table");
  add_common(c_fit, fit.common);
  c_fit->add_option("--events", fit.events_path, "Event CSV (default: simulate a display trace)");
  c_fit->add_option("--features", fit.features, "Feature columns")->delimiter(',');
  c_fit->add_option("--fatigue-column", fit.fatigue_column)->capture_default_str();
  c_fit->add_option("--label-column", fit.label_column)->capture_default_str();
  c_fit->add_option("--delimiter", fit.delimiter, "Field delimiter ('tab' for tab)")->capture_default_str();
  c_fit->add_flag("--no-header", fit.no_header, "Columns are named by 0-based index");
  c_fit->add_option("--l2", fit.l2, "L2 penalty");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*c_sim) return cmd_simulate(sim, out);
    if (*c_marg) return cmd_marginals(marg, out);
    if (*c_opt) return cmd_optimize(opt, out, err);
    if (*c_off) return cmd_offline_eval(off, out);
    if (*c_ab) return cmd_ab_simulate(ab, out);
    if (*c_prof) return cmd_weight_profile(prof, out);
    if (*c_two) return cmd_two_auctions(two, out);
    if (*c_fit) return cmd_fit_ctr(fit, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace impatience
