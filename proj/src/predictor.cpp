#include "impatience/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "impatience/csv.hpp"
#include "impatience/summation.hpp"

namespace impatience {

namespace {

double softplus(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

double logistic(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// Row-major design matrix with the intercept in column 0.
struct Design {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> x;
  std::vector<double> y;
};

std::size_t n_columns(const CtrModel& m) {
  return 1 + m.n_features + (m.includes_fatigue ? static_cast<std::size_t>(m.encoding.count() - 1) : 0);
}

void fill_row(const CtrModel& m, const DisplayEvent& e, double* row) {
  if (e.features.size() != m.n_features) {
    throw ValidationError("features", "expected " + std::to_string(m.n_features) + " features, got " +
                                          std::to_string(e.features.size()));
  }
  const std::size_t p = n_columns(m);
  std::fill(row, row + p, 0.0);
  row[0] = 1.0;
  std::copy(e.features.begin(), e.features.end(), row + 1);
  if (m.includes_fatigue) {
    const int b = m.encoding.bucket_of(e.fatigue_value);
    if (b > 0) row[m.n_features + static_cast<std::size_t>(b)] = 1.0;
  }
}

Design build_design(const CtrModel& m, const std::vector<DisplayEvent>& events) {
  Design d;
  d.n = events.size();
  d.p = n_columns(m);
  d.x.resize(d.n * d.p);
  d.y.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    fill_row(m, events[i], d.x.data() + i * d.p);
    d.y[i] = events[i].converted ? 1.0 : 0.0;
  }
  return d;
}

double objective(const Design& d, const std::vector<double>& w, double l2, std::vector<double>* grad) {
  CompensatedSum ll;
  std::vector<double> g(d.p, 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double* row = d.x.data() + i * d.p;
    double s = 0.0;
    for (std::size_t j = 0; j < d.p; ++j) s += row[j] * w[j];
    ll.add(d.y[i] * s - softplus(s));
    if (grad) {
      const double r = d.y[i] - logistic(s);
      for (std::size_t j = 0; j < d.p; ++j) g[j] += r * row[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(d.n);
  double penalty = 0.0;
  for (std::size_t j = 1; j < d.p; ++j) penalty += w[j] * w[j];
  if (grad) {
    grad->resize(d.p);
    for (std::size_t j = 0; j < d.p; ++j) (*grad)[j] = g[j] * inv_n - (j ? l2 * w[j] : 0.0);
  }
  return ll.value() * inv_n - 0.5 * l2 * penalty;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

FatigueEncoding::FatigueEncoding() : lower_bounds_{0, 1, 2, 3, 4, 5} {}

FatigueEncoding::FatigueEncoding(std::vector<double> lower_bounds) : lower_bounds_(std::move(lower_bounds)) {
  if (lower_bounds_.empty()) throw ValidationError("fatigue_buckets", "at least one bucket is required");
  for (std::size_t i = 0; i < lower_bounds_.size(); ++i) {
    if (!std::isfinite(lower_bounds_[i])) throw ValidationError("fatigue_buckets", "bounds must be finite");
    if (i && lower_bounds_[i] <= lower_bounds_[i - 1]) {
      throw ValidationError("fatigue_buckets", "lower bounds must be strictly increasing");
    }
  }
}

int FatigueEncoding::bucket_of(double value) const {
  if (!(value >= lower_bounds_.front())) {
    throw ValidationError("fatigue", "value " + format_double(value) + " is below the first bucket bound");
  }
  auto it = std::upper_bound(lower_bounds_.begin(), lower_bounds_.end(), value);
  return static_cast<int>(it - lower_bounds_.begin()) - 1;
}

std::string FatigueEncoding::label(int bucket) const {
  const auto b = static_cast<std::size_t>(bucket);
  const double lo = lower_bounds_[b];
  if (b + 1 == lower_bounds_.size()) return format_double(lo) + "+";
  const double hi = lower_bounds_[b + 1];
  if (lo == std::floor(lo) && hi == lo + 1.0) return format_double(lo);
  return "[" + format_double(lo) + "," + format_double(hi) + ")";
}

double CtrModel::linear_score(const DisplayEvent& e) const {
  std::vector<double> row(n_columns(*this));
  fill_row(*this, e, row.data());
  if (row.size() != weights.size()) throw ValidationError("weights", "model has the wrong number of weights");
  return dot(row, weights);
}

double CtrModel::predict(const DisplayEvent& e) const { return logistic(linear_score(e)); }

NonConvergence::NonConvergence(double grad_norm, FitResult last)
    : NumericalError("fit did not converge: gradient max-norm " + format_double(grad_norm) + " after " +
                     std::to_string(last.iterations) + " iterations"),
      grad_norm_(grad_norm),
      last_(std::move(last)) {}

double ctr_objective(const std::vector<DisplayEvent>& events, const CtrModel& model, double l2,
                     std::vector<double>* gradient) {
  if (events.empty()) throw ValidationError("events", "no events");
  const auto d = build_design(model, events);
  if (model.weights.size() != d.p) throw ValidationError("weights", "model has the wrong number of weights");
  return objective(d, model.weights, l2, gradient);
}

FitResult fit_ctr(const std::vector<DisplayEvent>& events, const FitOptions& options) {
  if (!(options.l2 >= 0.0)) throw ValidationError("l2", "must be >= 0");
  if (options.max_iters < 1) throw ValidationError("max_iters", "must be >= 1");
  if (!(options.tol > 0.0)) throw ValidationError("tol", "must be > 0");
  if (events.empty()) throw ValidationError("events", "no events");
  std::size_t positives = 0;
  for (const auto& e : events) positives += e.converted ? 1 : 0;
  if (positives == 0 || positives == events.size()) {
    throw ValidationError("events", "need at least one positive and one negative event");
  }

  FitResult r;
  r.model.n_features = events.front().features.size();
  r.model.includes_fatigue = options.include_fatigue;
  r.model.encoding = options.encoding;
  const auto d = build_design(r.model, events);

  std::vector<double> w(d.p, 0.0);
  const double rate = static_cast<double>(positives) / static_cast<double>(events.size());
  w[0] = std::log(rate / (1.0 - rate));
  std::vector<double> g;
  double f = objective(d, w, options.l2, &g);
  r.objective_history.push_back(f);

  double step = 1.0;
  std::vector<double> w_new(d.p), g_new;
  int it = 0;
  for (; it < options.max_iters && max_abs(g) >= options.tol; ++it) {
    const double gg = dot(g, g);
    double t = step;
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      for (std::size_t j = 0; j < d.p; ++j) w_new[j] = w[j] + t * g[j];
      f_new = objective(d, w_new, options.l2, &g_new);
      if (f_new >= f + 1e-4 * t * gg) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    // Barzilai-Borwein step for the next iteration.
    std::vector<double> s(d.p), yv(d.p);
    for (std::size_t j = 0; j < d.p; ++j) {
      s[j] = w_new[j] - w[j];
      yv[j] = g_new[j] - g[j];
    }
    const double sy = dot(s, yv);
    const double bb = sy != 0.0 ? dot(s, s) / std::abs(sy) : 0.0;
    step = std::isfinite(bb) && bb > 0.0 ? bb : t;

    w.swap(w_new);
    g.swap(g_new);
    f = f_new;
    r.objective_history.push_back(f);
  }

  r.model.weights = w;
  r.iterations = it;
  r.grad_norm = max_abs(g);
  {
    CompensatedSum ll;
    for (std::size_t i = 0; i < d.n; ++i) {
      const double* row = d.x.data() + i * d.p;
      double s = 0.0;
      for (std::size_t j = 0; j < d.p; ++j) s += row[j] * w[j];
      ll.add(d.y[i] * s - softplus(s));
    }
    r.log_likelihood = ll.value();
  }
  if (r.grad_norm >= options.tol) throw NonConvergence(r.grad_norm, std::move(r));
  return r;
}

std::vector<CalibrationRow> calibration_curve(const CtrModel& model, const std::vector<DisplayEvent>& events,
                                              const FatigueEncoding& buckets) {
  const auto k = static_cast<std::size_t>(buckets.count());
  std::vector<CompensatedSum> pred(k);
  std::vector<CalibrationRow> rows(k);
  for (std::size_t b = 0; b < k; ++b) {
    rows[b].bucket = static_cast<int>(b);
    rows[b].label = buckets.label(static_cast<int>(b));
  }
  for (const auto& e : events) {
    const auto b = static_cast<std::size_t>(buckets.bucket_of(e.fatigue_value));
    ++rows[b].n;
    rows[b].positives += e.converted ? 1 : 0;
    pred[b].add(model.predict(e));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t b = 0; b < k; ++b) {
    auto& r = rows[b];
    if (r.n == 0) {
      r.empirical_rate = r.mean_predicted = r.binomial_se = nan;
      continue;
    }
    const double n = static_cast<double>(r.n);
    r.empirical_rate = static_cast<double>(r.positives) / n;
    r.mean_predicted = pred[b].value() / n;
    r.binomial_se = std::sqrt(r.mean_predicted * (1.0 - r.mean_predicted) / n);
  }
  return rows;
}

std::vector<DisplayEvent> events_from_trace(const std::vector<DisplayRecord>& trace) {
  std::vector<DisplayEvent> out;
  out.reserve(trace.size());
  for (const auto& d : trace) out.push_back({{}, static_cast<double>(d.exposure), d.converted});
  return out;
}

std::vector<DisplayEvent> read_events_csv(const std::string& path, const ColumnMapping& mapping, char delimiter,
                                          bool has_header) {
  const auto table = read_csv_file(path, delimiter, has_header);
  std::vector<std::size_t> feature_cols;
  for (const auto& name : mapping.features) feature_cols.push_back(table.column(name));
  const auto fatigue_col = table.column(mapping.fatigue);
  const auto label_col = table.column(mapping.label);

  std::vector<DisplayEvent> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.lines[r];
    DisplayEvent e;
    for (auto c : feature_cols) e.features.push_back(parse_double(row[c], line));
    e.fatigue_value = parse_double(row[fatigue_col], line);
    const auto label = parse_int(row[label_col], line);
    if (label != 0 && label != 1) throw ParseError(line, "label must be 0 or 1");
    e.converted = label == 1;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace impatience
