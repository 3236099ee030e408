#include <hdsa/studio.hpp>

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace hdsa {

double field_correlation_length(const FunctionSpace& space, const Vector& field) {
  const Mesh& m = space.mesh;
  const double diameter = m.dim == 1 ? 1.0 : std::sqrt(2.0);
  const Index ns = space.spatial_size();
  double sum = 0.0;
  Index used = 0;
  for (Index t = 0; t < field.size() / ns; ++t) {
    try {
      sum += correlation_length(m, Vector(field.segment(t * ns, ns))).kappa;
      ++used;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateField) throw;
    }
  }
  // A constant field is perfectly correlated across the domain.
  return used == 0 ? diameter : sum / static_cast<double>(used);
}

PerturbationBasis perturbation_basis(const PriorModel& prior, const Vector& z_tilde) {
  const auto& cov = prior.control_covariance();
  const SparseMatrix& mz = prior.control_mass();
  const double zn = std::sqrt(z_tilde.dot(mz * z_tilde));
  if (!(zn > 0)) throw Error(ErrorCode::kDegenerateScale, "z_tilde has zero norm");
  const Vector& mu = cov.generalized_eigenvalues();
  const Matrix& v = cov.generalized_eigenvectors();
  const double lead = 1.0 / mu[0];
  Index p = 0;
  while (p < mu.size() && 1.0 / mu[p] >= 0.1 * lead * (1 - 1e-12)) ++p;
  PerturbationBasis b;
  b.lambda = mu.head(p).array().inverse();
  b.directions = zn * v.leftCols(p);
  b.shift.resize(p);
  b.corr_length.resize(p);
  for (Index k = 0; k < p; ++k) {
    Vector e = cov.apply_inverse(Vector(mz * b.directions.col(k)));
    b.shift[k] = e.dot(mz * e);
    b.corr_length[k] = field_correlation_length(prior.control_space(), b.directions.col(k));
  }
  return b;
}

SampleDataset assemble_sample_dataset(const PriorModel& prior, const PerturbationBasis& basis,
                                      const std::vector<std::pair<Vector, Vector>>& unit_fields, std::uint64_t seed) {
  const auto& h = prior.hyper();
  SampleDataset ds;
  ds.q = static_cast<int>(unit_fields.size());
  ds.seed = seed;
  ds.basis = basis;
  ds.diff_scale = (h.alpha_u * h.alpha_z * basis.shift.array()).sqrt();
  ds.state_fields.resize(ds.q);
  ds.unit_diff.resize(ds.q);
  ds.state_maxabs.resize(ds.q);
  ds.state_corr.resize(ds.q);
  ds.unit_diff_maxabs.resize(ds.q);
  const double su = std::sqrt(h.alpha_u);
  detail::parallel_for(ds.q, [&](long i) {
    ds.state_fields[i] = su * unit_fields[i].first;
    ds.unit_diff[i] = unit_fields[i].second;
    ds.state_maxabs[i] = ds.state_fields[i].cwiseAbs().maxCoeff();
    ds.unit_diff_maxabs[i] = ds.unit_diff[i].cwiseAbs().maxCoeff();
    ds.state_corr[i] = field_correlation_length(prior.state_space(), ds.state_fields[i]);
  });
  return ds;
}

SampleDataset generate_sample_dataset(const PriorModel& prior, const PerturbationBasis& basis, int q,
                                      std::uint64_t seed) {
  if (q < 1) throw Error(ErrorCode::kInvalidInput, "q must be at least 1");
  std::vector<std::pair<Vector, Vector>> fields(static_cast<size_t>(q));
  detail::parallel_for(q, [&](long i) { fields[i] = prior.delta_field_parts(seed + static_cast<std::uint64_t>(i)); });
  return assemble_sample_dataset(prior, basis, fields, seed);
}

View parse_view(const std::string& s) {
  if (s == "state") return View::kState;
  if (s == "control") return View::kControl;
  throw Error(ErrorCode::kUnsupportedView, "unknown view '" + s + "'");
}

namespace {

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  double pos = p * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = std::min(lo + 1, v.size() - 1);
  double w = pos - static_cast<double>(lo);
  return (1 - w) * v[lo] + w * v[hi];
}

}  // namespace

OverviewPayload build_overview(const SampleDataset& ds, View view, int max_bins) {
  std::vector<OverviewPoint> pts;
  if (view == View::kControl) {
    for (Index i = 0; i < ds.q; ++i)
      for (Index k = 0; k < ds.basis.size(); ++k)
        pts.push_back({i, k, ds.basis.corr_length[k], ds.difference_maxabs(i, k)});
  } else {
    for (Index i = 0; i < ds.q; ++i) pts.push_back({i, 0, ds.state_corr[i], ds.state_maxabs[i]});
  }
  if (pts.empty()) throw Error(ErrorCode::kNoData, "sample dataset is empty");
  OverviewPayload p;
  p.view = view;
  p.total = static_cast<Index>(pts.size());
  const Index groups = view == View::kControl ? ds.basis.size() : ds.q;
  const int nb = static_cast<int>(std::max<Index>(1, std::min<Index>(groups, max_bins)));
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& q : pts) {
    lo = std::min(lo, q.corr);
    hi = std::max(hi, q.corr);
  }
  const int bins = hi > lo ? nb : 1;
  const double width = bins > 1 ? (hi - lo) / bins : 0.0;
  std::vector<std::vector<OverviewPoint>> members(bins);
  for (const auto& q : pts) {
    int b = width > 0 ? static_cast<int>(std::floor((q.corr - lo) / width)) : 0;
    members[std::clamp(b, 0, bins - 1)].push_back(q);
  }
  for (int b = 0; b < bins; ++b) {
    OverviewBin bin;
    bin.lo = lo + b * width;
    bin.hi = b + 1 == bins ? hi : lo + (b + 1) * width;
    bin.count = static_cast<Index>(members[b].size());
    if (bin.count > 0) {
      std::vector<double> vals;
      double cs = 0.0;
      for (const auto& q : members[b]) {
        vals.push_back(q.maxabs);
        cs += q.corr;
      }
      bin.mean_corr = cs / static_cast<double>(bin.count);
      const double ps[5] = {0.05, 0.25, 0.5, 0.75, 0.95};
      for (int k = 0; k < 5; ++k) bin.quantiles[k] = quantile(vals, ps[k]);
      if (bin.count < 500) bin.raw = members[b];
    } else {
      bin.mean_corr = 0.5 * (bin.lo + bin.hi);
      bin.quantiles.fill(std::numeric_limits<double>::quiet_NaN());
    }
    p.bins.push_back(std::move(bin));
  }
  return p;
}

TimeseriesView timeseries_view(const SampleDataset& ds, const FunctionSpace& space, const Vector& d1) {
  if (!space.time) throw Error(ErrorCode::kUnsupportedView, "time series view needs a transient scenario");
  const Index nt = space.time->n, ns = space.spatial_size();
  auto curve = [&](const Vector& f) {
    Vector c(nt);
    for (Index t = 0; t < nt; ++t) {
      Vector s = f.segment(t * ns, ns);
      c[t] = std::sqrt(s.dot(space.mass * s));
    }
    return c;
  };
  TimeseriesView v;
  v.times = space.time->times;
  for (const auto& f : ds.state_fields) v.curves.push_back(curve(f));
  v.data_curve = curve(d1);
  return v;
}

Session::Session(std::string id, const ScenarioConfig& config, const InitOptions& init)
    : id_(std::move(id)), scenario_(build_scenario(config)) {
  init_ = initialize_hyperparams(scenario_.dataset, scenario_.state_space, scenario_.control_space, scenario_.lowfi, init);
  hyper_ = init_.hyper;
  prior_ = build_prior(scenario_.state_space, scenario_.control_space, hyper_, scenario_.z_tilde);
  seed_counter_ = config.seed;
}

HyperParams Session::hyperparams() const {
  std::shared_lock lock(mutex_);
  return hyper_;
}

std::shared_ptr<const PriorModel> Session::prior() const {
  std::shared_lock lock(mutex_);
  return prior_;
}

std::shared_ptr<const SampleDataset> Session::samples() const {
  std::shared_lock lock(mutex_);
  return samples_;
}

bool Session::stale() const {
  std::shared_lock lock(mutex_);
  return stale_;
}

HyperParams Session::update_hyperparams(const Json& patch) {
  std::unique_lock lock(mutex_);
  HyperParams next = apply_hyper_patch(hyper_, patch);
  const auto& st = scenario_.state_space;
  next.validate(st.time ? st.time->n : 0);
  Json entry{{"seq", audit_.size()}, {"patch", patch}};
  if (patch.empty()) {
    entry["changed"] = false;
    audit_.push_back(entry);
    return hyper_;
  }
  auto prior = build_prior(st, scenario_.control_space, next, scenario_.z_tilde);
  hyper_ = next;
  prior_ = std::move(prior);
  if (samples_) stale_ = true;
  entry["changed"] = true;
  entry["hyperparams"] = to_json(hyper_);
  audit_.push_back(entry);
  return hyper_;
}

Json Session::generate_samples(int q, std::optional<std::uint64_t> seed) {
  if (q < 1) throw Error(ErrorCode::kInvalidInput, "q must be at least 1");
  std::unique_lock lock(mutex_);
  const std::uint64_t s = seed.value_or(seed_counter_);
  seed_counter_ = s + static_cast<std::uint64_t>(q);
  auto basis = perturbation_basis(*prior_, scenario_.z_tilde);
  samples_ = std::make_shared<const SampleDataset>(generate_sample_dataset(*prior_, basis, q, s));
  stale_ = false;
  return Json{{"q", q}, {"seed", s}, {"modes", basis.size()}, {"records", samples_->record_count()}};
}

OverviewPayload Session::overview(View view) const {
  std::shared_lock lock(mutex_);
  if (!samples_) throw Error(ErrorCode::kNoData, "no samples generated yet");
  OverviewPayload p = build_overview(*samples_, view);
  p.stale = stale_;
  return p;
}

Json Session::inspect(Index i, Index k) const {
  std::shared_lock lock(mutex_);
  if (!samples_) throw Error(ErrorCode::kNoData, "no samples generated yet");
  const SampleDataset& ds = *samples_;
  if (i < 0 || i >= ds.q || k < 0 || k >= ds.basis.size())
    throw Error(ErrorCode::kNotFound, "record (" + std::to_string(i) + "," + std::to_string(k) + ") out of range");
  Vector diff = ds.difference_field(i, k);
  return Json{{"i", i},
              {"k", k},
              {"stale", stale_},
              {"delta_z", field_json(scenario_.control_space, ds.basis.directions.col(k))},
              {"state", field_json(scenario_.state_space, ds.state_fields[i])},
              {"difference", field_json(scenario_.state_space, diff)},
              {"metrics",
               {{"state_maxabs", ds.state_maxabs[i]},
                {"state_corr_length", ds.state_corr[i]},
                {"difference_maxabs", ds.difference_maxabs(i, k)},
                {"delta_z_corr_length", ds.basis.corr_length[k]},
                {"lambda", ds.basis.lambda[k]},
                {"shift", ds.basis.shift[k]}}}};
}

TimeseriesView Session::timeseries() const {
  std::shared_lock lock(mutex_);
  if (!scenario_.state_space.time) throw Error(ErrorCode::kUnsupportedView, "scenario is stationary");
  if (!samples_) throw Error(ErrorCode::kNoData, "no samples generated yet");
  TimeseriesView v = timeseries_view(*samples_, scenario_.state_space,
                                     Vector(scenario_.dataset.d.front().array() + scenario_.dataset.dbar));
  v.stale = stale_;
  return v;
}

PosteriorSummary Session::posterior(int n, std::uint64_t seed) const {
  if (n < 1) throw Error(ErrorCode::kInvalidInput, "n must be at least 1");
  auto prior = this->prior();
  PosteriorModel post(prior, scenario_.dataset);
  SensitivityOperator sens(scenario_.problem, scenario_.z_tilde);
  PosteriorSummary s;
  s.z_tilde = scenario_.z_tilde;
  s.samples = posterior_optimum_ensemble(sens, post, n, seed);
  const Index nz = s.z_tilde.size();
  s.mean = Vector::Zero(nz);
  for (const auto& z : s.samples) s.mean += z;
  s.mean /= n;
  s.std = Vector::Zero(nz);
  for (const auto& z : s.samples) s.std.array() += (z - s.mean).array().square();
  s.std = (s.std / std::max(1, n - 1)).array().sqrt();
  s.hifi_optimum = hifi_optimum(scenario_);
  return s;
}

Json Session::export_snapshot() const {
  std::shared_lock lock(mutex_);
  Json audit = Json::array();
  for (const auto& a : audit_) audit.push_back(a);
  Json j{{"id", id_},
         {"scenario", to_json(scenario_.config)},
         {"hyperparams", to_json(hyper_)},
         {"initialization",
          {{"kappa_u", init_.smoothness.kappa_u},
           {"kappa_z", init_.smoothness.kappa_z},
           {"kappa_t", init_.smoothness.kappa_t},
           {"gamma_sq", init_.gamma.gamma_sq},
           {"gamma_mc", init_.gamma.n_mc},
           {"cos_zeta", GammaEstimate::kCosZeta},
           {"eigratio", init_.eigratio.value}}},
         {"z_tilde", to_json(scenario_.z_tilde)},
         {"dataset", to_json(scenario_.dataset)},
         {"audit", audit},
         {"stale", stale_}};
  if (samples_) {
    const auto& ds = *samples_;
    j["samples"] = {{"q", ds.q},
                    {"seed", ds.seed},
                    {"lambda", to_json(ds.basis.lambda)},
                    {"shift", to_json(ds.basis.shift)},
                    {"delta_z_corr_length", to_json(ds.basis.corr_length)},
                    {"difference_scale", to_json(ds.diff_scale)},
                    {"state_maxabs", to_json(ds.state_maxabs)},
                    {"state_corr_length", to_json(ds.state_corr)},
                    {"unit_difference_maxabs", to_json(ds.unit_diff_maxabs)}};
  } else {
    j["samples"] = nullptr;
  }
  return j;
}

Json to_json(const OverviewPayload& p) {
  Json bins = Json::array();
  for (const auto& b : p.bins) {
    Json q = Json::array();
    for (double v : b.quantiles) q.push_back(std::isfinite(v) ? Json(v) : Json(nullptr));
    Json raw = Json::array();
    for (const auto& r : b.raw) raw.push_back({{"i", r.i}, {"k", r.k}, {"corr_length", r.corr}, {"maxabs", r.maxabs}});
    Json jb{{"lo", b.lo}, {"hi", b.hi}, {"label", b.mean_corr}, {"count", b.count}, {"quantiles", q}};
    jb["raw"] = b.count < 500 ? raw : Json(nullptr);
    bins.push_back(jb);
  }
  return Json{{"view", p.view == View::kState ? "state" : "control"},
              {"stale", p.stale},
              {"total", p.total},
              {"quantile_levels", {0.05, 0.25, 0.5, 0.75, 0.95}},
              {"bins", bins}};
}

Json to_json(const TimeseriesView& t) {
  Json curves = Json::array();
  for (const auto& c : t.curves) curves.push_back(to_json(c));
  return Json{{"times", to_json(t.times)}, {"curves", curves}, {"data_curve", to_json(t.data_curve)}, {"stale", t.stale}};
}

Json to_json(const PosteriorSummary& p, const FunctionSpace& control_space) {
  Json samples = Json::array();
  for (const auto& z : p.samples) samples.push_back(to_json(z));
  return Json{{"z_tilde", to_json(p.z_tilde)},
              {"mean", to_json(p.mean)},
              {"std", to_json(p.std)},
              {"samples", samples},
              {"hifi_optimum", to_json(p.hifi_optimum)},
              {"nodes", field_json(control_space, p.z_tilde)["nodes"]}};
}

}  // namespace hdsa
