#pragma once

#include <hdsa/json_io.hpp>
#include <hdsa/pipeline.hpp>

#include <array>
#include <optional>
#include <shared_mutex>

namespace hdsa {

struct PerturbationBasis {
  Vector lambda;      // eigenvalues of E_z^{-1}, descending
  Matrix directions;  // n_z x P, each rescaled to ||z~||_{M_z}
  Vector shift;       // s_k = ||E_z^{-1} M_z dz_k||^2_{M_z}
  Vector corr_length;

  Index size() const { return lambda.size(); }
};

PerturbationBasis perturbation_basis(const PriorModel& prior, const Vector& z_tilde);

// Field correlation length used by the studio metrics; 0 for a constant field.
double field_correlation_length(const FunctionSpace& space, const Vector& field);

struct SampleDataset {
  int q = 0;
  std::uint64_t seed = 0;
  PerturbationBasis basis;
  std::vector<Vector> state_fields;  // delta(z~, theta_i)
  std::vector<Vector> unit_diff;     // T_u omega2_i / sqrt(alpha_u)
  Vector diff_scale;                 // sqrt(alpha_u alpha_z s_k)
  Vector state_maxabs, state_corr, unit_diff_maxabs;

  Index record_count() const { return static_cast<Index>(q) * basis.size(); }
  Vector difference_field(Index i, Index k) const { return diff_scale[k] * unit_diff[i]; }
  double difference_maxabs(Index i, Index k) const { return diff_scale[k] * unit_diff_maxabs[i]; }
};

SampleDataset generate_sample_dataset(const PriorModel& prior, const PerturbationBasis& basis, int q,
                                      std::uint64_t seed);
// Builds records from given unit noise fields (pairs of T_u omega / sqrt(alpha_u)).
SampleDataset assemble_sample_dataset(const PriorModel& prior, const PerturbationBasis& basis,
                                      const std::vector<std::pair<Vector, Vector>>& unit_fields, std::uint64_t seed);

enum class View { kState, kControl };
View parse_view(const std::string& s);

struct OverviewPoint {
  Index i = 0, k = 0;
  double corr = 0.0, maxabs = 0.0;
};

struct OverviewBin {
  double lo = 0.0, hi = 0.0, mean_corr = 0.0;
  Index count = 0;
  std::array<double, 5> quantiles{};  // 5/25/50/75/95
  std::vector<OverviewPoint> raw;     // only when count < 500
};

struct OverviewPayload {
  View view = View::kControl;
  bool stale = false;
  Index total = 0;
  std::vector<OverviewBin> bins;
};

OverviewPayload build_overview(const SampleDataset& ds, View view, int max_bins = 12);

struct TimeseriesView {
  Vector times;
  std::vector<Vector> curves;
  Vector data_curve;
  bool stale = false;
};

TimeseriesView timeseries_view(const SampleDataset& ds, const FunctionSpace& state_space, const Vector& d1);

struct PosteriorSummary {
  Vector z_tilde;
  Vector mean;
  Vector std;
  std::vector<Vector> samples;
  Vector hifi_optimum;
};

class Session {
 public:
  Session(std::string id, const ScenarioConfig& config, const InitOptions& init = {});

  const std::string& id() const { return id_; }
  const Scenario& scenario() const { return scenario_; }
  HyperParams hyperparams() const;
  std::shared_ptr<const PriorModel> prior() const;

  HyperParams update_hyperparams(const Json& patch);
  Json generate_samples(int q, std::optional<std::uint64_t> seed);
  OverviewPayload overview(View view) const;
  Json inspect(Index i, Index k) const;
  TimeseriesView timeseries() const;
  PosteriorSummary posterior(int n, std::uint64_t seed) const;
  std::shared_ptr<const SampleDataset> samples() const;
  bool stale() const;
  Json export_snapshot() const;

 private:
  std::string id_;
  Scenario scenario_;
  InitReport init_;
  mutable std::shared_mutex mutex_;
  HyperParams hyper_;
  std::shared_ptr<const PriorModel> prior_;
  std::shared_ptr<const SampleDataset> samples_;
  bool stale_ = false;
  std::uint64_t seed_counter_ = 0;
  std::vector<Json> audit_;
};

Json to_json(const OverviewPayload& p);
Json to_json(const TimeseriesView& t);
Json to_json(const PosteriorSummary& p, const FunctionSpace& control_space);

}  // namespace hdsa
