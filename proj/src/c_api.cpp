#include <hdsa/hdsa.h>
#include <hdsa/studio.hpp>

#include <cstdlib>
#include <cstring>
#include <string>

struct hdsa_session {
  std::unique_ptr<hdsa::Session> impl;
};

namespace {

thread_local std::string g_last_error;

hdsa_status to_status(hdsa::ErrorCode code) { return static_cast<hdsa_status>(static_cast<int>(code)); }

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class F>
hdsa_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return HDSA_OK;
  } catch (const hdsa::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return HDSA_ERR_INVALID_INPUT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HDSA_ERR_INTERNAL;
  }
}

void emit(char** out, const hdsa::Json& j) { *out = copy_string(j.dump()); }

hdsa::InitOptions init_options(const hdsa::Json& o) {
  hdsa::InitOptions opt;
  if (o.is_null()) return opt;
  if (!o.is_object()) throw hdsa::Error(hdsa::ErrorCode::kInvalidInput, "options must be a JSON object");
  opt.delta_kappa = o.value("delta_kappa", opt.delta_kappa);
  opt.subsample = o.value("subsample", opt.subsample);
  opt.mc_gamma = o.value("mc_gamma", opt.mc_gamma);
  opt.mc_eig = o.value("mc_eig", opt.mc_eig);
  opt.seed = o.value("seed", opt.seed);
  opt.eps_t = o.value("eps_t", opt.eps_t);
  return opt;
}

hdsa::Json parse_optional(const char* text) { return text ? hdsa::parse_json(text) : hdsa::Json(); }

}  // namespace

extern "C" {

const char* hdsa_status_name(hdsa_status status) {
  switch (status) {
    case HDSA_OK: return "ok";
    case HDSA_ERR_NULL_ARGUMENT: return "null-argument";
    case HDSA_ERR_INTERNAL: return "internal-error";
    default: return hdsa::error_code_name(static_cast<hdsa::ErrorCode>(static_cast<int>(status)));
  }
}

const char* hdsa_last_error(void) { return g_last_error.c_str(); }

void hdsa_string_free(char* s) { std::free(s); }

hdsa_status hdsa_session_create(const char* id, const char* scenario_json, const char* options_json,
                                hdsa_session** out) {
  if (!out || !scenario_json) return HDSA_ERR_NULL_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    auto cfg = hdsa::scenario_from_json(hdsa::parse_json(scenario_json));
    auto opt = init_options(parse_optional(options_json));
    auto s = std::make_unique<hdsa_session>();
    s->impl = std::make_unique<hdsa::Session>(id ? id : "", cfg, opt);
    *out = s.release();
  });
}

void hdsa_session_destroy(hdsa_session* session) { delete session; }

hdsa_status hdsa_session_get_hyperparams(const hdsa_session* session, char** out_json) {
  if (!session || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] { emit(out_json, hdsa::to_json(session->impl->hyperparams())); });
}

hdsa_status hdsa_session_patch_hyperparams(hdsa_session* session, const char* patch_json, char** out_json) {
  if (!session || !patch_json || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] {
    auto h = session->impl->update_hyperparams(hdsa::parse_json(patch_json));
    emit(out_json, hdsa::to_json(h));
  });
}

hdsa_status hdsa_session_generate_samples(hdsa_session* session, int q, int64_t seed, char** out_json) {
  if (!session || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] {
    std::optional<std::uint64_t> s;
    if (seed >= 0) s = static_cast<std::uint64_t>(seed);
    emit(out_json, session->impl->generate_samples(q, s));
  });
}

hdsa_status hdsa_session_overview(const hdsa_session* session, const char* view, char** out_json) {
  if (!session || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] {
    auto v = hdsa::parse_view(view ? view : "control");
    emit(out_json, hdsa::to_json(session->impl->overview(v)));
  });
}

hdsa_status hdsa_session_inspect(const hdsa_session* session, int64_t i, int64_t k, char** out_json) {
  if (!session || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] { emit(out_json, session->impl->inspect(i, k)); });
}

hdsa_status hdsa_session_timeseries(const hdsa_session* session, char** out_json) {
  if (!session || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] { emit(out_json, hdsa::to_json(session->impl->timeseries())); });
}

hdsa_status hdsa_session_posterior(const hdsa_session* session, int n, uint64_t seed, char** out_json) {
  if (!session || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] {
    auto p = session->impl->posterior(n, seed);
    emit(out_json, hdsa::to_json(p, session->impl->scenario().control_space));
  });
}

hdsa_status hdsa_session_export(const hdsa_session* session, char** out_json) {
  if (!session || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] { emit(out_json, session->impl->export_snapshot()); });
}

hdsa_status hdsa_init_hyper(const char* scenario_json, const char* dataset_json, const char* options_json,
                            char** out_json) {
  if (!scenario_json || !dataset_json || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] {
    auto cfg = hdsa::scenario_from_json(hdsa::parse_json(scenario_json));
    auto data = hdsa::dataset_from_json(hdsa::parse_json(dataset_json));
    auto opt = init_options(parse_optional(options_json));
    auto space = hdsa::assemble_space(cfg);
    auto lowfi = hdsa::build_lowfi(cfg, space);
    hdsa::require_size(data.z.front().size(), space.spatial_size(), "dataset control size");
    hdsa::require_size(data.d.front().size(), space.size(), "dataset state size");
    auto r = hdsa::initialize_hyperparams(data, space, space.spatial(), lowfi, opt);
    emit(out_json, hdsa::to_json(r.hyper));
  });
}

hdsa_status hdsa_run(const char* scenario_json, const char* options_json, char** out_json) {
  if (!scenario_json || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] {
    auto cfg = hdsa::scenario_from_json(hdsa::parse_json(scenario_json));
    auto o = parse_optional(options_json);
    hdsa::RunOptions opt;
    opt.init = init_options(o);
    if (o.is_object()) {
      opt.n_ensemble = o.value("n_ensemble", opt.n_ensemble);
      opt.seed = o.value("seed", opt.seed);
    }
    auto s = hdsa::build_scenario(cfg);
    auto r = hdsa::run_pipeline(s, opt);
    hdsa::Json samples = hdsa::Json::array();
    for (const auto& z : r.ensemble) samples.push_back(hdsa::to_json(z));
    emit(out_json, hdsa::Json{{"hyperparams", hdsa::to_json(r.init.hyper)},
                              {"dataset", hdsa::to_json(s.dataset)},
                              {"ensemble",
                               {{"z_tilde", hdsa::to_json(s.z_tilde)},
                                {"samples", samples},
                                {"hifi_optimum", hdsa::to_json(r.hifi)}}}});
  });
}

hdsa_status hdsa_sample(const char* scenario_json, const char* hyper_json, int q, uint64_t seed, char** out_json) {
  if (!scenario_json || !out_json) return HDSA_ERR_NULL_ARGUMENT;
  return guarded([&] {
    auto cfg = hdsa::scenario_from_json(hdsa::parse_json(scenario_json));
    auto s = hdsa::build_scenario(cfg);
    hdsa::HyperParams h;
    if (hyper_json)
      h = hdsa::hyper_from_json(hdsa::parse_json(hyper_json));
    else
      h = hdsa::initialize_hyperparams(s.dataset, s.state_space, s.control_space, s.lowfi).hyper;
    auto prior = hdsa::build_prior(s.state_space, s.control_space, h, s.z_tilde);
    auto basis = hdsa::perturbation_basis(*prior, s.z_tilde);
    auto ds = hdsa::generate_sample_dataset(*prior, basis, q, seed);
    hdsa::Json dirs = hdsa::Json::array(), states = hdsa::Json::array(), diffs = hdsa::Json::array();
    for (hdsa::Index k = 0; k < basis.size(); ++k) dirs.push_back(hdsa::to_json(hdsa::Vector(basis.directions.col(k))));
    for (int i = 0; i < ds.q; ++i) {
      states.push_back(hdsa::to_json(ds.state_fields[i]));
      diffs.push_back(hdsa::to_json(ds.unit_diff[i]));
    }
    emit(out_json, hdsa::Json{{"q", ds.q},
                              {"seed", ds.seed},
                              {"hyperparams", hdsa::to_json(h)},
                              {"z_tilde", hdsa::to_json(s.z_tilde)},
                              {"lambda", hdsa::to_json(basis.lambda)},
                              {"shift", hdsa::to_json(basis.shift)},
                              {"delta_z", dirs},
                              {"delta_z_corr_length", hdsa::to_json(basis.corr_length)},
                              {"difference_scale", hdsa::to_json(ds.diff_scale)},
                              {"state_fields", states},
                              {"unit_difference_fields", diffs},
                              {"state_maxabs", hdsa::to_json(ds.state_maxabs)},
                              {"state_corr_length", hdsa::to_json(ds.state_corr)},
                              {"unit_difference_maxabs", hdsa::to_json(ds.unit_diff_maxabs)}});
  });
}

}  // extern "C"
