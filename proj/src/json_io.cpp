#include <hdsa/json_io.hpp>

#include <fstream>
#include <set>

namespace hdsa {

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

[[noreturn]] void bad(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    bad(ErrorCode::kInvalidInput, std::string("malformed JSON: ") + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad(ErrorCode::kIo, "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json(text);
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) bad(ErrorCode::kIo, "cannot write " + path);
  out << j.dump(2) << '\n';
}

ScenarioConfig scenario_from_json(const Json& j) {
  try {
    if (!j.is_object()) bad(ErrorCode::kInvalidConfig, "scenario must be a JSON object");
    ScenarioConfig c;
    if (!j.contains("problem")) bad(ErrorCode::kInvalidConfig, "scenario needs 'problem'");
    c.problem = parse_problem(j.at("problem").get<std::string>());
    if (!j.contains("n_space")) bad(ErrorCode::kInvalidConfig, "scenario needs 'n_space'");
    c.n_space = j.at("n_space").get<int>();
    c.n_time = get_or(j, "n_time", c.n_time);
    c.final_time = get_or(j, "T", c.final_time);
    c.velocity = get_or(j, "velocity", c.velocity);
    c.regularization = get_or(j, "regularization", c.regularization);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.n_data = get_or(j, "n_data", c.n_data);
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    bad(ErrorCode::kInvalidConfig, std::string("bad scenario field: ") + e.what());
  }
}

Json to_json(const ScenarioConfig& c) {
  Json j{{"problem", problem_name(c.problem)},
         {"n_space", c.n_space},
         {"regularization", c.regularization},
         {"seed", c.seed},
         {"velocity", c.effective_velocity()},
         {"n_data", c.effective_n_data()}};
  if (c.transient()) {
    j["n_time"] = c.n_time;
    j["T"] = c.final_time;
  }
  return j;
}

Json to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) bad(ErrorCode::kShape, "expected a numeric array");
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
}

namespace {
const std::set<std::string> kHyperKeys{"alpha_u", "beta_u", "alpha_z", "beta_z", "alpha_t", "beta_t", "eps_t", "alpha_d"};

void assign_hyper(HyperParams& h, const std::string& key, const Json& v) {
  if (key == "alpha_t") {
    h.alpha_t = v.is_null() ? Vector() : vector_from_json(v);
    return;
  }
  if (!v.is_number()) bad(ErrorCode::kValidation, key + " must be a number");
  double x = v.get<double>();
  if (key == "alpha_u") h.alpha_u = x;
  else if (key == "beta_u") h.beta_u = x;
  else if (key == "alpha_z") h.alpha_z = x;
  else if (key == "beta_z") h.beta_z = x;
  else if (key == "beta_t") h.beta_t = x;
  else if (key == "eps_t") h.eps_t = x;
  else if (key == "alpha_d") h.alpha_d = x;
}
}  // namespace

HyperParams apply_hyper_patch(const HyperParams& h, const Json& patch) {
  if (!patch.is_object()) bad(ErrorCode::kValidation, "hyper-parameter patch must be an object");
  HyperParams out = h;
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (!kHyperKeys.count(it.key())) bad(ErrorCode::kValidation, "unknown hyper-parameter '" + it.key() + "'");
    assign_hyper(out, it.key(), it.value());
  }
  return out;
}

HyperParams hyper_from_json(const Json& j) {
  for (const char* key : {"alpha_u", "beta_u", "alpha_z", "beta_z", "alpha_d"})
    if (!j.contains(key)) bad(ErrorCode::kValidation, std::string("hyper-parameters need '") + key + "'");
  return apply_hyper_patch(HyperParams{}, j);
}

Json to_json(const HyperParams& h) {
  Json j{{"alpha_u", h.alpha_u}, {"beta_u", h.beta_u}, {"alpha_z", h.alpha_z},
         {"beta_z", h.beta_z},   {"eps_t", h.eps_t},   {"alpha_d", h.alpha_d}};
  if (h.alpha_t.size() > 0) {
    j["alpha_t"] = to_json(h.alpha_t);
    j["beta_t"] = h.beta_t;
  }
  return j;
}

CalibrationDataset dataset_from_json(const Json& j) {
  try {
    CalibrationDataset d;
    for (const auto& z : j.at("z")) d.z.push_back(vector_from_json(z));
    for (const auto& v : j.at("d")) d.d.push_back(vector_from_json(v));
    d.dbar = get_or(j, "dbar", 0.0);
    d.c_delta = get_or(j, "c_delta", 0.0);
    d.validate();
    return d;
  } catch (const Json::exception& e) {
    bad(ErrorCode::kShape, std::string("bad dataset JSON: ") + e.what());
  }
}

Json to_json(const CalibrationDataset& d) {
  Json z = Json::array(), v = Json::array();
  for (const auto& x : d.z) z.push_back(to_json(x));
  for (const auto& x : d.d) v.push_back(to_json(x));
  return Json{{"z", z}, {"d", v}, {"dbar", d.dbar}, {"c_delta", d.c_delta}};
}

Json field_json(const FunctionSpace& space, const Vector& values) {
  const Mesh& m = space.mesh;
  Json nodes = Json::array();
  for (Index i = 0; i < m.size(); ++i) {
    Json p = Json::array();
    for (int d = 0; d < m.dim; ++d) p.push_back(m.nodes(i, d));
    nodes.push_back(p);
  }
  Json j{{"dim", m.dim}, {"nodes", nodes}};
  if (values.size() == m.size()) {
    j["values"] = to_json(values);
  } else {
    const Index ns = m.size();
    if (ns == 0 || values.size() % ns != 0) bad(ErrorCode::kShape, "field does not match the mesh");
    Json rows = Json::array();
    for (Index t = 0; t < values.size() / ns; ++t) rows.push_back(to_json(Vector(values.segment(t * ns, ns))));
    j["values"] = rows;
  }
  return j;
}

}  // namespace hdsa
