#include <hdsa/fem_kit.hpp>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>

namespace hdsa {

const char* problem_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kStationary1D: return "stationary-1d";
    case ProblemKind::kTransient1D: return "transient-1d";
    case ProblemKind::kStationary2D: return "stationary-2d";
  }
  return "?";
}

ProblemKind parse_problem(const std::string& name) {
  if (name == "stationary-1d") return ProblemKind::kStationary1D;
  if (name == "transient-1d") return ProblemKind::kTransient1D;
  if (name == "stationary-2d") return ProblemKind::kStationary2D;
  throw Error(ErrorCode::kInvalidConfig, "unknown problem '" + name + "'");
}

std::vector<double> ScenarioConfig::effective_velocity() const {
  if (!velocity.empty()) return velocity;
  if (dim() == 2) return {5.0, 5.0};
  return {1.0};
}

int ScenarioConfig::effective_n_data() const {
  if (n_data > 0) return n_data;
  return problem == ProblemKind::kStationary2D ? 1 : 2;
}

void ScenarioConfig::validate() const {
  if (n_space < 3) throw Error(ErrorCode::kInvalidConfig, "n_space must be at least 3");
  if (transient() && n_time < 3) throw Error(ErrorCode::kInvalidConfig, "n_time must be at least 3");
  if (!(final_time > 0)) throw Error(ErrorCode::kInvalidConfig, "T must be positive");
  if (!(regularization > 0)) throw Error(ErrorCode::kInvalidConfig, "regularization must be positive");
  if (n_data < 0) throw Error(ErrorCode::kInvalidConfig, "n_data must be non-negative");
  auto v = effective_velocity();
  if (static_cast<int>(v.size()) < dim()) throw Error(ErrorCode::kInvalidConfig, "velocity has too few components");
}

Mesh make_mesh_1d(int n) {
  if (n < 3) throw Error(ErrorCode::kInvalidConfig, "mesh needs at least 3 nodes");
  Mesh m;
  m.dim = 1;
  m.n_per_axis = n;
  m.nodes.resize(n, 1);
  for (int i = 0; i < n; ++i) m.nodes(i, 0) = static_cast<double>(i) / (n - 1);
  m.cells.resize(n - 1, 2);
  for (int e = 0; e < n - 1; ++e) {
    m.cells(e, 0) = e;
    m.cells(e, 1) = e + 1;
  }
  return m;
}

Mesh make_mesh_2d(int n) {
  if (n < 3) throw Error(ErrorCode::kInvalidConfig, "mesh needs at least 3 nodes per axis");
  Mesh m;
  m.dim = 2;
  m.n_per_axis = n;
  m.nodes.resize(static_cast<Index>(n) * n, 2);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      m.nodes(j * n + i, 0) = static_cast<double>(i) / (n - 1);
      m.nodes(j * n + i, 1) = static_cast<double>(j) / (n - 1);
    }
  m.cells.resize(2 * static_cast<Index>(n - 1) * (n - 1), 3);
  Index c = 0;
  for (int j = 0; j < n - 1; ++j)
    for (int i = 0; i < n - 1; ++i) {
      Index a = j * n + i, b = a + 1, d = a + n, e = d + 1;
      m.cells.row(c++) << a, b, e;
      m.cells.row(c++) << a, e, d;
    }
  return m;
}

namespace {

// Gradients of the P1 basis on a triangle and its area.
void triangle_geometry(const Mesh& m, Index c, Eigen::Matrix<double, 3, 2>& grad, double& area) {
  Eigen::Vector2d p0 = m.nodes.row(m.cells(c, 0)).transpose();
  Eigen::Vector2d p1 = m.nodes.row(m.cells(c, 1)).transpose();
  Eigen::Vector2d p2 = m.nodes.row(m.cells(c, 2)).transpose();
  Eigen::Matrix2d jac;
  jac.col(0) = p1 - p0;
  jac.col(1) = p2 - p0;
  double det = jac.determinant();
  area = 0.5 * std::abs(det);
  if (!(area > 0)) throw Error(ErrorCode::kAssembly, "degenerate triangle");
  Eigen::Matrix<double, 3, 2> ref;
  ref << -1, -1, 1, 0, 0, 1;
  grad = ref * jac.inverse();
}

double cell_length(const Mesh& m, Index c) {
  double h = m.nodes(m.cells(c, 1), 0) - m.nodes(m.cells(c, 0), 0);
  if (!(h > 0)) throw Error(ErrorCode::kAssembly, "nodes not strictly ordered");
  return h;
}

void check_symmetric(const SparseMatrix& a, const char* what) {
  SparseMatrix at = a.transpose();
  if ((a - at).norm() > 1e-12 * (1.0 + a.norm()))
    throw Error(ErrorCode::kAssembly, std::string(what) + " is not symmetric");
}

}  // namespace

SparseMatrix assemble_mass(const Mesh& m) {
  std::vector<Triplet> t;
  if (m.dim == 1) {
    for (Index c = 0; c < m.cells.rows(); ++c) {
      double h = cell_length(m, c);
      Index a = m.cells(c, 0), b = m.cells(c, 1);
      t.emplace_back(a, a, h / 3);
      t.emplace_back(b, b, h / 3);
      t.emplace_back(a, b, h / 6);
      t.emplace_back(b, a, h / 6);
    }
  } else {
    Eigen::Matrix<double, 3, 2> g;
    double area;
    for (Index c = 0; c < m.cells.rows(); ++c) {
      triangle_geometry(m, c, g, area);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          t.emplace_back(m.cells(c, i), m.cells(c, j), area / 12.0 * (i == j ? 2.0 : 1.0));
    }
  }
  SparseMatrix mass(m.size(), m.size());
  mass.setFromTriplets(t.begin(), t.end());
  return mass;
}

SparseMatrix assemble_stiffness(const Mesh& m) {
  std::vector<Triplet> t;
  if (m.dim == 1) {
    for (Index c = 0; c < m.cells.rows(); ++c) {
      double h = cell_length(m, c);
      Index a = m.cells(c, 0), b = m.cells(c, 1);
      t.emplace_back(a, a, 1 / h);
      t.emplace_back(b, b, 1 / h);
      t.emplace_back(a, b, -1 / h);
      t.emplace_back(b, a, -1 / h);
    }
  } else {
    Eigen::Matrix<double, 3, 2> g;
    double area;
    for (Index c = 0; c < m.cells.rows(); ++c) {
      triangle_geometry(m, c, g, area);
      Eigen::Matrix3d ke = area * g * g.transpose();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t.emplace_back(m.cells(c, i), m.cells(c, j), ke(i, j));
    }
  }
  SparseMatrix k(m.size(), m.size());
  k.setFromTriplets(t.begin(), t.end());
  k.prune(0.0);
  return k;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Triplet> t;
  t.reserve(static_cast<size_t>(a.nonZeros() * b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib)
          t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                         ia.value() * ib.value());
  SparseMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  k.setFromTriplets(t.begin(), t.end());
  return k;
}

TimeGrid make_time_grid(int n, double final_time) {
  Mesh tm = make_mesh_1d(n);
  tm.nodes *= final_time;
  TimeGrid g;
  g.n = n;
  g.final_time = final_time;
  g.times = tm.nodes.col(0);
  g.mass = assemble_mass(tm);
  g.stiffness = assemble_stiffness(tm);
  return g;
}

SparseMatrix FunctionSpace::full_mass() const {
  if (!time) return mass;
  return kron(time->mass, mass);
}

FunctionSpace FunctionSpace::spatial() const {
  FunctionSpace s;
  s.mesh = mesh;
  s.mass = mass;
  s.stiffness = stiffness;
  return s;
}

double FunctionSpace::norm_sq(const Vector& v) const {
  require_size(v.size(), size(), "norm_sq");
  if (!time) return v.dot(mass * v);
  const Index ns = spatial_size();
  Eigen::Map<const Matrix> x(v.data(), ns, time->n);
  Matrix mx = mass * x;
  Matrix mxm = (time->mass * mx.transpose()).transpose();
  return x.cwiseProduct(mxm).sum();
}

FunctionSpace assemble_space(const ScenarioConfig& config) {
  config.validate();
  FunctionSpace s;
  s.mesh = config.dim() == 2 ? make_mesh_2d(config.n_space) : make_mesh_1d(config.n_space);
  s.mass = assemble_mass(s.mesh);
  s.stiffness = assemble_stiffness(s.mesh);
  check_symmetric(s.mass, "mass matrix");
  check_symmetric(s.stiffness, "stiffness matrix");
  Eigen::SimplicialLLT<SparseMatrix> llt(s.mass);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kAssembly, "mass matrix not positive definite");
  Vector ke = s.stiffness * Vector::Ones(s.mesh.size());
  if (ke.lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + s.stiffness.norm()))
    throw Error(ErrorCode::kAssembly, "Neumann stiffness does not annihilate constants");
  if (config.transient()) s.time = make_time_grid(config.n_time, config.final_time);
  return s;
}

namespace {

SparseMatrix assemble_advection(const Mesh& m, const std::vector<double>& v) {
  std::vector<Triplet> t;
  if (m.dim == 1) {
    // int v u' phi_i over a cell: each row gets (-v/2, v/2)
    for (Index c = 0; c < m.cells.rows(); ++c) {
      Index a = m.cells(c, 0), b = m.cells(c, 1);
      for (Index r : {a, b}) {
        t.emplace_back(r, a, -0.5 * v[0]);
        t.emplace_back(r, b, 0.5 * v[0]);
      }
    }
  } else {
    Eigen::Matrix<double, 3, 2> g;
    double area;
    Eigen::Vector2d vel(v[0], v[1]);
    for (Index c = 0; c < m.cells.rows(); ++c) {
      triangle_geometry(m, c, g, area);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t.emplace_back(m.cells(c, i), m.cells(c, j), area / 3.0 * g.row(j).dot(vel));
    }
  }
  SparseMatrix a(m.size(), m.size());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

constexpr double kRobin = 2.0;

}  // namespace

PdeSystem assemble_pde(const ScenarioConfig& config, const FunctionSpace& space, bool advection) {
  const Mesh& m = space.mesh;
  SparseMatrix op = space.stiffness;
  if (advection) op += assemble_advection(m, config.effective_velocity());
  SparseMatrix load = space.mass;
  if (config.dim() == 1) {
    if (!config.transient()) {
      // Robin ends enter as a dissipative boundary mass.
      op.coeffRef(0, 0) += kRobin;
      op.coeffRef(m.size() - 1, m.size() - 1) += kRobin;
    }
  } else {
    // Dirichlet u = 0 on y = 0: replace those rows by identity rows with zero load.
    const int n = m.n_per_axis;
    std::vector<Triplet> t;
    for (int k = 0; k < op.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(op, k); it; ++it)
        if (it.row() >= n) t.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
    op.resize(m.size(), m.size());
    op.setFromTriplets(t.begin(), t.end());
    std::vector<Triplet> tl;
    for (int k = 0; k < load.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(load, k); it; ++it)
        if (it.row() >= n) tl.emplace_back(it.row(), it.col(), it.value());
    load.resize(m.size(), m.size());
    load.setFromTriplets(tl.begin(), tl.end());
  }
  op.makeCompressed();
  load.makeCompressed();
  return {op, load};
}

Vector LinearSolutionOperator::apply(const Vector& z) const {
  require_size(z.size(), control_size(), "solution operator input");
  return matrix * z + offset;
}

namespace {

LinearSolutionOperator build_operator(const ScenarioConfig& config, const FunctionSpace& space, bool advection) {
  PdeSystem sys = assemble_pde(config, space, advection);
  const Index ns = space.spatial_size();
  LinearSolutionOperator s;
  if (!config.transient()) {
    Eigen::SparseLU<SparseMatrix> lu(sys.op);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::kAssembly, "singular PDE operator");
    s.matrix = lu.solve(Matrix(sys.load));
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::kAssembly, "PDE solve failed");
    s.offset = Vector::Zero(ns);
    return s;
  }
  // Implicit Euler from u(0) = 0: (M + dt A) u_{k+1} = M u_k + dt F z.
  const TimeGrid& tg = *space.time;
  const double dt = tg.step();
  SparseMatrix step = space.mass + dt * sys.op;
  Eigen::SparseLU<SparseMatrix> lu(step);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::kAssembly, "singular time-step operator");
  Matrix forcing = dt * Matrix(sys.load);
  s.matrix = Matrix::Zero(ns * tg.n, ns);
  Matrix u = Matrix::Zero(ns, ns);
  for (int k = 1; k < tg.n; ++k) {
    Matrix rhs = space.mass * u + forcing;
    u = lu.solve(rhs);
    s.matrix.middleRows(k * ns, ns) = u;
  }
  s.offset = Vector::Zero(ns * tg.n);
  return s;
}

}  // namespace

LinearSolutionOperator build_highfi(const ScenarioConfig& config, const FunctionSpace& space) {
  return build_operator(config, space, true);
}

LinearSolutionOperator build_lowfi(const ScenarioConfig& config, const FunctionSpace& space) {
  return build_operator(config, space, false);
}

Vector elliptic_apply_inverse(const FunctionSpace& space, double beta, const Vector& v) {
  if (!(beta >= 0)) throw Error(ErrorCode::kInvalidInput, "beta must be non-negative");
  require_size(v.size(), space.spatial_size(), "elliptic_apply_inverse");
  SparseMatrix e = beta * space.stiffness + space.mass;
  Eigen::SimplicialLLT<SparseMatrix> llt(e);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kLinearSolve, "elliptic factorization failed");
  Vector x = llt.solve(v);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kLinearSolve, "elliptic solve failed");
  return x;
}

Vector target_state(const ScenarioConfig& config, const FunctionSpace& space) {
  const Mesh& m = space.mesh;
  Vector ts(m.size());
  for (Index i = 0; i < m.size(); ++i) {
    double r2 = 0;
    for (int d = 0; d < m.dim; ++d) r2 += (m.nodes(i, d) - 0.5) * (m.nodes(i, d) - 0.5);
    ts[i] = 50.0 - 60.0 * r2;
  }
  if (!space.time) return ts;
  return ts.replicate(space.time->n, 1);
}

}  // namespace hdsa
