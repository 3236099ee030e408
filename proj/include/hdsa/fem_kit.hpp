#pragma once

#include <hdsa/types.hpp>

#include <optional>
#include <vector>

namespace hdsa {

enum class ProblemKind { kStationary1D, kTransient1D, kStationary2D };

const char* problem_name(ProblemKind kind);
ProblemKind parse_problem(const std::string& name);

struct ScenarioConfig {
  ProblemKind problem = ProblemKind::kStationary1D;
  int n_space = 129;  // nodes per axis
  int n_time = 64;    // time nodes including t = 0
  double final_time = 1.0;
  std::vector<double> velocity;  // empty means problem default: 1 in 1D, (5,5) in 2D
  double regularization = 1e-4;
  std::uint64_t seed = 0;
  int n_data = 0;  // 0 means problem default

  bool transient() const { return problem == ProblemKind::kTransient1D; }
  int dim() const { return problem == ProblemKind::kStationary2D ? 2 : 1; }
  std::vector<double> effective_velocity() const;
  int effective_n_data() const;
  void validate() const;
};

// Simplicial mesh. nodes is n_nodes x dim, cells is n_cells x (dim+1).
struct Mesh {
  int dim = 1;
  int n_per_axis = 0;
  Matrix nodes;
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> cells;

  Index size() const { return nodes.rows(); }
  double spacing() const { return 1.0 / (n_per_axis - 1); }
};

Mesh make_mesh_1d(int n_nodes);
// Structured right-triangle mesh of the unit square; node (i,j) has index j*n + i.
Mesh make_mesh_2d(int n_per_axis);

struct TimeGrid {
  int n = 0;
  double final_time = 1.0;
  Vector times;
  SparseMatrix mass;
  SparseMatrix stiffness;

  double step() const { return final_time / (n - 1); }
};

TimeGrid make_time_grid(int n, double final_time);

// Discretized function space. mass and stiffness are spatial (pure Neumann); when a time grid is
// present the full weighting is M_t kron M_s with time-major coordinates (t * n_s + s).
struct FunctionSpace {
  Mesh mesh;
  SparseMatrix mass;
  SparseMatrix stiffness;
  std::optional<TimeGrid> time;

  Index spatial_size() const { return mesh.size(); }
  Index size() const { return time ? time->n * mesh.size() : mesh.size(); }
  SparseMatrix full_mass() const;
  FunctionSpace spatial() const;
  double norm_sq(const Vector& v) const;
};

// Kronecker product of sparse matrices.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

// P1 mass and stiffness on a mesh (pure Neumann).
SparseMatrix assemble_mass(const Mesh& mesh);
SparseMatrix assemble_stiffness(const Mesh& mesh);

FunctionSpace assemble_space(const ScenarioConfig& config);

// Spatial operator A and load matrix F of A u = F z, boundary conditions included.
struct PdeSystem {
  SparseMatrix op;
  SparseMatrix load;
};

PdeSystem assemble_pde(const ScenarioConfig& config, const FunctionSpace& space, bool advection);

struct LinearSolutionOperator {
  Matrix matrix;  // n_u x n_z
  Vector offset;  // n_u

  Index state_size() const { return matrix.rows(); }
  Index control_size() const { return matrix.cols(); }
  Vector apply(const Vector& z) const;
};

LinearSolutionOperator build_highfi(const ScenarioConfig& config, const FunctionSpace& space);
LinearSolutionOperator build_lowfi(const ScenarioConfig& config, const FunctionSpace& space);

// (beta K + M)^{-1} v on the spatial part of the space.
Vector elliptic_apply_inverse(const FunctionSpace& space, double beta, const Vector& v);

// Optimization target on the state space.
Vector target_state(const ScenarioConfig& config, const FunctionSpace& space);

}  // namespace hdsa
