#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace sisprof {

enum class DomainKind { interval, rectangle, masked_disk };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Domain description. `nx`/`ny` count cells per axis; for the disk the
/// bounding square [-radius, radius]^2 is split into nx x nx cells.
struct DomainSpec {
  DomainKind kind = DomainKind::interval;
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  double radius = 1.0;
  int nx = 11;
  int ny = 1;

  static DomainSpec interval(double a, double b, int n);
  static DomainSpec rectangle(double x0, double x1, double y0, double y1, int nx, int ny);
  static DomainSpec disk(double radius, int n);
};

/// How a face without a neighbouring node is closed.
/// neumann mirrors the node value (zero flux), dirichlet mirrors its negative
/// (zero value on the face).
enum class FaceCondition { neumann, dirichlet };

using SparseMatrix = Eigen::SparseMatrix<double>;
using Mask = std::vector<bool>;

/// Cell-centred uniform Cartesian grid. Each retained cell is one node.
/// Immutable after construction.
class Grid {
 public:
  explicit Grid(const DomainSpec& spec);

  std::uint64_t id() const { return id_; }
  DomainKind kind() const { return spec_.kind; }
  const DomainSpec& spec() const { return spec_; }
  int dimension() const { return kind() == DomainKind::interval ? 1 : 2; }
  int size() const { return static_cast<int>(nodes_.size()); }

  double hx() const { return hx_; }
  double hy() const { return hy_; }
  /// Largest grid spacing.
  double spacing() const;
  int lattice_nx() const { return spec_.nx; }
  int lattice_ny() const { return dimension() == 1 ? 1 : spec_.ny; }

  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(int k) const { return nodes_[k]; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double measure() const { return measure_; }

  /// Lattice coordinates of node k.
  std::array<int, 2> lattice_index(int k) const { return lattice_[k]; }
  /// Node at lattice position (i, j), or -1 when the cell is not part of the domain.
  int node_at(int i, int j) const;
  /// Neighbours in order -x, +x, -y, +y (-1 when absent).
  const std::array<int, 4>& neighbours(int k) const { return neighbours_[k]; }
  /// Every retained node touches at least one absent neighbour slot.
  bool on_boundary(int k) const;

  /// Neumann Laplacian (every row sums to zero).
  const SparseMatrix& laplacian() const { return laplacian_; }

  /// Index of the node closest to p.
  int nearest_node(const Point& p) const;

 private:
  DomainSpec spec_;
  std::uint64_t id_;
  double hx_ = 0.0, hy_ = 0.0;
  double measure_ = 0.0;
  std::vector<Point> nodes_;
  std::vector<std::array<int, 2>> lattice_;
  std::vector<int> cell_to_node_;
  std::vector<std::array<int, 4>> neighbours_;
  Eigen::VectorXd weights_;
  SparseMatrix laplacian_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(const DomainSpec& spec);

/// Scalar nodal values tied to the grid they were sampled on.
struct Field {
  std::uint64_t grid_id = 0;
  Eigen::VectorXd values;

  Field() = default;
  Field(const Grid& g, double fill) : grid_id(g.id()), values(Eigen::VectorXd::Constant(g.size(), fill)) {}
  Field(const Grid& g, Eigen::VectorXd v);

  Eigen::Index size() const { return values.size(); }
  double operator[](Eigen::Index k) const { return values[k]; }
  double& operator[](Eigen::Index k) { return values[k]; }
  double max() const { return values.maxCoeff(); }
  double min() const { return values.minCoeff(); }
};

/// Throws UsageError when f was not sampled on g.
void require_same_grid(const Grid& g, const Field& f);

Field apply_laplacian(const Grid& g, const Field& f);
double integrate(const Grid& g, const Field& f);
double integrate(const Grid& g, const Eigen::VectorXd& values);

/// Laplacian over all nodes with the given closure on the outer boundary.
SparseMatrix laplacian_matrix(const Grid& g, FaceCondition outer);

/// Operator restricted to a node subset. Faces towards excluded nodes use
/// `inner`, faces on the outer domain boundary use `outer`.
struct Subdomain {
  GridPtr grid;
  std::vector<int> nodes;     // parent indices of retained nodes
  SparseMatrix laplacian;     // acts on values indexed like `nodes`
  Eigen::VectorXd weights;
  double measure = 0.0;

  int size() const { return static_cast<int>(nodes.size()); }
  Eigen::VectorXd restrict(const Field& f) const;
  Field extend(const Eigen::VectorXd& local, double outside = 0.0) const;

  static Subdomain whole(GridPtr g, FaceCondition outer);
  static Subdomain masked(GridPtr g, const Mask& mask, FaceCondition outer, FaceCondition inner);
};

}  // namespace sisprof
