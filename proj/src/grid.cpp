#include "sisprof/grid.hpp"

#include "sisprof/errors.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace sisprof {

namespace {

std::uint64_t next_grid_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter++;
}

void validate(const DomainSpec& s) {
  if (s.nx < 3) throw ConfigError("grid resolution must be >= 3 cells along x, got " + std::to_string(s.nx));
  switch (s.kind) {
    case DomainKind::interval:
      if (!(s.x_max > s.x_min)) throw ConfigError("interval extent must be positive");
      break;
    case DomainKind::rectangle:
      if (s.ny < 3) throw ConfigError("grid resolution must be >= 3 cells along y, got " + std::to_string(s.ny));
      if (!(s.x_max > s.x_min) || !(s.y_max > s.y_min)) throw ConfigError("rectangle extent must be positive");
      break;
    case DomainKind::masked_disk:
      if (!(s.radius > 0.0)) throw ConfigError("disk radius must be positive");
      break;
  }
}

using Triplets = std::vector<Eigen::Triplet<double>>;

// Face coefficients 1/h^2 rounded to a shared dyadic quantum so that stencil sums are exact.
std::array<double, 2> face_coefficients(const Grid& g) {
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = g.dimension() == 1 ? cx : 1.0 / (g.hy() * g.hy());
  const double quantum = std::ldexp(1.0, std::ilogb(std::max(cx, cy)) - 48);
  return {std::round(cx / quantum) * quantum, std::round(cy / quantum) * quantum};
}

// Adds the 3/5-point stencil row for `node` (local index `row`).
// `local_of` maps parent node -> local index or -1 when excluded.
void stencil_row(const Grid& g, int node, int row, const std::vector<int>& local_of, FaceCondition outer,
                 FaceCondition inner, Triplets& out) {
  const auto& nb = g.neighbours(node);
  const int directions = g.dimension() == 1 ? 2 : 4;
  const auto coeff = face_coefficients(g);
  double diag = 0.0;
  for (int d = 0; d < directions; ++d) {
    const double c = coeff[d < 2 ? 0 : 1];
    const int other = nb[d];
    if (other >= 0 && local_of[other] >= 0) {
      out.emplace_back(row, local_of[other], c);
      diag -= c;
      continue;
    }
    const FaceCondition fc = other < 0 ? outer : inner;
    if (fc == FaceCondition::dirichlet) diag -= 2.0 * c;
  }
  out.emplace_back(row, row, diag);
}

}  // namespace

DomainSpec DomainSpec::interval(double a, double b, int n) {
  DomainSpec s;
  s.kind = DomainKind::interval;
  s.x_min = a;
  s.x_max = b;
  s.nx = n;
  s.ny = 1;
  return s;
}

DomainSpec DomainSpec::rectangle(double x0, double x1, double y0, double y1, int nx, int ny) {
  DomainSpec s;
  s.kind = DomainKind::rectangle;
  s.x_min = x0;
  s.x_max = x1;
  s.y_min = y0;
  s.y_max = y1;
  s.nx = nx;
  s.ny = ny;
  return s;
}

DomainSpec DomainSpec::disk(double radius, int n) {
  DomainSpec s;
  s.kind = DomainKind::masked_disk;
  s.radius = radius;
  s.x_min = s.y_min = -radius;
  s.x_max = s.y_max = radius;
  s.nx = s.ny = n;
  return s;
}

Grid::Grid(const DomainSpec& spec) : spec_(spec), id_(next_grid_id()) {
  validate(spec_);
  if (spec_.kind == DomainKind::masked_disk) {
    spec_.x_min = spec_.y_min = -spec_.radius;
    spec_.x_max = spec_.y_max = spec_.radius;
    spec_.ny = spec_.nx;
  }
  if (spec_.kind == DomainKind::interval) spec_.ny = 1;

  const int nx = spec_.nx;
  const int ny = lattice_ny();
  hx_ = (spec_.x_max - spec_.x_min) / nx;
  hy_ = dimension() == 1 ? 1.0 : (spec_.y_max - spec_.y_min) / ny;
  const double cell = dimension() == 1 ? hx_ : hx_ * hy_;

  cell_to_node_.assign(static_cast<std::size_t>(nx) * ny, -1);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      Point p{spec_.x_min + (i + 0.5) * hx_, dimension() == 1 ? 0.0 : spec_.y_min + (j + 0.5) * hy_};
      if (spec_.kind == DomainKind::masked_disk && p.x * p.x + p.y * p.y > spec_.radius * spec_.radius) continue;
      cell_to_node_[static_cast<std::size_t>(j) * nx + i] = static_cast<int>(nodes_.size());
      nodes_.push_back(p);
      lattice_.push_back({i, j});
    }
  }

  neighbours_.resize(nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto [i, j] = lattice_[k];
    neighbours_[k] = {node_at(i - 1, j), node_at(i + 1, j), node_at(i, j - 1), node_at(i, j + 1)};
  }

  weights_ = Eigen::VectorXd::Constant(size(), cell);
  measure_ = cell * size();
  laplacian_ = laplacian_matrix(*this, FaceCondition::neumann);
}

double Grid::spacing() const { return dimension() == 1 ? hx_ : std::max(hx_, hy_); }

int Grid::node_at(int i, int j) const {
  if (i < 0 || j < 0 || i >= spec_.nx || j >= lattice_ny()) return -1;
  return cell_to_node_[static_cast<std::size_t>(j) * spec_.nx + i];
}

bool Grid::on_boundary(int k) const {
  const auto& nb = neighbours_[k];
  const int directions = dimension() == 1 ? 2 : 4;
  for (int d = 0; d < directions; ++d)
    if (nb[d] < 0) return true;
  return false;
}

int Grid::nearest_node(const Point& p) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < size(); ++k) {
    const double dx = nodes_[k].x - p.x;
    const double dy = nodes_[k].y - p.y;
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

GridPtr build_grid(const DomainSpec& spec) { return std::make_shared<const Grid>(spec); }

Field::Field(const Grid& g, Eigen::VectorXd v) : grid_id(g.id()), values(std::move(v)) {
  if (values.size() != g.size()) throw UsageError("field length does not match grid node count");
}

void require_same_grid(const Grid& g, const Field& f) {
  if (f.grid_id != g.id() || f.values.size() != g.size())
    throw UsageError("field was not sampled on this grid");
}

Field apply_laplacian(const Grid& g, const Field& f) {
  require_same_grid(g, f);
  const auto coeff = face_coefficients(g);
  const int directions = g.dimension() == 1 ? 2 : 4;
  Field out(g, 0.0);
  for (int k = 0; k < g.size(); ++k) {
    const auto& nb = g.neighbours(k);
    double acc = 0.0;
    for (int d = 0; d < directions; ++d)
      if (nb[d] >= 0) acc += coeff[d < 2 ? 0 : 1] * (f.values[nb[d]] - f.values[k]);
    out.values[k] = acc;
  }
  return out;
}

double integrate(const Grid& g, const Field& f) {
  require_same_grid(g, f);
  return g.weights().dot(f.values);
}

double integrate(const Grid& g, const Eigen::VectorXd& values) {
  if (values.size() != g.size()) throw UsageError("vector length does not match grid node count");
  return g.weights().dot(values);
}

SparseMatrix laplacian_matrix(const Grid& g, FaceCondition outer) {
  std::vector<int> identity(g.size());
  for (int k = 0; k < g.size(); ++k) identity[k] = k;
  Triplets t;
  t.reserve(static_cast<std::size_t>(g.size()) * 5);
  for (int k = 0; k < g.size(); ++k) stencil_row(g, k, k, identity, outer, outer, t);
  SparseMatrix L(g.size(), g.size());
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

Eigen::VectorXd Subdomain::restrict(const Field& f) const {
  require_same_grid(*grid, f);
  Eigen::VectorXd out(size());
  for (int k = 0; k < size(); ++k) out[k] = f.values[nodes[k]];
  return out;
}

Field Subdomain::extend(const Eigen::VectorXd& local, double outside) const {
  Field f(*grid, outside);
  for (int k = 0; k < size(); ++k) f.values[nodes[k]] = local[k];
  return f;
}

Subdomain Subdomain::whole(GridPtr g, FaceCondition outer) {
  return masked(g, Mask(g->size(), true), outer, outer);
}

Subdomain Subdomain::masked(GridPtr g, const Mask& mask, FaceCondition outer, FaceCondition inner) {
  if (static_cast<int>(mask.size()) != g->size()) throw UsageError("mask length does not match grid");
  Subdomain sub;
  sub.grid = g;
  std::vector<int> local_of(g->size(), -1);
  for (int k = 0; k < g->size(); ++k) {
    if (!mask[k]) continue;
    local_of[k] = static_cast<int>(sub.nodes.size());
    sub.nodes.push_back(k);
  }
  if (sub.nodes.empty()) throw UsageError("empty subdomain");
  Triplets t;
  for (int r = 0; r < sub.size(); ++r) stencil_row(*g, sub.nodes[r], r, local_of, outer, inner, t);
  sub.laplacian.resize(sub.size(), sub.size());
  sub.laplacian.setFromTriplets(t.begin(), t.end());
  sub.weights.resize(sub.size());
  for (int r = 0; r < sub.size(); ++r) sub.weights[r] = g->weights()[sub.nodes[r]];
  sub.measure = sub.weights.sum();
  return sub;
}

}  // namespace sisprof
