#pragma once

#include "locmm/common.hpp"

#include "json.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace locmm {

enum class BodyKind {
  Hyperrectangle,
  Ellipsoid,
  L1Ball,
  WeakLpBall,
  Polytope,
  Product,
  Halfspace,
  Orthant,
  Subspace,
  MonotoneCone,
  Ball,
  BallIntersection,
};

struct BoundingBox {
  Vector lo;
  Vector hi;
};

namespace detail {
class BodyImpl;
}

// Closed convex subset of R^n given by its oracles. Cheap to copy; immutable.
class ConvexBody {
 public:
  static ConvexBody hyperrectangle(const Vector& side_lengths);
  // Squared semi-axes a_i of {x : sum x_i^2 / a_i <= 1}.
  static ConvexBody ellipsoid(const Vector& a);
  static ConvexBody l1_ball(int n, double radius = 1.0);
  static ConvexBody weak_lp_ball(int n, double p);
  static ConvexBody polytope(const std::vector<Vector>& vertices);
  static ConvexBody product(const std::vector<ConvexBody>& components);
  static ConvexBody halfspace(const Vector& normal, double offset);
  static ConvexBody orthant(int n);
  // {x : x_i = 0 for i >= k}.
  static ConvexBody subspace(int n, int k);
  // {x : x_1 <= x_2 <= ... <= x_n}.
  static ConvexBody monotone_cone(int n);
  static ConvexBody ball(const Vector& center, double radius);
  // B(center, radius) intersected with `body`.
  static ConvexBody intersect_ball(const ConvexBody& body, const Vector& center,
                                   double radius);

  static ConvexBody from_json(const nlohmann::json& descriptor);
  static ConvexBody from_json_text(const std::string& text);
  nlohmann::json descriptor() const;
  // Canonical descriptor text; used as a cache key.
  const std::string& digest() const;

  BodyKind kind() const;
  int dimension() const;
  bool bounded() const;
  // Euclidean diameter, +inf for unbounded bodies. For ball intersections
  // this is min(2r, diam(body)), an upper bound.
  double diameter() const;

  // True iff x lies within Euclidean distance tol of the body.
  bool contains(const Vector& x, double tol = 0.0) const;
  Vector project(const Vector& x) const;

  // A member near the middle of the body (projection of the origin for
  // unbounded families).
  Vector center() const;
  // Analytic extreme or boundary points (vertices, axis endpoints, spikes).
  std::vector<Vector> extreme_points() const;
  BoundingBox bounding_box() const;

  // Family parameters: side lengths, squared semi-axes, etc. Empty if none.
  const Vector& parameters() const;
  double scalar_parameter() const;  // radius for l1, p for weak-lp
  const std::vector<ConvexBody>& components() const;

  // The body as an intersection of sets with direct projections.
  std::vector<ConvexBody> constraint_sets() const;

  const detail::BodyImpl& impl() const { return *impl_; }

 private:
  explicit ConvexBody(std::shared_ptr<const detail::BodyImpl> impl);
  std::shared_ptr<const detail::BodyImpl> impl_;
};

// Projection onto B(center, radius) ∩ body by Dykstra's algorithm.
Vector project_localized(const ConvexBody& body, const Vector& center, double radius,
                         const Vector& x);

// Projection onto the intersection of the given sets (Dykstra, cycling in order).
Vector project_intersection(const std::vector<ConvexBody>& sets, const Vector& x,
                            double tol, int max_cycles = 10000);

// max_i i^{1/p} x**_i with x** the prefix means of the decreasing rearrangement of |x|.
double weak_lp_norm(const Vector& x, double p);

}  // namespace locmm
