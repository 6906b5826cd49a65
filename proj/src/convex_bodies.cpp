#include "locmm/convex_bodies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace locmm {

bool lex_less(const Vector& a, const Vector& b) {
  const Eigen::Index n = std::min(a.size(), b.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a[i] < b[i]) return true;
    if (b[i] < a[i]) return false;
  }
  return a.size() < b.size();
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void require_finite(const Vector& v, const std::string& what) {
  require(v.size() >= 1, what + ": empty vector");
  require(v.allFinite(), what + ": non-finite entry");
}

nlohmann::json to_json_array(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const nlohmann::json& j, const std::string& what) {
  require(j.is_array(), what + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), what + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  require_finite(v, what);
  return v;
}

// Pull p towards c until `inside` accepts it. Guards against round-off in
// closed-form projections that land a few ulps outside.
template <class Pred>
Vector pull_inside(Vector p, const Vector& c, Pred inside) {
  double shrink = 4.0 * std::numeric_limits<double>::epsilon();
  for (int k = 0; k < 60 && !inside(p); ++k) {
    p = c + (p - c) * (1.0 - shrink);
    shrink = std::min(1.0, shrink * 4.0);
  }
  return p;
}

}  // namespace

namespace detail {

class BodyImpl {
 public:
  BodyImpl(BodyKind kind, int n) : kind_(kind), n_(n) {}
  virtual ~BodyImpl() = default;

  BodyKind kind() const { return kind_; }
  int dimension() const { return n_; }
  virtual bool bounded() const { return true; }
  virtual double diameter() const = 0;
  // Exact (or 1e-9 for polytopes) analytic membership.
  virtual bool member(const Vector& x) const = 0;
  virtual Vector project(const Vector& x) const = 0;
  virtual Vector center() const { return Vector::Zero(n_); }
  virtual std::vector<Vector> extremes() const { return {center()}; }
  virtual BoundingBox bbox() const = 0;
  virtual nlohmann::json descriptor() const = 0;
  virtual void constraints(const ConvexBody& self, std::vector<ConvexBody>& out) const {
    out.push_back(self);
  }

  Vector params;
  double scalar = 0.0;
  std::vector<ConvexBody> comps;
  std::string digest;

 private:
  BodyKind kind_;
  int n_;
};

namespace {

class Hyperrectangle final : public BodyImpl {
 public:
  explicit Hyperrectangle(const Vector& a)
      : BodyImpl(BodyKind::Hyperrectangle, static_cast<int>(a.size())), half_(a / 2.0) {
    params = a;
  }
  double diameter() const override { return params.norm(); }
  bool member(const Vector& x) const override {
    return (x.array().abs() <= half_.array()).all();
  }
  Vector project(const Vector& x) const override {
    return x.cwiseMax(-half_).cwiseMin(half_);
  }
  std::vector<Vector> extremes() const override {
    std::vector<Vector> out;
    const int n = dimension();
    for (int i = 0; i < n; ++i) {
      for (double s : {-1.0, 1.0}) {
        Vector f = Vector::Zero(n);
        f[i] = s * half_[i];
        out.push_back(f);
      }
    }
    const int bits = std::min(n, 6);
    for (long mask = 0; mask < (1L << bits); ++mask) {
      Vector v = half_;
      for (int i = 0; i < bits; ++i)
        if (mask & (1L << i)) v[i] = -v[i];
      out.push_back(v);
    }
    return out;
  }
  BoundingBox bbox() const override { return {-half_, half_}; }
  nlohmann::json descriptor() const override {
    return {{"type", "hyperrectangle"}, {"a", to_json_array(params)}};
  }

 private:
  Vector half_;
};

class Ellipsoid final : public BodyImpl {
 public:
  explicit Ellipsoid(const Vector& a) : BodyImpl(BodyKind::Ellipsoid, static_cast<int>(a.size())) {
    params = a;
  }
  double diameter() const override { return 2.0 * std::sqrt(params.maxCoeff()); }
  bool member(const Vector& x) const override {
    return (x.array().square() / params.array()).sum() <= 1.0;
  }
  Vector project(const Vector& x) const override {
    if (member(x)) return x;
    const Eigen::ArrayXd a = params.array();
    const Eigen::ArrayXd x2 = x.array().square();
    // f(l) = sum a x^2 / (a + l)^2 - 1, decreasing and convex on l >= 0.
    auto f = [&](double l) { return (a * x2 / (a + l).square()).sum() - 1.0; };
    auto df = [&](double l) { return -2.0 * (a * x2 / (a + l).cube()).sum(); };
    double lo = 0.0;
    double hi = std::sqrt((a * x2).sum());
    double l = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double fl = f(l);
      if (fl == 0.0) break;
      if (fl > 0) lo = l; else hi = l;
      double next = l - fl / df(l);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - l) <= 1e-12 * std::max(next, 1e-300)) {
        l = next;
        break;
      }
      l = next;
    }
    Vector p = (a * x.array() / (a + l)).matrix();
    return pull_inside(p, Vector::Zero(dimension()), [&](const Vector& q) { return member(q); });
  }
  std::vector<Vector> extremes() const override {
    std::vector<Vector> out;
    std::vector<int> order(dimension());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return params[l] > params[r]; });
    for (int i : order) {
      for (double s : {-1.0, 1.0}) {
        Vector e = Vector::Zero(dimension());
        e[i] = s * std::sqrt(params[i]);
        out.push_back(e);
      }
    }
    return out;
  }
  BoundingBox bbox() const override {
    Vector h = params.array().sqrt().matrix();
    return {-h, h};
  }
  nlohmann::json descriptor() const override {
    return {{"type", "ellipsoid"}, {"a", to_json_array(params)}};
  }
};

class L1Ball final : public BodyImpl {
 public:
  L1Ball(int n, double r) : BodyImpl(BodyKind::L1Ball, n) { scalar = r; }
  double diameter() const override { return 2.0 * scalar; }
  bool member(const Vector& x) const override { return x.lpNorm<1>() <= scalar; }
  Vector project(const Vector& x) const override {
    if (member(x)) return x;
    std::vector<double> u(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = std::abs(x[i]);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (size_t k = 0; k < u.size(); ++k) {
      cum += u[k];
      const double t = (cum - scalar) / static_cast<double>(k + 1);
      if (u[k] - t > 0) theta = t;
    }
    Vector p(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      p[i] = std::copysign(std::max(std::abs(x[i]) - theta, 0.0), x[i]);
    return pull_inside(p, Vector::Zero(dimension()), [&](const Vector& q) { return member(q); });
  }
  std::vector<Vector> extremes() const override {
    std::vector<Vector> out;
    for (int i = 0; i < dimension(); ++i)
      for (double s : {-1.0, 1.0}) {
        Vector e = Vector::Zero(dimension());
        e[i] = s * scalar;
        out.push_back(e);
      }
    return out;
  }
  BoundingBox bbox() const override {
    Vector h = Vector::Constant(dimension(), scalar);
    return {-h, h};
  }
  nlohmann::json descriptor() const override {
    return {{"type", "l1ball"}, {"n", dimension()}, {"radius", scalar}};
  }
};

// Projection of z onto {y : |y_i| <= lam, sum |y_i| <= k lam}.
Vector project_dual_topk(const Vector& z, double lam, int k) {
  const Eigen::Index n = z.size();
  Vector mag = z.cwiseAbs();
  auto total = [&](double theta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += std::clamp(mag[i] - theta, 0.0, lam);
    return s;
  };
  const double cap = k * lam;
  double theta = 0.0;
  if (total(0.0) > cap) {
    // h(theta) is piecewise linear and decreasing; breakpoints at |z_i| and |z_i| - lam.
    std::vector<double> bp;
    bp.reserve(2 * n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      bp.push_back(mag[i]);
      if (mag[i] - lam > 0) bp.push_back(mag[i] - lam);
    }
    bp.push_back(0.0);
    std::sort(bp.begin(), bp.end());
    double lo = 0.0, hlo = total(0.0);
    for (double b : bp) {
      if (b <= lo) continue;
      const double hb = total(b);
      if (hb <= cap) {
        theta = (hlo == hb) ? b : lo + (hlo - cap) * (b - lo) / (hlo - hb);
        break;
      }
      lo = b;
      hlo = hb;
    }
  }
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i)
    y[i] = std::copysign(std::clamp(mag[i] - theta, 0.0, lam), z[i]);
  return y;
}

double topk_sum(const Vector& x, int k) {
  std::vector<double> m(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) m[i] = std::abs(x[i]);
  std::partial_sort(m.begin(), m.begin() + k, m.end(), std::greater<>());
  return std::accumulate(m.begin(), m.begin() + k, 0.0);
}

// Projection onto {x : sum of the k largest |x_i| <= t}, via the prox of the
// top-k norm (Moreau: prox_{lam f}(z) = z - P_{lam B*}(z)) and bisection on lam.
Vector project_topk_cap(const Vector& z, int k, double t) {
  if (topk_sum(z, k) <= t) return z;
  double lo = 0.0;
  double hi = std::max(z.cwiseAbs().maxCoeff(), z.lpNorm<1>() / k);
  Vector best = z - project_dual_topk(z, hi, k);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    Vector p = z - project_dual_topk(z, mid, k);
    if (topk_sum(p, k) > t) {
      lo = mid;
    } else {
      hi = mid;
      best = p;
    }
    if (hi - lo <= 1e-15 * hi) break;
  }
  return best;
}

class WeakLpBall final : public BodyImpl {
 public:
  WeakLpBall(int n, double p) : BodyImpl(BodyKind::WeakLpBall, n) { scalar = p; }
  double diameter() const override {
    // The extreme point with x*_i = i^{1-1/p} - (i-1)^{1-1/p} saturates every cap;
    // the set is symmetric, so the diameter is twice its norm.
    const double e = 1.0 - 1.0 / scalar;
    double s = 0.0;
    for (int i = 1; i <= dimension(); ++i) {
      const double v = std::pow(i, e) - std::pow(i - 1, e);
      s += v * v;
    }
    return 2.0 * std::sqrt(s);
  }
  bool member(const Vector& x) const override { return weak_lp_norm(x, scalar) <= 1.0; }
  Vector project(const Vector& x) const override {
    if (member(x)) return x;
    const int n = dimension();
    const double e = 1.0 - 1.0 / scalar;
    std::vector<Vector> incr(n, Vector::Zero(n));
    std::vector<Vector> last(n, x);
    Vector cur = x;
    const double tol = 1e-11 * std::max(1.0, x.norm());
    int cycle = 0;
    for (; cycle < 10000; ++cycle) {
      double change = 0.0;
      for (int k = 1; k <= n; ++k) {
        Vector z = cur + incr[k - 1];
        Vector p = project_topk_cap(z, k, std::pow(k, e));
        change += (p - last[k - 1]).squaredNorm() + (z - p - incr[k - 1]).squaredNorm();
        incr[k - 1] = z - p;
        last[k - 1] = p;
        cur = p;
      }
      if (std::sqrt(change) <= tol) break;
    }
    if (cycle == 10000) throw NumericalError("weak-lp projection did not converge");
    // Radial rescale guarantees membership; the norm is homogeneous.
    const double nv = weak_lp_norm(cur, scalar);
    if (nv > 1.0) cur /= nv;
    return pull_inside(cur, Vector::Zero(n), [&](const Vector& q) { return member(q); });
  }
  std::vector<Vector> extremes() const override {
    std::vector<Vector> out;
    const int n = dimension();
    for (int i = 0; i < n; ++i)
      for (double s : {-1.0, 1.0}) {
        Vector v = Vector::Zero(n);
        v[i] = s;
        out.push_back(v);
      }
    const double e = 1.0 - 1.0 / scalar;
    Vector stair(n);
    for (int i = 1; i <= n; ++i) stair[i - 1] = std::pow(i, e) - std::pow(i - 1, e);
    out.push_back(stair);
    out.push_back(-stair);
    return out;
  }
  BoundingBox bbox() const override {
    Vector h = Vector::Ones(dimension());
    return {-h, h};
  }
  nlohmann::json descriptor() const override {
    return {{"type", "weak_lp"}, {"n", dimension()}, {"p", scalar}};
  }
};

class Polytope final : public BodyImpl {
 public:
  explicit Polytope(const std::vector<Vector>& v)
      : BodyImpl(BodyKind::Polytope, static_cast<int>(v.front().size())), verts_(v) {
    diam_ = 0.0;
    for (size_t i = 0; i < v.size(); ++i)
      for (size_t j = i + 1; j < v.size(); ++j) diam_ = std::max(diam_, (v[i] - v[j]).norm());
    centroid_ = Vector::Zero(dimension());
    for (const auto& p : v) centroid_ += p;
    centroid_ /= static_cast<double>(v.size());
    scale_ = 0.0;
    for (const auto& p : v) scale_ = std::max(scale_, (p - centroid_).norm());
  }
  double diameter() const override { return diam_; }
  bool member(const Vector& x) const override {
    return (nearest(x) - x).norm() <= 1e-9 * std::max(1.0, scale_);
  }
  Vector project(const Vector& x) const override { return nearest(x); }
  Vector center() const override { return centroid_; }
  std::vector<Vector> extremes() const override { return verts_; }
  BoundingBox bbox() const override {
    Vector lo = verts_.front(), hi = verts_.front();
    for (const auto& p : verts_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    return {lo, hi};
  }
  nlohmann::json descriptor() const override {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& p : verts_) vs.push_back(to_json_array(p));
    return {{"type", "polytope"}, {"vertices", vs}};
  }

 private:
  // Wolfe's minimum-norm-point algorithm on the translated vertices v_i - x.
  Vector nearest(const Vector& x) const {
    const size_t m = verts_.size();
    const int n = dimension();
    Eigen::MatrixXd P(n, static_cast<Eigen::Index>(m));
    double maxsq = 0.0;
    for (size_t i = 0; i < m; ++i) {
      P.col(static_cast<Eigen::Index>(i)) = verts_[i] - x;
      maxsq = std::max(maxsq, P.col(static_cast<Eigen::Index>(i)).squaredNorm());
    }
    Eigen::Index start = 0;
    P.colwise().squaredNorm().minCoeff(&start);
    std::vector<Eigen::Index> S{start};
    std::vector<double> w{1.0};
    Vector y = P.col(start);
    const long cap = 10L * n * static_cast<long>(m) + 100;
    const double gap_tol = 1e-12 * std::max(maxsq, 1e-300);
    long it = 0;
    for (; it < cap; ++it) {
      Eigen::Index j = 0;
      (P.transpose() * y).minCoeff(&j);
      const double gap = y.squaredNorm() - P.col(j).dot(y);
      if (gap <= gap_tol) break;
      if (std::find(S.begin(), S.end(), j) != S.end()) break;
      S.push_back(j);
      w.push_back(0.0);
      for (int inner = 0; inner < 10 * n + 10; ++inner) {
        const Eigen::Index s = static_cast<Eigen::Index>(S.size());
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(s + 1, s + 1);
        for (Eigen::Index a = 0; a < s; ++a) {
          for (Eigen::Index b = 0; b < s; ++b) A(a, b) = P.col(S[a]).dot(P.col(S[b]));
          A(a, s) = 1.0;
          A(s, a) = 1.0;
        }
        Vector rhs = Vector::Zero(s + 1);
        rhs[s] = 1.0;
        Vector sol = A.colPivHouseholderQr().solve(rhs);
        Vector alpha = sol.head(s);
        if ((alpha.array() > 1e-14).all()) {
          for (Eigen::Index a = 0; a < s; ++a) w[a] = alpha[a];
          break;
        }
        double theta = 1.0;
        for (Eigen::Index a = 0; a < s; ++a)
          if (alpha[a] <= 1e-14) theta = std::min(theta, w[a] / (w[a] - alpha[a]));
        std::vector<Eigen::Index> S2;
        std::vector<double> w2;
        double tot = 0.0;
        for (Eigen::Index a = 0; a < s; ++a) {
          const double nw = theta * alpha[a] + (1.0 - theta) * w[a];
          if (nw > 1e-15) {
            S2.push_back(S[a]);
            w2.push_back(nw);
            tot += nw;
          }
        }
        for (double& v : w2) v /= tot;
        S.swap(S2);
        w.swap(w2);
      }
      y = Vector::Zero(n);
      for (size_t a = 0; a < S.size(); ++a) y += w[a] * P.col(S[a]);
    }
    if (it == cap) throw NumericalError("polytope projection hit its iteration cap");
    return y + x;
  }

  std::vector<Vector> verts_;
  Vector centroid_;
  double diam_ = 0.0;
  double scale_ = 0.0;
};

class Product final : public BodyImpl {
 public:
  Product(const std::vector<ConvexBody>& c, int n) : BodyImpl(BodyKind::Product, n) { comps = c; }
  bool bounded() const override {
    return std::all_of(comps.begin(), comps.end(), [](const ConvexBody& b) { return b.bounded(); });
  }
  double diameter() const override {
    double s = 0.0;
    for (const auto& c : comps) s += c.diameter() * c.diameter();
    return std::sqrt(s);
  }
  bool member(const Vector& x) const override {
    Eigen::Index off = 0;
    for (const auto& c : comps) {
      if (!c.contains(x.segment(off, c.dimension()))) return false;
      off += c.dimension();
    }
    return true;
  }
  Vector project(const Vector& x) const override {
    Vector p(x.size());
    Eigen::Index off = 0;
    for (const auto& c : comps) {
      p.segment(off, c.dimension()) = c.project(x.segment(off, c.dimension()));
      off += c.dimension();
    }
    return p;
  }
  Vector center() const override {
    Vector p(dimension());
    Eigen::Index off = 0;
    for (const auto& c : comps) {
      p.segment(off, c.dimension()) = c.center();
      off += c.dimension();
    }
    return p;
  }
  std::vector<Vector> extremes() const override {
    const Vector mid = center();
    std::vector<Vector> out;
    Vector firsts = mid;
    Eigen::Index off = 0;
    for (const auto& c : comps) {
      const auto ex = c.extreme_points();
      if (!ex.empty()) firsts.segment(off, c.dimension()) = ex.front();
      for (const auto& e : ex) {
        Vector v = mid;
        v.segment(off, c.dimension()) = e;
        out.push_back(v);
      }
      off += c.dimension();
    }
    out.insert(out.begin(), firsts);
    return out;
  }
  BoundingBox bbox() const override {
    BoundingBox b{Vector(dimension()), Vector(dimension())};
    Eigen::Index off = 0;
    for (const auto& c : comps) {
      const auto cb = c.bounding_box();
      b.lo.segment(off, c.dimension()) = cb.lo;
      b.hi.segment(off, c.dimension()) = cb.hi;
      off += c.dimension();
    }
    return b;
  }
  nlohmann::json descriptor() const override {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : comps) cs.push_back(c.descriptor());
    return {{"type", "product"}, {"components", cs}};
  }
};

class Halfspace final : public BodyImpl {
 public:
  Halfspace(const Vector& normal, double offset)
      : BodyImpl(BodyKind::Halfspace, static_cast<int>(normal.size())) {
    params = normal;
    scalar = offset;
  }
  bool bounded() const override { return false; }
  double diameter() const override { return kInf; }
  bool member(const Vector& x) const override { return params.dot(x) <= scalar; }
  Vector project(const Vector& x) const override {
    const double excess = params.dot(x) - scalar;
    if (excess <= 0) return x;
    const double nn = params.squaredNorm();
    Vector p = x - (excess / nn) * params;
    double nudge = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, x.norm());
    for (int k = 0; k < 60 && !member(p); ++k) {
      p -= nudge * params / std::sqrt(nn);
      nudge *= 2.0;
    }
    return p;
  }
  Vector center() const override { return project(Vector::Zero(dimension())); }
  BoundingBox bbox() const override {
    return {Vector::Constant(dimension(), -kInf), Vector::Constant(dimension(), kInf)};
  }
  nlohmann::json descriptor() const override {
    return {{"type", "halfspace"}, {"normal", to_json_array(params)}, {"offset", scalar}};
  }
};

class Orthant final : public BodyImpl {
 public:
  explicit Orthant(int n) : BodyImpl(BodyKind::Orthant, n) {}
  bool bounded() const override { return false; }
  double diameter() const override { return kInf; }
  bool member(const Vector& x) const override { return (x.array() >= 0.0).all(); }
  Vector project(const Vector& x) const override { return x.cwiseMax(0.0); }
  BoundingBox bbox() const override {
    return {Vector::Zero(dimension()), Vector::Constant(dimension(), kInf)};
  }
  nlohmann::json descriptor() const override { return {{"type", "orthant"}, {"n", dimension()}}; }
};

class Subspace final : public BodyImpl {
 public:
  Subspace(int n, int k) : BodyImpl(BodyKind::Subspace, n), k_(k) { scalar = k; }
  bool bounded() const override { return false; }
  double diameter() const override { return kInf; }
  bool member(const Vector& x) const override {
    return (x.tail(dimension() - k_).array() == 0.0).all();
  }
  Vector project(const Vector& x) const override {
    Vector p = x;
    p.tail(dimension() - k_).setZero();
    return p;
  }
  BoundingBox bbox() const override {
    Vector lo = Vector::Zero(dimension()), hi = Vector::Zero(dimension());
    lo.head(k_).setConstant(-kInf);
    hi.head(k_).setConstant(kInf);
    return {lo, hi};
  }
  nlohmann::json descriptor() const override {
    return {{"type", "subspace"}, {"n", dimension()}, {"k", k_}};
  }

 private:
  int k_;
};

class MonotoneCone final : public BodyImpl {
 public:
  explicit MonotoneCone(int n) : BodyImpl(BodyKind::MonotoneCone, n) {}
  bool bounded() const override { return false; }
  double diameter() const override { return kInf; }
  bool member(const Vector& x) const override {
    for (Eigen::Index i = 1; i < x.size(); ++i)
      if (x[i] < x[i - 1]) return false;
    return true;
  }
  // Pool adjacent violators for the nondecreasing fit.
  Vector project(const Vector& x) const override {
    std::vector<double> val, wt;
    std::vector<Eigen::Index> len;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      val.push_back(x[i]);
      wt.push_back(1.0);
      len.push_back(1);
      while (val.size() > 1 && val[val.size() - 2] > val.back()) {
        const size_t b = val.size() - 1;
        const double w = wt[b - 1] + wt[b];
        val[b - 1] = (wt[b - 1] * val[b - 1] + wt[b] * val[b]) / w;
        wt[b - 1] = w;
        len[b - 1] += len[b];
        val.pop_back();
        wt.pop_back();
        len.pop_back();
      }
    }
    Vector p(x.size());
    Eigen::Index pos = 0;
    for (size_t b = 0; b < val.size(); ++b)
      for (Eigen::Index r = 0; r < len[b]; ++r) p[pos++] = val[b];
    return p;
  }
  BoundingBox bbox() const override {
    return {Vector::Constant(dimension(), -kInf), Vector::Constant(dimension(), kInf)};
  }
  nlohmann::json descriptor() const override {
    return {{"type", "monotone_cone"}, {"n", dimension()}};
  }
};

class Ball final : public BodyImpl {
 public:
  Ball(const Vector& c, double r) : BodyImpl(BodyKind::Ball, static_cast<int>(c.size())) {
    params = c;
    scalar = r;
  }
  double diameter() const override { return 2.0 * scalar; }
  bool member(const Vector& x) const override { return (x - params).norm() <= scalar; }
  Vector project(const Vector& x) const override {
    const double dist = (x - params).norm();
    if (dist <= scalar) return x;
    Vector p = params + (x - params) * (scalar / dist);
    return pull_inside(p, params, [&](const Vector& q) { return member(q); });
  }
  Vector center() const override { return params; }
  std::vector<Vector> extremes() const override {
    std::vector<Vector> out;
    for (int i = 0; i < dimension(); ++i)
      for (double s : {-1.0, 1.0}) {
        Vector e = params;
        e[i] += s * scalar;
        out.push_back(e);
      }
    return out;
  }
  BoundingBox bbox() const override {
    return {params.array() - scalar, params.array() + scalar};
  }
  nlohmann::json descriptor() const override {
    return {{"type", "ball"}, {"center", to_json_array(params)}, {"radius", scalar}};
  }
};

class BallIntersection final : public BodyImpl {
 public:
  BallIntersection(const ConvexBody& inner, const Vector& c, double r)
      : BodyImpl(BodyKind::BallIntersection, inner.dimension()),
        inner_(inner),
        ball_(ConvexBody::ball(c, r)) {
    params = c;
    scalar = r;
    comps = {inner};
    sets_.push_back(ball_);
    auto inner_sets = inner.constraint_sets();
    sets_.insert(sets_.end(), inner_sets.begin(), inner_sets.end());
  }
  double diameter() const override { return std::min(2.0 * scalar, inner_.diameter()); }
  bool member(const Vector& x) const override {
    return (x - params).norm() <= scalar && inner_.contains(x);
  }
  Vector project(const Vector& x) const override {
    if (member(x)) return x;
    Vector p = project_intersection(sets_, x, 1e-10 * (scalar + (x - params).norm()));
    return pull_inside(p, anchor(), [&](const Vector& q) { return member(q); });
  }
  Vector center() const override { return anchor(); }
  std::vector<Vector> extremes() const override {
    std::vector<Vector> out{anchor()};
    for (const auto& e : inner_.extreme_points()) {
      if ((e - params).norm() <= scalar && inner_.contains(e)) out.push_back(e);
    }
    for (const auto& e : ball_.extreme_points()) {
      if (inner_.contains(e)) out.push_back(e);
    }
    return out;
  }
  BoundingBox bbox() const override {
    auto a = inner_.bounding_box();
    auto b = ball_.bounding_box();
    return {a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi)};
  }
  nlohmann::json descriptor() const override {
    return {{"type", "ball_intersection"},
            {"body", inner_.descriptor()},
            {"center", to_json_array(params)},
            {"radius", scalar}};
  }
  void constraints(const ConvexBody&, std::vector<ConvexBody>& out) const override {
    out.insert(out.end(), sets_.begin(), sets_.end());
  }

 private:
  // A member of the intersection: the ball center, which callers are
  // expected to choose inside the body.
  Vector anchor() const {
    if (inner_.contains(params)) return params;
    return project_intersection(sets_, params, 1e-12 * std::max(1.0, scalar));
  }

  ConvexBody inner_;
  ConvexBody ball_;
  std::vector<ConvexBody> sets_;
};

}  // namespace
}  // namespace detail

ConvexBody::ConvexBody(std::shared_ptr<const detail::BodyImpl> impl) : impl_(std::move(impl)) {
  auto* mut = const_cast<detail::BodyImpl*>(impl_.get());
  mut->digest = impl_->descriptor().dump();
}

ConvexBody ConvexBody::hyperrectangle(const Vector& a) {
  require_finite(a, "hyperrectangle side lengths");
  require((a.array() > 0).all(), "hyperrectangle side lengths must be positive");
  return ConvexBody(std::make_shared<detail::Hyperrectangle>(a));
}

ConvexBody ConvexBody::ellipsoid(const Vector& a) {
  require_finite(a, "ellipsoid axes");
  require((a.array() > 0).all(), "ellipsoid squared semi-axes must be positive");
  return ConvexBody(std::make_shared<detail::Ellipsoid>(a));
}

ConvexBody ConvexBody::l1_ball(int n, double radius) {
  require(n >= 1, "l1 ball dimension must be >= 1");
  require(std::isfinite(radius) && radius > 0, "l1 ball radius must be positive");
  return ConvexBody(std::make_shared<detail::L1Ball>(n, radius));
}

ConvexBody ConvexBody::weak_lp_ball(int n, double p) {
  require(n >= 1, "weak-lp dimension must be >= 1");
  require(p > 1.0 && p < 2.0, "weak-lp exponent must lie in (1, 2)");
  return ConvexBody(std::make_shared<detail::WeakLpBall>(n, p));
}

ConvexBody ConvexBody::polytope(const std::vector<Vector>& vertices) {
  require(!vertices.empty(), "polytope needs at least one vertex");
  for (const auto& v : vertices) {
    require_finite(v, "polytope vertex");
    require(v.size() == vertices.front().size(), "polytope vertices differ in dimension");
  }
  return ConvexBody(std::make_shared<detail::Polytope>(vertices));
}

ConvexBody ConvexBody::product(const std::vector<ConvexBody>& components) {
  require(!components.empty(), "product needs at least one component");
  int n = 0;
  for (const auto& c : components) n += c.dimension();
  return ConvexBody(std::make_shared<detail::Product>(components, n));
}

ConvexBody ConvexBody::halfspace(const Vector& normal, double offset) {
  require_finite(normal, "halfspace normal");
  require(normal.norm() > 0, "halfspace normal must be nonzero");
  require(std::isfinite(offset), "halfspace offset must be finite");
  return ConvexBody(std::make_shared<detail::Halfspace>(normal, offset));
}

ConvexBody ConvexBody::orthant(int n) {
  require(n >= 1, "orthant dimension must be >= 1");
  return ConvexBody(std::make_shared<detail::Orthant>(n));
}

ConvexBody ConvexBody::subspace(int n, int k) {
  require(n >= 1 && k >= 0 && k <= n, "subspace needs 0 <= k <= n");
  return ConvexBody(std::make_shared<detail::Subspace>(n, k));
}

ConvexBody ConvexBody::monotone_cone(int n) {
  require(n >= 1, "monotone cone dimension must be >= 1");
  return ConvexBody(std::make_shared<detail::MonotoneCone>(n));
}

ConvexBody ConvexBody::ball(const Vector& center, double radius) {
  require_finite(center, "ball center");
  require(std::isfinite(radius) && radius > 0, "ball radius must be positive");
  return ConvexBody(std::make_shared<detail::Ball>(center, radius));
}

ConvexBody ConvexBody::intersect_ball(const ConvexBody& body, const Vector& center, double radius) {
  require_finite(center, "ball center");
  require(center.size() == body.dimension(), "ball center dimension mismatch");
  require(std::isfinite(radius) && radius > 0, "ball radius must be positive");
  return ConvexBody(std::make_shared<detail::BallIntersection>(body, center, radius));
}

ConvexBody ConvexBody::from_json(const nlohmann::json& j) {
  require(j.is_object(), "body descriptor must be a JSON object");
  require(j.contains("type") && j["type"].is_string(), "body descriptor needs a string \"type\"");
  const std::string type = j["type"].get<std::string>();
  auto get_int = [&](const char* key) {
    require(j.contains(key) && j[key].is_number_integer(),
            type + " descriptor needs integer \"" + key + "\"");
    return j[key].get<int>();
  };
  auto get_num = [&](const char* key, double dflt, bool required) {
    if (!j.contains(key)) {
      require(!required, type + " descriptor needs \"" + key + "\"");
      return dflt;
    }
    require(j[key].is_number(), type + " field \"" + key + "\" must be a number");
    return j[key].get<double>();
  };
  auto get_vec = [&](const char* key) {
    require(j.contains(key), type + " descriptor needs \"" + key + "\"");
    return vector_from_json(j[key], type + "." + key);
  };
  if (type == "hyperrectangle" || type == "box") return hyperrectangle(get_vec("a"));
  if (type == "ellipsoid") return ellipsoid(get_vec("a"));
  if (type == "l1ball" || type == "l1_ball") return l1_ball(get_int("n"), get_num("radius", 1.0, false));
  if (type == "weak_lp" || type == "weak_lp_ball") return weak_lp_ball(get_int("n"), get_num("p", 0, true));
  if (type == "polytope") {
    require(j.contains("vertices") && j["vertices"].is_array(), "polytope needs \"vertices\"");
    std::vector<Vector> vs;
    for (const auto& v : j["vertices"]) vs.push_back(vector_from_json(v, "polytope vertex"));
    return polytope(vs);
  }
  if (type == "product") {
    require(j.contains("components") && j["components"].is_array(), "product needs \"components\"");
    std::vector<ConvexBody> cs;
    for (const auto& c : j["components"]) cs.push_back(from_json(c));
    return product(cs);
  }
  if (type == "halfspace") {
    Vector normal;
    if (j.contains("normal")) {
      normal = get_vec("normal");
    } else {
      normal = Vector::Zero(get_int("n"));
      require(normal.size() >= 1, "halfspace dimension must be >= 1");
      normal[0] = 1.0;
    }
    if (j.contains("n")) require(get_int("n") == normal.size(), "halfspace n and normal disagree");
    return halfspace(normal, get_num("offset", 0.0, false));
  }
  if (type == "orthant") return orthant(get_int("n"));
  if (type == "subspace") return subspace(get_int("n"), get_int("k"));
  if (type == "monotone_cone") return monotone_cone(get_int("n"));
  if (type == "ball") {
    Vector c = j.contains("center") ? get_vec("center") : Vector::Zero(get_int("n"));
    return ball(c, get_num("radius", 1.0, false));
  }
  if (type == "ball_intersection") {
    require(j.contains("body"), "ball_intersection needs \"body\"");
    return intersect_ball(from_json(j["body"]), get_vec("center"), get_num("radius", 0, true));
  }
  throw ValidationError("unknown body type \"" + type + "\"");
}

ConvexBody ConvexBody::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed body JSON: ") + e.what());
  }
  return from_json(j);
}

nlohmann::json ConvexBody::descriptor() const { return impl_->descriptor(); }
const std::string& ConvexBody::digest() const { return impl_->digest; }
BodyKind ConvexBody::kind() const { return impl_->kind(); }
int ConvexBody::dimension() const { return impl_->dimension(); }
bool ConvexBody::bounded() const { return impl_->bounded(); }
double ConvexBody::diameter() const { return impl_->diameter(); }

bool ConvexBody::contains(const Vector& x, double tol) const {
  if (x.size() != dimension())
    throw ValidationError("dimension mismatch: got " + std::to_string(x.size()) + ", body has " +
                          std::to_string(dimension()));
  if (tol < 0) throw ValidationError("tolerance must be nonnegative");
  if (!x.allFinite()) return false;
  if (impl_->member(x)) return true;
  if (tol == 0) return false;
  return (project(x) - x).norm() <= tol;
}

Vector ConvexBody::project(const Vector& x) const {
  if (x.size() != dimension())
    throw ValidationError("dimension mismatch: got " + std::to_string(x.size()) + ", body has " +
                          std::to_string(dimension()));
  if (!x.allFinite()) throw ValidationError("cannot project a non-finite vector");
  return impl_->project(x);
}

Vector ConvexBody::center() const { return impl_->center(); }
std::vector<Vector> ConvexBody::extreme_points() const { return impl_->extremes(); }
BoundingBox ConvexBody::bounding_box() const { return impl_->bbox(); }
const Vector& ConvexBody::parameters() const { return impl_->params; }
double ConvexBody::scalar_parameter() const { return impl_->scalar; }
const std::vector<ConvexBody>& ConvexBody::components() const { return impl_->comps; }

std::vector<ConvexBody> ConvexBody::constraint_sets() const {
  std::vector<ConvexBody> out;
  impl_->constraints(*this, out);
  return out;
}

Vector project_intersection(const std::vector<ConvexBody>& sets, const Vector& x, double tol,
                            int max_cycles) {
  if (sets.empty()) return x;
  if (sets.size() == 1) return sets.front().project(x);
  const size_t m = sets.size();
  std::vector<Vector> incr(m, Vector::Zero(x.size()));
  std::vector<Vector> last(m, x);
  Vector cur = x;
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    double change = 0.0;
    for (size_t i = 0; i < m; ++i) {
      Vector z = cur + incr[i];
      Vector p = sets[i].project(z);
      change += (p - last[i]).squaredNorm() + (z - p - incr[i]).squaredNorm();
      incr[i] = z - p;
      last[i] = p;
      cur = p;
    }
    if (std::sqrt(change) <= tol) {
      bool feasible = true;
      for (size_t i = 0; i + 1 < m && feasible; ++i) feasible = sets[i].contains(cur, 10 * tol);
      if (feasible) return cur;
    }
  }
  throw NumericalError("Dykstra projection did not converge within " +
                       std::to_string(max_cycles) + " cycles");
}

Vector project_localized(const ConvexBody& body, const Vector& center, double radius,
                         const Vector& x) {
  if (!(radius > 0) || !std::isfinite(radius)) throw ValidationError("radius must be positive");
  if (center.size() != body.dimension() || x.size() != body.dimension())
    throw ValidationError("dimension mismatch in localized projection");
  auto in_ball = [&](const Vector& v) { return (v - center).norm() <= radius; };
  auto inside = [&](const Vector& v) { return in_ball(v) && body.contains(v); };
  if (inside(x)) return x;
  const auto sets = body.constraint_sets();
  if (sets.size() == 1) {
    Vector pk = body.project(x);
    if (in_ball(pk)) return pk;
  }
  const double dist = (x - center).norm();
  Vector pb = center + (x - center) * (radius / dist);
  pb = pull_inside(pb, center, in_ball);
  if (body.contains(pb)) return pb;

  std::vector<ConvexBody> all;
  all.reserve(sets.size() + 1);
  all.push_back(ConvexBody::ball(center, radius));
  all.insert(all.end(), sets.begin(), sets.end());
  Vector p = project_intersection(all, x, 1e-10 * (radius + dist));
  // Clean up round-off so the point satisfies both constraints exactly;
  // moving towards the center stays inside the body by convexity.
  if (sets.size() == 1) p = body.project(p);
  const double pd = (p - center).norm();
  if (pd > radius) p = center + (p - center) * (radius / pd);
  return pull_inside(p, center, inside);
}

double weak_lp_norm(const Vector& x, double p) {
  if (!(p > 1.0 && p < 2.0)) throw ValidationError("weak-lp exponent must lie in (1, 2)");
  std::vector<double> m(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) m[i] = std::abs(x[i]);
  std::sort(m.begin(), m.end(), std::greater<>());
  double cum = 0.0, best = 0.0;
  for (size_t i = 0; i < m.size(); ++i) {
    cum += m[i];
    const double k = static_cast<double>(i + 1);
    best = std::max(best, std::pow(k, 1.0 / p) * cum / k);
  }
  return best;
}

}  // namespace locmm
