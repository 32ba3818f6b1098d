#include "forge/core/error.hpp"
#include "forge/core/rng.hpp"
#include "forge/core/union_find.hpp"
#include "forge/deform/deform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace forge::deform {

namespace {

constexpr std::array<std::array<int, 3>, 8> kSign{{{-1, -1, -1},
                                                   {1, -1, -1},
                                                   {1, 1, -1},
                                                   {-1, 1, -1},
                                                   {-1, -1, 1},
                                                   {1, -1, 1},
                                                   {1, 1, 1},
                                                   {-1, 1, 1}}};

// Per-element scale E * h and the index of its reference matrix.
struct ElementOperators {
  std::vector<ElementMatrix> refs;
  std::vector<double> scale;
  std::vector<std::uint32_t> ref;
};

ElementOperators element_operators(const Lattice& lat, int gauss_points = 2) {
  ElementOperators ops;
  std::vector<double> nus;
  ops.scale.resize(lat.element_count());
  ops.ref.resize(lat.element_count());
  for (std::size_t e = 0; e < lat.element_count(); ++e) {
    const auto& m = lat.element_material[e];
    auto it = std::find(nus.begin(), nus.end(), m.poisson);
    if (it == nus.end()) {
      nus.push_back(m.poisson);
      ops.refs.push_back(reference_stiffness(m.poisson, gauss_points));
      it = nus.end() - 1;
    }
    ops.ref[e] = static_cast<std::uint32_t>(it - nus.begin());
    ops.scale[e] = m.young * lat.voxel_size();
  }
  return ops;
}

// Vertex -> (element, local corner) pairs in ascending element order.
struct Incidence {
  std::vector<std::size_t> offset;
  std::vector<std::uint32_t> element;
  std::vector<std::uint8_t> corner;
};

Incidence incidence(const Lattice& lat) {
  Incidence inc;
  inc.offset.assign(lat.vertex_count() + 1, 0);
  for (const auto& ev : lat.element_vertices) {
    for (auto v : ev) ++inc.offset[v + 1];
  }
  for (std::size_t v = 0; v < lat.vertex_count(); ++v) inc.offset[v + 1] += inc.offset[v];
  inc.element.resize(inc.offset.back());
  inc.corner.resize(inc.offset.back());
  std::vector<std::size_t> fill(inc.offset.begin(), inc.offset.end() - 1);
  for (std::size_t e = 0; e < lat.element_count(); ++e) {
    for (int a = 0; a < 8; ++a) {
      const auto v = lat.element_vertices[e][a];
      inc.element[fill[v]] = static_cast<std::uint32_t>(e);
      inc.corner[fill[v]] = static_cast<std::uint8_t>(a);
      ++fill[v];
    }
  }
  return inc;
}

class Operator {
 public:
  Operator(const Lattice& lat, Exec exec) : lat_(lat), ops_(element_operators(lat)), exec_(exec) {
    if (exec_ == Exec::parallel) {
      inc_ = incidence(lat);
      fe_.resize(24 * lat.element_count());
    }
  }

  // y = K x. The parallel kernel forms every element product, then each vertex
  // sums its contributions in ascending element order, which is exactly the
  // order of the serial scatter.
  void apply(const std::vector<double>& x, std::vector<double>& y) {
    y.assign(x.size(), 0.0);
    const std::size_t ne = lat_.element_count();
    if (exec_ == Exec::serial) {
      Eigen::Matrix<double, 24, 1> ue;
      for (std::size_t e = 0; e < ne; ++e) {
        gather(e, x, ue);
        const Eigen::Matrix<double, 24, 1> fe = ops_.scale[e] * (ops_.refs[ops_.ref[e]] * ue);
        for (int a = 0; a < 8; ++a) {
          const std::size_t v = lat_.element_vertices[e][a];
          for (int d = 0; d < 3; ++d) y[3 * v + d] += fe[3 * a + d];
        }
      }
      return;
    }
#pragma omp parallel
    {
      Eigen::Matrix<double, 24, 1> ue;
#pragma omp for schedule(static)
      for (std::ptrdiff_t ee = 0; ee < static_cast<std::ptrdiff_t>(ne); ++ee) {
        const auto e = static_cast<std::size_t>(ee);
        gather(e, x, ue);
        Eigen::Map<Eigen::Matrix<double, 24, 1>>(fe_.data() + 24 * e) = ops_.scale[e] * (ops_.refs[ops_.ref[e]] * ue);
      }
#pragma omp for schedule(static)
      for (std::ptrdiff_t vv = 0; vv < static_cast<std::ptrdiff_t>(lat_.vertex_count()); ++vv) {
        const auto v = static_cast<std::size_t>(vv);
        for (std::size_t k = inc_.offset[v]; k < inc_.offset[v + 1]; ++k) {
          const double* f = fe_.data() + 24 * inc_.element[k] + 3 * inc_.corner[k];
          for (int d = 0; d < 3; ++d) y[3 * v + d] += f[d];
        }
      }
    }
  }

  std::vector<double> diagonal() const {
    std::vector<double> diag(3 * lat_.vertex_count(), 0.0);
    for (std::size_t e = 0; e < lat_.element_count(); ++e) {
      const auto& k = ops_.refs[ops_.ref[e]];
      for (int a = 0; a < 8; ++a) {
        for (int d = 0; d < 3; ++d) diag[3 * lat_.element_vertices[e][a] + d] += ops_.scale[e] * k(3 * a + d, 3 * a + d);
      }
    }
    return diag;
  }

 private:
  void gather(std::size_t e, const std::vector<double>& x, Eigen::Matrix<double, 24, 1>& ue) const {
    for (int a = 0; a < 8; ++a) {
      const std::size_t v = lat_.element_vertices[e][a];
      for (int d = 0; d < 3; ++d) ue[3 * a + d] = x[3 * v + d];
    }
  }

  const Lattice& lat_;
  ElementOperators ops_;
  Exec exec_;
  Incidence inc_;
  std::vector<double> fe_;
};

struct Constraints {
  FixedMask constrained;
  std::size_t frozen_components = 0;
  std::size_t frozen_vertices = 0;
};

// True when the points hold three that are not collinear.
bool spans_plane(const std::vector<VoxelKey>& pts) {
  if (pts.size() < 3) return false;
  const auto vec = [](const VoxelKey& a, const VoxelKey& b) {
    return Eigen::Vector3<long long>(b.x - a.x, b.y - a.y, b.z - a.z);
  };
  const auto& p0 = pts[0];
  std::size_t i1 = 1;
  while (i1 < pts.size() && pts[i1] == p0) ++i1;
  if (i1 == pts.size()) return false;
  const auto d1 = vec(p0, pts[i1]);
  for (std::size_t i = i1 + 1; i < pts.size(); ++i) {
    if (d1.cross(vec(p0, pts[i])) != Eigen::Vector3<long long>::Zero()) return true;
  }
  return false;
}

Constraints constraints(const Lattice& lat, const FixedMask& fixed) {
  UnionFind uf(lat.element_count());
  for (std::size_t e = 0; e < lat.element_count(); ++e) {
    const auto& k = lat.elements[e];
    for (const VoxelKey& n : {VoxelKey{k.x + 1, k.y, k.z}, VoxelKey{k.x, k.y + 1, k.z}, VoxelKey{k.x, k.y, k.z + 1}}) {
      const auto it = lat.element_index.find(n);
      if (it != lat.element_index.end()) uf.unite(e, it->second);
    }
  }
  const auto label = uf.labels();
  const std::size_t nc = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
  std::vector<std::vector<VoxelKey>> anchors(nc);
  for (std::size_t e = 0; e < lat.element_count(); ++e) {
    for (auto v : lat.element_vertices[e]) {
      if (fixed[v]) anchors[label[e]].push_back(lat.vertices[v]);
    }
  }
  std::vector<std::uint8_t> anchored(nc);
  Constraints c;
  for (std::size_t i = 0; i < nc; ++i) {
    auto& pts = anchors[i];
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    anchored[i] = spans_plane(pts);
    if (!anchored[i]) ++c.frozen_components;
  }
  c.constrained = fixed;
  for (std::size_t e = 0; e < lat.element_count(); ++e) {
    if (anchored[label[e]]) continue;
    for (auto v : lat.element_vertices[e]) {
      if (!c.constrained[v]) {
        c.constrained[v] = 1;
        ++c.frozen_vertices;
      }
    }
  }
  return c;
}

}  // namespace

ElementMatrix reference_stiffness(double nu, int gauss_points) {
  const double lambda = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = 1.0 / (2.0 * (1.0 + nu));
  Eigen::Matrix<double, 6, 6> D = Eigen::Matrix<double, 6, 6>::Zero();
  D.topLeftCorner<3, 3>().setConstant(lambda);
  for (int i = 0; i < 3; ++i) {
    D(i, i) = lambda + 2.0 * mu;
    D(i + 3, i + 3) = mu;
  }
  std::vector<double> pts, wts;
  if (gauss_points == 2) {
    pts = {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
    wts = {1.0, 1.0};
  } else if (gauss_points == 3) {
    pts = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    wts = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  } else {
    fail(ErrorCode::InvalidArgument, "gauss_points must be 2 or 3");
  }
  // Unit cube: x = (xi + 1) / 2, so d/dx = 2 d/dxi and det J = 1/8.
  ElementMatrix K = ElementMatrix::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const double xi[3] = {pts[i], pts[j], pts[k]};
        Eigen::Matrix<double, 6, 24> B = Eigen::Matrix<double, 6, 24>::Zero();
        for (int a = 0; a < 8; ++a) {
          double g[3];
          for (int d = 0; d < 3; ++d) {
            double prod = 0.125 * kSign[a][d];
            for (int o = 0; o < 3; ++o) {
              if (o != d) prod *= 1.0 + kSign[a][o] * xi[o];
            }
            g[d] = 2.0 * prod;
          }
          B(0, 3 * a) = g[0];
          B(1, 3 * a + 1) = g[1];
          B(2, 3 * a + 2) = g[2];
          B(3, 3 * a) = g[1];
          B(3, 3 * a + 1) = g[0];
          B(4, 3 * a + 1) = g[2];
          B(4, 3 * a + 2) = g[1];
          B(5, 3 * a) = g[2];
          B(5, 3 * a + 2) = g[0];
        }
        K += (wts[i] * wts[j] * wts[k] * 0.125) * (B.transpose() * D * B);
      }
    }
  }
  return 0.5 * (K + K.transpose());
}

void ForceSpec::validate(const Lattice& lattice) const {
  if (!(bound >= 0.0)) fail(ErrorCode::InvalidArgument, "force bound must be non-negative");
  for (const auto& f : forces) {
    if (f.vertex >= lattice.vertex_count()) fail(ErrorCode::InvalidArgument, "force on a missing vertex");
    if (!f.force.allFinite() || f.force.cwiseAbs().maxCoeff() > bound) {
      fail(ErrorCode::InvalidArgument, "force component outside [-bound, bound]");
    }
  }
}

std::vector<double> apply_stiffness(const Lattice& lattice, const std::vector<double>& x, Exec exec) {
  if (x.size() != 3 * lattice.vertex_count()) fail(ErrorCode::InvalidArgument, "vector does not match the lattice");
  Operator op(lattice, exec);
  std::vector<double> y;
  op.apply(x, y);
  return y;
}

Eigen::MatrixXd assemble_dense(const Lattice& lattice, int gauss_points) {
  const auto ops = element_operators(lattice, gauss_points);
  const auto n = static_cast<Eigen::Index>(3 * lattice.vertex_count());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < lattice.element_count(); ++e) {
    const auto& ke = ops.refs[ops.ref[e]];
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        const auto va = static_cast<Eigen::Index>(lattice.element_vertices[e][a]);
        const auto vb = static_cast<Eigen::Index>(lattice.element_vertices[e][b]);
        K.block<3, 3>(3 * va, 3 * vb) += ops.scale[e] * ke.block<3, 3>(3 * a, 3 * b);
      }
    }
  }
  return K;
}

DeformField solve_elastic(const Lattice& lattice, const ForceSpec& forces, const FixedMask& fixed,
                          const SolverOptions& options, Exec exec) {
  forces.validate(lattice);
  if (fixed.size() != lattice.vertex_count()) fail(ErrorCode::InvalidArgument, "fixed mask does not match the lattice");
  if (std::find(fixed.begin(), fixed.end(), 1) == fixed.end()) {
    fail(ErrorCode::UnconstrainedSystem, "no fixed vertex; the system has rigid-body modes");
  }
  const Constraints cons = constraints(lattice, fixed);
  const std::size_t n = 3 * lattice.vertex_count();

  DeformField field;
  field.displacement.assign(lattice.vertex_count(), Vec3::Zero());
  field.frozen_components = cons.frozen_components;
  field.frozen_vertices = cons.frozen_vertices;

  std::vector<double> b(n, 0.0);
  for (const auto& f : forces.forces) {
    if (cons.constrained[f.vertex]) continue;
    for (int d = 0; d < 3; ++d) b[3 * f.vertex + d] += f.force[d];
  }
  const double b_norm = std::sqrt(deterministic_dot(b, b, exec));
  if (b_norm == 0.0) return field;

  Operator op(lattice, exec);
  std::vector<double> inv_diag = op.diagonal();
  for (std::size_t i = 0; i < n; ++i) {
    inv_diag[i] = cons.constrained[i / 3] || inv_diag[i] <= 0.0 ? 0.0 : 1.0 / inv_diag[i];
  }
  const auto mask = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < n; ++i) {
      if (cons.constrained[i / 3]) v[i] = 0.0;
    }
  };

  std::vector<double> x(n, 0.0), r = b, z(n), p(n), Ap;
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = deterministic_dot(r, z, exec);
  const auto cap = static_cast<long long>(options.max_iter_factor * static_cast<double>(n));
  double rel = 1.0;
  long long it = 0;
  for (; it < cap; ++it) {
    op.apply(p, Ap);
    mask(Ap);
    const double pAp = deterministic_dot(p, Ap, exec);
    if (!(pAp > 0.0)) break;
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    rel = std::sqrt(deterministic_dot(r, r, exec)) / b_norm;
    if (rel <= options.tolerance) {
      ++it;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = deterministic_dot(r, z, exec);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  field.iterations = static_cast<int>(it);
  field.relative_residual = rel;
  if (!(rel <= options.tolerance)) {
    std::ostringstream msg;
    msg << "CG stopped after " << it << " iterations at relative residual " << rel;
    fail(ErrorCode::SolverFailure, msg.str());
  }
  for (std::size_t v = 0; v < lattice.vertex_count(); ++v) field.displacement[v] = Vec3(x[3 * v], x[3 * v + 1], x[3 * v + 2]);
  return field;
}

std::vector<LabeledCloud> augment(const LabeledCloud& cloud, std::size_t n_variants, double voxel_size,
                                  const MaterialMap& materials, double force_bound, std::uint64_t seed,
                                  const AugmentOptions& options, Exec exec) {
  if (n_variants < 1) fail(ErrorCode::InvalidArgument, "need at least one variant");
  if (!(force_bound >= 0.0)) fail(ErrorCode::InvalidArgument, "force bound must be non-negative");
  const Lattice lat = build_lattice(cloud, voxel_size, materials);
  const FixedMask fixed = lowest_layer_fixed(lat);
  const Constraints cons = constraints(lat, fixed);
  std::vector<std::uint32_t> free;
  for (std::uint32_t v = 0; v < lat.vertex_count(); ++v) {
    if (!cons.constrained[v]) free.push_back(v);
  }

  std::vector<LabeledCloud> out(n_variants);
  const auto variant = [&](std::size_t i, Exec inner) {
    if (free.empty() || force_bound == 0.0) {
      out[i] = cloud;
      return;
    }
    Rng rng(derive_seed(seed, hash_name("deform"), i));
    std::vector<std::uint32_t> pool = free;
    const std::size_t k = std::min(options.forces_per_variant, pool.size());
    ForceSpec spec;
    spec.bound = force_bound;
    for (std::size_t j = 0; j < k; ++j) {
      std::swap(pool[j], pool[j + rng.index(pool.size() - j)]);
      Vec3 f;
      for (int d = 0; d < 3; ++d) f[d] = rng.uniform(-force_bound, force_bound);
      spec.forces.push_back({pool[j], f});
    }
    const DeformField field = solve_elastic(lat, spec, fixed, options.solver, inner);
    out[i] = apply_deformation(cloud, lat, field);
  };
  // Both kernels give bit-identical fields, so the split of work is free to vary.
  if (exec == Exec::parallel && n_variants > 1 && thread_count() > 1) {
    std::vector<std::exception_ptr> errors(n_variants);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_variants); ++i) {
      try {
        variant(static_cast<std::size_t>(i), Exec::serial);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < n_variants; ++i) variant(i, exec);
  }
  return out;
}

}  // namespace forge::deform
