#include "sfdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sfdg {

std::string to_string(BoundaryClass c) {
    switch (c) {
    case BoundaryClass::interior: return "interior";
    case BoundaryClass::dirichlet: return "dirichlet";
    case BoundaryClass::neumann: return "neumann";
    case BoundaryClass::outflow: return "outflow";
    }
    return "?";
}

std::string to_string(GeometryClass c) {
    switch (c) {
    case GeometryClass::axis_parallel: return "axis-parallel";
    case GeometryClass::affine: return "affine";
    case GeometryClass::multilinear: return "multilinear";
    }
    return "?";
}

BoundaryClass boundary_class_from_string(const std::string& s) {
    if (s == "dirichlet")
        return BoundaryClass::dirichlet;
    if (s == "neumann")
        return BoundaryClass::neumann;
    if (s == "outflow")
        return BoundaryClass::outflow;
    throw std::invalid_argument("unknown boundary class '" + s + "'");
}

GeometryClass geometry_class_from_string(const std::string& s) {
    if (s == "axis-parallel")
        return GeometryClass::axis_parallel;
    if (s == "affine")
        return GeometryClass::affine;
    if (s == "multilinear")
        return GeometryClass::multilinear;
    throw std::invalid_argument("unknown geometry class '" + s + "'");
}

double invert_transpose(int d, const double* j, double* s) {
    if (d == 1) {
        s[0] = 1.0 / j[0];
        return j[0];
    }
    if (d == 2) {
        const double det = j[0] * j[3] - j[1] * j[2];
        const double r = 1.0 / det;
        s[0] = j[3] * r;
        s[1] = -j[2] * r;
        s[2] = -j[1] * r;
        s[3] = j[0] * r;
        return det;
    }
    // cofactors C_ij; J^{-T} = C / det
    const double c00 = j[4] * j[8] - j[5] * j[7];
    const double c01 = j[5] * j[6] - j[3] * j[8];
    const double c02 = j[3] * j[7] - j[4] * j[6];
    const double c10 = j[2] * j[7] - j[1] * j[8];
    const double c11 = j[0] * j[8] - j[2] * j[6];
    const double c12 = j[1] * j[6] - j[0] * j[7];
    const double c20 = j[1] * j[5] - j[2] * j[4];
    const double c21 = j[2] * j[3] - j[0] * j[5];
    const double c22 = j[0] * j[4] - j[1] * j[3];
    const double det = j[0] * c00 + j[1] * c01 + j[2] * c02;
    const double r = 1.0 / det;
    s[0] = c00 * r;
    s[1] = c01 * r;
    s[2] = c02 * r;
    s[3] = c10 * r;
    s[4] = c11 * r;
    s[5] = c12 * r;
    s[6] = c20 * r;
    s[7] = c21 * r;
    s[8] = c22 * r;
    return det;
}

DimArray<double> GeometryMapping::map(const DimArray<double>& xhat) const {
    DimArray<double> x{0.0, 0.0, 0.0};
    if (cls != GeometryClass::multilinear) {
        for (int a = 0; a < dim; ++a) {
            x[a] = offset[a];
            for (int q = 0; q < dim; ++q)
                x[a] += jacobian[a][q] * xhat[q];
        }
        return x;
    }
    for (int c = 0; c < (1 << dim); ++c) {
        double w = 1.0;
        for (int q = 0; q < dim; ++q)
            w *= (c >> q & 1) ? xhat[q] : 1.0 - xhat[q];
        for (int a = 0; a < dim; ++a)
            x[a] += w * corners[c][a];
    }
    return x;
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double hash_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t comp) {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ a);
    h = splitmix(h ^ (b + 0x1000));
    h = splitmix(h ^ (c + 0x2000));
    h = splitmix(h ^ (comp + 0x3000));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

} // namespace

StructuredMesh::StructuredMesh(const MeshConfig& config) : cfg_(config) {
    const int d = cfg_.dim;
    if (d < 2 || d > kMaxDim)
        throw std::invalid_argument("mesh: dimension must be 2 or 3");
    num_elements_ = 1;
    for (int k = 0; k < d; ++k) {
        if (cfg_.cells[k] < 1)
            throw std::invalid_argument("mesh: cell count must be positive in direction " + std::to_string(k));
        if (cfg_.periodic[k] && cfg_.cells[k] < 2)
            throw std::invalid_argument("mesh: periodic direction " + std::to_string(k) + " needs at least 2 cells");
        if (!(cfg_.hi[k] > cfg_.lo[k]))
            throw std::invalid_argument("mesh: degenerate box in direction " + std::to_string(k));
        num_elements_ *= cfg_.cells[k];
    }
    for (int k = d; k < kMaxDim; ++k) {
        cfg_.cells[k] = 1;
        cfg_.periodic[k] = false;
    }
    if (cfg_.geometry == GeometryClass::axis_parallel) {
        for (int a = 0; a < kMaxDim; ++a)
            for (int b = 0; b < kMaxDim; ++b)
                if (cfg_.affine[a][b] != (a == b ? 1.0 : 0.0))
                    throw std::invalid_argument("mesh: axis-parallel geometry takes no affine matrix");
    }
    if (cfg_.geometry == GeometryClass::multilinear) {
        if (cfg_.perturbation < 0.0 || cfg_.perturbation >= 0.5)
            throw std::invalid_argument("mesh: perturbation must lie in [0, 0.5)");
    } else if (cfg_.perturbation != 0.0) {
        throw std::invalid_argument("mesh: perturbation requires multilinear geometry");
    }
    {
        double m[9];
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                m[a * d + b] = cfg_.affine[a][b];
        double s[9];
        if (!(invert_transpose(d, m, s) > 0.0))
            throw DegenerateGeometryError("mesh: affine matrix must have positive determinant");
    }

    // faces: interior per direction in owner order, then boundary
    for (int k = 0; k < d; ++k)
        for (index_t e = 0; e < num_elements_; ++e) {
            const index_t nb = neighbor(e, k, 1);
            if (nb < 0)
                continue;
            FaceInfo f;
            f.minus = e;
            f.plus = nb;
            f.normal = k;
            f.minus_end = FaceEnd::high;
            f.plus_end = FaceEnd::low;
            int t = 0;
            for (int q = 0; q < d; ++q)
                if (q != k)
                    f.perm_minus[t++] = q;
            f.perm_minus[d - 1] = k;
            for (int q = d; q < kMaxDim; ++q)
                f.perm_minus[q] = q;
            f.perm_plus = f.perm_minus;
            faces_.push_back(f);
        }
    num_interior_ = static_cast<index_t>(faces_.size());
    for (int k = 0; k < d; ++k) {
        if (cfg_.periodic[k])
            continue;
        for (int side = 0; side < 2; ++side)
            for (index_t e = 0; e < num_elements_; ++e) {
                if (neighbor(e, k, side) >= 0)
                    continue;
                FaceInfo f;
                f.minus = e;
                f.normal = k;
                f.minus_end = side == 0 ? FaceEnd::low : FaceEnd::high;
                f.plus_end = f.minus_end;
                int t = 0;
                for (int q = 0; q < d; ++q)
                    if (q != k)
                        f.perm_minus[t++] = q;
                f.perm_minus[d - 1] = k;
                f.perm_plus = f.perm_minus;
                f.cls = cfg_.boundary[k][side];
                if (f.cls == BoundaryClass::interior)
                    throw std::invalid_argument("mesh: boundary side cannot be classified interior");
                faces_.push_back(f);
            }
    }

    scale_ = 0.0;
    const auto h = width();
    for (int k = 0; k < d; ++k)
        scale_ += h[k] * h[k];
    scale_ = std::sqrt(scale_);

    // measures; the multilinear path also validates every Jacobian here
    GeometryEvaluator geo(*this, gauss_legendre(3));
    VolumeGeometry vg;
    const auto rule = gauss_legendre(3);
    volumes_.resize(static_cast<std::size_t>(num_elements_));
    for (index_t e = 0; e < num_elements_; ++e) {
        if (constant_jacobian() && e > 0) {
            volumes_[e] = volumes_[0];
            continue;
        }
        geo.volume(e, vg);
        double v = 0.0;
        for (index_t i = 0; i < vg.points; ++i) {
            double w = 1.0;
            index_t r = i;
            for (int q = 0; q < d; ++q) {
                w *= rule.weights[r % 3];
                r /= 3;
            }
            v += w * (vg.constant ? vg.det[0] : vg.det[i]);
        }
        volumes_[e] = v;
    }
}

StructuredMesh build_mesh(const MeshConfig& config) { return StructuredMesh(config); }

std::vector<FaceInfo> iterate_faces_once(const StructuredMesh& mesh) { return mesh.faces(); }

DimArray<index_t> StructuredMesh::element_index(index_t e) const {
    DimArray<index_t> idx{0, 0, 0};
    for (int k = 0; k < cfg_.dim; ++k) {
        idx[k] = e % cfg_.cells[k];
        e /= cfg_.cells[k];
    }
    return idx;
}

index_t StructuredMesh::element_id(const DimArray<index_t>& idx) const {
    index_t e = 0;
    for (int k = cfg_.dim - 1; k >= 0; --k)
        e = e * cfg_.cells[k] + idx[k];
    return e;
}

index_t StructuredMesh::neighbor(index_t e, int k, int side) const {
    auto idx = element_index(e);
    const index_t n = cfg_.cells[k];
    index_t j = idx[k] + (side == 0 ? -1 : 1);
    if (j < 0 || j >= n) {
        if (!cfg_.periodic[k])
            return -1;
        j = (j + n) % n;
    }
    idx[k] = j;
    return element_id(idx);
}

DimArray<double> StructuredMesh::width() const {
    DimArray<double> h{1.0, 1.0, 1.0};
    for (int k = 0; k < cfg_.dim; ++k)
        h[k] = (cfg_.hi[k] - cfg_.lo[k]) / static_cast<double>(cfg_.cells[k]);
    return h;
}

double StructuredMesh::min_width() const {
    const auto h = width();
    double m = h[0];
    for (int k = 1; k < cfg_.dim; ++k)
        m = std::min(m, h[k]);
    return m;
}

DimArray<double> StructuredMesh::vertex(const DimArray<index_t>& v) const {
    const int d = cfg_.dim;
    const auto h = width();
    DimArray<double> y{0.0, 0.0, 0.0};
    for (int k = 0; k < d; ++k)
        y[k] = cfg_.lo[k] + static_cast<double>(v[k]) * h[k];
    if (cfg_.geometry == GeometryClass::multilinear && cfg_.perturbation > 0.0) {
        DimArray<std::uint64_t> w{0, 0, 0};
        for (int k = 0; k < d; ++k)
            w[k] = static_cast<std::uint64_t>(cfg_.periodic[k] ? v[k] % cfg_.cells[k] : v[k]);
        for (int a = 0; a < d; ++a) {
            // the box boundary stays planar in non-periodic directions
            if (!cfg_.periodic[a] && (v[a] == 0 || v[a] == cfg_.cells[a]))
                continue;
            y[a] += cfg_.perturbation * h[a] * hash_unit(cfg_.seed, w[0], w[1], w[2], a);
        }
    }
    DimArray<double> x{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) {
        x[a] = cfg_.lo[a];
        for (int b = 0; b < d; ++b)
            x[a] += cfg_.affine[a][b] * (y[b] - cfg_.lo[b]);
    }
    return x;
}

GeometryMapping StructuredMesh::mapping(index_t e) const {
    const int d = cfg_.dim;
    GeometryMapping g;
    g.cls = cfg_.geometry;
    g.dim = d;
    const auto idx = element_index(e);
    for (int c = 0; c < (1 << d); ++c) {
        DimArray<index_t> v = idx;
        for (int q = 0; q < d; ++q)
            v[q] += c >> q & 1;
        g.corners[c] = vertex(v);
    }
    g.offset = g.corners[0];
    if (g.cls != GeometryClass::multilinear) {
        const auto h = width();
        for (int a = 0; a < d; ++a)
            for (int q = 0; q < d; ++q)
                g.jacobian[a][q] = cfg_.affine[a][q] * h[q];
    }
    return g;
}

double StructuredMesh::cell_volume(index_t e) const { return volumes_.at(static_cast<std::size_t>(e)); }

double StructuredMesh::face_area(const FaceInfo& f) const {
    const int d = cfg_.dim;
    const auto rule = gauss_legendre(3);
    GeometryEvaluator geo(*this, rule);
    FaceGeometry fg;
    geo.face(f, fg);
    double a = 0.0;
    for (index_t i = 0; i < fg.points; ++i) {
        double w = 1.0;
        index_t r = i;
        for (int q = 0; q < d - 1; ++q) {
            w *= rule.weights[r % 3];
            r /= 3;
        }
        a += w * fg.area[i];
    }
    return a;
}

// ---------------------------------------------------------------------------

namespace {

SmallMatrix q1_matrix(const QuadratureRule1D& quad, bool deriv) {
    SmallMatrix a(2, quad.size());
    for (int i = 0; i < quad.size(); ++i) {
        a(0, i) = deriv ? -1.0 : 1.0 - quad.points[i];
        a(1, i) = deriv ? 1.0 : quad.points[i];
    }
    return a;
}

const double q1_low_values[2] = {1.0, 0.0};
const double q1_high_values[2] = {0.0, 1.0};
const double q1_derivs[2] = {-1.0, 1.0};

} // namespace

GeometryEvaluator::GeometryEvaluator(const StructuredMesh& mesh, const QuadratureRule1D& quad)
    : mesh_(&mesh), quad_(quad), d_(mesh.dim()), m_(quad.size()),
      q1_(mesh.dim(), q1_matrix(quad, false), q1_matrix(quad, true), q1_low_values, q1_derivs, q1_high_values,
          q1_derivs),
      ws_(mesh.dim(), std::max(2, quad.size())) {
    const index_t np = padded_points(ipow(m_, d_));
    corner_.resize(static_cast<std::size_t>(1) << d_);
    packs_.resize(static_cast<std::size_t>(d_ * np * kPackWidth));
    jac_.resize(static_cast<std::size_t>(np * d_ * d_));
    xs_.resize(static_cast<std::size_t>(np * d_));
}

void GeometryEvaluator::fold_into_other(const KernelStats& before, std::uint64_t fma) {
    const auto loaded = ws_.stats.bytes_loaded, stored = ws_.stats.bytes_stored;
    ws_.stats = before;
    ws_.stats.other_fma += fma;
    ws_.stats.bytes_loaded = loaded;
    ws_.stats.bytes_stored = stored;
}

void GeometryEvaluator::jacobians_volume(index_t e) {
    const auto g = mesh_->mapping(e);
    const index_t np = ipow(m_, d_);
    const index_t stride = padded_points(np) * kPackWidth;
    const KernelStats before = ws_.stats;
    for (int a = 0; a < d_; ++a) {
        for (int c = 0; c < (1 << d_); ++c)
            corner_[c] = g.corners[c][a];
        q1_.volume_evaluate(corner_.data(), packs_.data() + a * stride, ws_);
    }
    fold_into_other(before, ws_.stats.volume_fma - before.volume_fma);
    for (index_t i = 0; i < np; ++i)
        for (int a = 0; a < d_; ++a) {
            const double* pk = packs_.data() + a * stride + i * kPackWidth;
            for (int q = 0; q < d_; ++q)
                jac_[(i * d_ + a) * d_ + q] = pk[q];
            xs_[i * d_ + a] = pk[d_];
        }
}

void GeometryEvaluator::jacobians_face(index_t e, int normal, FaceEnd end) {
    const auto g = mesh_->mapping(e);
    const index_t np = ipow(m_, d_ - 1);
    const index_t stride = padded_points(np) * kPackWidth;
    const KernelStats before = ws_.stats;
    for (int a = 0; a < d_; ++a) {
        for (int c = 0; c < (1 << d_); ++c)
            corner_[c] = g.corners[c][a];
        q1_.face_evaluate(normal, end, corner_.data(), packs_.data() + a * stride, ws_);
    }
    fold_into_other(before, ws_.stats.face_fma - before.face_fma);
    for (index_t i = 0; i < np; ++i)
        for (int a = 0; a < d_; ++a) {
            const double* pk = packs_.data() + a * stride + i * kPackWidth;
            for (int q = 0; q < d_; ++q)
                jac_[(i * d_ + a) * d_ + q] = pk[q];
            xs_[i * d_ + a] = pk[d_];
        }
}

void GeometryEvaluator::volume(index_t e, VolumeGeometry& out) {
    const int d = d_;
    const index_t np = ipow(m_, d);
    out.points = np;
    out.s.resize(static_cast<std::size_t>(np * d * d));
    out.det.resize(static_cast<std::size_t>(np));
    out.x.resize(static_cast<std::size_t>(np * d));
    const double tol = 1e-14 * std::pow(mesh_->scale(), d);
    if (mesh_->constant_jacobian()) {
        out.constant = true;
        const auto g = mesh_->mapping(e);
        double j[9], s[9];
        for (int a = 0; a < d; ++a)
            for (int q = 0; q < d; ++q)
                j[a * d + q] = g.jacobian[a][q];
        const double det = invert_transpose(d, j, s);
        if (!(det > tol))
            throw DegenerateGeometryError("element " + std::to_string(e) + ": non-positive Jacobian determinant");
        for (index_t i = 0; i < np; ++i) {
            std::copy(s, s + d * d, out.s.begin() + i * d * d);
            out.det[i] = det;
            index_t r = i;
            DimArray<double> xh{0, 0, 0};
            for (int q = 0; q < d; ++q) {
                xh[q] = quad_.points[r % m_];
                r /= m_;
            }
            const auto x = g.map(xh);
            for (int a = 0; a < d; ++a)
                out.x[i * d + a] = x[a];
        }
        return;
    }
    out.constant = false;
    jacobians_volume(e);
    for (index_t i = 0; i < np; ++i) {
        const double det = invert_transpose(d, jac_.data() + i * d * d, out.s.data() + i * d * d);
        if (!(det > tol))
            throw DegenerateGeometryError("element " + std::to_string(e) + ": Jacobian determinant " +
                                          std::to_string(det) + " at quadrature point " + std::to_string(i));
        out.det[i] = det;
        for (int a = 0; a < d; ++a)
            out.x[i * d + a] = xs_[i * d + a];
    }
}

void GeometryEvaluator::face(const FaceInfo& f, FaceGeometry& out) {
    const int d = d_;
    const int k = f.normal;
    const index_t np = ipow(m_, d - 1);
    out.points = np;
    out.s_minus.resize(static_cast<std::size_t>(np * d * d));
    out.s_plus.resize(static_cast<std::size_t>(np * d * d));
    out.area.resize(static_cast<std::size_t>(np));
    out.nu.resize(static_cast<std::size_t>(np * d));
    out.x.resize(static_cast<std::size_t>(np * d));
    const double sign = f.minus_end == FaceEnd::high ? 1.0 : -1.0;
    const double tol = 1e-14 * std::pow(mesh_->scale(), d);

    auto finish_point = [&](index_t i, const double* s, double det) {
        // Nanson: the reference face normal maps to S e_k, scaled by det J
        double v[3], len = 0.0;
        for (int r = 0; r < d; ++r) {
            v[r] = s[r * d + k];
            len += v[r] * v[r];
        }
        len = std::sqrt(len);
        out.area[i] = det * len;
        for (int r = 0; r < d; ++r)
            out.nu[i * d + r] = sign * v[r] / len;
    };

    if (mesh_->constant_jacobian()) {
        out.constant = true;
        const auto g = mesh_->mapping(f.minus);
        double j[9], s[9];
        for (int a = 0; a < d; ++a)
            for (int q = 0; q < d; ++q)
                j[a * d + q] = g.jacobian[a][q];
        const double det = invert_transpose(d, j, s);
        if (!(det > tol))
            throw DegenerateGeometryError("face geometry: non-positive Jacobian determinant");
        for (index_t i = 0; i < np; ++i) {
            std::copy(s, s + d * d, out.s_minus.begin() + i * d * d);
            std::copy(s, s + d * d, out.s_plus.begin() + i * d * d);
            finish_point(i, s, det);
            DimArray<double> xh{0, 0, 0};
            index_t r = i;
            for (int q = 0; q < d; ++q) {
                if (q == k) {
                    xh[q] = f.minus_end == FaceEnd::high ? 1.0 : 0.0;
                    continue;
                }
                xh[q] = quad_.points[r % m_];
                r /= m_;
            }
            const auto x = g.map(xh);
            for (int a = 0; a < d; ++a)
                out.x[i * d + a] = x[a];
        }
        return;
    }
    out.constant = false;
    jacobians_face(f.minus, k, f.minus_end);
    for (index_t i = 0; i < np; ++i) {
        double* s = out.s_minus.data() + i * d * d;
        const double det = invert_transpose(d, jac_.data() + i * d * d, s);
        if (!(det > tol))
            throw DegenerateGeometryError("face geometry: non-positive Jacobian determinant on element " +
                                          std::to_string(f.minus));
        finish_point(i, s, det);
        for (int a = 0; a < d; ++a)
            out.x[i * d + a] = xs_[i * d + a];
    }
    if (f.plus >= 0) {
        jacobians_face(f.plus, k, f.plus_end);
        for (index_t i = 0; i < np; ++i) {
            const double det = invert_transpose(d, jac_.data() + i * d * d, out.s_plus.data() + i * d * d);
            if (!(det > tol))
                throw DegenerateGeometryError("face geometry: non-positive Jacobian determinant on element " +
                                              std::to_string(f.plus));
        }
    }
}

} // namespace sfdg
