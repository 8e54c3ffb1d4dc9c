#include "sfdg/operator.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sfdg {

double upwind_flux(double u_minus, double u_plus, double b_nu) { return b_nu >= 0.0 ? u_minus * b_nu : u_plus * b_nu; }

std::pair<double, double> face_weights(double delta_minus, double delta_plus) {
    if (delta_minus < 0.0 || delta_plus < 0.0)
        throw std::invalid_argument("face_weights: negative normal diffusion");
    const double sum = delta_minus + delta_plus;
    if (sum < 1e-300)
        return {0.5, 0.5};
    return {delta_plus / sum, delta_minus / sum};
}

double harmonic_mean(double a, double b) {
    if (a == 0.0 || b == 0.0)
        return 0.0;
    return 2.0 * a * b / (a + b);
}

double penalty_gamma(double delta_minus, double delta_plus, double area_f, double vol_minus, double vol_plus,
                     const PenaltyParams& params) {
    if (!(area_f > 0.0) || !(vol_minus > 0.0) || !(vol_plus > 0.0))
        throw std::invalid_argument("penalty_gamma: measures must be positive");
    const int p = params.degree;
    return params.alpha * harmonic_mean(delta_minus, delta_plus) * p * (p + params.dim - 1) * area_f /
           std::min(vol_minus, vol_plus);
}

struct DgOperator::Scratch {
    Workspace ws;
    std::unique_ptr<GeometryEvaluator> geo;
    VolumeGeometry vg;
    FaceGeometry fg;
    std::vector<double> pm;
    std::vector<double> pp;
    std::vector<double> zero;
};

namespace {

bool cellwise(Variation v) { return v != Variation::general; }

// K = S^T D S * det, beta = S^T b * det
void transform_coefficients(int d, const double* s, double det, const double* dm, const double* b, double* k,
                            double* beta) {
    double ds[9];
    for (int a = 0; a < d; ++a)
        for (int c = 0; c < d; ++c) {
            double v = 0.0;
            for (int q = 0; q < d; ++q)
                v += dm[a * d + q] * s[q * d + c];
            ds[a * d + c] = v;
        }
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            double v = 0.0;
            for (int a = 0; a < d; ++a)
                v += s[a * d + r] * ds[a * d + c];
            k[r * d + c] = v * det;
        }
        double v = 0.0;
        for (int a = 0; a < d; ++a)
            v += s[a * d + r] * b[a];
        beta[r] = v * det;
    }
}

// a = S^T D nu, delta = nu^T D nu
double normal_flux_vector(int d, const double* s, const double* dm, const double* nu, double* a) {
    double dn[3];
    double delta = 0.0;
    for (int q = 0; q < d; ++q) {
        double v = 0.0;
        for (int c = 0; c < d; ++c)
            v += dm[q * d + c] * nu[c];
        dn[q] = v;
        delta += nu[q] * v;
    }
    for (int r = 0; r < d; ++r) {
        double v = 0.0;
        for (int q = 0; q < d; ++q)
            v += s[q * d + r] * dn[q];
        a[r] = v;
    }
    return delta;
}

} // namespace

DgOperator::DgOperator(const StructuredMesh& mesh, const CoefficientSet& coeffs, const OperatorOptions& options)
    : mesh_(&mesh), coeffs_(coeffs), opts_(options), d_(mesh.dim()), n_(options.degree + 1),
      m_(options.quad_points > 0 ? options.quad_points : options.degree + 1), block_(ipow(n_, d_)),
      basis_(options.degree), quad_(gauss_legendre(m_)), ev_(basis_, quad_, d_), chain_(ev_, basis_) {
    if (coeffs.dim != d_)
        throw std::invalid_argument("operator: coefficient dimension " + std::to_string(coeffs.dim) +
                                    " does not match mesh dimension " + std::to_string(d_));
    if (!(opts_.alpha > 0.0))
        throw std::invalid_argument("operator: penalty alpha must be positive");
    if (opts_.threads < 1)
        throw std::invalid_argument("operator: thread count must be positive");
    coeffs_.validate();

    const index_t nq = ipow(m_, d_);
    qweights_.assign(static_cast<std::size_t>(padded_points(nq)), 0.0);
    for (index_t i = 0; i < nq; ++i) {
        double w = 1.0;
        index_t r = i;
        for (int q = 0; q < d_; ++q) {
            w *= quad_.weights[r % m_];
            r /= m_;
        }
        qweights_[i] = w;
    }
    const index_t nf = ipow(m_, d_ - 1);
    fweights_.assign(static_cast<std::size_t>(nf), 0.0);
    for (index_t i = 0; i < nf; ++i) {
        double w = 1.0;
        index_t r = i;
        for (int q = 0; q < d_ - 1; ++q) {
            w *= quad_.weights[r % m_];
            r /= m_;
        }
        fweights_[i] = w;
    }

    if (mesh.constant_jacobian()) {
        const auto g = mesh.mapping(0);
        double j[9];
        for (int a = 0; a < d_; ++a)
            for (int q = 0; q < d_; ++q)
                j[a * d_ + q] = g.jacobian[a][q];
        cs_.assign(static_cast<std::size_t>(d_ * d_), 0.0);
        cdet_ = invert_transpose(d_, j, cs_.data());
        cnu_.assign(static_cast<std::size_t>(d_ * d_), 0.0);
        carea_.assign(static_cast<std::size_t>(d_), 0.0);
        for (int k = 0; k < d_; ++k) {
            double len = 0.0;
            for (int r = 0; r < d_; ++r)
                len += cs_[r * d_ + k] * cs_[r * d_ + k];
            len = std::sqrt(len);
            for (int r = 0; r < d_; ++r)
                cnu_[k * d_ + r] = cs_[r * d_ + k] / len;
            carea_[k] = cdet_ * len;
        }
    }
    fast_volume_ = !opts_.generic_path && mesh.constant_jacobian() && cellwise(coeffs_.diffusion_variation) &&
                   cellwise(coeffs_.velocity_variation) && cellwise(coeffs_.reaction_variation);
    fast_face_ = !opts_.generic_path && mesh.constant_jacobian() && cellwise(coeffs_.diffusion_variation) &&
                 cellwise(coeffs_.velocity_variation);

    // penalty scales |F| / min |T|
    const auto& faces = mesh.faces();
    face_scale_.resize(faces.size());
    {
        const auto rule = gauss_legendre(3);
        GeometryEvaluator geo(mesh, rule);
        FaceGeometry fg;
        for (std::size_t i = 0; i < faces.size(); ++i) {
            const auto& f = faces[i];
            double area = 0.0;
            if (mesh.constant_jacobian()) {
                area = carea_[f.normal];
            } else {
                geo.face(f, fg);
                for (index_t q = 0; q < fg.points; ++q) {
                    double w = 1.0;
                    index_t r = q;
                    for (int k = 0; k < d_ - 1; ++k) {
                        w *= rule.weights[r % 3];
                        r /= 3;
                    }
                    area += w * fg.area[q];
                }
            }
            double vol = mesh.cell_volume(f.minus);
            if (f.plus >= 0)
                vol = std::min(vol, mesh.cell_volume(f.plus));
            face_scale_[i] = area / vol;
        }
    }

    // colored phases: phase 0 is the volume sweep
    phases_.emplace_back();
    for (int k = 0; k < d_; ++k) {
        std::vector<index_t> color[3];
        const index_t nk = mesh.cells(k);
        const bool odd_wrap = mesh.periodic(k) && nk % 2 == 1;
        for (std::size_t i = 0; i < faces.size(); ++i) {
            const auto& f = faces[i];
            if (!f.interior() || f.normal != k)
                continue;
            const index_t ik = mesh.element_index(f.minus)[k];
            const int c = odd_wrap && ik == nk - 1 ? 2 : static_cast<int>(ik % 2);
            color[c].push_back(static_cast<index_t>(i));
        }
        for (auto& c : color)
            if (!c.empty())
                phases_.push_back(std::move(c));
        for (int side = 0; side < 2; ++side) {
            std::vector<index_t> b;
            for (std::size_t i = 0; i < faces.size(); ++i) {
                const auto& f = faces[i];
                if (f.interior() || f.normal != k || static_cast<int>(f.minus_end) != side)
                    continue;
                if (f.cls == BoundaryClass::neumann)
                    continue;
                b.push_back(static_cast<index_t>(i));
            }
            if (!b.empty())
                phases_.push_back(std::move(b));
        }
    }
    {
        std::vector<int> touched(static_cast<std::size_t>(mesh.num_elements()), -1);
        for (std::size_t ph = 1; ph < phases_.size(); ++ph)
            for (index_t fi : phases_[ph]) {
                const auto& f = faces[fi];
                for (index_t e : {f.minus, f.plus}) {
                    if (e < 0)
                        continue;
                    if (touched[e] == static_cast<int>(ph))
                        throw std::logic_error("operator: face coloring touches an element twice");
                    touched[e] = static_cast<int>(ph);
                }
            }
    }
    set_threads(opts_.threads);
}

DgOperator::~DgOperator() = default;

void DgOperator::ScratchDeleter::operator()(Scratch* s) const { delete s; }

DgOperator::ScratchPtr DgOperator::make_scratch() const {
    ScratchPtr s(new Scratch);
    s->ws = Workspace(d_, std::max(n_, m_));
    s->geo = std::make_unique<GeometryEvaluator>(*mesh_, quad_);
    const index_t np = padded_points(ipow(m_, d_));
    s->pm.assign(static_cast<std::size_t>(np * kPackWidth), 0.0);
    s->pp.assign(static_cast<std::size_t>(np * kPackWidth), 0.0);
    s->zero.assign(static_cast<std::size_t>(block_), 0.0);
    return s;
}

void DgOperator::set_threads(int threads) {
    if (threads < 1)
        throw std::invalid_argument("operator: thread count must be positive");
    opts_.threads = threads;
    pool_.clear();
    for (int i = 0; i < threads; ++i)
        pool_.push_back(make_scratch());
}

// ---------------------------------------------------------------------------
// quadrature-point work

void DgOperator::volume_qp(index_t e, double t, Scratch& s) const {
    const int d = d_;
    const index_t nq = ipow(m_, d);
    double* pk = s.pm.data();
    double dm[9] = {}, b[3] = {}, k[9], beta[3];
    double c = 0.0;

    if (fast_volume_) {
        DimArray<double> xc{0.5, 0.5, 0.5};
        const auto x = mesh_->mapping(e).map(xc);
        if (coeffs_.has_diffusion())
            coeffs_.diffusion(x.data(), t, e, dm);
        if (coeffs_.has_velocity())
            coeffs_.velocity(x.data(), t, e, b);
        if (coeffs_.has_reaction())
            c = coeffs_.reaction(x.data(), t, e) * cdet_;
        transform_coefficients(d, cs_.data(), cdet_, dm, b, k, beta);

        const index_t np = padded_points(nq);
        transpose_pack(std::span<double>(pk, static_cast<std::size_t>(np * kPackWidth)), np);
        constexpr int W = kPackWidth;
        for (index_t g = 0; g < np; g += W) {
            double* blk = pk + g * W;
            const double* w = qweights_.data() + g;
            for (int i = 0; i < W; ++i) {
                const double u = blk[d * W + i];
                double gr[3];
                for (int q = 0; q < d; ++q)
                    gr[q] = blk[q * W + i];
                for (int r = 0; r < d; ++r) {
                    double v = -beta[r] * u;
                    for (int q = 0; q < d; ++q)
                        v += k[r * d + q] * gr[q];
                    blk[r * W + i] = v * w[i];
                }
                blk[d * W + i] = c * u * w[i];
            }
        }
        untranspose_pack(std::span<double>(pk, static_cast<std::size_t>(np * kPackWidth)), np);
        s.ws.stats.qp_flops += static_cast<std::uint64_t>(nq) * (2 * d * d + 3 * d + 3);
        return;
    }

    s.geo->volume(e, s.vg);
    const auto& vg = s.vg;
    for (index_t i = 0; i < nq; ++i) {
        const double* x = vg.x.data() + i * d;
        if (coeffs_.has_diffusion())
            coeffs_.diffusion(x, t, e, dm);
        if (coeffs_.has_velocity())
            coeffs_.velocity(x, t, e, b);
        const double det = vg.det[i];
        c = coeffs_.has_reaction() ? coeffs_.reaction(x, t, e) * det : 0.0;
        transform_coefficients(d, vg.s.data() + i * d * d, det, dm, b, k, beta);
        double* p = pk + i * kPackWidth;
        const double u = p[d];
        const double w = qweights_[i];
        double gr[3];
        for (int q = 0; q < d; ++q)
            gr[q] = p[q];
        for (int r = 0; r < d; ++r) {
            double v = -beta[r] * u;
            for (int q = 0; q < d; ++q)
                v += k[r * d + q] * gr[q];
            p[r] = v * w;
        }
        p[d] = c * u * w;
    }
    s.ws.stats.qp_flops += static_cast<std::uint64_t>(nq) * (2 * d * d + 3 * d + 3);
}

void DgOperator::face_qp(index_t fi, double t, Scratch& s, bool have_plus) const {
    const int d = d_;
    const auto& f = mesh_->faces()[fi];
    const index_t nf = ipow(m_, d - 1);
    const int p = opts_.degree;
    const double pen = opts_.alpha * p * (p + d - 1) * face_scale_[fi];
    double* pm = s.pm.data();
    double* pp = s.pp.data();
    double dmin[9] = {}, dplus[9] = {}, b[3] = {};
    double am[3] = {}, ap[3] = {};
    double nu_c[3];

    const bool fast = fast_face_;
    const FaceGeometry* fg = nullptr;
    double area_c = 0.0;
    if (fast) {
        const double sign = f.minus_end == FaceEnd::high ? 1.0 : -1.0;
        for (int r = 0; r < d; ++r)
            nu_c[r] = sign * cnu_[f.normal * d + r];
        area_c = carea_[f.normal];
        DimArray<double> xc{0.5, 0.5, 0.5};
        xc[f.normal] = f.minus_end == FaceEnd::high ? 1.0 : 0.0;
        const auto x = mesh_->mapping(f.minus).map(xc);
        if (coeffs_.has_diffusion()) {
            coeffs_.diffusion(x.data(), t, f.minus, dmin);
            if (f.interior())
                coeffs_.diffusion(x.data(), t, f.plus, dplus);
        }
        if (coeffs_.has_velocity())
            coeffs_.velocity(x.data(), t, f.minus, b);
    } else {
        s.geo->face(f, s.fg);
        fg = &s.fg;
    }

    double delta_m = 0.0, delta_p = 0.0, bnu = 0.0;
    auto point_setup = [&](index_t i, const double*& nu) {
        if (fast) {
            nu = nu_c;
            if (i > 0)
                return;
        } else {
            nu = fg->nu.data() + i * d;
            const double* x = fg->x.data() + i * d;
            if (coeffs_.has_diffusion()) {
                coeffs_.diffusion(x, t, f.minus, dmin);
                if (f.interior())
                    coeffs_.diffusion(x, t, f.plus, dplus);
            }
            if (coeffs_.has_velocity())
                coeffs_.velocity(x, t, f.minus, b);
        }
        const double* sm = fast ? cs_.data() : fg->s_minus.data() + i * d * d;
        delta_m = normal_flux_vector(d, sm, dmin, nu, am);
        if (f.interior()) {
            const double* sp = fast ? cs_.data() : fg->s_plus.data() + i * d * d;
            delta_p = normal_flux_vector(d, sp, dplus, nu, ap);
        }
        bnu = 0.0;
        for (int r = 0; r < d; ++r)
            bnu += b[r] * nu[r];
    };

    if (f.interior()) {
        for (index_t i = 0; i < nf; ++i) {
            const double* nu;
            point_setup(i, nu);
            const auto [wm, wp] = face_weights(delta_m, delta_p);
            const double gamma = harmonic_mean(delta_m, delta_p) * pen;
            double* qm = pm + i * kPackWidth;
            double* qp = pp + i * kPackWidth;
            const double um = qm[d];
            const double up = have_plus ? qp[d] : 0.0;
            double fm = 0.0, fp = 0.0;
            for (int r = 0; r < d; ++r) {
                fm += am[r] * qm[r];
                if (have_plus)
                    fp += ap[r] * qp[r];
            }
            const double jxw = (fast ? area_c : fg->area[i]) * fweights_[i];
            const double jump = um - up;
            const double val = (upwind_flux(um, up, bnu) - (wm * fm + wp * fp) + gamma * jump) * jxw;
            for (int r = 0; r < d; ++r) {
                qm[r] = -wm * jump * am[r] * jxw;
                qp[r] = -wp * jump * ap[r] * jxw;
            }
            qm[d] = val;
            qp[d] = -val;
            for (int r = d + 1; r < kPackWidth; ++r)
                qp[r] = 0.0;
        }
        s.ws.stats.qp_flops += static_cast<std::uint64_t>(nf) * (8 * d + 12);
        return;
    }

    for (index_t i = 0; i < nf; ++i) {
        const double* nu;
        point_setup(i, nu);
        double* qm = pm + i * kPackWidth;
        const double u = qm[d];
        const double jxw = (fast ? area_c : fg->area[i]) * fweights_[i];
        if (f.cls == BoundaryClass::dirichlet) {
            double fm = 0.0;
            for (int r = 0; r < d; ++r)
                fm += am[r] * qm[r];
            const double gamma = delta_m * pen;
            const double val = (upwind_flux(u, 0.0, bnu) - fm + gamma * u) * jxw;
            for (int r = 0; r < d; ++r)
                qm[r] = -u * am[r] * jxw;
            qm[d] = val;
        } else { // outflow
            for (int r = 0; r < d; ++r)
                qm[r] = 0.0;
            qm[d] = upwind_flux(u, 0.0, bnu) * jxw;
        }
    }
    s.ws.stats.qp_flops += static_cast<std::uint64_t>(nf) * (4 * d + 6);
}

// ---------------------------------------------------------------------------
// local kernels

void DgOperator::local_volume(index_t e, const double* ze, double t, double* ye, Scratch& s) const {
    chain_.volume_evaluate(ze, s.pm.data(), s.ws);
    volume_qp(e, t, s);
    chain_.volume_integrate(s.pm.data(), ye, s.ws);
}

void DgOperator::local_face(index_t fi, const double* zm, const double* zp, double t, double* ym, double* yp,
                            Scratch& s) const {
    const auto& f = mesh_->faces()[fi];
    if (f.cls == BoundaryClass::neumann)
        return;
    chain_.face_evaluate(f.normal, f.minus_end, zm ? zm : s.zero.data(), s.pm.data(), s.ws);
    const bool have_plus = f.interior() && zp != nullptr;
    if (have_plus)
        chain_.face_evaluate(f.normal, f.plus_end, zp, s.pp.data(), s.ws);
    face_qp(fi, t, s, have_plus);
    if (ym)
        chain_.face_integrate(f.normal, f.minus_end, s.pm.data(), ym, s.ws);
    if (f.interior() && yp)
        chain_.face_integrate(f.normal, f.plus_end, s.pp.data(), yp, s.ws);
}

// ---------------------------------------------------------------------------

void DgOperator::apply(const DofVector& z, double t, DofVector& y) const {
    KernelStats stats;
    apply(z, t, y, stats);
}

void DgOperator::apply(const DofVector& z, double t, DofVector& y, KernelStats& stats) const {
    if (z.elements() != mesh_->num_elements() || z.block_size() != block_)
        throw std::invalid_argument("apply: input vector does not match the discretization");
    if (!y.conforms(z))
        y = create_vector();
    const index_t ne = mesh_->num_elements();
    const auto& faces = mesh_->faces();
    const int nt = opts_.threads;
    for (auto& s : pool_) {
        s->ws.stats = KernelStats{};
        s->geo->reset_stats();
    }

    std::exception_ptr error;
#pragma omp parallel num_threads(nt)
    {
        Scratch& s = *pool_[static_cast<std::size_t>(omp_get_thread_num())];
        try {
#pragma omp for schedule(static)
            for (index_t e = 0; e < ne; ++e) {
                double* ye = y.block(e);
                std::fill(ye, ye + block_, 0.0);
                local_volume(e, z.block(e), t, ye, s);
            }
            for (std::size_t ph = 1; ph < phases_.size(); ++ph) {
                const auto& list = phases_[ph];
                const index_t count = static_cast<index_t>(list.size());
#pragma omp for schedule(static)
                for (index_t i = 0; i < count; ++i) {
                    const index_t fi = list[i];
                    const auto& f = faces[fi];
                    if (f.interior())
                        local_face(fi, z.block(f.minus), z.block(f.plus), t, y.block(f.minus), y.block(f.plus), s);
                    else
                        local_face(fi, z.block(f.minus), nullptr, t, y.block(f.minus), nullptr, s);
                }
            }
        } catch (...) {
#pragma omp critical
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
    for (const auto& s : pool_) {
        stats.merge(s->ws.stats);
        stats.merge(s->geo->stats());
    }
}

void DgOperator::assemble_rhs(double t, DofVector& f) const {
    f = create_vector();
    const int d = d_;
    const index_t ne = mesh_->num_elements();
    const index_t nq = ipow(m_, d);
    const index_t nf = ipow(m_, d - 1);
    bool need_g = false, need_j = false;
    for (const auto& fc : mesh_->faces()) {
        need_g |= fc.cls == BoundaryClass::dirichlet;
        need_j |= fc.cls == BoundaryClass::neumann;
    }
    if (need_g && !coeffs_.dirichlet)
        throw ConfigError("assemble_rhs: Dirichlet boundary without boundary data g");
    if (need_j && !coeffs_.neumann)
        throw ConfigError("assemble_rhs: Neumann boundary without flux data j");

    if (coeffs_.has_source()) {
        std::exception_ptr error;
#pragma omp parallel num_threads(opts_.threads)
        {
            Scratch& s = *pool_[static_cast<std::size_t>(omp_get_thread_num())];
            try {
#pragma omp for schedule(static)
                for (index_t e = 0; e < ne; ++e) {
                    s.geo->volume(e, s.vg);
                    double* pk = s.pm.data();
                    for (index_t i = 0; i < nq; ++i) {
                        double* p = pk + i * kPackWidth;
                        for (int r = 0; r < kPackWidth; ++r)
                            p[r] = 0.0;
                        p[d] = coeffs_.source(s.vg.x.data() + i * d, t, e) * s.vg.det[i] * qweights_[i];
                    }
                    chain_.volume_integrate(pk, f.block(e), s.ws);
                }
            } catch (...) {
#pragma omp critical
                if (!error)
                    error = std::current_exception();
            }
        }
        if (error)
            std::rethrow_exception(error);
    }
    if (!need_g && !need_j)
        return;

    Scratch& s = *pool_[0];
    const auto& faces = mesh_->faces();
    const int p = opts_.degree;
    double dm[9] = {}, b[3] = {}, a[3];
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        const auto& fc = faces[fi];
        if (fc.interior() || fc.cls == BoundaryClass::outflow)
            continue;
        s.geo->face(fc, s.fg);
        const auto& fg = s.fg;
        const double pen = opts_.alpha * p * (p + d - 1) * face_scale_[fi];
        double* pk = s.pm.data();
        for (index_t i = 0; i < nf; ++i) {
            const double* x = fg.x.data() + i * d;
            const double* nu = fg.nu.data() + i * d;
            const double jxw = fg.area[i] * fweights_[i];
            double* q = pk + i * kPackWidth;
            for (int r = 0; r < kPackWidth; ++r)
                q[r] = 0.0;
            if (fc.cls == BoundaryClass::neumann) {
                q[d] = -coeffs_.neumann(x, t, fc.minus) * jxw;
                continue;
            }
            const double g = coeffs_.dirichlet(x, t, fc.minus);
            if (coeffs_.has_diffusion())
                coeffs_.diffusion(x, t, fc.minus, dm);
            if (coeffs_.has_velocity())
                coeffs_.velocity(x, t, fc.minus, b);
            const double delta = normal_flux_vector(d, fg.s_minus.data() + i * d * d, dm, nu, a);
            double bnu = 0.0;
            for (int r = 0; r < d; ++r)
                bnu += b[r] * nu[r];
            q[d] = (-upwind_flux(0.0, g, bnu) + delta * pen * g) * jxw;
            for (int r = 0; r < d; ++r)
                q[r] = -g * a[r] * jxw;
        }
        chain_.face_integrate(fc.normal, fc.minus_end, pk, f.block(fc.minus), s.ws);
    }
}

void DgOperator::integrate_function(const std::function<double(const double*)>& u, DofVector& out) const {
    out = create_vector();
    Scratch& s = *pool_[0];
    const index_t nq = ipow(m_, d_);
    for (index_t e = 0; e < mesh_->num_elements(); ++e) {
        s.geo->volume(e, s.vg);
        double* pk = s.pm.data();
        for (index_t i = 0; i < nq; ++i) {
            double* p = pk + i * kPackWidth;
            for (int r = 0; r < kPackWidth; ++r)
                p[r] = 0.0;
            p[d_] = u(s.vg.x.data() + i * d_) * s.vg.det[i] * qweights_[i];
        }
        chain_.volume_integrate(pk, out.block(e), s.ws);
    }
}

double DgOperator::l2_error(const DofVector& z, const std::function<double(const double*)>& u) const {
    if (z.elements() != mesh_->num_elements() || z.block_size() != block_)
        throw std::invalid_argument("l2_error: vector does not match the discretization");
    Scratch& s = *pool_[0];
    const index_t nq = ipow(m_, d_);
    double sum = 0.0;
    for (index_t e = 0; e < mesh_->num_elements(); ++e) {
        s.geo->volume(e, s.vg);
        chain_.volume_evaluate(z.block(e), s.pm.data(), s.ws);
        for (index_t i = 0; i < nq; ++i) {
            const double diff = s.pm[i * kPackWidth + d_] - u(s.vg.x.data() + i * d_);
            sum += diff * diff * s.vg.det[i] * qweights_[i];
        }
    }
    return std::sqrt(sum);
}

std::uint64_t DgOperator::modeled_flops() const {
    const std::uint64_t lanes = static_cast<std::uint64_t>(d_ + 1);
    std::uint64_t face_kernels = 0;
    for (const auto& f : mesh_->faces()) {
        if (f.cls == BoundaryClass::neumann)
            continue;
        face_kernels += f.interior() ? 4 : 2;
    }
    return 2 * lanes *
           (2 * static_cast<std::uint64_t>(mesh_->num_elements()) * chain_.volume_chain_fma() +
            face_kernels * chain_.face_chain_fma());
}

index_t count_inflow_on_outflow(const DgOperator& op, double t) {
    const auto& c = op.coefficients();
    if (!c.has_velocity())
        return 0;
    const StructuredMesh& mesh = op.mesh();
    const int d = mesh.dim();
    GeometryEvaluator geo(mesh, gauss_legendre(1));
    FaceGeometry g;
    index_t bad = 0;
    double b[3];
    for (const auto& f : mesh.faces()) {
        if (f.cls != BoundaryClass::outflow)
            continue;
        geo.face(f, g);
        c.velocity(g.x.data(), t, f.minus, b);
        double bn = 0.0;
        for (int k = 0; k < d; ++k)
            bn += b[k] * g.nu[k];
        if (bn < 0.0)
            ++bad;
    }
    return bad;
}

} // namespace sfdg
