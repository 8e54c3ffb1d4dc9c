#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "naive_dg.hpp"
#include "sfdg/oracle.hpp"
#include "sfdg/problems.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace sfdg;

namespace {

DimArray<index_t> cells(int d, index_t n) { return {n, n, d == 3 ? n : 1}; }

void randomize(DofVector& z, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : z.values())
        v = u(rng);
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

struct Setup {
    Problem pr;
    StructuredMesh mesh;
    DgOperator op;
    Setup(const std::string& id, int d, index_t n, int p, OperatorOptions extra = {})
        : pr(make_problem(id, d, cells(d, n))), mesh(pr.mesh), op(mesh, pr.coeffs, [&] {
              extra.degree = p;
              if (extra.quad_points == 0)
                  extra.quad_points = pr.quad_points(p);
              return extra;
          }()) {}
    Setup(Problem problem, int p, OperatorOptions extra = {})
        : pr(std::move(problem)), mesh(pr.mesh), op(mesh, pr.coeffs, [&] {
              extra.degree = p;
              if (extra.quad_points == 0)
                  extra.quad_points = pr.quad_points(p);
              return extra;
          }()) {}
};

double compare_dense(const BlockSparseMatrix& a, const naive::Assembly& ref) {
    const index_t bs = a.block_size;
    double num = 0.0, den = 0.0;
    for (index_t i = 0; i < ref.n; ++i)
        for (index_t j = 0; j < ref.n; ++j) {
            const double* blk = a.find(i / bs, j / bs);
            const double v = blk ? blk[(i % bs) * bs + j % bs] : 0.0;
            num = std::max(num, std::abs(v - ref(i, j)));
            den = std::max(den, std::abs(ref(i, j)));
        }
    return num / den;
}

} // namespace

TEST_CASE("upwind flux") {
    CHECK(upwind_flux(2, 5, 1.5) == 3.0);
    CHECK(upwind_flux(2, 5, -1.0) == -5.0);
    for (double b : {-2.0, 0.0, 3.0})
        CHECK(upwind_flux(1.5, 1.5, b) == 1.5 * b);
}

TEST_CASE("face weights") {
    for (double k : {0.1, 1.0, 7.0}) {
        auto [wm, wp] = face_weights(k, k);
        CHECK(wm == 0.5);
        CHECK(wp == 0.5);
    }
    auto [a, b] = face_weights(0, 4);
    CHECK(a == 1.0);
    CHECK(b == 0.0);
    auto [c, e] = face_weights(0, 0);
    CHECK(c == 0.5);
    CHECK(e == 0.5);
    CHECK_THROWS_AS(face_weights(-1, 1), std::invalid_argument);
}

TEST_CASE("penalty factor") {
    PenaltyParams pp{2.0, 2, 3};
    CHECK(penalty_gamma(1, 1, 1, 1, 1, pp) == doctest::Approx(16.0));
    CHECK(penalty_gamma(0, 5, 1, 1, 1, pp) == 0.0);
    CHECK(harmonic_mean(2, 6) == doctest::Approx(3.0));
    PenaltyParams p2{2.0, 1, 2};
    CHECK(penalty_gamma(2, 6, 0.5, 0.25, 0.25, p2) == doctest::Approx(24.0));
    CHECK_THROWS_AS(penalty_gamma(1, 1, 0, 1, 1, pp), std::invalid_argument);
    CHECK_THROWS_AS(penalty_gamma(1, 1, 1, -1, 1, pp), std::invalid_argument);
}

TEST_CASE("assembled matrix equals the naive reference discretization") {
    struct Case {
        const char* id;
        int d;
        index_t n;
        int p;
    };
    const Case cases[] = {{"a", 2, 3, 1}, {"a", 2, 3, 2}, {"a", 3, 2, 2}, {"b", 2, 3, 1}, {"b", 2, 2, 3},
                          {"b", 3, 2, 1}, {"c", 2, 3, 2}, {"c", 2, 2, 3}, {"c", 3, 2, 1}, {"c", 3, 3, 1}};
    for (const auto& c : cases) {
        CAPTURE(c.id);
        CAPTURE(c.d);
        CAPTURE(c.p);
        Setup s(c.id, c.d, c.n, c.p);
        const auto a = assemble_matrix(s.op, 0.3);
        const auto ref = naive::assemble(s.op, 0.3);
        CHECK(compare_dense(a, ref) <= 1e-11);
        DofVector f;
        s.op.assemble_rhs(0.3, f);
        double num = 0.0;
        for (index_t i = 0; i < ref.n; ++i)
            num = std::max(num, std::abs(f[i] - ref.rhs[i]));
        CHECK(num <= 1e-11 * std::max(1.0, max_abs(ref.rhs)));
    }
}

TEST_CASE("custom problem with every boundary class matches the reference") {
    CustomCoefficients cc;
    cc.diffusion = {{{1.0, 0.2, 0.0}, {0.2, 0.5, 0.1}, {0.0, 0.1, 0.8}}};
    cc.velocity = {0.7, -0.4, 0.3};
    cc.reaction = 0.3;
    cc.source = 1.2;
    cc.dirichlet = 0.4;
    cc.neumann = -0.6;
    for (int d = 2; d <= 3; ++d) {
        Problem pr = make_problem("custom", d, cells(d, 2), cc);
        pr.mesh.boundary[0] = {BoundaryClass::neumann, BoundaryClass::outflow};
        pr.mesh.boundary[1] = {BoundaryClass::dirichlet, BoundaryClass::neumann};
        pr.mesh.boundary[2] = {BoundaryClass::outflow, BoundaryClass::dirichlet};
        pr.mesh.geometry = GeometryClass::multilinear;
        pr.mesh.perturbation = 0.1;
        Setup s(pr, 2, OperatorOptions{0, 4});
        const auto a = assemble_matrix(s.op, 0.0);
        const auto ref = naive::assemble(s.op, 0.0);
        CHECK(compare_dense(a, ref) <= 1e-11);
        DofVector f;
        s.op.assemble_rhs(0.0, f);
        for (index_t i = 0; i < ref.n; ++i)
            CHECK(std::abs(f[i] - ref.rhs[i]) <= 1e-11 * max_abs(ref.rhs));
        // only the low z side, entered by b_z > 0, is a misplaced outflow side
        CHECK(count_inflow_on_outflow(s.op) == (d == 3 ? 4 : 0));
    }
}

TEST_CASE("oracle identity on the small problems") {
    for (const char* id : {"a", "b", "c"})
        for (int d = 2; d <= 3; ++d) {
            Setup s(id, d, d == 2 ? 4 : 3, d == 2 ? 3 : 2);
            const auto rep = verify_against_oracle(s.op, 3);
            CHECK(rep.pass);
            CHECK(rep.max_rel_error <= 1e-11);
            CHECK(count_inflow_on_outflow(s.op) == 0);
        }
}

TEST_CASE("constants lie in the kernel of diffusion on periodic meshes") {
    for (auto g : {GeometryClass::axis_parallel, GeometryClass::affine, GeometryClass::multilinear})
        for (int d = 2; d <= 3; ++d) {
            CustomCoefficients cc;
            cc.diffusion = {{{2.0, 0.3, 0.1}, {0.3, 1.0, 0.0}, {0.1, 0.0, 1.5}}};
            Problem pr = make_problem("custom", d, cells(d, 3), cc);
            pr.mesh.periodic = {true, true, true};
            pr.mesh.geometry = g;
            if (g == GeometryClass::affine)
                pr.mesh.affine = {{{1.0, 0.3, 0.0}, {0.1, 1.0, 0.2}, {0.0, 0.0, 1.0}}};
            if (g == GeometryClass::multilinear)
                pr.mesh.perturbation = 0.2;
            Setup s(pr, 2, OperatorOptions{0, 4});
            DofVector z = s.op.create_vector(), y;
            for (index_t e = 0; e < z.elements(); ++e)
                z.block(e)[0] = 1.0;
            s.op.apply(z, 0.0, y);
            CHECK(max_abs(y.values()) <= 1e-12 * 2.0 * 10);
        }
}

TEST_CASE("zero coefficients give a zero operator") {
    CustomCoefficients cc;
    cc.diffusion = {};
    Problem pr = make_problem("custom", 2, cells(2, 3), cc);
    Setup s(pr, 2);
    DofVector z = s.op.create_vector(), y;
    randomize(z, 3);
    s.op.apply(z, 0.0, y);
    CHECK(max_abs(y.values()) == 0.0);
    const auto a = assemble_matrix(s.op, 0.0);
    CHECK(max_abs(a.values) == 0.0);
}

TEST_CASE("linearity") {
    Setup s("c", 3, 3, 2);
    DofVector z1 = s.op.create_vector(), z2 = s.op.create_vector(), z3 = s.op.create_vector(), y1, y2, y3;
    randomize(z1, 1);
    randomize(z2, 2);
    for (index_t i = 0; i < z3.size(); ++i)
        z3[i] = 0.7 * z1[i] - 1.3 * z2[i];
    s.op.apply(z1, 0.0, y1);
    s.op.apply(z2, 0.0, y2);
    s.op.apply(z3, 0.0, y3);
    double num = 0.0;
    for (index_t i = 0; i < y3.size(); ++i)
        num = std::max(num, std::abs(y3[i] - (0.7 * y1[i] - 1.3 * y2[i])));
    CHECK(num <= 1e-12 * max_abs(y3.values()));
}

TEST_CASE("diffusion-only operator is symmetric") {
    for (const char* geom : {"axis", "multilinear"}) {
        CustomCoefficients cc;
        cc.diffusion = {{{1.0, 0.4, 0.1}, {0.4, 2.0, 0.2}, {0.1, 0.2, 1.0}}};
        Problem pr = make_problem("custom", 2, cells(2, 3), cc);
        pr.mesh.periodic[0] = true;
        if (std::string(geom) == "multilinear") {
            pr.mesh.geometry = GeometryClass::multilinear;
            pr.mesh.perturbation = 0.15;
        }
        Setup s(pr, 3, OperatorOptions{0, 6});
        const auto a = assemble_matrix(s.op, 0.0);
        const index_t bs = a.block_size;
        double asym = 0.0, norm = 0.0;
        for (index_t i = 0; i < a.block_rows; ++i)
            for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                const index_t j = a.col_idx[k];
                const double* b = a.values.data() + k * bs * bs;
                const double* bt = a.find(j, i);
                REQUIRE(bt != nullptr);
                for (index_t r = 0; r < bs; ++r)
                    for (index_t c = 0; c < bs; ++c) {
                        asym = std::max(asym, std::abs(b[r * bs + c] - bt[c * bs + r]));
                        norm = std::max(norm, std::abs(b[r * bs + c]));
                    }
            }
        CHECK(asym <= 1e-11 * norm);
    }
}

TEST_CASE("upwinding ignores downwind coefficients") {
    // pure convection with b . nu > 0 on every x1-face
    CustomCoefficients cc;
    cc.diffusion = {};
    cc.velocity = {1.0, 0.0, 0.0};
    Problem pr = make_problem("custom", 2, cells(2, 3), cc);
    pr.mesh.periodic = {true, true, false};
    Setup s(pr, 2);
    const auto& faces = s.mesh.faces();
    auto sc = s.op.make_scratch();
    const index_t bs = s.op.block_size();
    std::vector<double> zm(bs), zp(bs), zp2(bs), ym(bs), yp(bs), ym2(bs), yp2(bs);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (index_t fi = 0; fi < static_cast<index_t>(faces.size()); ++fi) {
        if (faces[fi].normal != 0)
            continue;
        for (index_t j = 0; j < bs; ++j) {
            zm[j] = u(rng);
            zp[j] = u(rng);
            zp2[j] = u(rng);
        }
        std::fill(ym.begin(), ym.end(), 0.0);
        std::fill(yp.begin(), yp.end(), 0.0);
        std::fill(ym2.begin(), ym2.end(), 0.0);
        std::fill(yp2.begin(), yp2.end(), 0.0);
        s.op.local_face(fi, zm.data(), zp.data(), 0.0, ym.data(), yp.data(), *sc);
        s.op.local_face(fi, zm.data(), zp2.data(), 0.0, ym2.data(), yp2.data(), *sc);
        CHECK(ym == ym2);
        CHECK(yp == yp2);
    }
}

TEST_CASE("degenerate weights are inert") {
    // D = 0 on one side only: harmonic mean vanishes and the symmetric terms
    // of the zero side carry zero normal flux
    Problem pr = make_problem("custom", 2, cells(2, 2));
    pr.mesh.periodic = {true, true, false};
    pr.coeffs.diffusion = [](const double*, double, index_t e, double* out) {
        const double v = e % 2 == 0 ? 1.0 : 0.0;
        out[0] = v;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = v;
    };
    pr.coeffs.diffusion_variation = Variation::per_cell;
    Setup s(pr, 1);
    const auto a = assemble_matrix(s.op, 0.0);
    const auto ref = naive::assemble(s.op, 0.0);
    CHECK(compare_dense(a, ref) <= 1e-12);
}

TEST_CASE("fast and generic quadrature-point paths agree") {
    for (const char* id : {"a", "b"})
        for (int d = 2; d <= 3; ++d) {
            Setup fast(id, d, 3, 2);
            OperatorOptions o;
            o.generic_path = true;
            Setup gen(id, d, 3, 2, o);
            DofVector z = fast.op.create_vector(), y1, y2;
            randomize(z, 9);
            fast.op.apply(z, 0.1, y1);
            gen.op.apply(z, 0.1, y2);
            double num = 0.0;
            for (index_t i = 0; i < z.size(); ++i)
                num = std::max(num, std::abs(y1[i] - y2[i]));
            CHECK(num <= 1e-13 * max_abs(y2.values()));
        }
}

TEST_CASE("thread count does not change the result") {
    for (const char* id : {"a", "c"}) {
        Setup s(id, 3, 3, 2);
        DofVector z = s.op.create_vector(), y1, y4, y1b;
        randomize(z, 11);
        s.op.set_threads(1);
        s.op.apply(z, 0.0, y1);
        s.op.apply(z, 0.0, y1b);
        CHECK(y1.values() == y1b.values());
        s.op.set_threads(4);
        s.op.apply(z, 0.0, y4);
        CHECK(y1.values() == y4.values());
    }
}

TEST_CASE("odd periodic extents color correctly") {
    MeshConfig c;
    c.dim = 2;
    c.cells = {3, 5, 1};
    c.periodic = {true, true, false};
    StructuredMesh m(c);
    Problem pr = make_problem("custom", 2, c.cells);
    DgOperator op(m, pr.coeffs, OperatorOptions{1});
    std::size_t total = 0;
    for (std::size_t i = 1; i < op.face_phases().size(); ++i)
        total += op.face_phases()[i].size();
    CHECK(total == m.faces().size());
}

TEST_CASE("kernel invocation counts") {
    Setup s("c", 3, 3, 1);
    DofVector z = s.op.create_vector(), y;
    randomize(z, 1);
    KernelStats st;
    s.op.apply(z, 0.0, y, st);
    index_t neumann = 0;
    for (const auto& f : s.mesh.faces())
        neumann += f.cls == BoundaryClass::neumann;
    CHECK(neumann > 0);
    const auto ne = static_cast<std::uint64_t>(s.mesh.num_elements());
    CHECK(st.volume_evaluations == ne);
    CHECK(st.volume_integrations == ne);
    CHECK(st.face_evaluations ==
          static_cast<std::uint64_t>(2 * s.mesh.num_interior_faces() + s.mesh.num_boundary_faces() - neumann));
    const PackedChain chain(EvalMatrices(s.op.basis(), s.op.quadrature(), 3), s.op.basis());
    CHECK(st.volume_fma == 2 * ne * chain.volume_chain_fma() * chain.lanes());
    CHECK(st.face_fma == (st.face_evaluations + st.face_integrations) * chain.face_chain_fma() * chain.lanes());
    KernelStats st2;
    s.op.apply(z, 0.0, y, st2);
    CHECK(st2.fma() == st.fma());
}

TEST_CASE("right-hand side") {
    {
        Problem pr = make_problem("a", 2, cells(2, 3));
        Setup s(pr, 2);
        DofVector f;
        s.op.assemble_rhs(0.0, f);
        CHECK(max_abs(f.values()) == 0.0);
    }
    {
        CustomCoefficients cc;
        cc.source = 1.0;
        Problem pr = make_problem("custom", 3, cells(3, 2), cc);
        pr.mesh.periodic = {true, true, true};
        Setup s(pr, 2);
        DofVector f;
        s.op.assemble_rhs(0.0, f);
        const double vol = 1.0 / 8.0;
        for (index_t e = 0; e < f.elements(); ++e) {
            CHECK(f.block(e)[0] == doctest::Approx(vol).epsilon(1e-13));
            for (index_t j = 1; j < f.block_size(); ++j)
                CHECK(std::abs(f.block(e)[j]) <= 1e-13);
        }
    }
    {
        CustomCoefficients cc;
        cc.velocity = {1.0, -1.0, 0.0};
        Problem pr = make_problem("custom", 2, cells(2, 3), cc);
        pr.mesh.boundary[0][1] = BoundaryClass::neumann;
        Setup s(pr, 2);
        DofVector f;
        s.op.assemble_rhs(0.0, f);
        CHECK(max_abs(f.values()) == 0.0);
    }
    {
        Problem pr = make_problem("custom", 2, cells(2, 2));
        pr.coeffs.dirichlet = nullptr;
        Setup s(pr, 1);
        DofVector f;
        CHECK_THROWS_AS(s.op.assemble_rhs(0.0, f), ConfigError);
    }
}

TEST_CASE("operator validation") {
    Problem pr = make_problem("a", 2, cells(2, 2));
    StructuredMesh m(pr.mesh);
    OperatorOptions o;
    o.alpha = -1.0;
    CHECK_THROWS_AS(DgOperator(m, pr.coeffs, o), std::invalid_argument);
    Problem p3 = make_problem("a", 3, cells(3, 2));
    CHECK_THROWS_AS(DgOperator(m, p3.coeffs, OperatorOptions{}), std::invalid_argument);
    DgOperator op(m, pr.coeffs, OperatorOptions{});
    DofVector bad(3, 4), y;
    CHECK_THROWS_AS(op.apply(bad, 0.0, y), std::invalid_argument);
    CHECK_THROWS_AS(make_problem("zzz", 2, cells(2, 2)), std::invalid_argument);
    CHECK_THROWS_AS(make_problem("taylor-green", 2, cells(2, 2)), std::invalid_argument);
}

TEST_CASE("matrix structure and caps") {
    Setup s("a", 2, 4, 1);
    const auto a = assemble_matrix(s.op, 0.0);
    CHECK(a.num_blocks() - a.block_rows == 2 * s.mesh.num_interior_faces());
    CHECK_THROWS_AS(assemble_matrix(s.op, 0.0, 1024), ResourceError);
    std::ostringstream os;
    write_triplets(a, os);
    std::istringstream is(os.str());
    std::string line;
    index_t lines = 0;
    while (std::getline(is, line))
        ++lines;
    CHECK(lines == a.num_blocks());

    // identity blocks
    BlockSparseMatrix id;
    id.block_rows = 2;
    id.block_size = 2;
    id.row_ptr = {0, 1, 2};
    id.col_idx = {0, 1};
    id.values = {1, 0, 0, 1, 1, 0, 0, 1};
    DofVector z(2, 2), y;
    z.values() = {1, 2, 3, 4};
    spmv(id, z, y);
    CHECK(y.values() == z.values());
    DofVector wrong(3, 2);
    CHECK_THROWS_AS(spmv(id, wrong, y), std::invalid_argument);
}

TEST_CASE("mass operator") {
    {
        Setup s("a", 2, 4, 2);
        auto m = assemble_mass(s.op);
        CHECK(m.mode() == MassOperator::Mode::diagonal);
        for (double v : m.diagonal())
            CHECK(v == doctest::Approx(1.0 / 16.0));
        DofVector r = s.op.create_vector(), z;
        randomize(r, 4);
        mass_solve(m, r, z);
        for (index_t i = 0; i < r.size(); ++i)
            CHECK(z[i] == doctest::Approx(16.0 * r[i]));
    }
    {
        Setup s("c", 3, 2, 2);
        auto m = assemble_mass(s.op);
        CHECK(m.mode() == MassOperator::Mode::block_diagonal);
        for (int k = 0; k < 20; ++k) {
            DofVector z = s.op.create_vector(), mz, back;
            randomize(z, 100 + k);
            m.apply(z, mz);
            double q = 0.0;
            for (index_t i = 0; i < z.size(); ++i)
                q += z[i] * mz[i];
            CHECK(q > 0.0);
            m.solve(mz, back);
            double err = 0.0;
            for (index_t i = 0; i < z.size(); ++i)
                err = std::max(err, std::abs(back[i] - z[i]));
            CHECK(err <= 1e-12);
        }
        // the mass block integrates 1 * phi_0 to the cell volume
        const auto b = m.block(0);
        CHECK(b[0] == doctest::Approx(s.mesh.cell_volume(0)).epsilon(1e-13));
    }
}
