#include "dgline/dg_assembly.hpp"
#include "dgline/line_source.hpp"
#include "dgline/manufactured.hpp"
#include "dgline/solver.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

using namespace dgline;

namespace {

CsrMatrix dense_to_csr(const Eigen::MatrixXd& a) {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (a(i, j) != 0.0) t.emplace_back(i, j, a(i, j));
    return CsrMatrix::from_triplets(static_cast<int>(a.rows()), t);
}

struct Problem {
    Mesh mesh;
    SparseSystem sys;
    Vector rhs;
};

Problem line_problem(std::array<int, 3> n, int k = 1) {
    Problem p{build_box_mesh(BoxDomain(Vec3(0, 0, 0), Vec3(1, 1, 0.25)), n), {}, {}};
    const DGSpec spec = DGSpec::defaults(k);
    p.sys = assemble_stiffness(p.mesh, spec);
    const Curve c = make_line_curve(Vec3(2.0 / 3, 1.0 / 3, 0), Vec3(2.0 / 3, 1.0 / 3, 0.25));
    LogLineSolution ex;
    ex.r_min = 1e-10 * p.mesh.h;
    p.rhs = assemble_line_rhs(c, [](double) { return 1.0; }, p.mesh, LagrangeBasis(k)) +
            assemble_dirichlet_rhs(p.mesh, spec, ex.as_function());
    return p;
}

} // namespace

TEST(Csr, TripletsAndProduct) {
    Eigen::MatrixXd a(3, 3);
    a << 2, -1, 0, -1, 2, -1, 0, -1, 2;
    const CsrMatrix m = dense_to_csr(a);
    EXPECT_EQ(m.rows(), 3);
    EXPECT_TRUE(m.to_dense().isApprox(a));
    const Vector x = Vector::LinSpaced(3, 1.0, 3.0);
    EXPECT_TRUE((m * x).isApprox(a * x));
    EXPECT_DOUBLE_EQ(m.coeff(0, 2), 0.0);
    std::ostringstream os;
    m.write_matrix_market(os);
    EXPECT_EQ(os.str().rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
}

TEST(Csr, DotIsIndependentOfThreadCount) {
    std::mt19937 rng(1);
    std::normal_distribution<double> g;
    Vector a(100000), b(100000);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a[i] = g(rng);
        b[i] = g(rng);
    }
    const unsigned saved = thread_count();
    set_thread_count(1);
    const double d1 = dot(a, b);
    set_thread_count(4);
    const double d4 = dot(a, b);
    set_thread_count(saved);
    EXPECT_EQ(d1, d4);
}

TEST(Solver, IdentityConvergesImmediately) {
    const CsrMatrix id = dense_to_csr(Eigen::MatrixXd::Identity(5, 5));
    const Vector b = Vector::LinSpaced(5, -2.0, 2.0);
    for (auto method : {KrylovMethod::cg, KrylovMethod::bicgstab})
        for (auto pc : {Preconditioner::none, Preconditioner::jacobi}) {
            SolverConfig cfg;
            cfg.method = method;
            cfg.preconditioner = pc;
            const SolveResult r = solve(id, b, cfg);
            EXPECT_LE(r.iterations, 1);
            EXPECT_TRUE(r.x.isApprox(b, 1e-14));
        }
}

TEST(Solver, TwoByTwoHandSolution) {
    Eigen::MatrixXd a(2, 2);
    a << 4, 1, 1, 3;
    const CsrMatrix m = dense_to_csr(a);
    Vector b(2);
    b << 1, 2;
    for (auto method : {KrylovMethod::cg, KrylovMethod::bicgstab}) {
        SolverConfig cfg;
        cfg.method = method;
        cfg.preconditioner = Preconditioner::jacobi;
        const SolveResult r = solve(m, b, cfg);
        EXPECT_NEAR(r.x[0], 1.0 / 11, 1e-12);
        EXPECT_NEAR(r.x[1], 7.0 / 11, 1e-12);
    }
}

TEST(Solver, ConfigValidation) {
    SolverConfig c;
    c.rel_tol = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c.rel_tol = 1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c.rel_tol = 1e-8;
    c.max_iter = -1;
    EXPECT_THROW(c.validate(), InvalidArgument);
    const CsrMatrix id = dense_to_csr(Eigen::MatrixXd::Identity(2, 2));
    EXPECT_THROW(solve(id, Vector::Ones(3)), InvalidArgument);
}

TEST(Solver, NonconvergenceCarriesBestIterate) {
    const Problem p = line_problem({4, 4, 1});
    SolverConfig cfg;
    cfg.max_iter = 3;
    try {
        solve(p.sys.matrix, p.rhs, cfg);
        FAIL() << "expected nonconvergence";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.best.x.size(), p.rhs.size());
        EXPECT_GT(e.best.relative_residual, 0.0);
        EXPECT_LT(e.best.relative_residual, 1.0);
    }
}

TEST(Solver, IndefiniteMatrixBreaksDownInCg) {
    Eigen::MatrixXd a(2, 2);
    a << 1, 0, 0, -1;
    Vector b(2);
    b << 1, 1;
    SolverConfig cfg;
    cfg.preconditioner = Preconditioner::none;
    EXPECT_THROW(solve(dense_to_csr(a), b, cfg), SolverError);
}

TEST(Solver, LineProblemResidualContract) {
    const Problem p = line_problem({4, 4, 1});
    for (auto pc : {Preconditioner::none, Preconditioner::jacobi, Preconditioner::block_jacobi}) {
        SolverConfig cfg;
        cfg.preconditioner = pc;
        const SolveResult r = solve(p.sys.matrix, p.rhs, cfg);
        EXPECT_LE(norm2(p.sys.matrix * r.x - p.rhs), cfg.rel_tol * norm2(p.rhs) * 1.01);
        EXPECT_NEAR(r.relative_residual, norm2(p.sys.matrix * r.x - p.rhs) / norm2(p.rhs), 1e-15);
    }
}

TEST(Solver, BicgstabOnNonsymmetricForm) {
    const Mesh m = build_box_mesh(BoxDomain(Vec3(0, 0, 0), Vec3(1, 1, 1)), {2, 2, 2});
    DGSpec spec = DGSpec::defaults(1);
    spec.epsilon = 1;
    spec.beta = 2.0;
    const SparseSystem sys = assemble_stiffness(m, spec);
    EXPECT_GT(sys.matrix.max_asymmetry(), 1e-3);
    const Vector rhs = assemble_dirichlet_rhs(m, spec, [](const Vec3& x) { return x[0]; });
    SolverConfig cfg;
    cfg.method = method_for_epsilon(spec.epsilon);
    EXPECT_EQ(cfg.method, KrylovMethod::bicgstab);
    const SolveResult r = solve(sys.matrix, rhs, cfg);
    EXPECT_LE(norm2(sys.matrix * r.x - rhs), 1.01e-10 * norm2(rhs));
}

TEST(Solver, CgErrorANormNeverIncreases) {
    const Problem p = line_problem({4, 4, 1});
    SolverConfig tight;
    tight.rel_tol = 1e-14;
    const Vector x_star = solve(p.sys.matrix, p.rhs, tight).x;
    std::vector<double> anorm;
    SolverConfig cfg;
    cfg.monitor = [&](int, const Vector& x) {
        const Vector e = x - x_star;
        anorm.push_back(std::sqrt(dot(e, p.sys.matrix * e)));
    };
    solve(p.sys.matrix, p.rhs, cfg);
    ASSERT_GT(anorm.size(), 5u);
    for (std::size_t i = 1; i < anorm.size(); ++i) EXPECT_LE(anorm[i], anorm[i - 1] * (1 + 1e-9) + 1e-14);
}

TEST(Solver, PermutationEquivariance) {
    const Problem p = line_problem({4, 4, 1});
    const int n = p.sys.matrix.rows();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937 rng(41);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Eigen::MatrixXd a = p.sys.matrix.to_dense();
    Eigen::MatrixXd pa(n, n);
    Vector pb(n);
    for (int i = 0; i < n; ++i) {
        pb[i] = p.rhs[perm[i]];
        for (int j = 0; j < n; ++j) pa(i, j) = a(perm[i], perm[j]);
    }
    SolverConfig cfg;
    cfg.rel_tol = 1e-13;
    cfg.preconditioner = Preconditioner::jacobi;
    const Vector x = solve(p.sys.matrix, p.rhs, cfg).x;
    const Vector px = solve(dense_to_csr(pa), pb, cfg).x;
    for (int i = 0; i < n; ++i) EXPECT_NEAR(px[i], x[perm[i]], 1e-9);
}

TEST(Solver, ReproducibleAcrossThreadCounts) {
    const Problem p = line_problem({4, 4, 1});
    const unsigned saved = thread_count();
    set_thread_count(1);
    const SolveResult a = solve(p.sys.matrix, p.rhs);
    set_thread_count(3);
    const SolveResult b = solve(p.sys.matrix, p.rhs);
    set_thread_count(saved);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ((a.x - b.x).lpNorm<Eigen::Infinity>(), 0.0);
}
