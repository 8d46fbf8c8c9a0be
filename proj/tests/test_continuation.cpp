#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "cnmpc/continuation.hpp"
#include "cnmpc/tfc.hpp"
#include "oracles.hpp"

using namespace cnmpc;
using Catch::Matchers::WithinAbs;

namespace {

const tfc::TfcConstants kTfc{};

/// Reduced Lagrangian of the affine toy problem (same constants as
/// oracle::affine_spec).
double affine_lagrangian(const Vec& U, std::size_t N, double x0) {
  constexpr double a = -0.5, b = 1.0, q = 1.0, r = 0.1, s = 2.0, T = 2.0;
  const double dtau = T / static_cast<double>(N);
  double x = x0, sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double u1 = U[2 * i], u2 = U[2 * i + 1], mu = U[2 * N + i];
    sum += 0.5 * (q * x * x + r * (u1 * u1 + u2 * u2)) + mu * (u1 + u2 - 1.0);
    x += dtau * (a * x + b * u1);
  }
  return 0.5 * s * x * x + dtau * sum + U[3 * N] * (x - 1.0);
}

DecisionVector random_decision(std::mt19937_64& rng, const OcpDims& d) {
  return DecisionVector(d, oracle::random_vector(rng, d.m()));
}

}  // namespace

TEST_CASE("OcpDims counts the decision dimension", "[layout]") {
  CHECK(tfc::tfc_dims(10).m() == 33);
  CHECK(OcpDims{3, 2, 1, 2, 1, 5}.m() == 18);
  CHECK_THROWS_AS((OcpDims{0, 1, 0, 0, 0, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((OcpDims{1, 1, 0, 0, 0, 0}.validate()), std::invalid_argument);
}

TEST_CASE("DecisionVector blocks are a bijection onto the storage", "[layout][property]") {
  for (const OcpDims& d : {OcpDims{2, 2, 1, 2, 1, 10}, OcpDims{1, 3, 0, 0, 0, 4}, OcpDims{3, 1, 2, 1, 2, 3}}) {
    DecisionVector U(d);
    std::multiset<std::size_t> seen;
    std::size_t total = 0;
    auto visit = [&](std::size_t off, std::size_t len) {
      for (std::size_t k = 0; k < len; ++k) seen.insert(off + k);
      total += len;
    };
    for (std::size_t i = 0; i < d.N; ++i) {
      visit(U.u_offset(i), U.u(i).size());
      visit(U.mu_offset(i), U.mu(i).size());
      CHECK(U.u(i).size() == d.n_u);
      CHECK(U.mu(i).size() == d.n_c);
    }
    visit(U.nu_offset(), U.nu().size());
    visit(U.p_offset(), U.p().size());
    CHECK(total == d.m());
    CHECK(seen.size() == d.m());
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == d.m());
    CHECK(*seen.rbegin() + 1 == d.m());

    // Write through the blocks, read back through the flat storage.
    double tag = 1.0;
    for (std::size_t i = 0; i < d.N; ++i) {
      for (double& v : U.u(i)) v = tag++;
      for (double& v : U.mu(i)) v = tag++;
    }
    for (double& v : U.nu()) v = tag++;
    for (double& v : U.p()) v = tag++;
    std::set<double> values(U.data().begin(), U.data().end());
    CHECK(values.size() == d.m());
  }
}

TEST_CASE("forward_states on a single TfC step", "[recursion]") {
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 1);
  DecisionVector U(spec.dims);
  U.u(0)[0] = 0.0;
  U.p()[0] = 1.0;
  const HorizonTrajectory traj = forward_states(spec, Vec{0, 0}, U);
  CHECK(traj.x(1)[0] == 1.0);
  CHECK(traj.x(1)[1] == 0.0);
}

TEST_CASE("forward_states with zero dynamics keeps the initial state", "[recursion]") {
  std::mt19937_64 rng(1);
  const OcpSpec spec = oracle::zero_spec(6);
  const Vec x0{0.3, -1.7};
  const HorizonTrajectory traj = forward_states(spec, x0, random_decision(rng, spec.dims));
  for (std::size_t i = 0; i <= 6; ++i) CHECK(Vec(traj.x(i).begin(), traj.x(i).end()) == x0);
}

TEST_CASE("forward_states matches the scripted TfC recursion", "[recursion]") {
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  DecisionVector U(spec.dims);
  for (std::size_t i = 0; i < 10; ++i) U.u(i)[0] = kTfc.c_u;
  U.p()[0] = 1.6;
  const HorizonTrajectory traj = forward_states(spec, Vec{0, 0}, U);
  const oracle::TfcHorizon ref = oracle::tfc_recursions(kTfc, U.data(), 10, 0.0, 0.0);
  for (std::size_t i = 0; i <= 10; ++i) {
    CHECK_THAT(traj.x(i)[0], WithinAbs(ref.x[i], 1e-14));
    CHECK_THAT(traj.x(i)[1], WithinAbs(ref.y[i], 1e-14));
  }
}

TEST_CASE("forward_states reports divergence with the step", "[recursion][errors]") {
  tfc::TfcConstants c;
  c.A = 1e30;
  const OcpSpec spec = tfc::make_tfc_spec(c, 10);
  DecisionVector U(spec.dims);
  U.p()[0] = 1e3;
  try {
    (void)forward_states(spec, Vec{1, 0}, U);
    FAIL("expected DivergedTrajectoryError");
  } catch (const DivergedTrajectoryError& e) {
    CHECK(e.step() > 0);
    CHECK(e.step() <= 10);
  }
}

TEST_CASE("forward_states checks dimensions", "[recursion][errors]") {
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 4);
  CHECK_THROWS_AS(forward_states(spec, Vec{0}, DecisionVector(spec.dims)), std::invalid_argument);
  CHECK_THROWS_AS(forward_states(spec, Vec{0, 0}, DecisionVector(tfc::tfc_dims(5))), std::invalid_argument);
}

TEST_CASE("backward_costates keeps the second TfC costate constant", "[recursion]") {
  std::mt19937_64 rng(2);
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  const DecisionVector U(spec.dims, oracle::random_tfc_point(rng, 10));
  HorizonTrajectory traj = forward_states(spec, Vec{0, 0}, U);
  backward_costates(spec, traj, U);
  for (std::size_t i = 0; i <= 10; ++i) CHECK(traj.lambda(i)[1] == U.nu()[1]);
}

TEST_CASE("backward_costates is zero without terminal terms", "[recursion]") {
  std::mt19937_64 rng(3);
  const OcpSpec spec = oracle::zero_spec(5);
  const DecisionVector U = random_decision(rng, spec.dims);
  HorizonTrajectory traj = forward_states(spec, Vec{1, 2}, U);
  backward_costates(spec, traj, U);
  for (double v : traj.costates) CHECK(v == 0.0);
}

TEST_CASE("backward_costates matches the scripted TfC recursion", "[recursion]") {
  std::mt19937_64 rng(4);
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  for (int trial = 0; trial < 10; ++trial) {
    const DecisionVector U(spec.dims, oracle::random_tfc_point(rng, 10));
    HorizonTrajectory traj = forward_states(spec, Vec{0.1, -0.2}, U);
    backward_costates(spec, traj, U);
    const oracle::TfcHorizon ref = oracle::tfc_recursions(kTfc, U.data(), 10, 0.1, -0.2);
    for (std::size_t i = 0; i <= 10; ++i) {
      CHECK_THAT(traj.lambda(i)[0], WithinAbs(ref.l1[i], 1e-13));
      CHECK_THAT(traj.lambda(i)[1], WithinAbs(ref.l2[i], 1e-13));
    }
  }
}

TEST_CASE("eval_F is the gradient of the TfC Lagrangian", "[eval_F][oracle]") {
  std::mt19937_64 rng(5);
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec raw = oracle::random_tfc_point(rng, 10);
    const Vec F = eval_F(spec, DecisionVector(spec.dims, raw), Vec{0, 0}, 0.0);
    const Vec g = oracle::tfc_lagrangian_gradient(kTfc, raw, 10, 0.0, 0.0, 1e-4);
    for (std::size_t j = 0; j < F.size(); ++j) worst = std::max(worst, std::abs(F[j] - g[j]));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("eval_F is the gradient of the affine problem's Lagrangian", "[eval_F][oracle]") {
  std::mt19937_64 rng(6);
  const OcpSpec spec = oracle::affine_spec(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec raw = oracle::random_vector(rng, spec.dims.m());
    const Vec F = eval_F(spec, DecisionVector(spec.dims, raw), Vec{0.5}, 0.0);
    for (std::size_t j = 0; j < raw.size(); ++j) {
      Vec up = raw, dn = raw;
      up[j] += 1e-4;
      dn[j] -= 1e-4;
      const double g = (affine_lagrangian(up, 8, 0.5) - affine_lagrangian(dn, 8, 0.5)) / 2e-4;
      CHECK_THAT(F[j], WithinAbs(g, 1e-8));
    }
  }
}

TEST_CASE("eval_F vanishes at the stationary point of the affine problem", "[eval_F]") {
  const OcpSpec spec = oracle::affine_spec(6);
  const Vec x{0.5};
  const DecisionVector zero(spec.dims);
  const Vec F0 = eval_F(spec, zero, x, 0.0);
  const DenseMatrix J = oracle::central_jacobian(
      [&](const Vec& u) { return eval_F(spec, DecisionVector(spec.dims, u), x, 0.0); }, zero.data(), 1.0);
  Vec rhs = F0;
  scale(-1.0, rhs);
  const DecisionVector star(spec.dims, dense_solve(J, rhs));
  CHECK(norm_inf(eval_F(spec, star, x, 0.0)) <= 1e-12);
}

TEST_CASE("eval_F is deterministic and can return the trajectory", "[eval_F]") {
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  const DecisionVector U = tfc::tfc_initial_guess(kTfc, 10);
  HorizonTrajectory traj;
  const Vec a = eval_F(spec, U, Vec{0, 0}, 0.0, &traj);
  const Vec b = eval_F(spec, U, Vec{0, 0}, 0.0);
  CHECK(a == b);
  CHECK(all_finite(a));
  CHECK(traj.states.size() == 22);
  CHECK(traj.lambda(10)[0] == U.nu()[0]);
}

TEST_CASE("fd_map of the zero vector is exactly zero", "[fd_map]") {
  std::mt19937_64 rng(7);
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  const FdOperator a = fd_map(spec, DecisionVector(spec.dims, oracle::random_tfc_point(rng, 10)), Vec{0, 0}, 0.0, 1e-5);
  const Vec z = a.apply(Vec(33, 0.0));
  for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("fd_map linearity defect scales with h", "[fd_map]") {
  std::mt19937_64 rng(8);
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  const DecisionVector U(spec.dims, oracle::random_tfc_point(rng, 10));
  const Vec v1 = oracle::random_vector(rng, 33), v2 = oracle::random_vector(rng, 33);
  Vec v12 = v1;
  axpy(1.0, v2, v12);
  auto defect = [&](double h) {
    const FdOperator a = fd_map(spec, U, Vec{0, 0}, 0.0, h);
    Vec d = a.apply(v12);
    axpy(-1.0, a.apply(v1), d);
    axpy(-1.0, a.apply(v2), d);
    return norm2(d);
  };
  const double ratio = defect(1e-3) / defect(1e-4);
  CHECK(ratio >= 10.0 / 3.0);
  CHECK(ratio <= 30.0);
}

TEST_CASE("fd_map of an affine residual is its Jacobian action", "[fd_map]") {
  std::mt19937_64 rng(9);
  const OcpSpec spec = oracle::affine_spec(5);
  const Vec x{0.2};
  const FdOperator a = fd_map(spec, DecisionVector(spec.dims, oracle::random_vector(rng, spec.dims.m())), x, 0.0, 1e-3);
  const DenseMatrix J = oracle::central_jacobian(
      [&](const Vec& u) { return eval_F(spec, DecisionVector(spec.dims, u), x, 0.0); }, Vec(spec.dims.m(), 0.0), 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec v = oracle::random_vector(rng, spec.dims.m());
    const Vec av = a.apply(v), jv = J.multiply(v);
    for (std::size_t i = 0; i < av.size(); ++i) CHECK_THAT(av[i], WithinAbs(jv[i], 1e-9));
  }
}

TEST_CASE("fd_map counts one F evaluation per apply", "[fd_map]") {
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 4);
  const FdOperator a = fd_map(spec, tfc::tfc_initial_guess(kTfc, 4), Vec{0, 0}, 0.0, 1e-5);
  CHECK(a.evaluations() == 0);
  (void)a.apply(Vec(spec.dims.m(), 1.0));
  (void)a.apply(Vec(spec.dims.m(), 2.0));
  CHECK(a.evaluations() == 2);
  CHECK_THROWS_AS(fd_map(spec, tfc::tfc_initial_guess(kTfc, 4), Vec{0, 0}, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("assemble_jacobian of a linear map reproduces its matrix", "[jacobian]") {
  std::mt19937_64 rng(10);
  const DenseMatrix M = oracle::random_matrix(rng, 17);
  const DenseMatrix A = assemble_jacobian(MatrixMap(M));
  CHECK((A - M).max_abs() <= std::numeric_limits<double>::epsilon() * M.max_abs());
}

TEST_CASE("assemble_jacobian approximates the central-difference Jacobian", "[jacobian]") {
  std::mt19937_64 rng(11);
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  const Vec raw = oracle::random_tfc_point(rng, 10);
  const DecisionVector U(spec.dims, raw);
  const Vec x{0, 0};
  auto F = [&](const Vec& u) { return eval_F(spec, DecisionVector(spec.dims, u), x, 0.0); };
  const DenseMatrix ref = oracle::central_jacobian(F, raw, 1e-6);
  const double e5 = (assemble_jacobian(fd_map(spec, U, x, 0.0, 1e-5)) - ref).max_abs();
  const double e4 = (assemble_jacobian(fd_map(spec, U, x, 0.0, 1e-4)) - ref).max_abs();
  CHECK(e5 <= 1e-3 * ref.max_abs());
  const double ratio = e4 / e5;
  CHECK(ratio >= 10.0 / 3.0);
  CHECK(ratio <= 30.0);
}

TEST_CASE("assemble_jacobian is identical across thread counts", "[jacobian][concurrency]") {
  std::mt19937_64 rng(12);
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  const FdOperator a = fd_map(spec, DecisionVector(spec.dims, oracle::random_tfc_point(rng, 10)), Vec{0, 0}, 0.0, 1e-5);
  const DenseMatrix seq = assemble_jacobian(a);
  for (unsigned threads : {0u, 2u, 3u, 8u, 64u}) {
    AssemblyOptions o;
    o.threads = threads;
    CHECK(assemble_jacobian(a, o) == seq);
  }
}

TEST_CASE("assemble_jacobian reports the failing column", "[jacobian][errors]") {
  const FunctionMap failing(6, [](ConstSpan v) -> Vec {
    if (v[3] != 0.0 || v[5] != 0.0) throw std::runtime_error("boom");
    return Vec(v.begin(), v.end());
  });
  for (unsigned threads : {1u, 3u}) {
    AssemblyOptions o;
    o.threads = threads;
    try {
      (void)assemble_jacobian(failing, o);
      FAIL("expected ColumnEvaluationError");
    } catch (const ColumnEvaluationError& e) {
      CHECK(e.column() == 3);
    }
  }
}

TEST_CASE("symmetrize examples", "[symmetrize]") {
  const DenseMatrix s = DenseMatrix::from_rows({{1, 2}, {2, 5}});
  CHECK(symmetrize(s) == s);
  CHECK(symmetrize(DenseMatrix::from_rows({{0, 1}, {0, 0}})) == DenseMatrix::from_rows({{0, 0.5}, {0.5, 0}}));
  std::mt19937_64 rng(13);
  const DenseMatrix r = symmetrize(oracle::random_matrix(rng, 9));
  CHECK(r == r.transposed());
}

TEST_CASE("TfC Jacobian asymmetry shrinks with h", "[symmetrize]") {
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  const Vec x{0, 0};
  const DecisionVector U = initial_solve(spec, x, 0.0, tfc::tfc_initial_guess(kTfc, 10)).U;
  auto asym = [&](double h) {
    const DenseMatrix A = assemble_jacobian(fd_map(spec, U, x, 0.0, h));
    return (A - A.transposed()).norm_fro() / A.norm_fro();
  };
  const double ratio = asym(1e-5) / asym(1e-6);
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 30.0);
}

TEST_CASE("continuation_step with a zero residual leaves U unchanged", "[step]") {
  std::mt19937_64 rng(14);
  const OcpSpec spec = oracle::zero_spec(4);
  const DecisionVector U0 = random_decision(rng, spec.dims);
  for (KrylovMethod method : {KrylovMethod::gmres, KrylovMethod::minres}) {
    ContinuationSettings s;
    s.method = method;
    ContinuationEngine engine(U0, s);
    const StepOutcome out = continuation_step(engine, spec, Vec{0, 0}, 0.0, IdentityPreconditioner{});
    CHECK(engine.U() == U0);
    CHECK(out.diagnostics.norm_F == 0.0);
    CHECK(out.diagnostics.iterations == 0);
    CHECK(out.u_applied == Vec(U0.u(0).begin(), U0.u(0).end()));
    CHECK(engine.step_index() == 1);
  }
}

TEST_CASE("continuation_step solves an affine residual in one step", "[step]") {
  std::mt19937_64 rng(15);
  const OcpSpec spec = oracle::affine_spec(6);
  const std::size_t m = spec.dims.m();
  const Vec x{0.4};
  const DecisionVector U0(spec.dims, oracle::random_vector(rng, m));
  ContinuationSettings s;
  s.h = 1e-3;
  s.krylov.k_max = static_cast<int>(m);
  s.krylov.tol = 1e-12;
  const DenseMatrix A = assemble_jacobian(fd_map(spec, U0, x, 0.0, s.h));
  const LUFactors f = lu_factor(A);
  const auto exact = [&f](ConstSpan r) { return lu_solve(f, r); };
  ContinuationEngine engine(U0, s);
  const StepOutcome out = continuation_step(engine, spec, x, 0.0, exact);
  CHECK(out.diagnostics.norm_F > 1e-2);
  CHECK(out.diagnostics.iterations <= 2);
  CHECK(norm2(eval_F(spec, engine.U(), x, 0.0)) <= 1e-8);
}

TEST_CASE("continuation_step marks a failed solve as degraded", "[step][errors]") {
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 4);
  const DecisionVector U0 = tfc::tfc_initial_guess(kTfc, 4);
  ContinuationSettings s;
  s.method = KrylovMethod::minres;
  ContinuationEngine engine(U0, s);
  const auto negate = [](ConstSpan r) {
    Vec z(r.begin(), r.end());
    scale(-1.0, z);
    return z;
  };
  StepOutcome out;
  REQUIRE_NOTHROW(out = continuation_step(engine, spec, Vec{0, 0}, 0.0, negate));
  CHECK(out.diagnostics.degraded);
  CHECK(engine.U() == U0);
  CHECK(out.u_applied == Vec(U0.u(0).begin(), U0.u(0).end()));
}

TEST_CASE("continuation_step reports diagnostics", "[step]") {
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  const Vec x{0, 0};
  const DecisionVector U0 = tfc::tfc_initial_guess(kTfc, 10);
  ContinuationSettings s;
  s.krylov.k_max = 4;
  ContinuationEngine engine(U0, s);
  const StepOutcome out = continuation_step(engine, spec, x, 0.0, IdentityPreconditioner{});
  CHECK(out.diagnostics.norm_F == norm2(eval_F(spec, U0, x, 0.0)));
  CHECK(out.diagnostics.iterations == 4);
  CHECK(out.diagnostics.map_evaluations == 4);
  CHECK(out.diagnostics.krylov_residual > 0.0);
  CHECK_FALSE(engine.U() == U0);
  CHECK_THROWS_AS(ContinuationEngine(U0, ContinuationSettings{0.0, 0.02}), std::invalid_argument);
}

TEST_CASE("initial_solve returns a converged guess untouched", "[newton]") {
  const OcpSpec spec = oracle::zero_spec(3);
  std::mt19937_64 rng(16);
  const DecisionVector U0 = random_decision(rng, spec.dims);
  const InitialSolveResult r = initial_solve(spec, Vec{0, 0}, 0.0, U0);
  CHECK(r.U == U0);
  CHECK(r.iterations == 0);
  CHECK(r.converged);
}

TEST_CASE("initial_solve converges in one Newton step on an affine residual", "[newton]") {
  std::mt19937_64 rng(17);
  const OcpSpec spec = oracle::affine_spec(6);
  const DecisionVector U0(spec.dims, oracle::random_vector(rng, spec.dims.m()));
  NewtonOptions o;
  o.tol = 1e-8;
  const InitialSolveResult r = initial_solve(spec, Vec{0.3}, 0.0, U0, o);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
}

TEST_CASE("initial_solve reaches the TfC tolerance from the documented guess", "[newton]") {
  const OcpSpec spec = tfc::make_tfc_spec(kTfc, 10);
  const InitialSolveResult r = initial_solve(spec, Vec{0, 0}, 0.0, tfc::tfc_initial_guess(kTfc, 10));
  CHECK(r.converged);
  CHECK(r.norm_F <= 1e-6);
  CHECK(r.iterations <= 50);
  const double p = r.U.p()[0];
  CHECK(p > 0.8);
  CHECK(p < 1.6);
}

TEST_CASE("initial_solve gives up on a singular Jacobian with the best iterate", "[newton][errors]") {
  // F = (u^2 + 1) has no root and a zero Jacobian at u = 0.
  OcpSpec spec;
  spec.dims = OcpDims{1, 1, 0, 0, 0, 1};
  auto& fn = spec.fn;
  fn.dynamics = [](double, ConstSpan, ConstSpan, ConstSpan, MutSpan o) { o[0] = 0.0; };
  fn.constraint = [](double, ConstSpan, ConstSpan, ConstSpan, MutSpan) {};
  fn.terminal = [](double, ConstSpan, ConstSpan, MutSpan) {};
  fn.terminal_x = fn.terminal;
  fn.terminal_p = fn.terminal;
  fn.terminal_cost_x = [](double, ConstSpan, ConstSpan, MutSpan o) { o[0] = 0.0; };
  fn.terminal_cost_p = fn.terminal;
  fn.hamiltonian_u = [](double, ConstSpan, ConstSpan, ConstSpan u, ConstSpan, ConstSpan, MutSpan o) {
    o[0] = u[0] * u[0] + 1.0;
  };
  fn.hamiltonian_x = [](double, ConstSpan, ConstSpan, ConstSpan, ConstSpan, ConstSpan, MutSpan o) { o[0] = 0.0; };
  fn.hamiltonian_p = [](double, ConstSpan, ConstSpan, ConstSpan, ConstSpan, ConstSpan, MutSpan) {};
  NewtonOptions o;
  o.h = 1e-300;
  try {
    (void)initial_solve(spec, Vec{0}, 0.0, DecisionVector(spec.dims), o);
    FAIL("expected ColdStartError");
  } catch (const ColdStartError& e) {
    CHECK(e.best().norm_F == 1.0);
    CHECK(e.best().U == DecisionVector(spec.dims));
  }
}
