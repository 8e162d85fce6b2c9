#include <gtest/gtest.h>

#include "gpcn/ensemble.hpp"
#include "small_models.hpp"

using namespace gpcn;
using test::small_spec;

namespace {

Matrix level_only(const Model& m, const Matrix& x, std::size_t level) {
  std::vector<char> mask(m.level_count(), 0);
  mask[level] = 1;
  return m.predict(x, 1, mask);
}

// Output of level i's own network on input xi over structure z.
Matrix net_output(const Model& m, std::size_t i, const StructureMatrix& z, const Matrix& xi) {
  ad::Tape t;
  const std::vector<char> none(m.params().size(), 0);
  const auto vars = bind_parameters(t, m.params(), none);
  return t.value(m.level_net(i).forward(t, vars, StructureOperand::shared(z), t.constant(xi), 1, nullptr).y);
}

double energy(const Model& m, const Matrix& x) { return sum(m.predict(x)); }

}  // namespace

TEST(Ensemble, ComposeProlongations) {
  Rng rng(1);
  const Matrix a = test::random_matrix(5, 3, rng), b = test::random_matrix(3, 2, rng);
  const std::vector<Matrix> chain = {a, b};
  EXPECT_LT(max_abs_diff(compose_prolongations(chain), test::naive_matmul(a, b)), 1e-14);
  EXPECT_EQ(compose_prolongations({}, 3), Matrix::identity(3));
  const std::vector<Matrix> bad = {a, a};
  EXPECT_THROW(compose_prolongations(bad), DimensionError);
}

TEST(Ensemble, HierarchyProlongationsAreOrthonormal) {
  const Hierarchy& h = test::small_hierarchy();
  ASSERT_EQ(h.prolongations.size(), 2u);
  EXPECT_EQ(h.prolongations[0].rows(), 20u);
  EXPECT_EQ(h.prolongations[0].cols(), 10u);
  for (const auto& p : h.prolongations) EXPECT_LT(orthogonality_error(p), 1e-6);
  for (double d : h.distances) EXPECT_GE(d, 0.0);
  const Hierarchy mt = microtubule_hierarchy(4, 1, false);
  EXPECT_EQ(mt.graphs[0].node_count(), 52u);
  EXPECT_EQ(mt.graphs[1].node_count(), 26u);
  EXPECT_EQ(mt.graphs[2].node_count(), 6u);
  EXPECT_THROW(microtubule_hierarchy(5), std::invalid_argument);
}

TEST(Ensemble, GpcnIsSumOfLiftedLevelNetworks) {
  Rng rng(2);
  Model m(small_spec(ModelKind::gpcn), 3, 5);
  test::randomize(m.params(), rng);
  const Matrix x = test::random_matrix(20, 3, rng);
  Matrix total(20, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    const Matrix p = m.composed_prolongation(i);
    const Matrix xi = matmul(p, true, x, false);
    const Matrix expect = matmul(p, net_output(m, i, m.spec().levels[i].z, xi));
    EXPECT_LT(max_abs_diff(level_only(m, x, i), expect), 1e-12);
    total += expect;
  }
  EXPECT_LT(max_abs_diff(m.predict(x), total), 1e-12);
  EXPECT_LT(max_abs_diff(m.composed_prolongation(2),
                         test::naive_matmul(m.spec().prolongations[0], m.spec().prolongations[1])),
            1e-13);
}

TEST(Ensemble, BlocksAreIndependentSamples) {
  Rng rng(3);
  for (auto kind : {ModelKind::gpcn, ModelKind::diffpool, ModelKind::ngcn}) {
    Model m(small_spec(kind), 2, 6);
    test::randomize(m.params(), rng);
    const Matrix a = test::random_matrix(20, 2, rng), b = test::random_matrix(20, 2, rng);
    Matrix both(40, 2);
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        both(i, j) = a(i, j);
        both(20 + i, j) = b(i, j);
      }
    const Matrix y = m.predict(both, 2);
    const Matrix ya = m.predict(a), yb = m.predict(b);
    for (std::size_t i = 0; i < 20; ++i) {
      EXPECT_NEAR(y(i, 0), ya(i, 0), 1e-12) << to_string(kind);
      EXPECT_NEAR(y(20 + i, 0), yb(i, 0), 1e-12) << to_string(kind);
    }
  }
}

TEST(Ensemble, NgcnMembersUseStructurePowers) {
  Rng rng(4);
  Model m(small_spec(ModelKind::ngcn), 2, 7);
  test::randomize(m.params(), rng);
  const Matrix x = test::random_matrix(20, 2, rng);
  const StructureMatrix& z = test::small_hierarchy().laplacians[0];
  const Matrix expect = net_output(m, 0, z, x) + net_output(m, 1, structure_power(z, 2), x);
  EXPECT_LT(max_abs_diff(ngcn_forward(m, x), expect), 1e-12);
  Model g(small_spec(ModelKind::gpcn), 2, 7);
  EXPECT_THROW(ngcn_forward(g, x), std::invalid_argument);
}

TEST(Ensemble, DiffPoolCoarsening) {
  Rng rng(5);
  Model m(small_spec(ModelKind::diffpool), 2, 8);
  test::randomize(m.params(), rng);
  const Matrix x = test::random_matrix(20, 2, rng);
  const StructureMatrix& z = m.spec().levels[0].z;
  const DiffPoolResult r = diffpool_coarsen(m.pool_net(1), m.params(), z, x);
  ASSERT_EQ(r.s.rows(), 20u);
  ASSERT_EQ(r.s.cols(), 6u);
  for (std::size_t i = 0; i < 20; ++i) {
    double s = 0;
    for (double v : r.s.row(i)) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
  EXPECT_TRUE(is_symmetric(r.z, 1e-12));
  const Matrix zd = z.to_dense();
  const Matrix expect_z = test::naive_matmul(test::naive_matmul(transpose(r.s), zd), r.s);
  EXPECT_LT(max_abs_diff(r.z, expect_z), 1e-12);
  // Level 1 output equals S * net1(S^T Z S, S^T X).
  ad::Tape t;
  const std::vector<char> none(m.params().size(), 0);
  const auto vars = bind_parameters(t, m.params(), none);
  const auto y1 = m.level_net(1).forward(t, vars, StructureOperand::batched(t.constant(r.z), 6),
                                         t.constant(r.x), 1, nullptr);
  EXPECT_LT(max_abs_diff(level_only(m, x, 1), matmul(r.s, t.value(y1.y))), 1e-12);
  EXPECT_THROW(ensemble_input_gradient(m, x), std::invalid_argument);
  EXPECT_THROW(m.composed_prolongation(1), std::invalid_argument);
}

TEST(Ensemble, AllParameterGradientsMatchFiniteDifferences) {
  Rng rng(6);
  for (auto [kind, adaptive] : {std::pair{ModelKind::gpcn, true}, std::pair{ModelKind::gpcn, false},
                                std::pair{ModelKind::diffpool, false}, std::pair{ModelKind::plain_ensemble, false}}) {
    Model m(small_spec(kind, adaptive), 2, 9);
    test::randomize(m.params(), rng);
    const Matrix x = test::random_matrix(20, 2, rng);
    const Matrix target = test::random_matrix(20, 1, rng);
    ad::Tape t;
    const auto vars = bind_parameters(t, m.params());
    const auto pass = m.forward(t, vars, t.constant(x), 1, {}, nullptr);
    t.backward(ad::mean_squared_error(t, pass.output, target));
    test::GradientCheck check;
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      auto loss = [&] {
        const Matrix y = m.predict(x);
        double s = 0;
        for (std::size_t r = 0; r < 20; ++r) s += (y(r, 0) - target(r, 0)) * (y(r, 0) - target(r, 0));
        return s / 20;
      };
      const Matrix fd = test::central_difference(m.params()[i].value, loss);
      check.add(t.grad(vars[i]), fd);
    }
    EXPECT_LT(check.value(), 1e-6) << m.spec().name;
  }
}

TEST(Ensemble, AdaptiveProlongationsAreParameters) {
  Model m(small_spec(ModelKind::gpcn, true), 2, 10);
  ASSERT_EQ(m.prolongation_ids().size(), 2u);
  EXPECT_EQ(m.params()[m.prolongation_ids()[0]].name, "P01");
  EXPECT_EQ(m.params()[m.prolongation_ids()[1]].level, 2);
  m.params()[m.prolongation_ids()[0]].value(0, 0) += 1.0;
  const Matrix expect = test::naive_matmul(m.params()[m.prolongation_ids()[0]].value,
                                           m.params()[m.prolongation_ids()[1]].value);
  EXPECT_LT(max_abs_diff(m.composed_prolongation(2), expect), 1e-13);
  Model fixed(small_spec(ModelKind::gpcn), 2, 10);
  EXPECT_TRUE(fixed.prolongation_ids().empty());
}

TEST(Ensemble, InputGradientRuleMatchesTapeAndFiniteDifferences) {
  Rng rng(7);
  for (auto [kind, adaptive] : {std::pair{ModelKind::gpcn, true}, std::pair{ModelKind::gpcn, false},
                                std::pair{ModelKind::ngcn, false}, std::pair{ModelKind::plain_ensemble, false}}) {
    Model m(small_spec(kind, adaptive), 3, 11);
    test::randomize(m.params(), rng);
    Matrix x = test::random_matrix(20, 3, rng);
    const Matrix rule = ensemble_input_gradient(m, x);
    EXPECT_LT(max_abs_diff(rule, ensemble_input_gradient_tape(m, x)), 1e-10) << m.spec().name;
    const Matrix fd = test::central_difference(x, [&] { return energy(m, x); });
    EXPECT_LT(test::gradient_error(rule, fd), 1e-6) << m.spec().name;
  }
}

TEST(Ensemble, ParameterMaskFollowsLevels) {
  const Model m(small_spec(ModelKind::gpcn, true), 2, 12);
  const std::vector<char> levels = {0, 1, 0};
  const auto mask = m.parameter_mask(levels);
  for (std::size_t i = 0; i < mask.size(); ++i) EXPECT_EQ(mask[i] != 0, m.params()[i].level == 1);
  EXPECT_THROW(m.parameter_mask(std::vector<char>{1}), std::invalid_argument);
}

TEST(Ensemble, TableModels) {
  const Hierarchy h = microtubule_hierarchy(4, 1, false);
  const Model single(build_from_table("single_gcn", h), 10, 0);
  // gcn: (10*64+64) + 2*(64*64+64); head: 192*256+256, 256*32+32, 32*8+8, 8+1.
  EXPECT_EQ(single.params().scalar_count(), 704u + 2 * 4160u + 49408u + 8224u + 264u + 9u);
  for (const auto& name : table_model_names()) {
    const Model m(build_from_table(name, h), 10, 0);
    EXPECT_EQ(m.predict(Matrix(52, 10)).rows(), 52u) << name;
  }
  EXPECT_EQ(build_from_table("ngcn5", h).radii, (std::vector<int>{1, 2, 4, 8, 16}));
  EXPECT_TRUE(build_from_table("a_gpcn3", h).adaptive);
  EXPECT_FALSE(build_from_table("gpcn3", h).adaptive);
  EXPECT_THROW(build_from_table("gpcn4", h), std::invalid_argument);
}

TEST(Ensemble, InvalidSpecsAreRejected) {
  ModelSpec s = small_spec(ModelKind::gpcn);
  s.prolongations.pop_back();
  EXPECT_THROW(Model(s, 2, 0), std::invalid_argument);
  s = small_spec(ModelKind::gpcn);
  s.prolongations[0] = Matrix(20, 9);
  EXPECT_THROW(Model(s, 2, 0), DimensionError);
  s = small_spec(ModelKind::diffpool, true);
  EXPECT_THROW(Model(s, 2, 0), std::invalid_argument);
  s = small_spec(ModelKind::gpcn);
  s.levels[1].dense_widths = {2};
  EXPECT_THROW(Model(s, 2, 0), std::invalid_argument);
  const Model m(small_spec(ModelKind::gpcn), 2, 0);
  EXPECT_THROW(m.predict(Matrix(20, 3)), DimensionError);
  EXPECT_THROW(m.predict(Matrix(20, 2), 1, std::vector<char>{0, 0, 0}), std::invalid_argument);
}
