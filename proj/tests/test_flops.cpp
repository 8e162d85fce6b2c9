#include <gtest/gtest.h>

#include "gpcn/flops.hpp"
#include "gpcn/training.hpp"
#include "small_models.hpp"

using namespace gpcn;

TEST(Flops, Formulas) {
  EXPECT_EQ(flops_gcn_layer(10, 3, 4, 28), 10u * 3 * (28 + 4));
  EXPECT_EQ(flops_dense(10, 3, 4), 120u);
  EXPECT_EQ(flops_project(5, 1, 7), 35u);
}

TEST(Flops, LedgerIsAdditive) {
  FlopsLedger a, b;
  a.add(FlopsCategory::gcn_layer, 10);
  a.add(FlopsCategory::dense, 5);
  b.add(FlopsCategory::projection, 7);
  b.add(FlopsCategory::dense, 1);
  FlopsLedger c;
  c.add(a);
  c.add(b, 3);
  EXPECT_EQ(c.total(), a.total() + 3 * b.total());
  EXPECT_EQ(c.category(FlopsCategory::dense), 5u + 3u);
  EXPECT_EQ(c.category(FlopsCategory::projection), 21u);
  EXPECT_EQ(c.category(FlopsCategory::gcn_layer) + c.category(FlopsCategory::dense) +
                c.category(FlopsCategory::projection),
            c.total());
  EXPECT_STREQ(to_string(FlopsCategory::projection), "projection");
}

TEST(Flops, SingleGcnByHand) {
  // Path of 3 nodes: nnz 7. Widths {2}, head {3, 1}, 4 input features.
  const StructureMatrix z = laplacian(make_grid(1, 3));
  ModelSpec s;
  s.name = "hand";
  s.levels = {GcnSpec{z, {2}, {3, 1}}};
  const Model m(s, 4, 0);
  FlopsLedger l;
  m.predict(Matrix(6, 4), 2, {}, &l);
  const std::uint64_t expect = 2 * (3 * 4 * (7 + 2) + 3 * 2 * 3 + 3 * 3 * 1);
  EXPECT_EQ(l.total(), expect);
  std::uint64_t predicted = 0;
  for (const auto& c : predicted_layer_costs(m, 2)) predicted += c.flops;
  EXPECT_EQ(predicted, expect);
}

TEST(Flops, PredictedTableMatchesExecutedLedger) {
  for (auto [kind, adaptive] : {std::pair{ModelKind::gpcn, true}, std::pair{ModelKind::gpcn, false},
                                std::pair{ModelKind::diffpool, false}, std::pair{ModelKind::ngcn, false},
                                std::pair{ModelKind::plain_ensemble, false}}) {
    const Model m(test::small_spec(kind, adaptive), 3, 0);
    for (std::size_t blocks : {1u, 4u}) {
      FlopsLedger l;
      m.predict(Matrix(20 * blocks, 3), blocks, {}, &l);
      FlopsLedger p;
      for (const auto& c : predicted_layer_costs(m, blocks)) p.add(c.category, c.flops);
      EXPECT_EQ(p.total(), l.total()) << m.spec().name;
      for (auto c : {FlopsCategory::gcn_layer, FlopsCategory::dense, FlopsCategory::projection})
        EXPECT_EQ(p.category(c), l.category(c)) << m.spec().name << " " << to_string(c);
    }
  }
}

TEST(Flops, MaskedForwardCostsOnlySelectedLevels) {
  const Model m(test::small_spec(ModelKind::gpcn), 3, 0);
  const std::vector<char> all = {1, 1, 1};
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<char> one(3, 0);
    one[i] = 1;
    sum += forward_cost(m, one, 2).total();
  }
  EXPECT_EQ(sum, forward_cost(m, all, 2).total());
}
