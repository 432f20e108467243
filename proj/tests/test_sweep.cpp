#include "deepctr/sweep.hpp"

#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace dc = deepctr;
namespace dt = deepctr::testing;

TEST(ShapeLayout, ThreeLayersSixHundredNeurons) {
  EXPECT_EQ(dc::shape_layout(dc::NetworkShape::kConstant, 3, 600),
            (std::vector<int>{200, 200, 200}));
  EXPECT_EQ(dc::shape_layout(dc::NetworkShape::kIncreasing, 3, 600),
            (std::vector<int>{100, 200, 300}));
  EXPECT_EQ(dc::shape_layout(dc::NetworkShape::kDecreasing, 3, 600),
            (std::vector<int>{300, 200, 100}));
  EXPECT_EQ(dc::shape_layout(dc::NetworkShape::kDiamond, 3, 600),
            (std::vector<int>{150, 300, 150}));
}

TEST(ShapeLayout, RoundingPreservesTotalExactly) {
  for (auto shape : {dc::NetworkShape::kConstant, dc::NetworkShape::kIncreasing,
                     dc::NetworkShape::kDecreasing, dc::NetworkShape::kDiamond}) {
    for (int layers : {1, 2, 3, 4, 5}) {
      for (int total : {600, 601, 607, 50}) {
        if (total < layers) continue;
        const auto widths = dc::shape_layout(shape, layers, total);
        int sum = 0;
        for (int w : widths) {
          EXPECT_GE(w, 1);
          sum += w;
        }
        EXPECT_EQ(sum, total) << dc::to_string(shape) << " " << layers << "x" << total;
      }
    }
  }
}

TEST(SweepAxis, DeepAxesRejectedForWideModels) {
  dc::ModelSpec lr;
  lr.kind = dc::ModelKind::kLr;
  dc::SweepAxis axis;
  axis.kind = dc::SweepAxisKind::kDropout;
  axis.numeric_values = {1.0, 0.9};
  dc::TrainConfig cfg;
  std::vector<dc::SparseInstance> data;
  EXPECT_THROW(dc::sweep(lr, axis, cfg, data, data, 4, 2), dc::ConfigError);

  dc::ModelSpec fm;
  fm.kind = dc::ModelKind::kFm;
  fm.k = 2;
  EXPECT_THROW(dc::sweep(fm, axis, cfg, data, data, 4, 2), dc::ConfigError);
}

TEST(Sweep, DropoutAxisEmitsOneRowPerValue) {
  dc::Rng rng(7);
  const auto train = dt::random_instances(120, 12, 3, rng);
  const auto test = dt::random_instances(60, 12, 3, rng);

  dc::ModelSpec base;
  base.kind = dc::ModelKind::kDnn;
  base.k = 2;
  base.hidden = {4};
  dc::SweepAxis axis;
  axis.kind = dc::SweepAxisKind::kDropout;
  axis.numeric_values = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5};

  dc::TrainConfig cfg;
  cfg.bs = 32;
  cfg.lr = 0.01;
  cfg.epochs = 2;
  cfg.seed = 5;
  const auto rows = dc::sweep(base, axis, cfg, train, test, 12, 3);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].axis_value, "1");
  EXPECT_EQ(rows[5].axis_value, "0.5");
  for (const auto& row : rows) {
    EXPECT_GT(row.auc, 0.0);
    EXPECT_GT(row.logloss, 0.0);
  }
}

TEST(Sweep, ShapeAxisTrainsEveryLayout) {
  dc::Rng rng(11);
  const auto train = dt::random_instances(80, 12, 3, rng);
  const auto test = dt::random_instances(40, 12, 3, rng);

  dc::ModelSpec base;
  base.kind = dc::ModelKind::kDeepFmD;
  base.k = 2;
  base.hidden = {4, 4, 4};
  dc::SweepAxis axis;
  axis.kind = dc::SweepAxisKind::kNetworkShape;
  axis.name_values = {"constant", "increasing", "decreasing", "diamond"};
  axis.shape_layers = 3;
  axis.shape_total_neurons = 12;

  dc::TrainConfig cfg;
  cfg.bs = 32;
  cfg.lr = 0.01;
  cfg.epochs = 1;
  const auto rows = dc::sweep(base, axis, cfg, train, test, 12, 3);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1].axis_value, "increasing");
}

TEST(Sweep, ActivationAndWidthAxesApply) {
  dc::ModelSpec base;
  base.kind = dc::ModelKind::kDnn;
  base.k = 2;
  base.hidden = {4, 4};

  dc::SweepAxis act;
  act.kind = dc::SweepAxisKind::kActivation;
  act.name_values = {"relu", "tanh", "sigmoid"};
  EXPECT_EQ(dc::apply_axis_value(base, act, 1).activation, dc::Activation::kTanh);

  dc::SweepAxis neurons;
  neurons.kind = dc::SweepAxisKind::kNeuronsPerLayer;
  neurons.numeric_values = {8};
  EXPECT_EQ(dc::apply_axis_value(base, neurons, 0).hidden, (std::vector<int>{8, 8}));

  dc::SweepAxis layers;
  layers.kind = dc::SweepAxisKind::kHiddenLayers;
  layers.numeric_values = {3};
  EXPECT_EQ(dc::apply_axis_value(base, layers, 0).hidden, (std::vector<int>{4, 4, 4}));
}
