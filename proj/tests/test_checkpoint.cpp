#include "deepctr/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace dc = deepctr;
namespace dt = deepctr::testing;
namespace fs = std::filesystem;

namespace {

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("deepctr_ckpt_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CheckpointTest, RoundTripIsBitExactAcrossKinds) {
  for (auto kind : {dc::ModelKind::kLr, dc::ModelKind::kFm, dc::ModelKind::kDnn,
                    dc::ModelKind::kPnnStar, dc::ModelKind::kFmDnn,
                    dc::ModelKind::kDeepFmD}) {
    dc::ModelSpec spec;
    spec.kind = kind;
    spec.k = 3;
    if (spec.has_deep()) spec.hidden = {5, 4};
    spec.use_layer_norm = spec.has_deep();
    dc::Model model(spec, 18, 3, 3);
    dt::randomize_params(model.params(), 0.8, 5);

    const std::string file = path(dc::to_string(kind) + ".ckpt");
    dc::save_checkpoint(model, file);
    const dc::Model restored = dc::load_checkpoint(file);

    EXPECT_EQ(restored.spec().kind, kind);
    EXPECT_EQ(restored.feature_count(), 18u);
    EXPECT_EQ(restored.field_count(), 3u);

    std::vector<dc::ConstTensorRef> ta, tb;
    dc::for_each_tensor(model.params(),
                        [&ta](const dc::ConstTensorRef& t) { ta.push_back(t); });
    dc::for_each_tensor(restored.params(),
                        [&tb](const dc::ConstTensorRef& t) { tb.push_back(t); });
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t t = 0; t < ta.size(); ++t) {
      ASSERT_EQ(ta[t].name, tb[t].name);
      for (std::size_t i = 0; i < ta[t].size; ++i) {
        ASSERT_EQ(ta[t].data[i], tb[t].data[i]) << ta[t].name;
      }
    }
  }
}

TEST_F(CheckpointTest, RestoredModelPredictsIdentically) {
  dc::ModelSpec spec;
  spec.kind = dc::ModelKind::kDeepFmIP;
  spec.k = 3;
  spec.hidden = {6, 5};
  dc::Model model(spec, 24, 4, 7);
  dt::randomize_params(model.params(), 0.5, 11);
  dc::save_checkpoint(model, path("m.ckpt"));
  const dc::Model restored = dc::load_checkpoint(path("m.ckpt"));

  dc::Rng rng(13);
  dc::Batch batch;
  batch.instances = dt::random_instances(32, 24, 4, rng);
  EXPECT_EQ(model.predict(batch), restored.predict(batch));
}

TEST_F(CheckpointTest, SidecarMirrorsTheSpec) {
  dc::ModelSpec spec;
  spec.kind = dc::ModelKind::kFm;
  spec.k = 4;
  dc::Model model(spec, 10, 2, 1);
  dc::save_checkpoint(model, path("m.ckpt"));
  std::ifstream side(path("m.ckpt.json"));
  ASSERT_TRUE(side.good());
  const auto j = nlohmann::json::parse(side);
  EXPECT_EQ(j.at("model").at("kind"), "fm");
  EXPECT_EQ(j.at("model").at("k"), 4);
  EXPECT_EQ(j.at("total_features"), 10);
  EXPECT_EQ(j.at("fields"), 2);
}

TEST_F(CheckpointTest, RejectsForeignFiles) {
  std::ofstream out(path("not.ckpt"), std::ios::binary);
  out << "definitely not a checkpoint";
  out.close();
  EXPECT_THROW(dc::load_checkpoint(path("not.ckpt")), dc::IoError);
}

TEST_F(CheckpointTest, TruncationIsDetected) {
  dc::ModelSpec spec;
  spec.kind = dc::ModelKind::kFm;
  spec.k = 4;
  dc::Model model(spec, 10, 2, 1);
  dc::save_checkpoint(model, path("m.ckpt"));
  const auto size = fs::file_size(path("m.ckpt"));
  fs::resize_file(path("m.ckpt"), size - 16);
  EXPECT_THROW(dc::load_checkpoint(path("m.ckpt")), dc::IoError);
}

TEST_F(CheckpointTest, MissingFileNamesThePath) {
  try {
    dc::load_checkpoint(path("absent.ckpt"));
    FAIL() << "expected IoError";
  } catch (const dc::IoError& e) {
    EXPECT_NE(std::string(e.what()).find("absent.ckpt"), std::string::npos);
  }
}
