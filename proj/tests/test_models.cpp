#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "pgnn/errors.hpp"
#include "pgnn/models.hpp"
#include "test_util.hpp"

namespace pgnn {
namespace {

using nn::Mode;
using nn::Shape;
using nn::Tensor;

Tensor<float> random_images(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t(s);
  for (auto& v : t.span()) v = static_cast<float>(uniform(rng, 0.0, 1.0));
  return t;
}

bool all_finite(const Tensor<float>& t) {
  for (float v : t.span())
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename Store>
bool same_values(const Store& a, const Store& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || !(a[i].value == b[i].value)) return false;
  }
  return true;
}

TEST(InverseNet, PreservesShape) {
  InverseNet<float> net({}, 1);
  const auto y = net.forward(random_images({4, 3, 64, 64}, 2), Mode::train);
  EXPECT_EQ(y.shape(), (Shape{4, 3, 64, 64}));
  for (auto [h, w] : {std::pair{8, 8}, std::pair{13, 21}}) {
    EXPECT_EQ(net.forward(random_images({2, 3, h, w}, 3), Mode::eval).shape(), (Shape{2, 3, h, w}));
  }
}

TEST(InverseNet, ParameterCountMatchesLayerFormulas) {
  // Weights + biases of conv 3->16, 16->32, 32->16 and transposed conv 16->3, all 3x3.
  const std::size_t conv = (3 * 16 * 9 + 16) + (16 * 32 * 9 + 32) + (32 * 16 * 9 + 16) + (16 * 3 * 9 + 3);
  const std::size_t norm = 2 * (16 + 32 + 16);
  EXPECT_EQ(conv, 10147u);
  EXPECT_EQ(inverse_net_conv_parameter_count({}), conv);
  InverseNet<float> net({}, 1);
  EXPECT_EQ(net.params().trainable_count(), conv + norm);
  EXPECT_EQ(net.params().buffer_count(), norm);
}

TEST(InverseNet, SameSeedSameParameters) {
  InverseNet<float> a({}, 9);
  InverseNet<float> b({}, 9);
  InverseNet<float> c({}, 10);
  EXPECT_TRUE(same_values(a.params(), b.params()));
  EXPECT_FALSE(same_values(a.params(), c.params()));
}

TEST(InverseNet, EvalIsDeterministicAndBatchIndependent) {
  InverseNet<float> net({}, 4);
  net.forward(random_images({6, 3, 16, 16}, 5), Mode::train);  // move running stats off their defaults
  const auto batch = random_images({8, 3, 16, 16}, 6);
  const auto y1 = net.forward(batch, Mode::eval);
  const auto y2 = net.forward(batch, Mode::eval);
  EXPECT_EQ(y1, y2);
  const std::vector<int> pick{5};
  const auto single = net.forward(batch.gather(pick), Mode::eval);
  const auto row = y1.gather(pick);
  for (std::size_t k = 0; k < single.size(); ++k) EXPECT_NEAR(single[k], row[k], 1e-5f);
  EXPECT_TRUE(all_finite(y1));
}

TEST(InverseNet, RejectsWrongChannels) {
  InverseNet<float> net({}, 1);
  EXPECT_THROW(net.forward(random_images({1, 1, 16, 16}, 1), Mode::eval), DimensionError);
}

TEST(Regressor, ResnetSmallShapes) {
  RegressorNet<float> net({}, 1);
  const auto x = random_images({8, 3, 64, 64}, 2);
  EXPECT_EQ(net.features(x, Mode::train).shape(), (Shape{8, 64, 1, 1}));
  EXPECT_EQ(net.forward_raw(x, Mode::train).shape(), (Shape{8, 1, 1, 1}));
  EXPECT_EQ(net.predict(x).size(), 8u);
}

TEST(Regressor, Resnet18FeatureWidth) {
  RegressorConfig cfg;
  cfg.variant = RegressorVariant::resnet18;
  EXPECT_EQ(cfg.feature_width(), 512);
  RegressorNet<float> net(cfg, 1);
  EXPECT_EQ(net.features(random_images({2, 3, 32, 32}, 2), Mode::train).shape(), (Shape{2, 512, 1, 1}));
  EXPECT_EQ(net.params().at("fusion.fc1.weight").value.shape(), (Shape{128, 512, 1, 1}));
}

TEST(Regressor, DeterministicPerSeedAndBatchIndependent) {
  RegressorNet<float> a({}, 3);
  RegressorNet<float> b({}, 3);
  EXPECT_TRUE(same_values(a.params(), b.params()));
  const auto x = random_images({5, 3, 32, 32}, 4);
  const auto full = a.predict(x);
  EXPECT_EQ(full, b.predict(x));
  const std::vector<int> pick{2};
  EXPECT_NEAR(a.predict(x.gather(pick))[0], full[2], 1e-5);
}

TEST(Regressor, TargetScalingAppliesInPredict) {
  RegressorNet<float> net({}, 3);
  const auto x = random_images({2, 3, 16, 16}, 4);
  const auto raw = net.forward_raw(x, Mode::eval);
  net.set_target_scaling(0.5, 2.0);
  const auto pred = net.predict(x);
  EXPECT_NEAR(pred[0], 0.5 + 2.0 * raw[0], 1e-6);
  EXPECT_THROW(net.set_target_scaling(0.0, 0.0), ParameterError);
}

TEST(Regressor, VariantNamesAndPretrainedFlag) {
  EXPECT_EQ(parse_variant("resnet18"), RegressorVariant::resnet18);
  EXPECT_EQ(parse_variant("resnet-small"), RegressorVariant::resnet_small);
  EXPECT_EQ(to_string(RegressorVariant::resnet_small), "resnet-small");
  EXPECT_THROW(parse_variant("vgg"), ParameterError);
  RegressorConfig cfg;
  cfg.pretrained = true;
  EXPECT_THROW(RegressorNet<float>(cfg, 1), ParameterError);
  EXPECT_THROW(RegressorNet<float>({}, 1).predict(random_images({1, 1, 16, 16}, 1)), DimensionError);
}

TEST(WeightFile, InverseRoundTripIsBitExact) {
  testing::TempDir dir;
  InverseNet<float> net({}, 5);
  net.forward(random_images({4, 3, 16, 16}, 6), Mode::train);
  save_model(net, dir / "inv.pgnn");
  auto back = load_inverse_net(dir / "inv.pgnn");
  EXPECT_TRUE(same_values(net.params(), back.params()));
  EXPECT_EQ(back.config(), net.config());
  const auto x = random_images({2, 3, 16, 16}, 7);
  EXPECT_EQ(net.forward(x, Mode::eval), back.forward(x, Mode::eval));
  EXPECT_TRUE(std::holds_alternative<InverseNet<float>>(load_model(dir / "inv.pgnn")));
  EXPECT_THROW(load_regressor(dir / "inv.pgnn"), FormatError);
}

TEST(WeightFile, RegressorRoundTripIsBitExact) {
  testing::TempDir dir;
  RegressorNet<float> net({}, 5);
  net.set_target_scaling(0.3, 0.07);
  save_model(net, dir / "reg.pgnn");
  auto back = load_regressor(dir / "reg.pgnn");
  EXPECT_TRUE(same_values(net.params(), back.params()));
  const auto x = random_images({3, 3, 32, 32}, 8);
  EXPECT_EQ(net.predict(x), back.predict(x));
  EXPECT_EQ(back.target_scale(), net.target_scale());
}

TEST(WeightFile, HeaderLayout) {
  testing::TempDir dir;
  save_model(InverseNet<float>({}, 1), dir / "m.pgnn");
  const auto bytes = testing::slurp(dir / "m.pgnn");
  ASSERT_GT(bytes.size(), 12u);
  EXPECT_EQ(bytes.substr(0, 4), "PGNN");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  EXPECT_EQ(bytes[5], 0);
}

TEST(WeightFile, TruncatedFileIsFormatError) {
  testing::TempDir dir;
  save_model(InverseNet<float>({}, 1), dir / "m.pgnn");
  const auto bytes = testing::slurp(dir / "m.pgnn");
  testing::spit(dir / "cut.pgnn", bytes.substr(0, bytes.size() - 10));
  EXPECT_THROW(load_model(dir / "cut.pgnn"), FormatError);
  testing::spit(dir / "tail.pgnn", bytes + "x");
  EXPECT_THROW(load_model(dir / "tail.pgnn"), FormatError);
}

TEST(WeightFile, UnsupportedVersionAndMagic) {
  testing::TempDir dir;
  save_model(InverseNet<float>({}, 1), dir / "m.pgnn");
  auto bytes = testing::slurp(dir / "m.pgnn");
  auto v99 = bytes;
  v99[4] = 99;
  testing::spit(dir / "v99.pgnn", v99);
  try {
    load_model(dir / "v99.pgnn");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version 99"), std::string::npos);
  }
  bytes[0] = 'X';
  testing::spit(dir / "magic.pgnn", bytes);
  EXPECT_THROW(load_model(dir / "magic.pgnn"), FormatError);
  EXPECT_THROW(load_model(dir / "absent.pgnn"), MissingFileError);
}

}  // namespace
}  // namespace pgnn
