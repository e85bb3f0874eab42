#include "gran/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "gran/layers.hpp"
#include "test_util.hpp"

using gran::ArchConfig;
using gran::Model;
using gran::Rng;
using gran::Tape;
using gran::Tensor;

namespace {

const char* kTinyCnn = R"(
name tiny_cnn
input 1 8 8
conv 2 3 3 1 0
relu
maxpool 2 2
flatten
dense 5
relu
dense 3
softmax
)";

const char* kTinyMlp = R"(
name tiny_mlp
input 1 1 4
flatten
dense 6
relu
dense 3
softmax
)";

Model make_tiny_cnn(uint64_t seed = 3) { return Model::init(ArchConfig::parse(kTinyCnn), seed); }

}  // namespace

TEST(ArchConfig, ParseRoundTrip) {
  const ArchConfig cfg = ArchConfig::parse(kTinyCnn);
  EXPECT_EQ(cfg.name, "tiny_cnn");
  EXPECT_EQ(cfg.class_count(), 3);
  const ArchConfig again = ArchConfig::parse(cfg.to_text());
  EXPECT_EQ(again.to_text(), cfg.to_text());
}

TEST(ArchConfig, RejectsMalformedStacks) {
  EXPECT_THROW(ArchConfig::parse("input 1 4 4\ndense 3\nsoftmax\n"), gran::UsageError);  // dense before flatten
  EXPECT_THROW(ArchConfig::parse("input 1 4 4\nflatten\ndense 3\n"), gran::UsageError);  // no softmax
  EXPECT_THROW(ArchConfig::parse("flatten\ndense 3\nsoftmax\n"), gran::UsageError);      // no input line
  EXPECT_THROW(ArchConfig::parse("input 1 4 4\nsoftmax\nflatten\ndense 2\nsoftmax\n"), gran::UsageError);
  EXPECT_THROW(ArchConfig::parse("input 1 4 4\nwat 3\n"), gran::UsageError);
}

TEST(Model, ParameterNamingAndCounts) {
  const Model m = make_tiny_cnn();
  ASSERT_EQ(m.param_tensor_count(), 6);
  EXPECT_EQ(m.param_names()[0], "conv1.weight");
  EXPECT_EQ(m.param_names()[1], "conv1.bias");
  EXPECT_EQ(m.param_names()[2], "dense1.weight");
  EXPECT_EQ(m.param_names()[5], "dense2.bias");
  // conv 2x1x3x3 + 2, dense 18x5 + 5, dense 5x3 + 3
  EXPECT_EQ(m.param_count(), 18 + 2 + 90 + 5 + 15 + 3);
}

TEST(Model, UniformProbsAndTieRuleWithZeroFinalDense) {
  Model m = make_tiny_cnn();
  // zero the final dense layer: logits all zero, probs uniform, argmax -> 0
  auto& params = m.params();
  for (int64_t i = 0; i < params[4].numel(); ++i) params[4][i] = 0.0;
  for (int64_t i = 0; i < params[5].numel(); ++i) params[5][i] = 0.0;
  Rng rng(11);
  const auto pred = m.predict(testutil::random_tensor({1, 8, 8}, rng, 0.0, 1.0));
  ASSERT_EQ(pred.probs.numel(), 3);
  for (int64_t i = 0; i < 3; ++i) EXPECT_NEAR(pred.probs[i], 1.0 / 3.0, 1e-12);
  EXPECT_EQ(pred.label, 0);
}

TEST(Model, ProbsSumToOne) {
  const Model m = make_tiny_cnn(17);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto pred = m.predict(testutil::random_tensor({1, 8, 8}, rng, 0.0, 1.0));
    double s = 0.0;
    for (int64_t j = 0; j < pred.probs.numel(); ++j) s += pred.probs[j];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Model, PredictRejectsWrongInputShape) {
  const Model m = make_tiny_cnn();
  EXPECT_THROW(m.predict(Tensor({1, 7, 8})), gran::ShapeError);
}

TEST(Model, ArgmaxInvariantUnderPositiveLogitScaling) {
  const Model m = make_tiny_cnn(23);
  Rng rng(29);
  for (int i = 0; i < 30; ++i) {
    const Tensor x = testutil::random_tensor({1, 8, 8}, rng, 0.0, 1.0);
    Tape tape(false);
    const auto run = m.forward(tape, x);
    const Tensor logits = tape.value(run.logits).reshaped({3});
    for (const double c : {0.5, 2.0, 7.3}) {
      const Tensor scaled = gran::ops::softmax(gran::ops::scale(logits, c));
      EXPECT_EQ(gran::ops::argmax(scaled), m.predict(x).label);
    }
  }
}

TEST(CrossEntropy, CertainPredictionHasZeroLossAndZeroGradient) {
  // probs[y] == 1 -> loss 0; softmax-cross-entropy adjoint p - onehot(y) = 0
  EXPECT_DOUBLE_EQ(gran::cross_entropy_loss(Tensor({2}, {0.0, 1.0}), 1), 0.0);
  Tape tape;
  // logits far enough apart that softmax saturates to exactly (0, 1)
  const auto z = tape.leaf(Tensor({2}, {-900.0, 900.0}), true);
  const auto loss = tape.softmax_cross_entropy(z, 1);
  EXPECT_DOUBLE_EQ(tape.value(loss).item(), 0.0);
  const auto g = tape.backward(loss).at(z);
  EXPECT_DOUBLE_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(CrossEntropy, LabelOutOfRange) {
  EXPECT_THROW(gran::cross_entropy_loss(Tensor({2}, {0.5, 0.5}), 2), gran::ShapeError);
  EXPECT_THROW(gran::cross_entropy_loss(Tensor({2}, {0.5, 0.5}), -1), gran::ShapeError);
}

TEST(CrossEntropy, FloorsProbabilityBeforeLog) {
  const double loss = gran::cross_entropy_loss(Tensor({2}, {1.0, 0.0}), 1);
  EXPECT_NEAR(loss, -std::log(1e-12), 1e-9);
}

TEST(CrossEntropy, TapedLossMatchesProbsFormula) {
  const Model m = make_tiny_cnn(31);
  Rng rng(37);
  for (int i = 0; i < 10; ++i) {
    const Tensor x = testutil::random_tensor({1, 8, 8}, rng, 0.0, 1.0);
    const int y = static_cast<int>(rng.index(3));
    Tape tape;
    const auto run = m.forward(tape, x);
    const double taped = tape.value(tape.softmax_cross_entropy(run.logits, y)).item();
    const double direct = gran::cross_entropy_loss(m.predict(x).probs, y);
    EXPECT_NEAR(taped, direct, 1e-12);
  }
}

TEST(CrossEntropy, ModelLossGradientMatchesFiniteDifferences) {
  // random model and input: d loss / d theta checked against central
  // differences for every parameter tensor (MLP and CNN)
  for (const char* arch : {kTinyMlp, kTinyCnn}) {
    Model m = Model::init(ArchConfig::parse(arch), 47);
    Rng rng(53);
    const auto& shape = m.arch().input_shape;
    const Tensor x = testutil::random_tensor(shape, rng, 0.05, 0.95);
    const int y = 1;

    Tape tape;
    const auto run = m.forward(tape, x);
    const auto grads = tape.backward(tape.softmax_cross_entropy(run.logits, y));

    for (size_t t = 0; t < m.params().size(); ++t) {
      const Tensor fd = testutil::fd_gradient(
          [&](const Tensor& p) {
            Model probe = m;
            probe.params()[t] = p;
            return gran::cross_entropy_loss(probe.predict(x).probs, y);
          },
          m.params()[t]);
      ASSERT_TRUE(grads.count(run.param_ids[t]));
      EXPECT_LT(testutil::max_rel_err(grads.at(run.param_ids[t]), fd), 1e-4)
          << m.arch().name << " " << m.param_names()[t];
    }
  }
}

TEST(Model, ChecksumChangesWithParameters) {
  Model a = make_tiny_cnn(3);
  const Model b = make_tiny_cnn(4);
  EXPECT_NE(a.checksum(), b.checksum());
  const uint64_t before = a.checksum();
  a.params()[0][0] += 1e-9;
  EXPECT_NE(a.checksum(), before);
}
