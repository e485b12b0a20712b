#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "bdnn/gradient_check.hpp"
#include "bdnn/model_io.hpp"
#include "bdnn/network.hpp"
#include "bdnn/synthetic.hpp"
#include "bdnn/trainer.hpp"
#include "core/error.hpp"
#include "core/random.hpp"

using namespace ekey;
using namespace ekey::bdnn;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

Bitmap random_image(Rng& rng, std::uint32_t w = 32, std::uint32_t h = 32) {
  Bitmap b(w, h, 1);
  for (auto& p : b.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return b;
}

Tensor random_tensor(Rng& rng, Shape s) {
  Tensor t(s);
  for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

void randomize(NetworkModel& m, Rng& rng, double scale = 0.5) {
  for (auto& l : m.mutable_layers()) {
    for (auto& w : l.weights) w = rng.uniform(-scale, scale);
    for (auto& b : l.bias) b = rng.uniform(-scale, scale);
  }
}

// Input 1x2x3, identity 1x1 conv, Affine(128), Sigmoid, Affine(2), Softmax,
// with the weights used by tests/oracles/bdnn_toy_oracle.py.
NetworkModel toy_model() {
  NetworkModel m({1, 2, 3},
                 {Layer::conv(1, 1), Layer::affine(128), Layer::sigmoid(), Layer::affine(2),
                  Layer::softmax()},
                 1);
  auto& L = m.mutable_layers();
  L[0].weights = {1.0};
  L[0].bias = {0.0};
  for (int u = 0; u < 128; ++u) {
    for (int i = 0; i < 6; ++i) L[1].weights[u * 6 + i] = (((u * 7 + i * 3) % 11) - 5) / 8.0;
    L[1].bias[u] = ((u % 5) - 2) / 16.0;
  }
  for (int k = 0; k < 2; ++k)
    for (int u = 0; u < 128; ++u) L[3].weights[k * 128 + u] = (k == 0 ? 1 : -1) * ((u % 3) - 1) / 32.0;
  return m;
}

}  // namespace

TEST_CASE("default architecture has the documented shape") {
  const NetworkModel m = default_architecture();
  const auto& L = m.layers();
  REQUIRE(L.size() == 11);
  CHECK(L[0].type == LayerType::Conv);
  CHECK(L[0].out_shape == Shape{8, 32, 32});
  CHECK(L[2].out_shape == Shape{8, 16, 16});
  CHECK(L[5].out_shape == Shape{16, 8, 8});
  CHECK(m.key_layer_index() == 6);
  CHECK(L[6].units == 128);
  CHECK(L[7].type == LayerType::Sigmoid);
  CHECK(L[8].type == LayerType::Dropout);
  CHECK(L[8].rate == doctest::Approx(0.3));
  CHECK(L.back().type == LayerType::Softmax);
  CHECK(m.parameter_count() == (8 * 9 + 8) + (16 * 8 * 9 + 16) + (128 * 1024 + 128) + (2 * 128 + 2));
  CHECK_NOTHROW(m.validate_for_keying());
}

TEST_CASE("all-zero network outputs one half everywhere") {
  const NetworkModel m = default_architecture();
  Rng rng(1);
  const auto r = forward(m, random_image(rng));
  REQUIRE(r.key_activations.size() == 128);
  for (double a : r.key_activations) CHECK(a == 0.5);
  CHECK(r.class_probs[0] == 0.5);
  CHECK(r.class_probs[1] == 0.5);
  CHECK(to_hex(derive_key_bdnn(m, random_image(rng))) == std::string(32, 'f'));
}

TEST_CASE("toy network matches the hand-computed forward pass") {
  const NetworkModel m = toy_model();
  Bitmap img(3, 2, 1, std::vector<std::uint8_t>{0, 51, 102, 153, 204, 255});
  const auto r = forward(m, img);
  CHECK(r.key_activations[0] == doctest::Approx(0.41338242108266998).epsilon(1e-12));
  CHECK(r.key_activations[1] == doctest::Approx(0.39831281981714323).epsilon(1e-12));
  CHECK(r.key_activations[2] == doctest::Approx(0.51874121587853517).epsilon(1e-12));
  CHECK(r.key_activations[5] == doctest::Approx(0.39532091528599067).epsilon(1e-12));
  CHECK(r.key_activations[127] == doctest::Approx(0.53120937337375629).epsilon(1e-12));
  CHECK(r.class_probs[0] == doctest::Approx(0.49001383351223765).epsilon(1e-12));
  CHECK(r.class_probs[1] == doctest::Approx(0.50998616648776229).epsilon(1e-12));
  CHECK(to_hex(derive_key_bdnn(m, img)) == "2ba574ae85d2ba574ae95d0ba574ae95");
}

TEST_CASE("forward is deterministic and rejects mismatched shapes") {
  NetworkModel m = default_architecture();
  m.initialize(3);
  Rng rng(2);
  const Bitmap img = random_image(rng);
  const auto a = forward(m, img);
  const auto b = forward(m, img);
  CHECK(a.key_activations == b.key_activations);
  CHECK(a.class_probs == b.class_probs);
  CHECK(a.class_probs[0] + a.class_probs[1] == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : a.key_activations) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(code_of([&] { forward(m, random_image(rng, 31, 32)); }) == ErrorCode::Shape);
  CHECK(code_of([&] { forward(m, Bitmap(32, 32, 3)); }) == ErrorCode::Shape);
}

TEST_CASE("layer outputs respect their ranges") {
  NetworkModel m = default_architecture();
  m.initialize(17);
  Rng rng(5);
  Trace t;
  for (int n = 0; n < 5; ++n) {
    forward_pass(m, image_to_tensor(random_image(rng), m.input_shape()), Mode::Inference, nullptr, t);
    const auto& L = m.layers();
    for (std::size_t i = 0; i < L.size(); ++i) {
      const Tensor& in = i == 0 ? t.input : t.outputs[i - 1];
      const Tensor& out = t.outputs[i];
      if (L[i].type == LayerType::Relu) {
        for (double v : out.data) CHECK(v >= 0.0);
      } else if (L[i].type == LayerType::Pool) {
        for (std::uint32_t c = 0; c < out.shape.channels; ++c)
          for (std::uint32_t y = 0; y < out.shape.height; ++y)
            for (std::uint32_t x = 0; x < out.shape.width; ++x) {
              const double mx = std::max({in.at(c, 2 * y, 2 * x), in.at(c, 2 * y, 2 * x + 1),
                                          in.at(c, 2 * y + 1, 2 * x), in.at(c, 2 * y + 1, 2 * x + 1)});
              CHECK(out.at(c, y, x) == mx);
            }
      } else if (L[i].type == LayerType::Softmax) {
        CHECK(std::accumulate(out.data.begin(), out.data.end(), 0.0) ==
              doctest::Approx(1.0).epsilon(1e-6));
      } else if (L[i].type == LayerType::Dropout) {
        CHECK(out.data == in.data);
      }
    }
  }
}

TEST_CASE("bucketize thresholds inclusively") {
  std::vector<double> a(128, 0.2);
  a[0] = 0.995;
  a[1] = 0.998;
  a[2] = 0.0006;
  a[3] = 0.0001;
  const auto k = bucketize(a, {});
  CHECK(k.bit(0));
  CHECK(k.bit(1));
  CHECK_FALSE(k.bit(2));
  CHECK_FALSE(k.bit(3));

  CHECK(to_hex(bucketize(std::vector<double>(128, 0.5), {})) == std::string(32, 'f'));
  CHECK(to_hex(bucketize(std::vector<double>(128, 0.3), {0.3})) == std::string(32, 'f'));
  CHECK(code_of([] { bucketize(std::vector<double>(127, 0.5), {}); }) == ErrorCode::InvalidInput);

  Rng rng(6);
  for (int n = 0; n < 200; ++n) {
    std::vector<double> v(128);
    for (auto& x : v) x = rng.uniform();
    const double th = rng.uniform(0.05, 0.95);
    const auto key = bucketize(v, {th});
    for (std::size_t i = 0; i < 128; ++i) CHECK(key.bit(i) == (v[i] >= th));
  }
}

TEST_CASE("keying validation") {
  CHECK(code_of([] {
          NetworkModel({1, 4, 4}, {Layer::affine(128), Layer::relu(), Layer::affine(2), Layer::softmax()}, 0)
              .validate_for_keying();
        }) == ErrorCode::Format);
  CHECK(code_of([] {
          NetworkModel({1, 4, 4}, {Layer::affine(64), Layer::sigmoid(), Layer::affine(2), Layer::softmax()}, 0)
              .validate_for_keying();
        }) == ErrorCode::Format);
  CHECK(code_of([] {
          NetworkModel({1, 4, 4}, {Layer::affine(128), Layer::sigmoid(), Layer::affine(3), Layer::softmax()}, 0)
              .validate_for_keying();
        }) == ErrorCode::Format);
  CHECK(code_of([] {
          NetworkModel({1, 4, 4}, {Layer::affine(128), Layer::sigmoid(), Layer::affine(2)}, 1);
        }) == ErrorCode::Format);
}

TEST_CASE("gradient check on every layer type") {
  Rng rng(31);
  struct Case {
    Shape input;
    std::vector<Layer> layers;
    std::size_t key;
  };
  const std::vector<Case> cases = {
      {{1, 6, 6},
       {Layer::conv(2, 3, 1, 1), Layer::relu(), Layer::pool(), Layer::affine(5), Layer::sigmoid(),
        Layer::dropout(0.3), Layer::affine(2), Layer::softmax()},
       3},
      {{2, 5, 5},
       {Layer::conv(3, 2, 2, 1), Layer::relu(), Layer::affine(4), Layer::sigmoid(), Layer::affine(3),
        Layer::softmax(), Layer::affine(2), Layer::softmax()},
       2},
      {{1, 4, 4}, {Layer::affine(6), Layer::sigmoid(), Layer::affine(2), Layer::softmax()}, 0},
  };
  for (const auto& c : cases) {
    for (int rep = 0; rep < 4; ++rep) {
      NetworkModel m(c.input, c.layers, c.key);
      randomize(m, rng);
      const auto r = gradient_check(m, random_tensor(rng, c.input), rep % 2, 0.7, 100 + rep);
      CHECK(r.checked > 0);
      CHECK(r.max_relative_error <= 1e-4);
    }
  }
}

TEST_CASE("zero-weight model gives the analytic softmax gradient") {
  NetworkModel m({1, 3, 3}, {Layer::affine(4), Layer::sigmoid(), Layer::affine(2), Layer::softmax()}, 0);
  Rng rng(1);
  const Tensor x = random_tensor(rng, {1, 3, 3});
  for (int label : {0, 1}) {
    Trace t;
    forward_pass(m, x, Mode::Inference, nullptr, t);
    Gradients g(m);
    backward(m, t, label, 0.0, 1.0, g);
    // dL/dlogit = p - y with p = (1/2, 1/2); the final Affine bias sees it directly.
    CHECK(g.bias[2][0] == doctest::Approx(0.5 - (label == 0)));
    CHECK(g.bias[2][1] == doctest::Approx(0.5 - (label == 1)));
    // Its inputs are sigmoid(0) = 1/2.
    for (std::size_t u = 0; u < 4; ++u) CHECK(g.weights[2][u] == doctest::Approx(0.5 * (0.5 - (label == 0))));
    // Zero downstream weights and lambda = 0: nothing reaches the first layer.
    for (double v : g.weights[0]) CHECK(v == 0.0);
  }
}

TEST_CASE("backward is deterministic for a frozen input") {
  NetworkModel m = default_architecture();
  m.initialize(9);
  Rng rng(3);
  const Tensor x = image_to_tensor(random_image(rng), m.input_shape());
  Trace t;
  forward_pass(m, x, Mode::Inference, nullptr, t);
  Gradients a(m), b(m);
  backward(m, t, 1, 1.0, 1.0, a);
  backward(m, t, 1, 1.0, 1.0, b);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
  CHECK(a.input.data == b.input.data);
}

TEST_CASE("null update leaves the initialization untouched") {
  const auto data = synthetic_shapes(8, 8, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.learning_rate = 0.0;
  cfg.binarization_lambda = 0.0;
  cfg.seed = 77;
  const NetworkModel trained = train(data, cfg);
  NetworkModel init = default_architecture(cfg.dropout_rate);
  init.initialize(77);
  CHECK(trained == init);
}

TEST_CASE("training rejects degenerate sets") {
  auto data = synthetic_shapes(6, 0, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK(code_of([&] { train(data, cfg); }) == ErrorCode::Training);
  data.push_back(AttributeSample::text("nope", Label::Negative));
  CHECK(code_of([&] { train(data, cfg); }) == ErrorCode::InvalidInput);
  cfg.batch_size = 0;
  CHECK(code_of([&] { train(synthetic_shapes(6, 6, 1), cfg); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("bright versus dark images separate after a short run") {
  Rng rng(14);
  auto make = [&](std::size_t n) {
    std::vector<AttributeSample> out;
    for (std::size_t i = 0; i < n; ++i) {
      const bool bright = i % 2 == 0;
      Bitmap b(32, 32, 1);
      for (auto& p : b.pixels) {
        const int base = bright ? 170 : 60;
        p = static_cast<std::uint8_t>(base + static_cast<int>(rng.below(60)) - 30);
      }
      out.push_back(AttributeSample::from_image(b, bright ? Label::Positive : Label::Negative));
    }
    return out;
  };
  const auto train_set = make(60);
  const auto test_set = make(100);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 5;
  const NetworkModel m = train(train_set, cfg);
  std::size_t correct = 0;
  for (const auto& s : test_set) {
    const auto r = forward(m, s.image);
    if ((r.class_probs[1] >= r.class_probs[0]) == (s.label == Label::Positive)) ++correct;
  }
  CHECK(static_cast<double>(correct) / test_set.size() > 0.95);
}

TEST_CASE("training is seed-deterministic") {
  const auto data = synthetic_shapes(10, 10, 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 8;
  std::vector<EpochStats> seen;
  const NetworkModel a = train(data, cfg, [&](const EpochStats& s) { seen.push_back(s); });
  const NetworkModel b = train(data, cfg);
  CHECK(a == b);
  REQUIRE(seen.size() == 2);
  CHECK(seen[1].epoch == 2);
  cfg.seed = 9;
  CHECK_FALSE(train(data, cfg) == a);
}

TEST_CASE("model file round trip is exact") {
  NetworkModel m = default_architecture(0.25);
  m.initialize(4);
  const auto bytes = serialize_model(m);
  CHECK(bytes.size() < 2u * 1024 * 1024);
  CHECK(bytes.size() == 4 + 4 + 12 + 4 + 4 + 4 + 11 * 17 + 4 * 4 * 2 + m.parameter_count() * 4 + 4);
  const NetworkModel back = deserialize_model(bytes);
  CHECK(back == m);
  CHECK(serialize_model(back) == bytes);
  Rng rng(1);
  const Bitmap img = random_image(rng);
  const auto a = forward(m, img);
  const auto b = forward(back, img);
  CHECK(a.key_activations == b.key_activations);
  CHECK(a.class_probs == b.class_probs);

  const auto path = std::filesystem::temp_directory_path() / "ekey_test_model.bdnn";
  save_model(m, path);
  CHECK(load_model(path) == m);
  std::filesystem::remove(path);
}

TEST_CASE("model file corruption is detected") {
  NetworkModel m = default_architecture();
  m.initialize(4);
  const auto bytes = serialize_model(m);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 100);
  CHECK(code_of([&] { deserialize_model(truncated); }) == ErrorCode::Checksum);
  CHECK(code_of([&] { deserialize_model(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 6)); }) ==
        ErrorCode::Checksum);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 1;
  CHECK(code_of([&] { deserialize_model(flipped); }) == ErrorCode::Checksum);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK(code_of([&] { deserialize_model(magic); }) == ErrorCode::Format);

  CHECK(code_of([] { load_model("/nonexistent/ekey/model.bdnn"); }) == ErrorCode::Io);
}

TEST_CASE("B-DNN discriminator emits a key for every well-shaped image") {
  NetworkModel m = default_architecture();
  m.initialize(2);
  BdnnDiscriminator d(m);
  CHECK(d.key_width() == 128);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto k = d.derive(AttributeSample::from_image(random_image(rng)));
    CHECK(k.width() == 128);
    CHECK(k.discriminator() == DiscriminatorId::BDNN);
  }
  CHECK(code_of([&] { d.derive(AttributeSample::text("x")); }) == ErrorCode::InvalidInput);
}

TEST_CASE("synthetic corpus is reproducible") {
  const auto a = synthetic_shapes(5, 7, 10);
  const auto b = synthetic_shapes(5, 7, 10);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].image == b[i].image);
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].image.width == 32);
  }
  CHECK_FALSE(synthetic_shapes(5, 7, 11)[0].image == a[0].image);
}
