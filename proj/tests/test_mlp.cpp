#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fgd/mlp.hpp"
#include "fgd/numdiff.hpp"
#include "test_util.hpp"

using namespace fgd;
using test::bit_equal;

namespace {

Dataset head(const Dataset& ds, std::size_t k) {
  Dataset out;
  out.features = Matrix(k, ds.features.cols());
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < ds.features.cols(); ++j)
      out.features(i, j) = ds.features(i, j);
  return out;
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("two moons generation is deterministic and balanced") {
  const Dataset a = make_two_moons(100, 0.1, 5);
  const Dataset b = make_two_moons(100, 0.1, 5);
  CHECK(bit_equal(a.features, b.features));
  CHECK(a.labels == b.labels);

  int ones = 0;
  for (int label : a.labels) ones += label;
  CHECK(ones == 50);

  const Dataset c = make_two_moons(100, 0.1, 6);
  CHECK_FALSE(bit_equal(a.features, c.features));
}

TEST_CASE("dataset export writes one line per sample") {
  const Dataset ds = make_two_moons(20, 0.1, 1);
  const auto path = std::filesystem::temp_directory_path() / "fgd_test_moons.csv";
  write_dataset_csv(ds, path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 20);
  std::filesystem::remove(path);
}

TEST_CASE("zero output layer gives exactly ln 2 on balanced two-class data") {
  const Dataset ds = make_two_moons(64, 0.1, 2);
  const MlpModel m = MlpModel::init(2, 8, 2, 3);
  CHECK(mlp_loss(m, ds) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(stiefel_distance(m.w_hidden) <= 1e-12);
}

TEST_CASE("backward pass matches finite differences on a micro-batch") {
  const Dataset micro = head(make_two_moons(16, 0.1, 4), 3);
  MlpModel m = MlpModel::init(2, 6, 2, 5);
  // non-trivial output layer so every gradient path is exercised
  Rng rng(6);
  m.w_out = 0.5 * random_matrix(2, 6, rng);
  m.b_out = 0.1 * random_matrix(2, 1, rng);
  m.b_hidden = 0.1 * random_matrix(6, 1, rng);

  const auto [loss, g] = mlp_loss_and_grad(m, micro);
  CHECK(loss > 0.0);

  auto loss_with = [&](const char* which, const Matrix& value) {
    MlpModel probe = m;
    if (std::string(which) == "w_hidden") probe.w_hidden = value;
    else if (std::string(which) == "b_hidden") probe.b_hidden = value;
    else if (std::string(which) == "w_out") probe.w_out = value;
    else probe.b_out = value;
    return mlp_loss(probe, micro);
  };

  const double h = 1e-5;
  CHECK(relative_gap(g.w_hidden, fd_gradient([&](const Matrix& x) {
          return loss_with("w_hidden", x);
        }, m.w_hidden, h)) <= 1e-4);
  CHECK(relative_gap(g.b_hidden, fd_gradient([&](const Matrix& x) {
          return loss_with("b_hidden", x);
        }, m.b_hidden, h)) <= 1e-4);
  CHECK(relative_gap(g.w_out, fd_gradient([&](const Matrix& x) {
          return loss_with("w_out", x);
        }, m.w_out, h)) <= 1e-4);
  CHECK(relative_gap(g.b_out, fd_gradient([&](const Matrix& x) {
          return loss_with("b_out", x);
        }, m.b_out, h)) <= 1e-4);
}

TEST_CASE("parameter groups and the joint gradient provider line up") {
  const Dataset train = make_two_moons(32, 0.1, 7);
  const MlpModel m = MlpModel::init(2, 6, 2, 8);
  const auto groups = mlp_param_groups(m, train, true);
  REQUIRE(groups.size() == 4);
  CHECK(groups[0].kind == ParamKind::orthogonal);
  CHECK(tangency_residual(groups[0].state) <= 1e-10);

  const MultiGradProvider provider = mlp_grad_provider(train);
  std::vector<Matrix> values;
  for (const auto& g : groups) values.push_back(g.state.theta);
  const auto grads = provider(values);
  REQUIRE(grads.size() == 4);
  const auto [loss, direct] = mlp_loss_and_grad(m, train);
  CHECK(bit_equal(grads[0], direct.w_hidden));
  CHECK(bit_equal(grads[2], direct.w_out));
}

TEST_CASE("model file round-trips bit-exactly") {
  MlpModel m = MlpModel::init(2, 6, 2, 9);
  Rng rng(10);
  m.w_out = random_matrix(2, 6, rng);
  m.b_out = random_matrix(2, 1, rng);
  const auto path = std::filesystem::temp_directory_path() / "fgd_test_model.bin";
  save_mlp_model(m, path);
  const MlpModel r = load_mlp_model(path);
  CHECK(bit_equal(r.w_hidden, m.w_hidden));
  CHECK(bit_equal(r.b_hidden, m.b_hidden));
  CHECK(bit_equal(r.w_out, m.w_out));
  CHECK(bit_equal(r.b_out, m.b_out));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_mlp_model(path), Error);
}

}  // TEST_SUITE
