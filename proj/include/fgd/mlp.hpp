#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fgd/optimizer.hpp"

namespace fgd {

/// Labeled samples: one feature row per sample.
struct Dataset {
  Matrix features;          // N x d
  std::vector<int> labels;  // N class indices
};

/// Two interleaved half-circles with Gaussian noise, centered at the origin.
Dataset make_two_moons(std::size_t count, double noise, std::uint64_t seed);

/// Plain text export: feature columns then the label, comma separated.
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

/// input -> dense (orthonormal columns) -> tanh -> dense -> softmax.
/// Weight shapes keep n >= p on the orthogonal layer.
struct MlpModel {
  Matrix w_hidden;  // h x d, orthogonal
  Matrix b_hidden;  // h x 1
  Matrix w_out;     // c x h
  Matrix b_out;     // c x 1

  // Orthonormal hidden weights, zero biases, zero output layer (so the
  // initial loss of balanced two-class data is exactly ln 2).
  static MlpModel init(std::size_t d, std::size_t h, std::size_t c,
                       std::uint64_t seed);
};

struct MlpGradients {
  Matrix w_hidden, b_hidden, w_out, b_out;
};

double mlp_loss(const MlpModel& m, const Dataset& batch);
std::pair<double, MlpGradients> mlp_loss_and_grad(const MlpModel& m,
                                                  const Dataset& batch);
double mlp_accuracy(const MlpModel& m, const Dataset& data);

/// Parameter groups in the fixed order (w_hidden, b_hidden, w_out, b_out).
/// When orthogonal_hidden is set the hidden weights get the feedback update
/// (phi seeded from the batch gradient); otherwise every group is euclidean.
std::vector<ParamGroup> mlp_param_groups(const MlpModel& m, const Dataset& train,
                                         bool orthogonal_hidden);

/// Joint gradient provider over the group order above, full batch.
MultiGradProvider mlp_grad_provider(const Dataset& train);

MlpModel model_from_groups(const std::vector<ParamGroup>& groups);

/// Binary model file: magic "FGDM", version, then per parameter a kind tag,
/// name, dimensions, and row-major doubles (little-endian throughout).
void save_mlp_model(const MlpModel& m, const std::filesystem::path& path);
MlpModel load_mlp_model(const std::filesystem::path& path);

}  // namespace fgd
