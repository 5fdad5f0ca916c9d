#include "fgd/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace fgd {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Dataset make_two_moons(std::size_t count, double noise, std::uint64_t seed) {
  if (count == 0) throw Error("make_two_moons: count must be positive");
  const double radius = 3.0;  // arc radius; keeps tanh units out of their
                              // linear range under unit-norm weight columns
  Rng rng(seed);
  Dataset ds;
  ds.features = Matrix(count, 2);
  ds.labels.resize(count);
  // Moon 0: upper arc. Moon 1: its point reflection through the midpoint.
  // Both recentered so the dataset is origin-centered.
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % 2);
    const double t = kPi * rng.uniform();
    double x, y;
    if (label == 0) {
      x = radius * std::cos(t);
      y = radius * std::sin(t);
    } else {
      x = radius * (1.0 - std::cos(t));
      y = radius * 0.5 - radius * std::sin(t);
    }
    x += noise * rng.normal() - radius * 0.5;
    y += noise * rng.normal() - radius * 0.25;
    ds.features(i, 0) = x;
    ds.features(i, 1) = y;
    ds.labels[i] = label;
  }
  return ds;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_dataset_csv: cannot open " + path.string());
  char buf[64];
  for (std::size_t i = 0; i < ds.features.rows(); ++i) {
    for (std::size_t j = 0; j < ds.features.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, j));
      out << buf << ',';
    }
    out << ds.labels[i] << '\n';
  }
}

MlpModel MlpModel::init(std::size_t d, std::size_t h, std::size_t c,
                        std::uint64_t seed) {
  if (h < d) {
    throw DimensionError("MlpModel::init: hidden width " + std::to_string(h) +
                         " must be >= input dim " + std::to_string(d) +
                         " for the orthogonal layer");
  }
  MlpModel m;
  m.w_hidden = random_orthonormal(h, d, seed);
  m.b_hidden = Matrix(h, 1);
  m.w_out = Matrix(c, h);
  m.b_out = Matrix(c, 1);
  return m;
}

namespace {

struct ForwardPass {
  Matrix hidden;  // N x h, tanh activations
  Matrix probs;   // N x c, softmax rows
  double loss = 0.0;
};

ForwardPass forward(const MlpModel& m, const Dataset& batch) {
  const std::size_t n = batch.features.rows();
  const std::size_t c = m.w_out.rows();
  ForwardPass fp;
  Matrix z = matmul(batch.features, m.w_hidden.transpose());  // N x h
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < z.cols(); ++j)
      z(i, j) = std::tanh(z(i, j) + m.b_hidden(j, 0));
  fp.hidden = std::move(z);
  Matrix logits = matmul(fp.hidden, m.w_out.transpose());  // N x c
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double maxv = -1e300;
    for (std::size_t j = 0; j < c; ++j) {
      logits(i, j) += m.b_out(j, 0);
      maxv = std::max(maxv, logits(i, j));
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) denom += std::exp(logits(i, j) - maxv);
    const int y = batch.labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw Error("forward: label " + std::to_string(y) + " out of range");
    }
    loss -= (logits(i, y) - maxv) - std::log(denom);
    for (std::size_t j = 0; j < c; ++j)
      logits(i, j) = std::exp(logits(i, j) - maxv) / denom;
  }
  fp.probs = std::move(logits);
  fp.loss = loss / static_cast<double>(n);
  return fp;
}

}  // namespace

double mlp_loss(const MlpModel& m, const Dataset& batch) {
  return forward(m, batch).loss;
}

std::pair<double, MlpGradients> mlp_loss_and_grad(const MlpModel& m,
                                                  const Dataset& batch) {
  const std::size_t n = batch.features.rows();
  ForwardPass fp = forward(m, batch);

  // dL/dlogits = (softmax - onehot)/N
  Matrix dlogits = fp.probs;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    dlogits(i, batch.labels[i]) -= 1.0;
    for (std::size_t j = 0; j < dlogits.cols(); ++j) dlogits(i, j) *= inv_n;
  }

  MlpGradients g;
  g.w_out = matmul(dlogits.transpose(), fp.hidden);  // c x h
  g.b_out = Matrix(m.b_out.rows(), 1);
  for (std::size_t j = 0; j < dlogits.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += dlogits(i, j);
    g.b_out(j, 0) = s;
  }

  Matrix dhidden = matmul(dlogits, m.w_out);  // N x h
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dhidden.cols(); ++j)
      dhidden(i, j) *= 1.0 - fp.hidden(i, j) * fp.hidden(i, j);

  g.w_hidden = matmul(dhidden.transpose(), batch.features);  // h x d
  g.b_hidden = Matrix(m.b_hidden.rows(), 1);
  for (std::size_t j = 0; j < dhidden.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += dhidden(i, j);
    g.b_hidden(j, 0) = s;
  }
  return {fp.loss, std::move(g)};
}

double mlp_accuracy(const MlpModel& m, const Dataset& data) {
  const ForwardPass fp = forward(m, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.features.rows(); ++i) {
    std::size_t argmax = 0;
    for (std::size_t j = 1; j < fp.probs.cols(); ++j)
      if (fp.probs(i, j) > fp.probs(i, argmax)) argmax = j;
    if (static_cast<int>(argmax) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.features.rows());
}

std::vector<ParamGroup> mlp_param_groups(const MlpModel& m, const Dataset& train,
                                         bool orthogonal_hidden) {
  const auto [loss, g] = mlp_loss_and_grad(m, train);
  (void)loss;
  std::vector<ParamGroup> groups;
  groups.reserve(4);
  if (orthogonal_hidden) {
    groups.push_back(
        {ParamKind::orthogonal, fgd_init(m.w_hidden, g.w_hidden), std::nullopt});
  } else {
    groups.push_back({ParamKind::euclidean,
                      State(m.w_hidden, -1.0 * g.w_hidden), std::nullopt});
  }
  groups.push_back({ParamKind::euclidean,
                    State(m.b_hidden, -1.0 * g.b_hidden), std::nullopt});
  groups.push_back({ParamKind::euclidean, State(m.w_out, -1.0 * g.w_out),
                    std::nullopt});
  groups.push_back({ParamKind::euclidean, State(m.b_out, -1.0 * g.b_out),
                    std::nullopt});
  return groups;
}

MultiGradProvider mlp_grad_provider(const Dataset& train) {
  return [train](const std::vector<Matrix>& values) {
    if (values.size() != 4) {
      throw DimensionError("mlp_grad_provider: expected 4 parameter values");
    }
    MlpModel m;
    m.w_hidden = values[0];
    m.b_hidden = values[1];
    m.w_out = values[2];
    m.b_out = values[3];
    auto [loss, g] = mlp_loss_and_grad(m, train);
    (void)loss;
    std::vector<Matrix> out;
    out.reserve(4);
    out.push_back(std::move(g.w_hidden));
    out.push_back(std::move(g.b_hidden));
    out.push_back(std::move(g.w_out));
    out.push_back(std::move(g.b_out));
    return out;
  };
}

MlpModel model_from_groups(const std::vector<ParamGroup>& groups) {
  if (groups.size() != 4) {
    throw DimensionError("model_from_groups: expected 4 groups, got " +
                         std::to_string(groups.size()));
  }
  MlpModel m;
  m.w_hidden = groups[0].state.theta;
  m.b_hidden = groups[1].state.theta;
  m.w_out = groups[2].state.theta;
  m.b_out = groups[3].state.theta;
  return m;
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_param(std::ofstream& out, const Matrix& m, std::uint8_t kind,
                 const std::string& name) {
  out.write(reinterpret_cast<const char*>(&kind), 1);
  write_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u64(out, m.rows());
  write_u64(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.rows() * m.cols() * sizeof(double)));
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

Matrix read_param(std::ifstream& in, std::string& name, std::uint8_t& kind) {
  in.read(reinterpret_cast<char*>(&kind), 1);
  const std::uint32_t name_len = read_u32(in);
  name.resize(name_len);
  in.read(name.data(), name_len);
  const std::uint64_t rows = read_u64(in);
  const std::uint64_t cols = read_u64(in);
  if (!in || rows == 0 || cols == 0 || rows > 1'000'000 || cols > 1'000'000) {
    throw Error("load_mlp_model: corrupt parameter header");
  }
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(rows * cols * sizeof(double)));
  if (!in) throw Error("load_mlp_model: truncated parameter data");
  return m;
}

}  // namespace

void save_mlp_model(const MlpModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_mlp_model: cannot open " + path.string());
  out.write("FGDM", 4);
  write_u32(out, 1);  // version
  write_u32(out, 4);  // parameter count
  write_param(out, m.w_hidden, 0, "w_hidden");
  write_param(out, m.b_hidden, 1, "b_hidden");
  write_param(out, m.w_out, 1, "w_out");
  write_param(out, m.b_out, 1, "b_out");
  if (!out) throw Error("save_mlp_model: write failed for " + path.string());
}

MlpModel load_mlp_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_mlp_model: cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (std::memcmp(magic, "FGDM", 4) != 0) {
    throw Error("load_mlp_model: bad magic in " + path.string());
  }
  const std::uint32_t version = read_u32(in);
  if (version != 1) {
    throw Error("load_mlp_model: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = read_u32(in);
  if (count != 4) {
    throw Error("load_mlp_model: expected 4 parameters, found " +
                std::to_string(count));
  }
  MlpModel m;
  std::string name;
  std::uint8_t kind = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    Matrix mat = read_param(in, name, kind);
    if (name == "w_hidden") m.w_hidden = std::move(mat);
    else if (name == "b_hidden") m.b_hidden = std::move(mat);
    else if (name == "w_out") m.w_out = std::move(mat);
    else if (name == "b_out") m.b_out = std::move(mat);
    else throw Error("load_mlp_model: unknown parameter '" + name + "'");
  }
  return m;
}

}  // namespace fgd
