#include "miaudit/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "miaudit/rng.hpp"

namespace miaudit {

const char* arch_name(Arch a) {
  switch (a) {
    case Arch::kGcn2: return "gcn2";
    case Arch::kLinear: return "linear";
    case Arch::kMlp1: return "mlp1";
  }
  return "?";
}

Arch parse_arch(const std::string& name) {
  if (name == "gcn2") return Arch::kGcn2;
  if (name == "linear") return Arch::kLinear;
  if (name == "mlp1") return Arch::kMlp1;
  throw std::invalid_argument("unknown arch: " + name);
}

void ModelParams::check_shapes() const {
  bool ok;
  if (arch == Arch::kLinear) {
    ok = w0.rows == input_dim && w0.cols == num_classes &&
         static_cast<int>(b0.size()) == num_classes && hidden_dim == 0;
  } else {
    ok = w0.rows == input_dim && w0.cols == hidden_dim && w1.rows == hidden_dim &&
         w1.cols == num_classes && static_cast<int>(b0.size()) == hidden_dim &&
         static_cast<int>(b1.size()) == num_classes;
  }
  if (!ok) throw std::invalid_argument("model params: inconsistent shapes");
  for (double x : w0.data)
    if (!std::isfinite(x)) throw std::invalid_argument("model params: non-finite weight");
  for (double x : w1.data)
    if (!std::isfinite(x)) throw std::invalid_argument("model params: non-finite weight");
}

namespace {

Matrix glorot(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  double limit = std::sqrt(6.0 / (rows + cols));
  for (double& x : m.data) x = (2.0 * rng.next_double() - 1.0) * limit;
  return m;
}

}  // namespace

ModelParams init_params(Arch arch, int input_dim, int num_classes, int hidden, uint64_t seed) {
  if (input_dim <= 0 || num_classes <= 0) throw std::invalid_argument("init_params: bad dims");
  Rng rng(seed, 0);
  ModelParams p;
  p.arch = arch;
  p.input_dim = input_dim;
  p.num_classes = num_classes;
  if (arch == Arch::kLinear) {
    p.hidden_dim = 0;
    p.w0 = glorot(input_dim, num_classes, rng);
    p.b0.assign(static_cast<size_t>(num_classes), 0.0);
  } else {
    if (hidden <= 0) throw std::invalid_argument("init_params: hidden must be positive");
    p.hidden_dim = hidden;
    p.w0 = glorot(input_dim, hidden, rng);
    p.b0.assign(static_cast<size_t>(hidden), 0.0);
    p.w1 = glorot(hidden, num_classes, rng);
    p.b1.assign(static_cast<size_t>(num_classes), 0.0);
  }
  return p;
}

PropagationMatrix::PropagationMatrix(const MaskedAdjacency& a) {
  n_ = a.num_nodes();
  offsets_.assign(static_cast<size_t>(n_) + 1, 0);
  std::vector<double> inv_sqrt_deg(static_cast<size_t>(n_));
  for (int u = 0; u < n_; ++u)
    inv_sqrt_deg[static_cast<size_t>(u)] = 1.0 / std::sqrt(1.0 + a.degree(u));
  for (int u = 0; u < n_; ++u) offsets_[static_cast<size_t>(u) + 1] = offsets_[static_cast<size_t>(u)] + a.degree(u) + 1;
  entries_.resize(static_cast<size_t>(offsets_[static_cast<size_t>(n_)]));
  for (int u = 0; u < n_; ++u) {
    size_t at = static_cast<size_t>(offsets_[static_cast<size_t>(u)]);
    bool self_placed = false;
    double su = inv_sqrt_deg[static_cast<size_t>(u)];
    for (int w : a.neighbors(u)) {
      if (!self_placed && u < w) {
        entries_[at++] = {u, su * su};
        self_placed = true;
      }
      entries_[at++] = {w, su * inv_sqrt_deg[static_cast<size_t>(w)]};
    }
    if (!self_placed) entries_[at++] = {u, su * su};
  }
}

PropagationMatrix PropagationMatrix::identity(int n) {
  PropagationMatrix p;
  p.n_ = n;
  p.offsets_.resize(static_cast<size_t>(n) + 1);
  p.entries_.resize(static_cast<size_t>(n));
  for (int u = 0; u < n; ++u) {
    p.offsets_[static_cast<size_t>(u)] = u;
    p.entries_[static_cast<size_t>(u)] = {u, 1.0};
  }
  p.offsets_[static_cast<size_t>(n)] = n;
  return p;
}

Matrix PropagationMatrix::propagate(const Matrix& m) const {
  if (m.rows != n_) throw std::invalid_argument("propagate: row count mismatch");
  Matrix out(m.rows, m.cols);
  for (int u = 0; u < n_; ++u) {
    double* orow = out.data.data() + static_cast<size_t>(u) * m.cols;
    for (const Entry& e : row(u)) {
      const double* mrow = m.data.data() + static_cast<size_t>(e.node) * m.cols;
      for (int j = 0; j < m.cols; ++j) orow[j] += e.coef * mrow[j];
    }
  }
  return out;
}

double nll_loss(std::span<const double> prob_row, int label) {
  if (label < 0 || label >= static_cast<int>(prob_row.size()))
    throw std::invalid_argument("nll_loss: label out of range");
  double p = prob_row[static_cast<size_t>(label)];
  return -std::log(std::max(p, 1e-30));
}

namespace {

void softmax_inplace(std::span<double> z) {
  double m = z[0];
  for (double x : z) m = std::max(m, x);
  double s = 0.0;
  for (double& x : z) {
    x = std::exp(x - m);
    s += x;
  }
  for (double& x : z) x /= s;
}

std::vector<double> dot_rows(std::span<const double> x, const Matrix& w,
                             std::span<const double> bias) {
  std::vector<double> out(bias.begin(), bias.end());
  for (int k = 0; k < w.rows; ++k) {
    double xk = x[static_cast<size_t>(k)];
    const double* wrow = w.data.data() + static_cast<size_t>(k) * w.cols;
    for (int j = 0; j < w.cols; ++j) out[static_cast<size_t>(j)] += xk * wrow[j];
  }
  return out;
}

}  // namespace

NodeLossEvaluator::NodeLossEvaluator(const ModelParams& params, const Matrix& features)
    : params_(params), feats_(features) {
  if (features.cols != params.input_dim)
    throw std::invalid_argument("evaluator: feature dim mismatch");
  if (params.arch == Arch::kGcn2) {
    xw0_cache_ = Matrix(features.rows, params.hidden_dim);
    xw0_ready_.assign(static_cast<size_t>(features.rows), 0);
  }
}

std::span<const double> NodeLossEvaluator::xw0_row(int z) {
  if (!xw0_ready_[static_cast<size_t>(z)]) {
    std::span<double> dst = xw0_cache_.row(z);
    std::span<const double> x = feats_.row(z);
    for (int j = 0; j < params_.hidden_dim; ++j) dst[static_cast<size_t>(j)] = 0.0;
    for (int k = 0; k < params_.input_dim; ++k) {
      double xk = x[static_cast<size_t>(k)];
      const double* wrow = params_.w0.data.data() + static_cast<size_t>(k) * params_.w0.cols;
      for (int j = 0; j < params_.hidden_dim; ++j) dst[static_cast<size_t>(j)] += xk * wrow[j];
    }
    xw0_ready_[static_cast<size_t>(z)] = 1;
  }
  return xw0_cache_.row(z);
}

std::vector<double> NodeLossEvaluator::hidden_row(const PropagationMatrix* prop, int w) {
  std::vector<double> h(params_.b0.begin(), params_.b0.end());
  for (const PropagationMatrix::Entry& e : prop->row(w)) {
    std::span<const double> src = xw0_row(e.node);
    for (int j = 0; j < params_.hidden_dim; ++j) h[static_cast<size_t>(j)] += e.coef * src[static_cast<size_t>(j)];
  }
  for (double& x : h) x = std::max(x, 0.0);
  return h;
}

std::vector<double> NodeLossEvaluator::logits_row(const PropagationMatrix* prop, int v) {
  switch (params_.arch) {
    case Arch::kLinear:
      return dot_rows(feats_.row(v), params_.w0, params_.b0);
    case Arch::kMlp1: {
      // bias added after the dot product, mirroring the gcn2 order so the
      // edgeless reduction is bit exact
      std::vector<double> t(static_cast<size_t>(params_.hidden_dim), 0.0);
      std::span<const double> x = feats_.row(v);
      for (int k = 0; k < params_.input_dim; ++k) {
        double xk = x[static_cast<size_t>(k)];
        const double* wrow = params_.w0.data.data() + static_cast<size_t>(k) * params_.w0.cols;
        for (int j = 0; j < params_.hidden_dim; ++j) t[static_cast<size_t>(j)] += xk * wrow[j];
      }
      for (int j = 0; j < params_.hidden_dim; ++j)
        t[static_cast<size_t>(j)] = std::max(params_.b0[static_cast<size_t>(j)] + t[static_cast<size_t>(j)], 0.0);
      return dot_rows(t, params_.w1, params_.b1);
    }
    case Arch::kGcn2: {
      if (prop == nullptr) throw std::invalid_argument("gcn2 forward needs a propagation operator");
      std::vector<double> agg(static_cast<size_t>(params_.hidden_dim), 0.0);
      for (const PropagationMatrix::Entry& e : prop->row(v)) {
        std::vector<double> h = hidden_row(prop, e.node);
        for (int j = 0; j < params_.hidden_dim; ++j) agg[static_cast<size_t>(j)] += e.coef * h[static_cast<size_t>(j)];
      }
      return dot_rows(agg, params_.w1, params_.b1);
    }
  }
  throw std::logic_error("unreachable");
}

Matrix NodeLossEvaluator::probs(const PropagationMatrix* prop, std::span<const int> nodes) {
  Matrix out(static_cast<int>(nodes.size()), params_.num_classes);
  for (size_t i = 0; i < nodes.size(); ++i) {
    std::vector<double> z = logits_row(prop, nodes[i]);
    softmax_inplace(z);
    std::copy(z.begin(), z.end(), out.row(static_cast<int>(i)).begin());
  }
  return out;
}

std::vector<double> NodeLossEvaluator::losses(const PropagationMatrix* prop,
                                              std::span<const int> nodes,
                                              const std::vector<int>& labels) {
  std::vector<double> out(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) out[i] = loss(prop, nodes[i], labels[static_cast<size_t>(nodes[i])]);
  return out;
}

double NodeLossEvaluator::loss(const PropagationMatrix* prop, int v, int label) {
  std::vector<double> z = logits_row(prop, v);
  softmax_inplace(z);
  return nll_loss(z, label);
}

Matrix forward_probs(const ModelParams& params, const Matrix& features,
                     const PropagationMatrix* prop) {
  NodeLossEvaluator eval(params, features);
  std::vector<int> all(static_cast<size_t>(features.rows));
  for (int v = 0; v < features.rows; ++v) all[static_cast<size_t>(v)] = v;
  return eval.probs(prop, all);
}

std::vector<double> per_node_losses(const ModelParams& params, const Graph& g,
                                    const MaskedAdjacency& a, std::span<const int> nodes) {
  for (int v : nodes)
    if (v < 0 || v >= g.n) throw std::invalid_argument("per_node_losses: node out of range");
  NodeLossEvaluator eval(params, g.features);
  if (params.arch == Arch::kGcn2) {
    PropagationMatrix prop(a);
    return eval.losses(&prop, nodes, g.labels);
  }
  return eval.losses(nullptr, nodes, g.labels);
}

namespace {

struct ForwardState {
  Matrix z1;      // pre-activation of layer 0 (gcn2/mlp1)
  Matrix h1;      // relu(z1)
  Matrix h1_agg;  // propagated h1 (gcn2) or h1 itself
  Matrix probs;   // softmax rows
};

// Training-path forward over all nodes; keeps intermediates for backprop.
ForwardState full_forward(const ModelParams& p, const Matrix& x, const PropagationMatrix* prop) {
  ForwardState s;
  if (p.arch == Arch::kLinear) {
    s.probs = matmul(x, p.w0);
    add_row_broadcast(s.probs, p.b0);
  } else {
    Matrix xw0 = matmul(x, p.w0);
    s.z1 = (p.arch == Arch::kGcn2) ? prop->propagate(xw0) : std::move(xw0);
    add_row_broadcast(s.z1, p.b0);
    s.h1 = s.z1;
    for (double& v : s.h1.data) v = std::max(v, 0.0);
    s.h1_agg = (p.arch == Arch::kGcn2) ? prop->propagate(s.h1) : s.h1;
    s.probs = matmul(s.h1_agg, p.w1);
    add_row_broadcast(s.probs, p.b1);
  }
  for (int v = 0; v < s.probs.rows; ++v) softmax_inplace(s.probs.row(v));
  return s;
}

double decay_term(const ModelParams& p, double wd) {
  if (wd == 0.0) return 0.0;
  double ss = 0.0;
  for (double v : p.w0.data) ss += v * v;
  for (double v : p.w1.data) ss += v * v;
  for (double v : p.b0) ss += v * v;
  for (double v : p.b1) ss += v * v;
  return 0.5 * wd * ss;
}

}  // namespace

double training_loss(const ModelParams& params, const Graph& g, const PropagationMatrix* prop,
                     const MembershipMask& members, double weight_decay) {
  ForwardState s = full_forward(params, g.features, prop);
  double total = 0.0;
  for (int v = 0; v < g.n; ++v)
    if (members.test(v)) total += nll_loss(s.probs.row(v), g.labels[static_cast<size_t>(v)]);
  return total + decay_term(params, weight_decay);
}

ParamGradients loss_gradients(const ModelParams& params, const Graph& g,
                              const PropagationMatrix* prop, const MembershipMask& members,
                              double weight_decay) {
  ForwardState s = full_forward(params, g.features, prop);

  // dZ2 = probs - onehot(label) on member rows, zero elsewhere.
  Matrix dz2 = s.probs;
  for (int v = 0; v < g.n; ++v) {
    double* row = dz2.data.data() + static_cast<size_t>(v) * dz2.cols;
    if (!members.test(v)) {
      for (int j = 0; j < dz2.cols; ++j) row[j] = 0.0;
    } else {
      row[g.labels[static_cast<size_t>(v)]] -= 1.0;
    }
  }

  ParamGradients grad;
  if (params.arch == Arch::kLinear) {
    grad.w0 = matmul_tn(g.features, dz2);
    grad.b0 = column_sums(dz2);
  } else {
    grad.b1 = column_sums(dz2);
    // The propagation operator is symmetric, so its transpose is itself.
    Matrix u = (params.arch == Arch::kGcn2) ? prop->propagate(dz2) : std::move(dz2);
    grad.w1 = matmul_tn(s.h1, u);
    Matrix dz1 = matmul_nt(u, params.w1);
    for (size_t i = 0; i < dz1.data.size(); ++i)
      if (s.z1.data[i] <= 0.0) dz1.data[i] = 0.0;
    grad.b0 = column_sums(dz1);
    Matrix v = (params.arch == Arch::kGcn2) ? prop->propagate(dz1) : std::move(dz1);
    grad.w0 = matmul_tn(g.features, v);
  }

  if (weight_decay != 0.0) {
    for (size_t i = 0; i < grad.w0.data.size(); ++i) grad.w0.data[i] += weight_decay * params.w0.data[i];
    for (size_t i = 0; i < grad.w1.data.size(); ++i) grad.w1.data[i] += weight_decay * params.w1.data[i];
    for (size_t i = 0; i < grad.b0.size(); ++i) grad.b0[i] += weight_decay * params.b0[i];
    for (size_t i = 0; i < grad.b1.size(); ++i) grad.b1[i] += weight_decay * params.b1[i];
  }
  return grad;
}

ModelParams train(Arch arch, const Graph& g, const MembershipMask& train_mask,
                  const TrainConfig& cfg) {
  if (train_mask.size() != g.n) throw std::invalid_argument("train: mask length mismatch");
  if (train_mask.count() == 0) throw std::invalid_argument("train: empty training set");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.learning_rate < 0.0) throw std::invalid_argument("train: negative learning rate");

  ModelParams p = init_params(arch, g.feature_dim, g.num_classes, cfg.hidden, cfg.init_seed);
  MaskedAdjacency adj = masked_adjacency(g, train_mask);
  PropagationMatrix prop(adj);
  const PropagationMatrix* prop_ptr = (arch == Arch::kGcn2) ? &prop : nullptr;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    ParamGradients grad = loss_gradients(p, g, prop_ptr, train_mask, cfg.weight_decay);
    double lr = cfg.learning_rate;
    for (size_t i = 0; i < p.w0.data.size(); ++i) p.w0.data[i] -= lr * grad.w0.data[i];
    for (size_t i = 0; i < p.w1.data.size(); ++i) p.w1.data[i] -= lr * grad.w1.data[i];
    for (size_t i = 0; i < p.b0.size(); ++i) p.b0[i] -= lr * grad.b0[i];
    for (size_t i = 0; i < p.b1.size(); ++i) p.b1[i] -= lr * grad.b1[i];
  }
  return p;
}

double accuracy(const ModelParams& params, const Matrix& features, const PropagationMatrix* prop,
                std::span<const int> nodes, const std::vector<int>& labels) {
  if (nodes.empty()) return 0.0;
  NodeLossEvaluator eval(params, features);
  Matrix probs = eval.probs(prop, nodes);
  int hits = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    std::span<const double> row = probs.row(static_cast<int>(i));
    int best = 0;
    for (int j = 1; j < params.num_classes; ++j)
      if (row[static_cast<size_t>(j)] > row[static_cast<size_t>(best)]) best = j;
    if (best == labels[static_cast<size_t>(nodes[i])]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

namespace {

void write_matrix(std::ostream& out, const Matrix& m) {
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_vector(std::ostream& out, const std::vector<double>& v) {
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << format_double(v[i]);
  }
  out << '\n';
}

Matrix read_matrix(std::istream& in, int rows, int cols) {
  Matrix m(rows, cols);
  for (double& x : m.data)
    if (!(in >> x)) throw std::runtime_error("params file: truncated matrix");
  return m;
}

std::vector<double> read_vector(std::istream& in, int size) {
  std::vector<double> v(static_cast<size_t>(size));
  for (double& x : v)
    if (!(in >> x)) throw std::runtime_error("params file: truncated vector");
  return v;
}

}  // namespace

void save_params(std::ostream& out, const ModelParams& p) {
  out << arch_name(p.arch) << ' ' << p.input_dim << ' ' << p.hidden_dim << ' ' << p.num_classes
      << '\n';
  write_matrix(out, p.w0);
  write_vector(out, p.b0);
  if (p.arch != Arch::kLinear) {
    write_matrix(out, p.w1);
    write_vector(out, p.b1);
  }
}

void save_params(const std::string& path, const ModelParams& p) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  save_params(f, p);
}

ModelParams load_params(std::istream& in) {
  std::string arch;
  ModelParams p;
  if (!(in >> arch >> p.input_dim >> p.hidden_dim >> p.num_classes))
    throw std::runtime_error("params file: bad header");
  p.arch = parse_arch(arch);
  if (p.arch == Arch::kLinear) {
    p.w0 = read_matrix(in, p.input_dim, p.num_classes);
    p.b0 = read_vector(in, p.num_classes);
  } else {
    p.w0 = read_matrix(in, p.input_dim, p.hidden_dim);
    p.b0 = read_vector(in, p.hidden_dim);
    p.w1 = read_matrix(in, p.hidden_dim, p.num_classes);
    p.b1 = read_vector(in, p.num_classes);
  }
  p.check_shapes();
  return p;
}

ModelParams load_params(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return load_params(f);
}

}  // namespace miaudit
