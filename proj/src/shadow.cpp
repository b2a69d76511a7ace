#include "miaudit/shadow.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "miaudit/rng.hpp"
#include "miaudit/util.hpp"

namespace miaudit {

namespace {
constexpr uint64_t kSplitStreamBase = 0x5348414457ULL;  // shadow split streams
constexpr uint64_t kInitSaltBase = 0x494e4954ULL;       // per-model init seeds
}  // namespace

ShadowPool train_shadow_pool(const Graph& g, Arch arch, const TrainConfig& cfg, int num_models,
                             uint64_t seed, int jobs) {
  if (num_models < 2 || num_models % 2 != 0)
    throw std::invalid_argument("shadow pool: model count must be even and >= 2");

  ShadowPool pool;
  pool.arch = arch;
  pool.cfg = cfg;
  pool.seed = seed;
  pool.models.resize(static_cast<size_t>(num_models));
  pool.train_masks.resize(static_cast<size_t>(num_models));

  std::vector<int> order(static_cast<size_t>(g.n));
  for (int j = 0; j < num_models / 2; ++j) {
    for (int v = 0; v < g.n; ++v) order[static_cast<size_t>(v)] = v;
    Rng rng(seed, kSplitStreamBase + static_cast<uint64_t>(j));
    rng.shuffle(order);
    MembershipMask half(g.n, 0);
    for (int i = 0; i < g.n / 2; ++i) half.set(order[static_cast<size_t>(i)], true);
    MembershipMask complement(g.n, 0);
    for (int v = 0; v < g.n; ++v) complement.set(v, !half.test(v));
    pool.train_masks[static_cast<size_t>(2 * j)] = half;
    pool.train_masks[static_cast<size_t>(2 * j + 1)] = complement;
  }

  parallel_for(num_models, jobs, [&](int k) {
    TrainConfig model_cfg = cfg;
    model_cfg.init_seed = derive_seed(seed, kInitSaltBase + static_cast<uint64_t>(k));
    pool.models[static_cast<size_t>(k)] =
        train(arch, g, pool.train_masks[static_cast<size_t>(k)], model_cfg);
  });
  return pool;
}

std::vector<int> out_model_indices(const ShadowPool& pool, int v) {
  std::vector<int> out;
  for (int k = 0; k < pool.num_models(); ++k)
    if (!pool.in_model(k, v)) out.push_back(k);
  return out;
}

std::vector<int> in_model_indices(const ShadowPool& pool, int v) {
  std::vector<int> out;
  for (int k = 0; k < pool.num_models(); ++k)
    if (pool.in_model(k, v)) out.push_back(k);
  return out;
}

ShadowPool subset_pool(const ShadowPool& pool, std::span<const int> keep) {
  ShadowPool sub;
  sub.arch = pool.arch;
  sub.cfg = pool.cfg;
  sub.seed = pool.seed;
  for (int k : keep) {
    sub.models.push_back(pool.models[static_cast<size_t>(k)]);
    sub.train_masks.push_back(pool.train_masks[static_cast<size_t>(k)]);
  }
  return sub;
}

const char* signal_mode_name(SignalMode m) {
  return m == SignalMode::kZeroHop ? "zero_hop" : "train_graph";
}

void SignalMatrix::check() const {
  size_t n = sample_ids.size();
  if (member.size() != n || target_loss.size() != n || shadow_loss.rows != static_cast<int>(n) ||
      in_bits.size() != n * static_cast<size_t>(shadow_loss.cols))
    throw std::invalid_argument("signal matrix: inconsistent shapes");
}

namespace {

std::vector<double> model_losses(const ModelParams& params, const Graph& g,
                                 const MembershipMask& train_mask, std::span<const int> targets,
                                 SignalMode mode) {
  if (mode == SignalMode::kZeroHop) {
    return per_node_losses(params, g, MaskedAdjacency::edgeless(g.n), targets);
  }
  return per_node_losses(params, g, masked_adjacency(g, train_mask), targets);
}

}  // namespace

SignalMatrix build_signal_matrix(const ModelParams& target, const MembershipMask& ground_truth,
                                 const ShadowPool& pool, const Graph& g,
                                 std::span<const int> targets, SignalMode mode) {
  if (ground_truth.size() != g.n)
    throw std::invalid_argument("signal matrix: ground truth length mismatch");
  SignalMatrix s;
  s.mode = mode;
  s.sample_ids.assign(targets.begin(), targets.end());
  int n = s.num_samples();
  int k = pool.num_models();
  s.member.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) s.member[static_cast<size_t>(i)] = ground_truth.test(targets[static_cast<size_t>(i)]) ? 1 : 0;
  s.target_loss = model_losses(target, g, ground_truth, targets, mode);
  s.shadow_loss = Matrix(n, k);
  s.in_bits.assign(static_cast<size_t>(n) * static_cast<size_t>(k), 0);
  for (int j = 0; j < k; ++j) {
    std::vector<double> losses =
        model_losses(pool.models[static_cast<size_t>(j)], g, pool.train_masks[static_cast<size_t>(j)], targets, mode);
    for (int i = 0; i < n; ++i) {
      s.shadow_loss(i, j) = losses[static_cast<size_t>(i)];
      s.in_bits[static_cast<size_t>(i) * static_cast<size_t>(k) + static_cast<size_t>(j)] =
          pool.in_model(j, targets[static_cast<size_t>(i)]) ? 1 : 0;
    }
  }
  s.check();
  return s;
}

void write_signals_csv(std::ostream& out, const SignalMatrix& s) {
  s.check();
  int k = s.num_shadows();
  out << "sample_id,member,target_loss";
  for (int j = 0; j < k; ++j) out << ",sh" << j;
  for (int j = 0; j < k; ++j) out << ",in" << j;
  out << '\n';
  for (int i = 0; i < s.num_samples(); ++i) {
    out << s.sample_ids[static_cast<size_t>(i)] << ',' << int(s.member[static_cast<size_t>(i)]) << ','
        << format_double(s.target_loss[static_cast<size_t>(i)]);
    for (int j = 0; j < k; ++j) out << ',' << format_double(s.shadow_loss(i, j));
    for (int j = 0; j < k; ++j)
      out << ',' << int(s.in_bits[static_cast<size_t>(i) * static_cast<size_t>(k) + static_cast<size_t>(j)]);
    out << '\n';
  }
}

void write_signals_csv(const std::string& path, const SignalMatrix& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_signals_csv(f, s);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
  throw std::runtime_error("signals csv line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

SignalMatrix read_signals_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("signals csv: empty file");
  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "sample_id" || header[1] != "member" ||
      header[2] != "target_loss")
    throw std::runtime_error("signals csv: unexpected header");
  size_t rest = header.size() - 3;
  if (rest % 2 != 0) throw std::runtime_error("signals csv: unbalanced shadow/in columns");
  int k = static_cast<int>(rest / 2);
  for (int j = 0; j < k; ++j) {
    if (header[static_cast<size_t>(3 + j)] != "sh" + std::to_string(j) ||
        header[static_cast<size_t>(3 + k + j)] != "in" + std::to_string(j))
      throw std::runtime_error("signals csv: unexpected header");
  }

  SignalMatrix s;
  std::vector<double> shadow_rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (static_cast<int>(f.size()) != 3 + 2 * k) parse_fail(line_no, "wrong field count");
    try {
      size_t pos = 0;
      s.sample_ids.push_back(std::stoi(f[0], &pos));
      if (pos != f[0].size()) parse_fail(line_no, "bad sample id");
      int m = std::stoi(f[1], &pos);
      if (pos != f[1].size() || (m != 0 && m != 1)) parse_fail(line_no, "bad member bit");
      s.member.push_back(static_cast<uint8_t>(m));
      s.target_loss.push_back(std::stod(f[2], &pos));
      if (pos != f[2].size()) parse_fail(line_no, "bad target loss");
      for (int j = 0; j < k; ++j) {
        shadow_rows.push_back(std::stod(f[static_cast<size_t>(3 + j)], &pos));
        if (pos != f[static_cast<size_t>(3 + j)].size()) parse_fail(line_no, "bad shadow loss");
      }
      for (int j = 0; j < k; ++j) {
        int b = std::stoi(f[static_cast<size_t>(3 + k + j)], &pos);
        if (pos != f[static_cast<size_t>(3 + k + j)].size() || (b != 0 && b != 1))
          parse_fail(line_no, "bad in bit");
        s.in_bits.push_back(static_cast<uint8_t>(b));
      }
    } catch (const std::invalid_argument&) {
      parse_fail(line_no, "malformed number");
    } catch (const std::out_of_range&) {
      parse_fail(line_no, "number out of range");
    }
  }
  s.shadow_loss = Matrix(static_cast<int>(s.sample_ids.size()), k);
  s.shadow_loss.data = std::move(shadow_rows);
  s.check();
  return s;
}

SignalMatrix read_signals_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return read_signals_csv(f);
}

}  // namespace miaudit
