#include "angsync/gnnsync.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "angsync/rng.hpp"
#include "angsync/spectral.hpp"

namespace angsync {

void ModelShape::validate() const {
  if (d_in < 1 || k < 1 || d < 1) throw std::invalid_argument("model shape: d_in, k and d must be positive");
  if ((k * d) % 2 != 0) throw std::invalid_argument("model shape: k*d must be even to split source/target halves");
  if (hidden < 0) throw std::invalid_argument("model shape: negative hidden width");
}

void PGDConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("pgd: negative step count");
  if (!alphas.empty() && static_cast<int>(alphas.size()) != steps)
    throw std::invalid_argument("pgd: need one alpha per step");
  for (double a : alphas)
    if (!(a >= 0.0)) throw std::invalid_argument("pgd: step sizes must be nonnegative");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("train: weight_decay must be nonnegative");
  if (max_epochs < 1 || patience < 1) throw std::invalid_argument("train: epochs and patience must be positive");
  if (patience > max_epochs) throw std::invalid_argument("train: patience exceeds max_epochs");
  if (d < 1) throw std::invalid_argument("train: d must be positive");
}

std::vector<ad::Parameter*> GnnSyncModel::parameters() {
  std::vector<ad::Parameter*> out{&dimpa.w_s0, &dimpa.w_s1, &dimpa.w_t0, &dimpa.w_t1,
                                  &dimpa.a_s1, &dimpa.a_s2, &dimpa.a_t1, &dimpa.a_t2};
  for (auto& p : head.a) out.push_back(&p);
  for (auto& p : head.b) out.push_back(&p);
  for (auto& p : alphas) out.push_back(&p);
  return out;
}

std::vector<const ad::Parameter*> GnnSyncModel::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (auto* p : const_cast<GnnSyncModel*>(this)->parameters()) out.push_back(p);
  return out;
}

namespace {

ad::Parameter uniform_param(std::string name, int rows, int cols, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  ad::Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = bound * (2.0 * uniform01(rng) - 1.0);
  return {std::move(name), m, ad::Matrix::Zero(rows, cols)};
}

ad::Parameter constant_param(std::string name, double v) {
  return {std::move(name), ad::Matrix::Constant(1, 1, v), ad::Matrix::Zero(1, 1)};
}

std::vector<ad::Var> bound_list(const BoundModel& m) {
  std::vector<ad::Var> out{m.w_s0, m.w_s1, m.w_t0, m.w_t1, m.a_s1, m.a_s2, m.a_t1, m.a_t2};
  out.insert(out.end(), m.head_a.begin(), m.head_a.end());
  out.insert(out.end(), m.head_b.begin(), m.head_b.end());
  out.insert(out.end(), m.alphas.begin(), m.alphas.end());
  return out;
}

}  // namespace

GnnSyncModel parameter_init(std::uint64_t seed, const ModelShape& shape) {
  shape.validate();
  Rng rng = substream(seed, "init");
  const int hid = shape.hidden_width(), half = shape.half_width();
  GnnSyncModel m;
  m.shape = shape;
  m.dimpa.w_s0 = uniform_param("dimpa.w_s0", shape.d_in, hid, shape.d_in, rng);
  m.dimpa.w_s1 = uniform_param("dimpa.w_s1", hid, half, hid, rng);
  m.dimpa.w_t0 = uniform_param("dimpa.w_t0", shape.d_in, hid, shape.d_in, rng);
  m.dimpa.w_t1 = uniform_param("dimpa.w_t1", hid, half, hid, rng);
  m.dimpa.a_s1 = constant_param("dimpa.a_s1", 1.0);
  m.dimpa.a_s2 = constant_param("dimpa.a_s2", 1.0);
  m.dimpa.a_t1 = constant_param("dimpa.a_t1", 1.0);
  m.dimpa.a_t2 = constant_param("dimpa.a_t2", 1.0);
  for (int l = 0; l < shape.k; ++l)
    m.head.a.push_back(uniform_param("head.a." + std::to_string(l), shape.d, 1, shape.d, rng));
  for (int l = 0; l < shape.k; ++l)
    m.head.b.push_back(uniform_param("head.b." + std::to_string(l), 1, 1, shape.d, rng));
  return m;
}

BoundModel bind(ad::Tape& tape, const GnnSyncModel& model) {
  BoundModel b;
  const auto& d = model.dimpa;
  b.w_s0 = tape.leaf(d.w_s0.value);
  b.w_s1 = tape.leaf(d.w_s1.value);
  b.w_t0 = tape.leaf(d.w_t0.value);
  b.w_t1 = tape.leaf(d.w_t1.value);
  b.a_s1 = tape.leaf(d.a_s1.value);
  b.a_s2 = tape.leaf(d.a_s2.value);
  b.a_t1 = tape.leaf(d.a_t1.value);
  b.a_t2 = tape.leaf(d.a_t2.value);
  for (const auto& p : model.head.a) b.head_a.push_back(tape.leaf(p.value));
  for (const auto& p : model.head.b) b.head_b.push_back(tape.leaf(p.value));
  for (const auto& p : model.alphas) b.alphas.push_back(tape.leaf(p.value));
  return b;
}

namespace {

ad::Var propagate(ad::Tape& tape, const Eigen::MatrixXd& a, ad::Var x, ad::Var w0, ad::Var w1, ad::Var a1,
                  ad::Var a2) {
  const ad::Var q = ad::matmul(ad::relu(ad::matmul(x, w0)), w1);
  const ad::Var adj = tape.constant(a);
  const ad::Var aq = ad::matmul(adj, q);
  const ad::Var aaq = ad::matmul(adj, aq);
  return q + ad::mul(a1, aq) + ad::mul(a2, aaq);
}

}  // namespace

ad::Var dimpa_embed(ad::Tape& tape, const NormalizedPair& norm, ad::Var x, const BoundModel& m) {
  const Eigen::Index n = x.rows();
  if (norm.source.rows() != n || norm.source.cols() != n || norm.target.rows() != n || norm.target.cols() != n)
    throw std::invalid_argument("dimpa_embed: adjacency and feature row counts differ");
  if (x.cols() != m.w_s0.rows() || x.cols() != m.w_t0.rows())
    throw std::invalid_argument("dimpa_embed: feature width does not match W_0");
  const ad::Var zs = propagate(tape, norm.source, x, m.w_s0, m.w_s1, m.a_s1, m.a_s2);
  const ad::Var zt = propagate(tape, norm.target, x, m.w_t0, m.w_t1, m.a_t1, m.a_t2);
  return ad::concat_cols({zs, zt});
}

ad::Var initial_angles(ad::Tape&, ad::Var z, const BoundModel& m, int k) {
  if (k < 1 || static_cast<int>(m.head_a.size()) != k || static_cast<int>(m.head_b.size()) != k)
    throw std::invalid_argument("initial_angles: head does not have k layers");
  const Eigen::Index d = m.head_a.front().rows();
  if (z.cols() != k * d) throw std::invalid_argument("initial_angles: embedding width is not k*d");
  std::vector<ad::Var> cols;
  for (int l = 0; l < k; ++l) {
    const ad::Var logits = ad::matmul(ad::slice_cols(z, l * d, d), m.head_a[l]) + m.head_b[l];
    cols.push_back(kTwoPi * ad::sigmoid(logits));
  }
  return ad::concat_cols(cols);
}

ad::Var projected_gradient(ad::Tape& tape, ad::Var r0, const Eigen::MatrixXcd& h, const PGDConfig& cfg,
                           const std::vector<ad::Var>& alphas, const std::vector<Eigen::MatrixXcd>& layer_h) {
  cfg.validate();
  if (cfg.steps == 0) return r0;
  const Eigen::Index n = r0.rows();
  if (h.rows() != n || h.cols() != n) throw std::invalid_argument("projected_gradient: H does not match r0");
  if (!layer_h.empty() && static_cast<Eigen::Index>(layer_h.size()) != r0.cols())
    throw std::invalid_argument("projected_gradient: need one H per layer");
  if (!alphas.empty() && static_cast<int>(alphas.size()) != cfg.steps)
    throw std::invalid_argument("projected_gradient: need one alpha node per step");

  const ad::Var hr_shared = tape.constant(h.real());
  const ad::Var hi_shared = tape.constant(h.imag());
  std::vector<ad::Var> cols;
  for (Eigen::Index l = 0; l < r0.cols(); ++l) {
    ad::Var hr = hr_shared, hi = hi_shared;
    if (!layer_h.empty()) {
      hr = tape.constant(layer_h[l].real());
      hi = tape.constant(layer_h[l].imag());
    }
    ad::Var y = ad::slice_cols(r0, l, 1);
    for (int s = 0; s < cfg.steps; ++s) {
      const ad::Var c = ad::cos(y), sn = ad::sin(y);
      ad::Var re = ad::matmul(hr, c) - ad::matmul(hi, sn);
      ad::Var im = ad::matmul(hr, sn) + ad::matmul(hi, c);
      if (!alphas.empty()) {
        re = re + ad::mul(alphas[s], c);
        im = im + ad::mul(alphas[s], sn);
      } else {
        re = re + cfg.alpha(s) * c;
        im = im + cfg.alpha(s) * sn;
      }
      y = ad::atan2(im, re);
    }
    cols.push_back(ad::mod2pi(y));
  }
  return ad::concat_cols(cols);
}

Eigen::MatrixXd dimpa_embed(const NormalizedPair& norm, const Eigen::MatrixXd& x, const GnnSyncModel& m) {
  ad::Tape tape;
  const BoundModel b = bind(tape, m);
  return dimpa_embed(tape, norm, tape.constant(x), b).value();
}

AngleMatrix initial_angles(const Eigen::MatrixXd& z, const GnnSyncModel& m) {
  ad::Tape tape;
  const BoundModel b = bind(tape, m);
  return initial_angles(tape, tape.constant(z), b, m.shape.k).value();
}

AngleMatrix projected_gradient(const AngleMatrix& r0, const Eigen::MatrixXcd& h, const PGDConfig& cfg) {
  ad::Tape tape;
  return projected_gradient(tape, tape.constant(r0), h, cfg).value();
}

std::vector<Eigen::MatrixXcd> layer_hermitians(const OffsetGraph& g, const AngleMatrix& r0) {
  const GraphAssignment assign = assign_edges(residual(g, r0));
  const int k = static_cast<int>(r0.cols());
  std::vector<std::vector<Edge>> parts(k);
  for (const Edge& e : g.edges()) {
    const int l = assign.layer(e.i, e.j);
    if (l >= 1) parts[l - 1].push_back(e);
  }
  std::vector<Eigen::MatrixXcd> out;
  for (auto& p : parts) out.push_back(build_hermitian(OffsetGraph(g.n(), std::move(p))));
  return out;
}

GraphInputs::GraphInputs(const OffsetGraph& g, Eigen::MatrixXd x, double tau)
    : graph(&g), norm(row_normalize(g, tau)), h(build_hermitian(g)), ctx(g), features(std::move(x)) {
  if (features.rows() != g.n()) throw std::invalid_argument("features: row count differs from node count");
}

namespace {

struct Angles {
  ad::Var r0, r;
};

Angles angles_forward(ad::Tape& tape, const GraphInputs& in, const GnnSyncModel& model, const PGDConfig& pcfg,
                      const BoundModel& b, bool apply_pgd) {
  const ad::Var z = dimpa_embed(tape, in.norm, tape.constant(in.features), b);
  const ad::Var r0 = initial_angles(tape, z, b, model.shape.k);
  if (!apply_pgd) return {r0, r0};
  std::vector<Eigen::MatrixXcd> layer_h;
  if (pcfg.per_layer_h) layer_h = layer_hermitians(*in.graph, r0.value());
  return {r0, projected_gradient(tape, r0, in.h, pcfg, b.alphas, layer_h)};
}

}  // namespace

ForwardPass forward(ad::Tape& tape, const GraphInputs& in, const GnnSyncModel& model, const PGDConfig& pcfg,
                    const LossSpec& loss, bool apply_pgd) {
  ForwardPass fp;
  fp.bound = bind(tape, model);
  const Angles a = angles_forward(tape, in, model, pcfg, fp.bound, apply_pgd);
  fp.r0 = a.r0;
  fp.r = a.r;
  fp.loss = training_loss(tape, in.ctx, fp.r, loss);
  return fp;
}

TrainResult train(const OffsetGraph& g, int k, const TrainConfig& tcfg, const PGDConfig& pcfg,
                  std::optional<Eigen::MatrixXd> features) {
  tcfg.validate();
  pcfg.validate();
  if (k < 1) throw std::invalid_argument("train: k must be positive");
  Eigen::MatrixXd x = features ? std::move(*features) : spectral_rn_sync(g, k);
  const GraphInputs in(g, std::move(x));

  ModelShape shape;
  shape.d_in = static_cast<int>(in.features.cols());
  shape.k = k;
  shape.d = tcfg.d;
  shape.hidden = tcfg.hidden;
  GnnSyncModel model = parameter_init(tcfg.seed, shape);
  if (pcfg.trainable)
    for (int s = 0; s < pcfg.steps; ++s)
      model.alphas.push_back(constant_param("pgd.alpha." + std::to_string(s), pcfg.alpha(s)));

  const bool end_to_end = tcfg.mode == PgdMode::EndToEnd;
  TrainResult out;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 0; epoch < tcfg.max_epochs; ++epoch) {
    ad::Tape tape;
    const ForwardPass fp = forward(tape, in, model, pcfg, tcfg.loss, end_to_end);
    const double loss = fp.loss.scalar();
    if (!std::isfinite(loss)) {
      std::ostringstream os;
      os << "training diverged: loss " << loss << " at epoch " << epoch;
      throw NumericalError(os.str());
    }
    tape.backward(fp.loss);
    auto params = model.parameters();
    const auto vars = bound_list(fp.bound);
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i]->grad = vars[i].grad();
      if (!params[i]->grad.allFinite()) {
        std::ostringstream os;
        os << "training diverged: non-finite gradient for " << params[i]->name << " at epoch " << epoch;
        throw NumericalError(os.str());
      }
    }

    out.loss_trace.push_back(loss);
    out.epochs_run = epoch + 1;
    if (loss < best) {
      best = loss;
      out.model = model;
      out.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    out.best_trace.push_back(best);
    if (since_best >= tcfg.patience) break;

    ad::sgd_step(params, tcfg.lr, tcfg.weight_decay);
    for (auto& a : model.alphas) a.value = a.value.cwiseMax(0.0);
  }

  ad::Tape tape;
  const BoundModel b = bind(tape, out.model);
  const Angles a = angles_forward(tape, in, out.model, pcfg, b, true);
  out.r0 = a.r0.value();
  out.r = a.r.value();
  return out;
}

namespace {

Eigen::MatrixXd mlp(const Eigen::MatrixXd& x, const ad::Parameter& w0, const ad::Parameter& w1) {
  return (x * w0.value).cwiseMax(0.0) * w1.value;
}

}  // namespace

StabilityBound stability_bound(const GnnSyncModel& m, const NormalizedPair& norm, const NormalizedPair& norm_hat,
                               const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
    throw std::invalid_argument("stability_bound: feature matrices differ in shape");
  if (norm.source.rows() != norm_hat.source.rows() || norm.source.cols() != norm_hat.source.cols() ||
      norm.target.rows() != norm_hat.target.rows() || norm.target.cols() != norm_hat.target.cols())
    throw std::invalid_argument("stability_bound: adjacency matrices differ in shape");

  const auto& p = m.dimpa;
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const double as1 = p.a_s1.value(0, 0), as2 = p.a_s2.value(0, 0);
  const double at1 = p.a_t1.value(0, 0), at2 = p.a_t2.value(0, 0);

  StabilityBound out;
  out.eps_s = (norm.source - norm_hat.source).norm();
  out.eps_t = (norm.target - norm_hat.target).norm();
  out.eps_f = (x - x_hat).norm();

  const Eigen::MatrixXd& as = norm.source;
  const Eigen::MatrixXd& as_hat = norm_hat.source;
  const Eigen::MatrixXd& at = norm.target;
  const Eigen::MatrixXd& at_hat = norm_hat.target;
  out.b_s = kTwoPi * ((as1 * eye + as2 * (as + as_hat)) * mlp(x, p.w_s0, p.w_s1)).norm();
  out.b_t = kTwoPi * ((at1 * eye + at2 * (at + at_hat)) * mlp(x, p.w_t0, p.w_t1)).norm();
  const double b_fs = (eye + as1 * as_hat + as2 * as_hat * as_hat).norm() * p.w_s1.value.norm() * p.w_s0.value.norm();
  const double b_ft = (eye + at1 * at_hat + at2 * at_hat * at_hat).norm() * p.w_t1.value.norm() * p.w_t0.value.norm();
  out.b_f = kTwoPi * (b_fs + b_ft);
  out.bound = out.b_s * out.eps_s + out.b_t * out.eps_t + out.b_f * out.eps_f;

  const AngleMatrix r0 = initial_angles(dimpa_embed(norm, x, m), m);
  const AngleMatrix r0_hat = initial_angles(dimpa_embed(norm_hat, x_hat, m), m);
  out.lhs = (r0 - r0_hat).norm();
  return out;
}

namespace {

constexpr const char* kMagic = "angsync-checkpoint 1";

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

}  // namespace

void save_checkpoint(std::ostream& os, const GnnSyncModel& m) {
  const auto params = m.parameters();
  os << kMagic << '\n';
  os << "shape " << m.shape.d_in << ' ' << m.shape.k << ' ' << m.shape.d << ' ' << m.shape.hidden << '\n';
  os << "tensors " << params.size() << '\n';
  for (const auto* p : params) os << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
  os << "data\n";
  for (const auto* p : params)
    for (Eigen::Index j = 0; j < p->value.cols(); ++j)
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
        std::uint64_t bits;
        const double v = p->value(i, j);
        std::memcpy(&bits, &v, sizeof bits);
        bits = to_little(bits);
        os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
      }
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

GnnSyncModel load_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw std::runtime_error("checkpoint: bad magic line");
  ModelShape shape;
  std::size_t count = 0;
  {
    std::string tag;
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated header");
    std::istringstream ss(line);
    if (!(ss >> tag >> shape.d_in >> shape.k >> shape.d >> shape.hidden) || tag != "shape")
      throw std::runtime_error("checkpoint: bad shape line");
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated header");
    std::istringstream cs(line);
    if (!(cs >> tag >> count) || tag != "tensors") throw std::runtime_error("checkpoint: bad tensor count");
  }
  struct Entry {
    std::string name;
    Eigen::Index rows, cols;
  };
  std::vector<Entry> entries;
  for (std::size_t t = 0; t < count; ++t) {
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated tensor list");
    std::istringstream ss(line);
    Entry e;
    if (!(ss >> e.name >> e.rows >> e.cols) || e.rows < 0 || e.cols < 0)
      throw std::runtime_error("checkpoint: bad tensor line: " + line);
    entries.push_back(e);
  }
  if (!std::getline(is, line) || line != "data") throw std::runtime_error("checkpoint: missing data marker");

  GnnSyncModel m = parameter_init(0, shape);
  std::map<std::string, ad::Parameter*> by_name;
  for (auto* p : m.parameters()) by_name[p->name] = p;
  std::vector<ad::Parameter> alphas;
  for (const auto& e : entries) {
    ad::Matrix v(e.rows, e.cols);
    for (Eigen::Index j = 0; j < e.cols; ++j)
      for (Eigen::Index i = 0; i < e.rows; ++i) {
        std::uint64_t bits;
        if (!is.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw std::runtime_error("checkpoint: truncated data");
        bits = to_little(bits);
        std::memcpy(&v(i, j), &bits, sizeof bits);
      }
    if (e.name.rfind("pgd.alpha.", 0) == 0) {
      alphas.push_back({e.name, v, ad::Matrix::Zero(e.rows, e.cols)});
      continue;
    }
    auto it = by_name.find(e.name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint: unknown tensor " + e.name);
    if (it->second->value.rows() != e.rows || it->second->value.cols() != e.cols)
      throw std::runtime_error("checkpoint: shape mismatch for " + e.name);
    it->second->value = v;
    by_name.erase(it);
  }
  if (!by_name.empty()) throw std::runtime_error("checkpoint: missing tensor " + by_name.begin()->first);
  m.alphas = std::move(alphas);
  return m;
}

}  // namespace angsync
