#include "sokoplan/drc.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <zlib.h>

namespace sokoplan {

void DRCConfig::validate() const {
  if (D < 1 || N < 1 || G < 1 || head_dim < 1) throw Error(Errc::InvalidArgument, "D, N, G and head_dim must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw Error(Errc::InvalidArgument, "kernel must be odd");
}

nlohmann::json config_to_json(const DRCConfig& c) {
  return {{"D", c.D}, {"N", c.N}, {"G", c.G}, {"kernel", c.kernel}, {"head_dim", c.head_dim}};
}

DRCConfig config_from_json(const nlohmann::json& j) {
  DRCConfig c;
  c.D = j.value("D", c.D);
  c.N = j.value("N", c.N);
  c.G = j.value("G", c.G);
  c.kernel = j.value("kernel", c.kernel);
  c.head_dim = j.value("head_dim", c.head_dim);
  c.validate();
  return c;
}

std::int64_t parameter_count(const DRCConfig& c) {
  const std::int64_t k2 = c.kernel * c.kernel, G = c.G, H = c.head_dim;
  const std::int64_t encoder = k2 * 7 * G + G + k2 * G * G + G;
  const std::int64_t layer = k2 * (4 * G) * (4 * G) + 4 * G + 2 * G * kCells * G + kCells * G;
  const std::int64_t head = 2 * kCells * G * H + H + 5 * H + 5 + H + 1;
  return encoder + c.D * layer + head;
}

template <typename Scalar>
Params<Scalar> Params<Scalar>::zeros(const DRCConfig& config) {
  config.validate();
  const int k2 = config.kernel * config.kernel, G = config.G, H = config.head_dim;
  Params p;
  p.config = config;
  p.enc_w1 = Mat<Scalar>::Zero(k2 * 7, G);
  p.enc_b1 = Mat<Scalar>::Zero(1, G);
  p.enc_w2 = Mat<Scalar>::Zero(k2 * G, G);
  p.enc_b2 = Mat<Scalar>::Zero(1, G);
  p.layers.resize(config.D);
  for (auto& l : p.layers) {
    l.w = Mat<Scalar>::Zero(k2 * 4 * G, 4 * G);
    l.b = Mat<Scalar>::Zero(1, 4 * G);
    l.wp = Mat<Scalar>::Zero(2 * G, kCells * G);
    l.bp = Mat<Scalar>::Zero(1, kCells * G);
  }
  p.head_w = Mat<Scalar>::Zero(2 * kCells * G, H);
  p.head_b = Mat<Scalar>::Zero(1, H);
  p.policy_w = Mat<Scalar>::Zero(H, kNumActions);
  p.policy_b = Mat<Scalar>::Zero(1, kNumActions);
  p.value_w = Mat<Scalar>::Zero(H, 1);
  p.value_b = Mat<Scalar>::Zero(1, 1);
  return p;
}

template <typename Scalar>
std::int64_t Params<Scalar>::size() const {
  std::int64_t n = 0;
  for_each([&](const std::string&, const Mat<Scalar>& m) { n += m.size(); });
  return n;
}

template <typename Scalar>
bool Params<Scalar>::operator==(const Params& o) const {
  if (!(config == o.config) || layers.size() != o.layers.size()) return false;
  std::vector<const Mat<Scalar>*> mine, theirs;
  for_each([&](const std::string&, const Mat<Scalar>& m) { mine.push_back(&m); });
  o.for_each([&](const std::string&, const Mat<Scalar>& m) { theirs.push_back(&m); });
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i]->rows() != theirs[i]->rows() || mine[i]->cols() != theirs[i]->cols() || *mine[i] != *theirs[i]) {
      return false;
    }
  }
  return true;
}

template <typename Scalar>
Params<Scalar> init_params(const DRCConfig& config, std::uint64_t seed) {
  Params<Scalar> p = Params<Scalar>::zeros(config);
  std::mt19937_64 rng(seed);
  auto fill = [&](Mat<Scalar>& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.rows()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(u(rng));
  };
  fill(p.enc_w1);
  fill(p.enc_w2);
  for (auto& l : p.layers) {
    fill(l.w);
    fill(l.wp);
    l.b.middleCols(config.G, config.G).setOnes();
  }
  fill(p.head_w);
  fill(p.policy_w);
  fill(p.value_w);
  return p;
}

template <typename Scalar>
DRCState<Scalar> DRCState<Scalar>::zeros(const DRCConfig& config) {
  DRCState s;
  s.h.assign(config.D, FeatureMap<Scalar>::Zero(kCells, config.G));
  s.g.assign(config.D, FeatureMap<Scalar>::Zero(kCells, config.G));
  return s;
}

template <typename Scalar>
Action StepOutput<Scalar>::greedy_action() const {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = i;
  }
  return static_cast<Action>(best);
}

namespace {

// Source cell of each (cell, kernel offset) pair, or -1 outside the board.
const std::vector<int>& neighbor_table(int k) {
  static thread_local std::vector<std::vector<int>> cache(16);
  std::vector<int>& t = cache.at(k);
  if (t.empty()) {
    const int r = k / 2;
    t.resize(kCells * k * k);
    for (int cell = 0; cell < kCells; ++cell) {
      const Pos p = Pos::from_index(cell);
      for (int dr = -r; dr <= r; ++dr) {
        for (int dc = -r; dc <= r; ++dc) {
          const Pos q{p.row + dr, p.col + dc};
          t[cell * k * k + (dr + r) * k + (dc + r)] = q.on_grid() ? q.index() : -1;
        }
      }
    }
  }
  return t;
}

}  // namespace

template <typename Scalar>
Mat<Scalar> im2col(const Mat<Scalar>& x, int k) {
  const int C = static_cast<int>(x.cols()), kk = k * k;
  const auto& nb = neighbor_table(k);
  Mat<Scalar> out = Mat<Scalar>::Zero(kCells, kk * C);
  for (int cell = 0; cell < kCells; ++cell) {
    for (int o = 0; o < kk; ++o) {
      const int src = nb[cell * kk + o];
      if (src >= 0) out.block(cell, o * C, 1, C) = x.row(src);
    }
  }
  return out;
}

namespace {

template <typename Scalar>
Mat<Scalar> col2im(const Mat<Scalar>& cols, int k, int C) {
  const int kk = k * k;
  const auto& nb = neighbor_table(k);
  Mat<Scalar> out = Mat<Scalar>::Zero(kCells, C);
  for (int cell = 0; cell < kCells; ++cell) {
    for (int o = 0; o < kk; ++o) {
      const int src = nb[cell * kk + o];
      if (src >= 0) out.row(src) += cols.block(cell, o * C, 1, C);
    }
  }
  return out;
}

template <typename Scalar>
Mat<Scalar> affine(const Mat<Scalar>& x, const Mat<Scalar>& w, const Mat<Scalar>& b) {
  Mat<Scalar> out = x * w;
  out.rowwise() += b.row(0);
  return out;
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (S(1) + (-x).exp()).inverse();
}

template <typename Scalar>
RowVec<Scalar> pool(const FeatureMap<Scalar>& h, std::vector<int>* argmax) {
  const int G = static_cast<int>(h.cols());
  RowVec<Scalar> m(2 * G);
  m.head(G) = h.colwise().mean();
  if (argmax) argmax->assign(G, 0);
  for (int c = 0; c < G; ++c) {
    int best = 0;
    for (int cell = 1; cell < kCells; ++cell) {
      if (h(cell, c) > h(best, c)) best = cell;
    }
    m(G + c) = h(best, c);
    if (argmax) (*argmax)[c] = best;
  }
  return m;
}

template <typename Scalar>
FeatureMap<Scalar> inject(const LayerParams<Scalar>& layer, const RowVec<Scalar>& m, int G) {
  RowVec<Scalar> p = m * layer.wp + layer.bp.row(0);
  return Eigen::Map<const Mat<Scalar>>(p.data(), kCells, G);
}

}  // namespace

template <typename Scalar>
FeatureMap<Scalar> encode(const Params<Scalar>& params, const ObsTensor& obs, StepTape<Scalar>* tape) {
  const int k = params.config.kernel;
  Mat<Scalar> obs_cols = im2col<Scalar>(obs.template cast<Scalar>(), k);
  Mat<Scalar> a1 = affine(obs_cols, params.enc_w1, params.enc_b1).cwiseMax(Scalar(0));
  Mat<Scalar> a1_cols = im2col(a1, k);
  Mat<Scalar> enc = affine(a1_cols, params.enc_w2, params.enc_b2).cwiseMax(Scalar(0));
  if (tape) {
    tape->obs_cols = std::move(obs_cols);
    tape->a1 = std::move(a1);
    tape->a1_cols = std::move(a1_cols);
    tape->enc = enc;
  }
  return enc;
}

template <typename Scalar>
FeatureMap<Scalar> pool_and_inject(const LayerParams<Scalar>& layer, const FeatureMap<Scalar>& h) {
  return inject(layer, pool<Scalar>(h, nullptr), static_cast<int>(h.cols()));
}

template <typename Scalar>
DRCState<Scalar> tick(const Params<Scalar>& params, const FeatureMap<Scalar>& encoding, const DRCState<Scalar>& state,
                      const HookSet& hooks, int tick_index, StepTape<Scalar>* tape) {
  const DRCConfig& cfg = params.config;
  const int G = cfg.G, D = cfg.D;
  DRCState<Scalar> next = state;
  Mat<Scalar> x(kCells, 4 * G);
  for (int d = 0; d < D; ++d) {
    const LayerParams<Scalar>& layer = params.layers[d];
    LayerTape<Scalar> lt;
    const RowVec<Scalar> m = pool<Scalar>(state.h[d], tape ? &lt.argmax : nullptr);
    x.leftCols(G) = encoding;
    x.middleCols(G, G) = d == 0 ? state.h[D - 1] : next.h[d - 1];
    x.middleCols(2 * G, G) = inject(layer, m, G);
    x.rightCols(G) = state.h[d];
    Mat<Scalar> cols = im2col(x, cfg.kernel);
    Mat<Scalar> gates = affine(cols, layer.w, layer.b);
    gates.leftCols(3 * G) = sigmoid(gates.leftCols(3 * G).array()).matrix();
    gates.rightCols(G) = gates.rightCols(G).array().tanh().matrix();

    FeatureMap<Scalar> g = gates.middleCols(G, G).cwiseProduct(state.g[d]) +
                           gates.leftCols(G).cwiseProduct(gates.rightCols(G));
    for (const Hook& hook : hooks) {
      if (hook.layer != d || (hook.tick && *hook.tick != tick_index)) continue;
      g.row(hook.pos.index()) += (hook.alpha * hook.vector).template cast<Scalar>().transpose();
    }
    Mat<Scalar> tanh_g = g.array().tanh().matrix();
    next.h[d] = gates.middleCols(2 * G, G).cwiseProduct(tanh_g);
    next.g[d] = std::move(g);
    if (tape) {
      lt.cols = std::move(cols);
      lt.gates = std::move(gates);
      lt.g_prev = state.g[d];
      lt.tanh_g = std::move(tanh_g);
      lt.pooled = m;
      tape->ticks.push_back(std::move(lt));
    }
  }
  return next;
}

template <typename Scalar>
StepOutput<Scalar> forward_step(const Params<Scalar>& params, const ObsTensor& obs, const DRCState<Scalar>& state,
                                const HookSet& hooks, StepTape<Scalar>* tape) {
  const DRCConfig& cfg = params.config;
  const int G = cfg.G;
  if (tape) tape->ticks.clear();
  StepOutput<Scalar> out;
  out.encoding = encode(params, obs, tape);
  out.state = state;
  out.trace.reserve(cfg.N);
  for (int n = 0; n < cfg.N; ++n) {
    out.state = tick(params, out.encoding, out.state, hooks, n, tape);
    out.trace.push_back({out.state.g, out.state.h});
  }
  RowVec<Scalar> z(2 * kCells * G);
  z.head(kCells * G) = Eigen::Map<const RowVec<Scalar>>(out.state.h[cfg.D - 1].data(), kCells * G);
  z.tail(kCells * G) = Eigen::Map<const RowVec<Scalar>>(out.encoding.data(), kCells * G);
  RowVec<Scalar> o = (z * params.head_w + params.head_b.row(0)).cwiseMax(Scalar(0));
  out.logits = (o * params.policy_w + params.policy_b.row(0)).transpose();
  out.value = (o * params.value_w)(0, 0) + params.value_b(0, 0);
  if (tape) {
    tape->head_in = std::move(z);
    tape->head_out = std::move(o);
  }
  return out;
}

template <typename Scalar>
void backward(const Params<Scalar>& params, const std::vector<StepTape<Scalar>>& tapes,
              const std::vector<StepGrad<Scalar>>& step_grads, Params<Scalar>& grads) {
  if (tapes.size() != step_grads.size()) throw Error(Errc::LengthMismatch, "one gradient per recorded step");
  const DRCConfig& cfg = params.config;
  const int G = cfg.G, D = cfg.D, N = cfg.N, k = cfg.kernel, HW = kCells * G;

  std::vector<Mat<Scalar>> dh(D, Mat<Scalar>::Zero(kCells, G)), dg(D, Mat<Scalar>::Zero(kCells, G));
  for (int t = static_cast<int>(tapes.size()) - 1; t >= 0; --t) {
    const StepTape<Scalar>& tape = tapes[t];
    const StepGrad<Scalar>& sg = step_grads[t];

    // Heads.
    const RowVec<Scalar> dlogits = sg.dlogits.transpose();
    grads.policy_w.noalias() += tape.head_out.transpose() * dlogits;
    grads.policy_b.row(0) += dlogits;
    grads.value_w.col(0) += tape.head_out.transpose() * sg.dvalue;
    grads.value_b(0, 0) += sg.dvalue;
    RowVec<Scalar> dout = dlogits * params.policy_w.transpose() + sg.dvalue * params.value_w.col(0).transpose();
    dout = (tape.head_out.array() > Scalar(0)).select(dout, Scalar(0));
    grads.head_w.noalias() += tape.head_in.transpose() * dout;
    grads.head_b.row(0) += dout;
    const RowVec<Scalar> dz = dout * params.head_w.transpose();
    dh[D - 1] += Eigen::Map<const Mat<Scalar>>(dz.data(), kCells, G);
    Mat<Scalar> denc = Eigen::Map<const Mat<Scalar>>(dz.data() + HW, kCells, G);

    // Recurrent stack, ticks and layers in reverse.
    for (int n = N - 1; n >= 0; --n) {
      for (int d = D - 1; d >= 0; --d) {
        const LayerTape<Scalar>& lt = tape.ticks[n * D + d];
        const LayerParams<Scalar>& layer = params.layers[d];
        LayerParams<Scalar>& glayer = grads.layers[d];
        const auto i = lt.gates.leftCols(G).array();
        const auto f = lt.gates.middleCols(G, G).array();
        const auto o = lt.gates.middleCols(2 * G, G).array();
        const auto c = lt.gates.rightCols(G).array();
        const auto tg = lt.tanh_g.array();

        const Mat<Scalar> dg_total = (dg[d].array() + dh[d].array() * o * (Scalar(1) - tg.square())).matrix();
        Mat<Scalar> da(kCells, 4 * G);
        da.leftCols(G) = (dg_total.array() * c * i * (Scalar(1) - i)).matrix();
        da.middleCols(G, G) = (dg_total.array() * lt.g_prev.array() * f * (Scalar(1) - f)).matrix();
        da.middleCols(2 * G, G) = (dh[d].array() * tg * o * (Scalar(1) - o)).matrix();
        da.rightCols(G) = (dg_total.array() * i * (Scalar(1) - c.square())).matrix();
        dg[d] = (dg_total.array() * f).matrix();

        glayer.w.noalias() += lt.cols.transpose() * da;
        glayer.b.row(0) += da.colwise().sum();
        const Mat<Scalar> dx = col2im<Scalar>(da * layer.w.transpose(), k, 4 * G);

        denc += dx.leftCols(G);
        // Own previous hidden, directly and through pool-and-inject.
        Mat<Scalar> dprev = dx.rightCols(G);
        const Mat<Scalar> dp = dx.middleCols(2 * G, G);
        const Eigen::Map<const RowVec<Scalar>> dpf(dp.data(), HW);
        glayer.wp.noalias() += lt.pooled.transpose() * dpf;
        glayer.bp.row(0) += dpf;
        const RowVec<Scalar> dm = dpf * layer.wp.transpose();
        dprev.rowwise() += dm.head(G) / Scalar(kCells);
        for (int ch = 0; ch < G; ++ch) dprev(lt.argmax[ch], ch) += dm(G + ch);
        dh[d] = std::move(dprev);
        // Lower layer at this tick, or the top layer at the previous tick.
        dh[d == 0 ? D - 1 : d - 1] += dx.middleCols(G, G);
      }
    }

    // Encoder.
    const Mat<Scalar> dz2 = (tape.enc.array() > Scalar(0)).select(denc, Scalar(0));
    grads.enc_w2.noalias() += tape.a1_cols.transpose() * dz2;
    grads.enc_b2.row(0) += dz2.colwise().sum();
    const Mat<Scalar> da1 = col2im<Scalar>(dz2 * params.enc_w2.transpose(), k, G);
    const Mat<Scalar> dz1 = (tape.a1.array() > Scalar(0)).select(da1, Scalar(0));
    grads.enc_w1.noalias() += tape.obs_cols.transpose() * dz1;
    grads.enc_b1.row(0) += dz1.colwise().sum();
  }

  bool finite = true;
  grads.for_each([&](const std::string&, const Mat<Scalar>& m) { finite = finite && m.allFinite(); });
  if (!finite) throw Error(Errc::NonFiniteGradient, "gradient contains NaN or Inf");
}

// Container ---------------------------------------------------------------------

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_i64(std::string& s, std::int64_t v) {
  const auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}
void put_f32(std::string& s, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(s, u);
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > s.size()) throw Error(Errc::CorruptChecksum, "container truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::int64_t i64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
    pos += 8;
    return static_cast<std::int64_t>(v);
  }
  float f32() {
    const std::uint32_t u = u32();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s.substr(pos, n);
    pos += n;
    return out;
  }
};

std::uint32_t crc_of(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

}  // namespace

std::string save_container(const std::vector<NamedTensor>& tensors, const nlohmann::json& meta) {
  std::string out = "SKPC";
  put_u32(out, kContainerVersion);
  const std::string m = meta.dump();
  put_u32(out, static_cast<std::uint32_t>(m.size()));
  out += m;
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    std::int64_t count = 1;
    for (auto d : t.shape) count *= d;
    if (count != static_cast<std::int64_t>(t.data.size())) throw Error(Errc::ShapeMismatch, "tensor '" + t.name + "'");
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_i64(out, d);
    for (float f : t.data) put_f32(out, f);
  }
  put_u32(out, crc_of(out.data(), out.size()));
  return out;
}

std::pair<std::vector<NamedTensor>, nlohmann::json> load_container(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "SKPC") != 0) throw Error(Errc::CorruptChecksum, "not a container");
  Reader tail{bytes, bytes.size() - 4};
  if (tail.u32() != crc_of(bytes.data(), bytes.size() - 4)) throw Error(Errc::CorruptChecksum, "checksum mismatch");
  Reader r{bytes, 4};
  const std::uint32_t version = r.u32();
  if (version != kContainerVersion) {
    throw Error(Errc::VersionMismatch, "container version " + std::to_string(version));
  }
  nlohmann::json meta = nlohmann::json::parse(r.bytes(r.u32()));
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> tensors(count);
  for (NamedTensor& t : tensors) {
    t.name = r.bytes(r.u32());
    t.shape.resize(r.u32());
    std::int64_t n = 1;
    for (auto& d : t.shape) n *= (d = r.i64());
    r.need(static_cast<std::size_t>(n) * 4);
    t.data.resize(n);
    for (float& f : t.data) f = r.f32();
  }
  return {std::move(tensors), std::move(meta)};
}

std::string save_checkpoint(const Params<float>& params, nlohmann::json meta) {
  meta["drc"] = config_to_json(params.config);
  std::vector<NamedTensor> tensors;
  params.for_each([&](const std::string& name, const Mat<float>& m) {
    tensors.push_back({name, {m.rows(), m.cols()}, std::vector<float>(m.data(), m.data() + m.size())});
  });
  return save_container(tensors, meta);
}

std::pair<Params<float>, nlohmann::json> load_checkpoint(const std::string& bytes) {
  auto [tensors, meta] = load_container(bytes);
  if (!meta.contains("drc")) throw Error(Errc::UnknownSchema, "container has no network config");
  Params<float> p = Params<float>::zeros(config_from_json(meta["drc"]));
  std::size_t i = 0;
  p.for_each([&](const std::string& name, Mat<float>& m) {
    if (i >= tensors.size() || tensors[i].name != name) throw Error(Errc::ShapeMismatch, "missing tensor '" + name + "'");
    const NamedTensor& t = tensors[i++];
    if (t.shape.size() != 2 || t.shape[0] != m.rows() || t.shape[1] != m.cols()) {
      throw Error(Errc::ShapeMismatch, "tensor '" + name + "' has the wrong shape");
    }
    m = Eigen::Map<const Mat<float>>(t.data.data(), m.rows(), m.cols());
  });
  return {std::move(p), std::move(meta)};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

#define SOKOPLAN_INSTANTIATE(S)                                                                                      \
  template struct Params<S>;                                                                                         \
  template struct DRCState<S>;                                                                                       \
  template struct StepOutput<S>;                                                                                     \
  template Mat<S> im2col<S>(const Mat<S>&, int);                                                                     \
  template Params<S> init_params<S>(const DRCConfig&, std::uint64_t);                                                \
  template FeatureMap<S> encode<S>(const Params<S>&, const ObsTensor&, StepTape<S>*);                                \
  template FeatureMap<S> pool_and_inject<S>(const LayerParams<S>&, const FeatureMap<S>&);                            \
  template DRCState<S> tick<S>(const Params<S>&, const FeatureMap<S>&, const DRCState<S>&, const HookSet&, int,      \
                               StepTape<S>*);                                                                        \
  template StepOutput<S> forward_step<S>(const Params<S>&, const ObsTensor&, const DRCState<S>&, const HookSet&,     \
                                         StepTape<S>*);                                                              \
  template void backward<S>(const Params<S>&, const std::vector<StepTape<S>>&, const std::vector<StepGrad<S>>&,      \
                            Params<S>&);

SOKOPLAN_INSTANTIATE(float)
SOKOPLAN_INSTANTIATE(double)

}  // namespace sokoplan
