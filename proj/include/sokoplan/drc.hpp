#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "sokoplan/sokoban.hpp"

namespace sokoplan {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Spatial feature maps are stored as 64 x C matrices: row = cell index
/// (r * 8 + c), column = channel.
template <typename Scalar>
using FeatureMap = Mat<Scalar>;

/// k x k patches of a feature map, one row per cell, zero-padded at the
/// border. Column (o * C + c) holds channel c of the cell at kernel offset
/// o = (dr + k/2) * k + (dc + k/2), for row/column offsets dr, dc.
template <typename Scalar>
Mat<Scalar> im2col(const Mat<Scalar>& x, int k);

struct DRCConfig {
  int D = 3;
  int N = 3;
  int G = 32;
  int kernel = 3;
  int head_dim = 256;

  void validate() const;
  bool operator==(const DRCConfig&) const = default;
};

nlohmann::json config_to_json(const DRCConfig& c);
DRCConfig config_from_json(const nlohmann::json& j);

/// Number of scalars in Params for a config:
///   encoder  k²·7·G + G + k²·G² + G
///   layer    k²·(4G)² + 4G + 2G·64G + 64G          (times D)
///   head     128G·H + H + 5H + 5 + H + 1
std::int64_t parameter_count(const DRCConfig& c);

/// Weights of a ConvLSTM layer. Gate columns are ordered [input, forget,
/// output, candidate]; the input channels are [encoding, lower-or-top-down
/// hidden, pool-and-inject, own previous hidden].
template <typename Scalar>
struct LayerParams {
  Mat<Scalar> w;   // k²·4G x 4G
  Mat<Scalar> b;   // 1 x 4G
  Mat<Scalar> wp;  // 2G x 64G, pool-and-inject projection
  Mat<Scalar> bp;  // 1 x 64G
};

template <typename Scalar>
struct Params {
  DRCConfig config;
  Mat<Scalar> enc_w1, enc_b1;  // k²·7 x G, 1 x G
  Mat<Scalar> enc_w2, enc_b2;  // k²·G x G, 1 x G
  std::vector<LayerParams<Scalar>> layers;
  Mat<Scalar> head_w, head_b;      // 128G x H, 1 x H
  Mat<Scalar> policy_w, policy_b;  // H x 5, 1 x 5
  Mat<Scalar> value_w, value_b;    // H x 1, 1 x 1

  /// Zero-filled parameters shaped for `config`.
  static Params zeros(const DRCConfig& config);

  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  std::int64_t size() const;

  template <typename To>
  Params<To> cast() const {
    Params<To> out;
    out.config = config;
    out.layers.resize(layers.size());
    auto dst = out.tensor_ptrs();
    std::size_t i = 0;
    for_each([&](const std::string&, const Mat<Scalar>& m) { *dst[i++] = m.template cast<To>(); });
    return out;
  }

  std::vector<Mat<Scalar>*> tensor_ptrs() {
    std::vector<Mat<Scalar>*> out;
    for_each([&](const std::string&, Mat<Scalar>& m) { out.push_back(&m); });
    return out;
  }

  bool operator==(const Params& o) const;

 private:
  template <typename P, typename F>
  static void visit(P& p, F& f) {
    f("encoder.w1", p.enc_w1);
    f("encoder.b1", p.enc_b1);
    f("encoder.w2", p.enc_w2);
    f("encoder.b2", p.enc_b2);
    for (std::size_t d = 0; d < p.layers.size(); ++d) {
      const std::string prefix = "layer" + std::to_string(d) + ".";
      f(prefix + "w", p.layers[d].w);
      f(prefix + "b", p.layers[d].b);
      f(prefix + "wp", p.layers[d].wp);
      f(prefix + "bp", p.layers[d].bp);
    }
    f("head.w", p.head_w);
    f("head.b", p.head_b);
    f("policy.w", p.policy_w);
    f("policy.b", p.policy_b);
    f("value.w", p.value_w);
    f("value.b", p.value_b);
  }
};

/// Uniform fan-in scaled initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// zero biases except +1 on the forget gate.
template <typename Scalar>
Params<Scalar> init_params(const DRCConfig& config, std::uint64_t seed);

template <typename Scalar>
struct DRCState {
  std::vector<FeatureMap<Scalar>> h;  // per layer, 64 x G
  std::vector<FeatureMap<Scalar>> g;

  static DRCState zeros(const DRCConfig& config);
  bool operator==(const DRCState& o) const { return h == o.h && g == o.g; }
};

/// Additive cell-state edit: after layer `layer` updates its cell at a
/// matching tick, alpha * vector is added at `pos` before the hidden state is
/// formed from it.
struct Hook {
  int layer = 0;
  std::optional<int> tick;  // 0-based tick index; nullopt = every tick
  Pos pos;
  Eigen::VectorXf vector;
  float alpha = 1.0f;
};
using HookSet = std::vector<Hook>;

template <typename Scalar>
struct TickCapture {
  std::vector<FeatureMap<Scalar>> g;  // per layer, post-hook
  std::vector<FeatureMap<Scalar>> h;
};
/// One entry per tick of a step.
template <typename Scalar>
using TickTrace = std::vector<TickCapture<Scalar>>;

template <typename Scalar>
struct StepOutput {
  Vec<Scalar> logits;  // 5
  Scalar value = 0;
  DRCState<Scalar> state;
  TickTrace<Scalar> trace;
  FeatureMap<Scalar> encoding;

  Action greedy_action() const;
};

/// Values kept by a recorded forward step for the backward pass.
template <typename Scalar>
struct LayerTape {
  Mat<Scalar> cols;      // im2col of the layer input, 64 x k²·4G
  Mat<Scalar> gates;     // post-activation gates, 64 x 4G
  Mat<Scalar> g_prev;    // cell before the update
  Mat<Scalar> tanh_g;    // tanh of the post-hook cell
  RowVec<Scalar> pooled;  // [mean; max] of the previous hidden, 2G
  std::vector<int> argmax;  // per channel, cell index of the max
};

template <typename Scalar>
struct StepTape {
  Mat<Scalar> obs_cols;  // 64 x k²·7
  Mat<Scalar> a1;        // first encoder activation, 64 x G
  Mat<Scalar> a1_cols;   // 64 x k²·G
  Mat<Scalar> enc;       // 64 x G
  std::vector<LayerTape<Scalar>> ticks;  // N·D entries, tick-major
  RowVec<Scalar> head_in;  // 1 x 128G
  RowVec<Scalar> head_out;  // 1 x H, post-ReLU
};

template <typename Scalar>
FeatureMap<Scalar> encode(const Params<Scalar>& params, const ObsTensor& obs, StepTape<Scalar>* tape = nullptr);

/// [mean; max] pooling over the 64 cells, affine map, reshape to 64 x G.
template <typename Scalar>
FeatureMap<Scalar> pool_and_inject(const LayerParams<Scalar>& layer, const FeatureMap<Scalar>& h);

/// One pass of the D-layer stack.
template <typename Scalar>
DRCState<Scalar> tick(const Params<Scalar>& params, const FeatureMap<Scalar>& encoding, const DRCState<Scalar>& state,
                      const HookSet& hooks, int tick_index, StepTape<Scalar>* tape = nullptr);

template <typename Scalar>
StepOutput<Scalar> forward_step(const Params<Scalar>& params, const ObsTensor& obs, const DRCState<Scalar>& state,
                                const HookSet& hooks = {}, StepTape<Scalar>* tape = nullptr);

/// Loss gradient with respect to one step's outputs.
template <typename Scalar>
struct StepGrad {
  Vec<Scalar> dlogits;  // 5
  Scalar dvalue = 0;
};

/// Reverse-mode gradients through a recorded window of consecutive steps.
/// The gradient flowing into the window's initial state is dropped, which is
/// what truncated BPTT needs. Accumulates into `grads`. Throws
/// NonFiniteGradient.
template <typename Scalar>
void backward(const Params<Scalar>& params, const std::vector<StepTape<Scalar>>& tapes,
              const std::vector<StepGrad<Scalar>>& step_grads, Params<Scalar>& grads);

// Named-tensor container ------------------------------------------------------

struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;
};

/// Layout (little-endian): "SKPC", u32 version, u32 meta length, meta JSON,
/// u32 tensor count, then per tensor: u32 name length, name, u32 rank,
/// i64 dims, f32 data; finally a CRC-32 of every preceding byte.
inline constexpr std::uint32_t kContainerVersion = 1;

std::string save_container(const std::vector<NamedTensor>& tensors, const nlohmann::json& meta);
/// Throws CorruptChecksum (bad magic, truncation, checksum) or VersionMismatch.
std::pair<std::vector<NamedTensor>, nlohmann::json> load_container(const std::string& bytes);

/// Container with the config under meta["drc"].
std::string save_checkpoint(const Params<float>& params, nlohmann::json meta = nlohmann::json::object());
std::pair<Params<float>, nlohmann::json> load_checkpoint(const std::string& bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace sokoplan
