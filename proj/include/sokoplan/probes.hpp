#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sokoplan/concepts.hpp"
#include "sokoplan/drc.hpp"

namespace sokoplan {

/// Action taken n steps ahead, n = 1 being the current step.
struct FutureAction {
  int n = 1;
  bool operator==(const FutureAction&) const = default;
};
using ProbeTarget = std::variant<ConceptSpec, FutureAction>;

enum class SourceKind { CellState, Observation };

struct ProbeSource {
  SourceKind kind = SourceKind::CellState;
  int layer = 0;  // CellState only
  bool operator==(const ProbeSource&) const = default;
};

/// Kernel value selecting a global probe over the whole 8 x 8 x C volume.
inline constexpr int kGlobalKernel = 0;

struct ProbeConfig {
  ProbeTarget target = ConceptSpec{};
  ProbeSource source;
  int kernel = 1;    // 1, 3, 5, 7 or kGlobalKernel
  int channels = 32;  // C of the source: G for cell states, 7 for observations
  std::uint64_t seed = 0;

  /// Throws InvalidArgument.
  void validate() const;
  int num_classes() const;
  /// Length of a feature vector: k²·C, or 64·C for global probes.
  int feature_dim() const;
  bool global() const { return kernel == kGlobalKernel; }
  bool operator==(const ProbeConfig&) const = default;
};

nlohmann::json probe_config_to_json(const ProbeConfig& c);
ProbeConfig probe_config_from_json(const nlohmann::json& j);

/// Label used for class k of a probe target: the concept class name, or the
/// action name for future-action probes.
std::string class_label(const ProbeTarget& target, int k);

/// Logits are features * weight + bias; column k of weight is the class
/// vector w_k.
template <typename Scalar>
struct Probe {
  ProbeConfig config;
  Mat<Scalar> weight;  // feature_dim x num_classes
  RowVec<Scalar> bias;  // num_classes
  bool single_class = false;  // trained on a dataset with one label only

  /// Weights only, the bias is not counted.
  std::int64_t parameter_count() const { return weight.size(); }
  Vec<Scalar> class_vector(int k) const { return weight.col(k); }
  static Probe zeros(const ProbeConfig& config);
  bool operator==(const Probe& o) const {
    return config == o.config && single_class == o.single_class && weight.rows() == o.weight.rows() &&
           weight.cols() == o.weight.cols() && weight == o.weight && bias.size() == o.bias.size() && bias == o.bias;
  }
};

/// Feature vector of one cell: its k x k patch in im2col order, or the whole
/// map flattened cell-major for global probes.
template <typename Scalar>
RowVec<Scalar> extract_features(const FeatureMap<Scalar>& map, Pos pos, int kernel);

/// All 64 patch vectors at once (one row per cell); a single row for global
/// probes.
template <typename Scalar>
Mat<Scalar> extract_all(const FeatureMap<Scalar>& map, int kernel);

/// Where a record came from.
struct RecordOrigin {
  int episode = 0;
  int step = 0;
  int tick = 0;
  Pos pos;
};

template <typename Scalar>
struct ProbeDataset {
  Mat<Scalar> features;  // records x feature_dim
  std::vector<int> labels;
  std::vector<RecordOrigin> origins;
  int num_classes = 0;
  std::string corpus;  // e.g. "train" or "validation"

  std::size_t size() const { return labels.size(); }
  /// Throws InvalidArgument on non-finite features or out-of-range labels.
  void validate() const;
};

struct ProbeHyper {
  double lr = 1e-3;
  double weight_decay = 1e-3;
  int batch_size = 16;
  int epochs = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Multinomial logistic regression trained with AdamW. Weights and bias start
/// at U(-1/sqrt(F), 1/sqrt(F)); the record order is reshuffled each epoch from
/// config.seed. Throws EmptyDataset.
template <typename Scalar>
Probe<Scalar> train_probe(const ProbeDataset<Scalar>& data, const ProbeConfig& config, const ProbeHyper& hyper = {});

/// Per-cell logits (64 x K), or 1 x K for global probes.
template <typename Scalar>
Mat<Scalar> probe_logits(const Probe<Scalar>& probe, const FeatureMap<Scalar>& source);

/// Argmax class index per row of probe_logits, lowest index on ties.
template <typename Scalar>
std::vector<int> predict_indices(const Probe<Scalar>& probe, const FeatureMap<Scalar>& source);

/// The map a probe reads from a tick capture or an observation. Throws
/// SourceMismatch when the probe reads the other kind or a missing layer.
template <typename Scalar>
const FeatureMap<Scalar>& probe_source(const Probe<Scalar>& probe, const TickCapture<Scalar>& capture);
template <typename Scalar>
FeatureMap<Scalar> probe_source(const Probe<Scalar>& probe, const ObsTensor& obs);

/// Decoded concept grid of a local concept probe. Throws SourceMismatch for
/// global or future-action probes.
template <typename Scalar>
ConceptGrid predict_grid(const Probe<Scalar>& probe, const FeatureMap<Scalar>& source);
template <typename Scalar>
ConceptGrid predict_grid(const Probe<Scalar>& probe, const TickCapture<Scalar>& capture);
template <typename Scalar>
ConceptGrid predict_grid(const Probe<Scalar>& probe, const ObsTensor& obs);

struct ClassMetrics {
  int cls = 0;
  std::int64_t support = 0;    // records labeled cls
  std::int64_t predicted = 0;  // records predicted cls
  std::int64_t true_positive = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// One-vs-rest metrics for every class in [0, num_classes). Throws
/// LengthMismatch.
std::vector<ClassMetrics> per_class_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                                            int num_classes);
/// Unweighted mean F1 over classes that appear in the labels or the
/// predictions. 1.0 for empty inputs.
double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels, int num_classes);
/// Columns: class,support,predicted,precision,recall,f1.
std::string metrics_csv(const std::vector<ClassMetrics>& rows, const ProbeTarget& target);

/// Gaussian direction per class, rescaled to the norm of the reference's
/// class vector; zero bias. Throws ShapeMismatch when the config's shape
/// differs from the reference.
template <typename Scalar>
Probe<Scalar> random_probe(const ProbeConfig& config, std::uint64_t seed, const Probe<Scalar>& norm_reference);

/// Checkpoint container with the config under meta["probe"].
std::string save_probe(const Probe<float>& probe, nlohmann::json meta = nlohmann::json::object());
std::pair<Probe<float>, nlohmann::json> load_probe(const std::string& bytes);

}  // namespace sokoplan
