#include "sokoplan/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace sokoplan {

void ProbeConfig::validate() const {
  const bool future = std::holds_alternative<FutureAction>(target);
  if (future) {
    const int n = std::get<FutureAction>(target).n;
    if (n < 1 || n > 10) throw Error(Errc::InvalidArgument, "future offset must be in 1..10");
  }
  if (kernel != kGlobalKernel && (kernel < 1 || kernel > 7 || kernel % 2 == 0)) {
    throw Error(Errc::InvalidArgument, "kernel must be 1, 3, 5, 7 or global");
  }
  if (kernel == kGlobalKernel && !future) throw Error(Errc::InvalidArgument, "global probes decode future actions only");
  if (channels < 1) throw Error(Errc::InvalidArgument, "channels must be positive");
  if (source.kind == SourceKind::CellState && source.layer < 0) throw Error(Errc::InvalidArgument, "negative layer");
}

int ProbeConfig::num_classes() const {
  if (const auto* spec = std::get_if<ConceptSpec>(&target)) return static_cast<int>(class_set(spec->kind).size());
  return kFutureActionClasses;
}

int ProbeConfig::feature_dim() const { return (global() ? kCells : kernel * kernel) * channels; }

nlohmann::json probe_config_to_json(const ProbeConfig& c) {
  nlohmann::json j;
  if (const auto* spec = std::get_if<ConceptSpec>(&c.target)) {
    j["target"] = {{"concept", concept_spec_to_json(*spec)}};
  } else {
    j["target"] = {{"future_action", std::get<FutureAction>(c.target).n}};
  }
  if (c.source.kind == SourceKind::CellState) {
    j["source"] = {{"kind", "cell_state"}, {"layer", c.source.layer}};
  } else {
    j["source"] = {{"kind", "observation"}};
  }
  j["kernel"] = c.global() ? nlohmann::json("global") : nlohmann::json(c.kernel);
  j["channels"] = c.channels;
  j["seed"] = c.seed;
  return j;
}

ProbeConfig probe_config_from_json(const nlohmann::json& j) {
  ProbeConfig c;
  try {
    const auto& t = j.at("target");
    if (t.contains("concept")) {
      c.target = concept_spec_from_json(t.at("concept"));
    } else {
      c.target = FutureAction{t.at("future_action").get<int>()};
    }
    const auto& s = j.at("source");
    const std::string kind = s.at("kind").get<std::string>();
    if (kind == "cell_state") {
      c.source = {SourceKind::CellState, s.at("layer").get<int>()};
    } else if (kind == "observation") {
      c.source = {SourceKind::Observation, 0};
    } else {
      throw Error(Errc::InvalidArgument, "unknown probe source '" + kind + "'");
    }
    const auto& k = j.at("kernel");
    c.kernel = k.is_string() && k.get<std::string>() == "global" ? kGlobalKernel : k.get<int>();
    c.channels = j.at("channels").get<int>();
    c.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("probe config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string class_label(const ProbeTarget& target, int k) {
  if (const auto* spec = std::get_if<ConceptSpec>(&target)) {
    return std::string(concept_class_name(class_set(spec->kind).at(k)));
  }
  if (k == static_cast<int>(Action::Noop)) return "NOOP";
  if (k == kPad) return "PAD";
  return std::string(direction_name(static_cast<Direction>(k)));
}

template <typename Scalar>
Probe<Scalar> Probe<Scalar>::zeros(const ProbeConfig& config) {
  config.validate();
  Probe p;
  p.config = config;
  p.weight = Mat<Scalar>::Zero(config.feature_dim(), config.num_classes());
  p.bias = RowVec<Scalar>::Zero(config.num_classes());
  return p;
}

template <typename Scalar>
RowVec<Scalar> extract_features(const FeatureMap<Scalar>& map, Pos pos, int kernel) {
  if (!pos.on_grid()) throw Error(Errc::IndexOutOfRange, "off-grid position");
  if (kernel == kGlobalKernel) return Eigen::Map<const RowVec<Scalar>>(map.data(), map.size());
  const int C = static_cast<int>(map.cols()), r = kernel / 2;
  RowVec<Scalar> out = RowVec<Scalar>::Zero(kernel * kernel * C);
  for (int dr = -r; dr <= r; ++dr) {
    for (int dc = -r; dc <= r; ++dc) {
      const Pos q{pos.row + dr, pos.col + dc};
      if (q.on_grid()) out.segment(((dr + r) * kernel + (dc + r)) * C, C) = map.row(q.index());
    }
  }
  return out;
}

template <typename Scalar>
Mat<Scalar> extract_all(const FeatureMap<Scalar>& map, int kernel) {
  if (kernel == kGlobalKernel) return Eigen::Map<const Mat<Scalar>>(map.data(), 1, map.size());
  if (kernel == 1) return map;
  return im2col(map, kernel);
}

template <typename Scalar>
void ProbeDataset<Scalar>::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(Errc::LengthMismatch, "features and labels differ in length");
  }
  if (!features.allFinite()) throw Error(Errc::InvalidArgument, "non-finite features");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw Error(Errc::InvalidArgument, "label outside the class set");
  }
}

template <typename Scalar>
Probe<Scalar> train_probe(const ProbeDataset<Scalar>& data, const ProbeConfig& config, const ProbeHyper& hyper) {
  if (data.size() == 0) throw Error(Errc::EmptyDataset, "probe dataset is empty");
  data.validate();
  Probe<Scalar> probe = Probe<Scalar>::zeros(config);
  const int F = config.feature_dim(), K = config.num_classes();
  if (data.features.cols() != F) throw Error(Errc::ShapeMismatch, "feature width does not match the probe config");
  if (data.num_classes != K) throw Error(Errc::ShapeMismatch, "class count does not match the probe config");

  std::mt19937_64 rng(config.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(F));
  std::uniform_real_distribution<double> init(-bound, bound);
  for (Eigen::Index i = 0; i < probe.weight.size(); ++i) probe.weight.data()[i] = static_cast<Scalar>(init(rng));
  for (int k = 0; k < K; ++k) probe.bias(k) = static_cast<Scalar>(init(rng));
  probe.single_class = std::all_of(data.labels.begin(), data.labels.end(), [&](int y) { return y == data.labels[0]; });

  Mat<Scalar> mw = Mat<Scalar>::Zero(F, K), vw = Mat<Scalar>::Zero(F, K);
  RowVec<Scalar> mb = RowVec<Scalar>::Zero(K), vb = RowVec<Scalar>::Zero(K);
  const Scalar b1 = static_cast<Scalar>(hyper.beta1), b2 = static_cast<Scalar>(hyper.beta2);
  const Scalar lr = static_cast<Scalar>(hyper.lr), eps = static_cast<Scalar>(hyper.eps);
  const Scalar decay = static_cast<Scalar>(1.0 - hyper.lr * hyper.weight_decay);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int B = hyper.batch_size;
  Mat<Scalar> x(B, F), grad(B, K);
  std::int64_t step = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += B) {
      const int n = static_cast<int>(std::min<std::size_t>(B, order.size() - start));
      for (int i = 0; i < n; ++i) x.row(i) = data.features.row(static_cast<Eigen::Index>(order[start + i]));
      auto xb = x.topRows(n);
      auto gb = grad.topRows(n);
      gb.noalias() = xb * probe.weight;
      gb.rowwise() += probe.bias;
      for (int i = 0; i < n; ++i) {
        auto row = gb.row(i);
        row.array() -= row.maxCoeff();
        row = row.array().exp();
        row /= row.sum();
        row(data.labels[order[start + i]]) -= Scalar(1);
      }
      gb /= static_cast<Scalar>(n);
      const Mat<Scalar> gw = xb.transpose() * gb;
      const RowVec<Scalar> gbias = gb.colwise().sum();

      ++step;
      const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(hyper.beta1, static_cast<double>(step)));
      const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(hyper.beta2, static_cast<double>(step)));
      mw = b1 * mw + (Scalar(1) - b1) * gw;
      vw = b2 * vw + (Scalar(1) - b2) * gw.cwiseAbs2();
      mb = b1 * mb + (Scalar(1) - b1) * gbias;
      vb = b2 * vb + (Scalar(1) - b2) * gbias.cwiseAbs2();
      probe.weight *= decay;
      probe.bias *= decay;
      probe.weight.array() -= lr * (mw.array() / c1) / ((vw.array() / c2).sqrt() + eps);
      probe.bias.array() -= lr * (mb.array() / c1) / ((vb.array() / c2).sqrt() + eps);
    }
  }
  return probe;
}

template <typename Scalar>
Mat<Scalar> probe_logits(const Probe<Scalar>& probe, const FeatureMap<Scalar>& source) {
  if (source.rows() != kCells || source.cols() != probe.config.channels) {
    throw Error(Errc::SourceMismatch, "source map has " + std::to_string(source.cols()) + " channels, probe expects " +
                                          std::to_string(probe.config.channels));
  }
  Mat<Scalar> logits = extract_all(source, probe.config.kernel) * probe.weight;
  logits.rowwise() += probe.bias;
  return logits;
}

template <typename Scalar>
std::vector<int> predict_indices(const Probe<Scalar>& probe, const FeatureMap<Scalar>& source) {
  const Mat<Scalar> logits = probe_logits(probe, source);
  std::vector<int> out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, best)) best = k;
    }
    out[i] = best;
  }
  return out;
}

template <typename Scalar>
const FeatureMap<Scalar>& probe_source(const Probe<Scalar>& probe, const TickCapture<Scalar>& capture) {
  if (probe.config.source.kind != SourceKind::CellState) {
    throw Error(Errc::SourceMismatch, "probe reads observations, not cell states");
  }
  const int layer = probe.config.source.layer;
  if (layer >= static_cast<int>(capture.g.size())) {
    throw Error(Errc::SourceMismatch, "probe layer " + std::to_string(layer) + " is not in the capture");
  }
  return capture.g[layer];
}

template <typename Scalar>
FeatureMap<Scalar> probe_source(const Probe<Scalar>& probe, const ObsTensor& obs) {
  if (probe.config.source.kind != SourceKind::Observation) {
    throw Error(Errc::SourceMismatch, "probe reads cell states, not observations");
  }
  return obs.template cast<Scalar>();
}

template <typename Scalar>
ConceptGrid predict_grid(const Probe<Scalar>& probe, const FeatureMap<Scalar>& source) {
  const auto* spec = std::get_if<ConceptSpec>(&probe.config.target);
  if (!spec || probe.config.global()) throw Error(Errc::SourceMismatch, "not a per-square concept probe");
  const auto& classes = class_set(spec->kind);
  const auto idx = predict_indices(probe, source);
  ConceptGrid grid;
  for (int cell = 0; cell < kCells; ++cell) grid[cell] = classes[idx[cell]];
  return grid;
}

template <typename Scalar>
ConceptGrid predict_grid(const Probe<Scalar>& probe, const TickCapture<Scalar>& capture) {
  return predict_grid(probe, probe_source(probe, capture));
}

template <typename Scalar>
ConceptGrid predict_grid(const Probe<Scalar>& probe, const ObsTensor& obs) {
  return predict_grid(probe, probe_source(probe, obs));
}

std::vector<ClassMetrics> per_class_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                                            int num_classes) {
  if (predictions.size() != labels.size()) throw Error(Errc::LengthMismatch, "predictions and labels differ in length");
  std::vector<ClassMetrics> rows(num_classes);
  for (int k = 0; k < num_classes; ++k) rows[k].cls = k;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if (y < 0 || y >= num_classes || p < 0 || p >= num_classes) {
      throw Error(Errc::IndexOutOfRange, "class index outside [0, num_classes)");
    }
    ++rows[y].support;
    ++rows[p].predicted;
    if (y == p) ++rows[y].true_positive;
  }
  for (ClassMetrics& m : rows) {
    const double tp = static_cast<double>(m.true_positive);
    m.precision = m.predicted ? tp / m.predicted : 0.0;
    m.recall = m.support ? tp / m.support : 0.0;
    const double denom = static_cast<double>(m.support + m.predicted);
    m.f1 = denom > 0 ? 2 * tp / denom : 0.0;
  }
  return rows;
}

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels, int num_classes) {
  const auto rows = per_class_metrics(predictions, labels, num_classes);
  double sum = 0;
  int present = 0;
  for (const ClassMetrics& m : rows) {
    if (m.support + m.predicted == 0) continue;
    sum += m.f1;
    ++present;
  }
  return present ? sum / present : 1.0;
}

std::string metrics_csv(const std::vector<ClassMetrics>& rows, const ProbeTarget& target) {
  std::ostringstream out;
  out << "class,support,predicted,precision,recall,f1\n";
  for (const ClassMetrics& m : rows) {
    out << class_label(target, m.cls) << ',' << m.support << ',' << m.predicted << ',' << m.precision << ','
        << m.recall << ',' << m.f1 << '\n';
  }
  return out.str();
}

template <typename Scalar>
Probe<Scalar> random_probe(const ProbeConfig& config, std::uint64_t seed, const Probe<Scalar>& norm_reference) {
  Probe<Scalar> p = Probe<Scalar>::zeros(config);
  if (p.weight.rows() != norm_reference.weight.rows() || p.weight.cols() != norm_reference.weight.cols()) {
    throw Error(Errc::ShapeMismatch, "random probe shape differs from its norm reference");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int k = 0; k < p.weight.cols(); ++k) {
    Vec<Scalar> dir(p.weight.rows());
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = static_cast<Scalar>(normal(rng));
    const Scalar target = norm_reference.weight.col(k).norm();
    p.weight.col(k) = target == Scalar(0) ? Vec<Scalar>::Zero(dir.size()) : Vec<Scalar>(dir.normalized() * target);
  }
  return p;
}

std::string save_probe(const Probe<float>& probe, nlohmann::json meta) {
  meta["probe"] = probe_config_to_json(probe.config);
  meta["single_class"] = probe.single_class;
  auto tensor = [](const std::string& name, const Mat<float>& m) {
    return NamedTensor{name, {m.rows(), m.cols()}, std::vector<float>(m.data(), m.data() + m.size())};
  };
  return save_container({tensor("probe.weight", probe.weight), tensor("probe.bias", probe.bias)}, meta);
}

std::pair<Probe<float>, nlohmann::json> load_probe(const std::string& bytes) {
  auto [tensors, meta] = load_container(bytes);
  if (!meta.contains("probe")) throw Error(Errc::InvalidArgument, "container holds no probe config");
  Probe<float> p = Probe<float>::zeros(probe_config_from_json(meta["probe"]));
  p.single_class = meta.value("single_class", false);
  for (const NamedTensor& t : tensors) {
    Mat<float>* dst = t.name == "probe.weight" ? &p.weight : nullptr;
    if (t.name == "probe.bias") {
      if (t.data.size() != static_cast<std::size_t>(p.bias.size())) throw Error(Errc::ShapeMismatch, "probe bias");
      p.bias = Eigen::Map<const RowVec<float>>(t.data.data(), p.bias.size());
      continue;
    }
    if (!dst) throw Error(Errc::InvalidArgument, "unexpected tensor '" + t.name + "'");
    if (t.shape.size() != 2 || t.shape[0] != dst->rows() || t.shape[1] != dst->cols()) {
      throw Error(Errc::ShapeMismatch, "probe weight shape");
    }
    *dst = Eigen::Map<const Mat<float>>(t.data.data(), dst->rows(), dst->cols());
  }
  return {std::move(p), std::move(meta)};
}

#define SOKOPLAN_INSTANTIATE(S)                                                                                 \
  template struct Probe<S>;                                                                                     \
  template struct ProbeDataset<S>;                                                                              \
  template RowVec<S> extract_features<S>(const FeatureMap<S>&, Pos, int);                                       \
  template Mat<S> extract_all<S>(const FeatureMap<S>&, int);                                                    \
  template Probe<S> train_probe<S>(const ProbeDataset<S>&, const ProbeConfig&, const ProbeHyper&);              \
  template Mat<S> probe_logits<S>(const Probe<S>&, const FeatureMap<S>&);                                       \
  template std::vector<int> predict_indices<S>(const Probe<S>&, const FeatureMap<S>&);                          \
  template const FeatureMap<S>& probe_source<S>(const Probe<S>&, const TickCapture<S>&);                        \
  template FeatureMap<S> probe_source<S>(const Probe<S>&, const ObsTensor&);                                    \
  template ConceptGrid predict_grid<S>(const Probe<S>&, const FeatureMap<S>&);                                  \
  template ConceptGrid predict_grid<S>(const Probe<S>&, const TickCapture<S>&);                                 \
  template ConceptGrid predict_grid<S>(const Probe<S>&, const ObsTensor&);                                      \
  template Probe<S> random_probe<S>(const ProbeConfig&, std::uint64_t, const Probe<S>&);

SOKOPLAN_INSTANTIATE(float)
SOKOPLAN_INSTANTIATE(double)

}  // namespace sokoplan
