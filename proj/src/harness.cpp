#include "sokoplan/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace sokoplan {

std::int64_t ActivationDataset::transitions() const {
  std::int64_t n = 0;
  for (const EpisodeActivations& e : episodes) n += e.trajectory.length();
  return n;
}

ActivationDataset collect_probe_dataset(const Params<float>& params, const std::vector<Level>& levels, int n_episodes,
                                        Capture capture, const std::string& corpus, int thinking_steps) {
  if (levels.empty()) throw Error(Errc::EmptyDataset, "no levels to collect from");
  ActivationDataset data;
  data.corpus = corpus;
  data.config = params.config;
  data.capture = capture;
  for (int i = 0; i < n_episodes; ++i) {
    const Level& level = levels[static_cast<std::size_t>(i) % levels.size()];
    RolloutOptions opt;
    opt.episode_seed = static_cast<std::uint64_t>(i);
    opt.thinking_steps = thinking_steps;
    Rollout r = greedy_rollout(params, level, opt);
    EpisodeActivations ep;
    ep.level = level;
    ep.episode_seed = opt.episode_seed;
    ep.thinking_steps = thinking_steps;
    ep.trajectory = std::move(r.trajectory);
    for (TickTrace<float>& trace : r.traces) {
      std::vector<std::vector<FeatureMap<float>>> step;
      if (capture == Capture::FinalTick) {
        step.push_back(std::move(trace.back().g));
      } else {
        for (TickCapture<float>& c : trace) step.push_back(std::move(c.g));
      }
      ep.cells.push_back(std::move(step));
    }
    data.episodes.push_back(std::move(ep));
  }
  return data;
}

namespace {

std::string actions_string(const Trajectory& traj) {
  std::string s;
  for (const Transition& t : traj.steps) s += action_letter(t.action);
  return s;
}

std::vector<Action> parse_actions(const std::string& s) {
  std::vector<Action> out;
  for (char c : s) {
    const auto a = parse_action_letter(c);
    if (!a) throw Error(Errc::MalformedRecord, std::string("bad action letter '") + c + "'");
    out.push_back(*a);
  }
  return out;
}

}  // namespace

std::string save_activation_dataset(const ActivationDataset& data) {
  nlohmann::json meta;
  meta["format"] = "sokoplan-activations";
  meta["corpus"] = data.corpus;
  meta["drc"] = config_to_json(data.config);
  meta["capture"] = data.capture == Capture::FinalTick ? "final_tick" : "all_ticks";
  meta["episodes"] = nlohmann::json::array();
  std::vector<NamedTensor> tensors;
  const int G = data.config.G, ticks = data.ticks_per_step();
  for (std::size_t i = 0; i < data.episodes.size(); ++i) {
    const EpisodeActivations& ep = data.episodes[i];
    nlohmann::json e{{"level_id", ep.level.id},
                     {"board", board_to_text(ep.level.initial)},
                     {"episode_seed", ep.episode_seed},
                     {"thinking_steps", ep.thinking_steps},
                     {"actions", actions_string(ep.trajectory)}};
    if (ep.level.annotations) e["annotations"] = route_annotations_to_json(*ep.level.annotations);
    meta["episodes"].push_back(std::move(e));
    const std::int64_t rows = static_cast<std::int64_t>(ep.cells.size()) * ticks;
    for (int d = 0; d < data.config.D; ++d) {
      NamedTensor t{"ep" + std::to_string(i) + ".layer" + std::to_string(d), {rows, kCells, G}, {}};
      t.data.reserve(static_cast<std::size_t>(rows) * kCells * G);
      for (const auto& step : ep.cells) {
        for (const auto& tick : step) t.data.insert(t.data.end(), tick[d].data(), tick[d].data() + tick[d].size());
      }
      tensors.push_back(std::move(t));
    }
  }
  return save_container(tensors, meta);
}

ActivationDataset load_activation_dataset(const std::string& bytes) {
  auto [tensors, meta] = load_container(bytes);
  if (meta.value("format", std::string()) != "sokoplan-activations") {
    throw Error(Errc::UnknownSchema, "container is not an activation dataset");
  }
  ActivationDataset data;
  data.corpus = meta.at("corpus").get<std::string>();
  data.config = config_from_json(meta.at("drc"));
  data.capture = meta.at("capture").get<std::string>() == "final_tick" ? Capture::FinalTick : Capture::AllTicks;
  std::map<std::string, const NamedTensor*> by_name;
  for (const NamedTensor& t : tensors) by_name[t.name] = &t;
  const int G = data.config.G, ticks = data.ticks_per_step();
  const auto& episodes = meta.at("episodes");
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    EpisodeActivations ep;
    ep.level.id = e.at("level_id").get<std::string>();
    ep.level.initial = board_from_text(e.at("board").get<std::string>());
    if (e.contains("annotations")) ep.level.annotations = route_annotations_from_json(e["annotations"]);
    ep.episode_seed = e.at("episode_seed").get<std::uint64_t>();
    ep.thinking_steps = e.at("thinking_steps").get<int>();
    ep.trajectory = rollout_actions(start_episode(ep.level, ep.episode_seed),
                                    parse_actions(e.at("actions").get<std::string>()), ep.level.id);
    const int steps = ep.trajectory.length();
    ep.cells.assign(steps, std::vector<std::vector<FeatureMap<float>>>(ticks, std::vector<FeatureMap<float>>(data.config.D)));
    for (int d = 0; d < data.config.D; ++d) {
      const auto it = by_name.find("ep" + std::to_string(i) + ".layer" + std::to_string(d));
      if (it == by_name.end()) throw Error(Errc::MalformedRecord, "missing activations for episode " + std::to_string(i));
      const NamedTensor& t = *it->second;
      if (t.data.size() != static_cast<std::size_t>(steps) * ticks * kCells * G) {
        throw Error(Errc::ShapeMismatch, "activation tensor size does not match the replayed episode");
      }
      for (int s = 0; s < steps; ++s) {
        for (int j = 0; j < ticks; ++j) {
          const float* src = t.data.data() + (static_cast<std::size_t>(s) * ticks + j) * kCells * G;
          ep.cells[s][j][d] = Eigen::Map<const FeatureMap<float>>(src, kCells, G);
        }
      }
    }
    data.episodes.push_back(std::move(ep));
  }
  return data;
}

ProbeDataset<float> make_probe_dataset(const ActivationDataset& data, const ProbeConfig& config,
                                       std::optional<int> tick) {
  config.validate();
  const int j = tick.value_or(data.ticks_per_step() - 1);
  if (j < 0 || j >= data.ticks_per_step()) throw Error(Errc::IndexOutOfRange, "tick not captured in this dataset");
  const bool cell = config.source.kind == SourceKind::CellState;
  if (cell && config.source.layer >= data.config.D) throw Error(Errc::SourceMismatch, "probe layer not in the network");
  const int expected_channels = cell ? data.config.G : kNumSquareStates;
  if (config.channels != expected_channels) throw Error(Errc::SourceMismatch, "probe channel count does not match");

  const ConceptSpec* spec = std::get_if<ConceptSpec>(&config.target);
  const int F = config.feature_dim();
  std::vector<float> buffer;
  ProbeDataset<float> out;
  out.num_classes = config.num_classes();
  out.corpus = data.corpus;
  for (std::size_t e = 0; e < data.episodes.size(); ++e) {
    const EpisodeActivations& ep = data.episodes[e];
    const Trajectory& traj = ep.trajectory;
    std::vector<ConceptGrid> grids;
    if (spec) grids = label_trajectory(traj, *spec);
    for (int t = 0; t < traj.length(); ++t) {
      const FeatureMap<float> map =
          cell ? ep.cells[t][j][config.source.layer] : FeatureMap<float>(encode_observation(traj.steps[t].board));
      const Mat<float> feats = extract_all(map, config.kernel);
      const int future = spec ? 0 : future_action_label(traj, t, std::get<FutureAction>(config.target).n);
      if (!spec && future == kPad) continue;
      for (Eigen::Index r = 0; r < feats.rows(); ++r) {
        const int label = spec ? class_index(spec->kind, grids[t][r]) : future;
        buffer.insert(buffer.end(), feats.row(r).data(), feats.row(r).data() + F);
        out.labels.push_back(label);
        out.origins.push_back({static_cast<int>(e), t, j, config.global() ? Pos{} : Pos::from_index(static_cast<int>(r))});
      }
    }
  }
  out.features = Eigen::Map<const Mat<float>>(buffer.data(), static_cast<Eigen::Index>(out.labels.size()), F);
  return out;
}

Scored score_probe(const Probe<float>& probe, const ProbeDataset<float>& data) {
  Scored s;
  s.labels = data.labels;
  s.predictions.resize(data.size());
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < data.features.rows(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, data.features.rows() - start);
    Mat<float> logits = data.features.middleRows(start, n) * probe.weight;
    logits.rowwise() += probe.bias;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < logits.cols(); ++k) {
        if (logits(i, k) > logits(i, best)) best = k;
      }
      s.predictions[start + i] = static_cast<int>(best);
    }
  }
  return s;
}

Rollout thinking_steps_rollout(const Params<float>& params, const Level& level, int k_steps,
                               std::uint64_t episode_seed) {
  if (k_steps < 0) throw Error(Errc::InvalidArgument, "negative thinking steps");
  RolloutOptions opt;
  opt.thinking_steps = k_steps;
  opt.episode_seed = episode_seed;
  return greedy_rollout(params, level, opt);
}

Trajectory after_thinking(const Trajectory& traj, int k_steps) {
  Trajectory out;
  out.level_id = traj.level_id;
  const int k = std::min(k_steps, traj.length());
  out.steps.assign(traj.steps.begin() + k, traj.steps.end());
  out.final_board = traj.final_board;
  return out;
}

std::string PlanQualityCurve::to_csv() const {
  std::ostringstream out;
  out << "concept,layer,tick,pooled_f1,per_episode_f1\n";
  for (const CurveSeries& s : series) {
    for (int t = 0; t < ticks; ++t) {
      out << concept_kind_name(s.kind) << ',' << s.layer << ',' << t + 1 << ',' << s.pooled[t] << ','
          << s.per_episode[t] << '\n';
    }
  }
  return out.str();
}

PlanQualityCurve score_curve(const std::vector<Probe<float>>& probes, const std::vector<CurveEpisode>& episodes) {
  PlanQualityCurve curve;
  curve.ticks = episodes.empty() ? 0 : static_cast<int>(episodes.front().ticks.size());
  for (const CurveEpisode& e : episodes) {
    if (static_cast<int>(e.ticks.size()) != curve.ticks) throw Error(Errc::LengthMismatch, "episodes differ in tick count");
  }
  for (const Probe<float>& p : probes) {
    const auto* spec = std::get_if<ConceptSpec>(&p.config.target);
    if (!spec || p.config.global() || p.config.source.kind != SourceKind::CellState) {
      throw Error(Errc::SourceMismatch, "plan quality needs local cell-state concept probes");
    }
    CurveSeries series{spec->kind, p.config.source.layer, {}, {}};
    const int K = p.config.num_classes();
    std::vector<std::vector<int>> preds(curve.ticks), labels(curve.ticks);
    std::vector<double> episode_sum(curve.ticks, 0.0);
    int scored = 0;
    for (const CurveEpisode& e : episodes) {
      if (e.after.length() == 0) continue;
      ++scored;
      const ConceptGrid truth = label_trajectory(e.after, *spec)[0];
      std::vector<int> y(kCells);
      for (int c = 0; c < kCells; ++c) y[c] = class_index(spec->kind, truth[c]);
      for (int j = 0; j < curve.ticks; ++j) {
        const auto pred = predict_indices(p, probe_source(p, e.ticks[j]));
        episode_sum[j] += macro_f1(pred, y, K);
        preds[j].insert(preds[j].end(), pred.begin(), pred.end());
        labels[j].insert(labels[j].end(), y.begin(), y.end());
      }
    }
    curve.episodes = scored;
    for (int j = 0; j < curve.ticks; ++j) {
      series.pooled.push_back(macro_f1(preds[j], labels[j], K));
      series.per_episode.push_back(scored ? episode_sum[j] / scored : 0.0);
    }
    curve.series.push_back(std::move(series));
  }
  return curve;
}

PlanQualityCurve plan_quality_curve(const Params<float>& params, const std::vector<Probe<float>>& probes,
                                    const std::vector<Level>& levels, int k_steps) {
  std::vector<CurveEpisode> episodes;
  for (std::size_t e = 0; e < levels.size(); ++e) {
    Rollout r = thinking_steps_rollout(params, levels[e], k_steps, e);
    CurveEpisode ep;
    for (int t = 0; t < k_steps; ++t) {
      for (TickCapture<float>& c : r.traces[t]) ep.ticks.push_back(std::move(c));
    }
    ep.after = after_thinking(r.trajectory, k_steps);
    episodes.push_back(std::move(ep));
  }
  PlanQualityCurve curve = score_curve(probes, episodes);
  curve.ticks = k_steps * params.config.N;
  return curve;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "series differ in length");
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::vector<CheckpointEntry> load_checkpoints(const std::vector<std::string>& paths) {
  std::vector<CheckpointEntry> out;
  for (const std::string& path : paths) {
    auto [params, meta] = load_checkpoint(read_file(path));
    if (!meta.contains("transitions")) throw Error(Errc::MalformedRecord, "checkpoint '" + path + "' has no transition count");
    out.push_back({meta["transitions"].get<std::int64_t>(), std::move(params)});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.transitions < b.transitions; });
  return out;
}

std::string EmergenceResult::to_csv() const {
  std::ostringstream out;
  out << "transitions,concept,layer,f1_first_tick,f1_last_tick,f1_gain,solved_plain,solved_thinking,extra_solved\n";
  for (const EmergenceRow& r : rows) {
    out << r.transitions << ',' << concept_kind_name(r.kind) << ',' << r.layer << ',' << r.f1_first_tick << ','
        << r.f1_last_tick << ',' << r.f1_gain() << ',' << r.solved_plain << ',' << r.solved_thinking << ','
        << r.extra_solved() << '\n';
  }
  return out.str();
}

std::string EmergenceResult::correlations_csv() const {
  std::ostringstream out;
  out << "concept,layer,pearson_r\n";
  for (const EmergenceCorrelation& c : correlations) {
    out << concept_kind_name(c.kind) << ',' << c.layer << ',';
    if (std::isnan(c.r)) {
      out << "nan";
    } else {
      out << c.r;
    }
    out << '\n';
  }
  return out.str();
}

EmergenceResult emergence_scan(const std::vector<CheckpointEntry>& checkpoints, const std::vector<Level>& train_levels,
                               const std::vector<Level>& eval_levels, const EmergenceRecipe& recipe) {
  if (recipe.thinking_steps < 1) throw Error(Errc::InvalidArgument, "emergence scans need thinking steps");
  if (eval_levels.empty()) throw Error(Errc::EmptyDataset, "no evaluation levels");
  EmergenceResult result;
  for (const CheckpointEntry& ckpt : checkpoints) {
    const Params<float>& params = ckpt.params;
    const ActivationDataset data =
        collect_probe_dataset(params, train_levels, recipe.train_episodes, Capture::FinalTick, "train");
    std::vector<Probe<float>> probes;
    for (ConceptKind kind : recipe.concepts) {
      for (int d = 0; d < params.config.D; ++d) {
        ProbeConfig cfg;
        cfg.target = ConceptSpec{kind};
        cfg.source = {SourceKind::CellState, d};
        cfg.channels = params.config.G;
        cfg.seed = recipe.seed;
        probes.push_back(train_probe(make_probe_dataset(data, cfg), cfg, recipe.hyper));
      }
    }
    const PlanQualityCurve curve = plan_quality_curve(params, probes, eval_levels, recipe.thinking_steps);
    const double n = static_cast<double>(eval_levels.size());
    const int plain = static_cast<int>(std::lround(evaluate_solve_rate(params, eval_levels, 0) * n));
    const int thinking = static_cast<int>(std::lround(evaluate_solve_rate(params, eval_levels, recipe.thinking_steps) * n));
    for (const CurveSeries& s : curve.series) {
      result.rows.push_back({ckpt.transitions, s.kind, s.layer, s.pooled.front(), s.pooled.back(), plain, thinking});
    }
  }
  std::map<std::pair<int, int>, std::pair<std::vector<double>, std::vector<double>>> series;
  std::vector<std::pair<int, int>> order;
  for (const EmergenceRow& r : result.rows) {
    const auto key = std::make_pair(static_cast<int>(r.kind), r.layer);
    if (!series.count(key)) order.push_back(key);
    series[key].first.push_back(r.f1_gain());
    series[key].second.push_back(static_cast<double>(r.extra_solved()));
  }
  for (const auto& key : order) {
    const auto& [x, y] = series[key];
    result.correlations.push_back({static_cast<ConceptKind>(key.first), key.second, pearson(x, y)});
  }
  return result;
}

Trajectory NetworkPlayer::play(const Level& level, int thinking_steps) const {
  RolloutOptions opt;
  opt.thinking_steps = thinking_steps;
  opt.record_traces = false;
  return greedy_rollout(params_, level, opt).trajectory;
}

Trajectory SolverPlayer::play(const Level& level, int thinking_steps) const {
  std::vector<Action> actions(thinking_steps, Action::Noop);
  if (const auto plan = solve(level.initial).plan) actions.insert(actions.end(), plan->actions.begin(), plan->actions.end());
  return rollout_actions(start_episode(level, 0), actions, level.id);
}

std::string CorridorTable::to_csv() const {
  std::ostringstream out;
  out << "corridor_length,thinking_steps,solve_fraction\n";
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    for (std::size_t j = 0; j < ks.size(); ++j) out << lengths[i] << ',' << ks[j] << ',' << solved[i][j] << '\n';
  }
  return out.str();
}

std::string CorridorTable::monotonicity_report() const {
  std::ostringstream out;
  std::vector<int> needed;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const auto best_it = std::max_element(solved[i].begin(), solved[i].end());
    const double best = best_it == solved[i].end() ? 0.0 : *best_it;
    std::size_t first = 0;
    while (first < ks.size() && solved[i][first] < best) ++first;
    const int k = first < ks.size() ? ks[first] : 0;
    needed.push_back(k);
    out << "length " << lengths[i] << ": best fraction " << best << " first reached at k=" << k << '\n';
  }
  out << "thinking steps needed rise with corridor length: "
      << (std::is_sorted(needed.begin(), needed.end()) ? "yes" : "no") << '\n';
  return out.str();
}

CorridorTable corridor_experiment(const Player& player, const std::vector<Level>& levels, const std::vector<int>& ks) {
  std::map<int, std::vector<const Level*>> by_length;
  for (const Level& l : levels) {
    if (!l.annotations || !l.annotations->corridor) {
      throw Error(Errc::MissingAnnotations, "level '" + l.id + "' has no corridor annotation");
    }
    by_length[l.annotations->corridor->length()].push_back(&l);
  }
  CorridorTable table;
  table.ks = ks;
  for (const auto& [length, group] : by_length) {
    table.lengths.push_back(length);
    std::vector<double> row;
    for (int k : ks) {
      int solved = 0;
      for (const Level* l : group) solved += player.play(*l, k).solved();
      row.push_back(static_cast<double>(solved) / static_cast<double>(group.size()));
    }
    table.solved.push_back(std::move(row));
  }
  return table;
}

namespace {

constexpr int kCell = 40;

bool agent_concept(ConceptKind k) {
  return k == ConceptKind::AgentApproachDir || k == ConceptKind::AgentApproach || k == ConceptKind::AgentExitDir;
}

const char* square_fill(Square s) {
  switch (s) {
    case Square::Wall: return "#3b3b3b";
    case Square::BoxOnFloor: return "#b8860b";
    case Square::BoxOnTarget: return "#6b8e23";
    default: return "#e9e4d4";
  }
}

// Path of an arrow through the cell centre pointing in `dir`, shifted by `shift`.
std::string arrow_path(Pos p, Direction dir, int shift) {
  const int cx = p.col * kCell + kCell / 2 + shift, cy = p.row * kCell + kCell / 2 + shift;
  const Pos d = delta(dir);
  const int tx = cx + d.col * 14, ty = cy + d.row * 14;  // tip
  const int bx = cx - d.col * 14, by = cy - d.row * 14;  // tail
  const int hx = cx + d.col * 4, hy = cy + d.row * 4;    // head base
  const int px = d.row * 6, py = d.col * 6;              // perpendicular
  std::ostringstream out;
  out << "M" << bx << ' ' << by << " L" << tx << ' ' << ty << " M" << hx + px << ' ' << hy + py << " L" << tx << ' '
      << ty << " L" << hx - px << ' ' << hy - py;
  return out.str();
}

}  // namespace

std::string render_plan_svg(const Board& board, const std::vector<std::pair<ConceptKind, ConceptGrid>>& grids,
                            const std::vector<Decoration>& decorations) {
  const int size = kCell * kCols;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
      << size << ' ' << size << "\">\n";
  for (int cell = 0; cell < kCells; ++cell) {
    const Pos p = Pos::from_index(cell);
    const Square s = board.grid[cell];
    const int x = p.col * kCell, y = p.row * kCell;
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\""
        << square_fill(s) << "\" stroke=\"#c8c0a8\"/>\n";
    if (is_target(s)) {
      out << "<rect class=\"target\" x=\"" << x + 12 << "\" y=\"" << y + 12
          << "\" width=\"16\" height=\"16\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
    }
    if (s == Square::AgentOnFloor || s == Square::AgentOnTarget) {
      out << "<circle class=\"agent\" cx=\"" << x + kCell / 2 << "\" cy=\"" << y + kCell / 2
          << "\" r=\"10\" fill=\"#2e86c1\"/>\n";
    }
  }
  for (std::size_t g = 0; g < grids.size(); ++g) {
    const auto& [kind, grid] = grids[g];
    const char* color = agent_concept(kind) ? "rgb(1,128,128)" : "rgb(106,90,205)";
    const int shift = static_cast<int>(g) * 4 - static_cast<int>(grids.size() - 1) * 2;
    for (int cell = 0; cell < kCells; ++cell) {
      const ConceptClass c = grid[cell];
      if (c == ConceptClass::Never) continue;
      const Pos p = Pos::from_index(cell);
      if (c == ConceptClass::Again) {
        out << "<circle class=\"dot\" cx=\"" << p.col * kCell + kCell / 2 + shift << "\" cy=\""
            << p.row * kCell + kCell / 2 + shift << "\" r=\"5\" fill=\"" << color << "\"/>\n";
        continue;
      }
      out << "<path class=\"arrow\" d=\"" << arrow_path(p, static_cast<Direction>(c), shift) << "\" stroke=\"" << color
          << "\" stroke-width=\"3\" fill=\"none\"/>\n";
    }
  }
  for (const Decoration& d : decorations) {
    const int x = d.pos.col * kCell, y = d.pos.row * kCell;
    if (d.kind == Decoration::Kind::Cross) {
      out << "<path class=\"cross\" d=\"M" << x + 8 << ' ' << y + 8 << " L" << x + 32 << ' ' << y + 32 << " M" << x + 32
          << ' ' << y + 8 << " L" << x + 8 << ' ' << y + 32 << "\" stroke=\"white\" stroke-width=\"4\"/>\n";
    } else {
      out << "<path class=\"intervention-arrow\" d=\"" << arrow_path(d.pos, d.dir, 0)
          << "\" stroke=\"white\" stroke-width=\"6\" fill=\"none\" opacity=\"0.8\"/>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<Decoration> decorations_for(const InterventionSpec& spec) {
  std::vector<Decoration> out;
  for (const auto* list : {&spec.short_route, &spec.directional}) {
    for (const VectorEntry& e : *list) {
      const auto dir = parse_direction(e.label);
      out.push_back(dir ? Decoration{Decoration::Kind::Arrow, e.pos, *dir} : Decoration{Decoration::Kind::Cross, e.pos});
    }
  }
  return out;
}

DeskPipelineConfig::DeskPipelineConfig() {
  generator.boxes = 2;
  generator.max_solution_length = 30;
  drc.D = 3;
  drc.N = 3;
  drc.G = 16;
  clone.batch_size = 4;
  clone.lr_start = 2e-3;
  clone.lr_end = 0.0;
  clone.epochs = 16;
  clone.seed = 1;
}

DeskPipelineResult run_desk_pipeline(const DeskPipelineConfig& config,
                                     const std::function<void(const std::string&)>& log) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  auto say = [&](const std::string& s) {
    if (log) log("[" + std::to_string(static_cast<int>(elapsed())) + "s] " + s);
  };
  DeskPipelineResult result;

  const std::vector<Level> train = generate_corpus(config.train_levels, config.seed, config.generator, "train-");
  std::vector<Trajectory> demos;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (auto d = demo_trajectory(train[i], {}, i)) {
      result.demo_steps += d->length();
      demos.push_back(std::move(*d));
    }
  }
  say(std::to_string(demos.size()) + " demos, " + std::to_string(result.demo_steps) + " steps");

  Params<float> init = init_params<float>(config.drc, config.seed);
  auto [params, report] = behavior_clone(std::move(init), demos, config.clone, [&](int epoch, const Params<float>&) {
    say("epoch " + std::to_string(epoch + 1) + " of " + std::to_string(config.clone.epochs));
  });
  result.params = std::move(params);
  result.report = std::move(report);

  const std::vector<Level> held(train.begin(), train.begin() + std::min<std::size_t>(config.held_in, train.size()));
  result.solve_rate = evaluate_solve_rate(result.params, held, 0);
  say("held-in solve rate " + std::to_string(result.solve_rate));

  const std::vector<Level> valid = generate_corpus(config.test_levels, config.seed + 1, config.generator, "valid-");
  const ActivationDataset train_data =
      collect_probe_dataset(result.params, train, config.collect_episodes, Capture::FinalTick, "train");
  const ActivationDataset test_data =
      collect_probe_dataset(result.params, valid, config.test_episodes, Capture::FinalTick, "validation");

  auto mean_f1 = [&](ProbeConfig cfg) {
    const ProbeDataset<float> tr = make_probe_dataset(train_data, cfg);
    const ProbeDataset<float> te = make_probe_dataset(test_data, cfg);
    result.train_records = static_cast<std::int64_t>(tr.size());
    result.test_records = static_cast<std::int64_t>(te.size());
    double sum = 0;
    for (int s = 0; s < config.probe_seeds; ++s) {
      cfg.seed = static_cast<std::uint64_t>(s);
      const Scored sc = score_probe(train_probe(tr, cfg), te);
      sum += macro_f1(sc.predictions, sc.labels, cfg.num_classes());
    }
    return sum / config.probe_seeds;
  };
  for (int d = 0; d < config.drc.D; ++d) {
    ProbeConfig cfg;
    cfg.target = config.target;
    cfg.source = {SourceKind::CellState, d};
    cfg.channels = config.drc.G;
    result.cell_f1.push_back(mean_f1(cfg));
    say("layer " + std::to_string(d) + " probe macro F1 " + std::to_string(result.cell_f1.back()));
  }
  ProbeConfig obs;
  obs.target = config.target;
  obs.source = {SourceKind::Observation, 0};
  obs.channels = kNumSquareStates;
  result.observation_f1 = mean_f1(obs);
  result.margin = result.cell_f1.back() - result.observation_f1;
  say("observation probe macro F1 " + std::to_string(result.observation_f1));
  result.seconds = elapsed();
  return result;
}

}  // namespace sokoplan
