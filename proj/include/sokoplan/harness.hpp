#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sokoplan/agent.hpp"
#include "sokoplan/intervention.hpp"
#include "sokoplan/levels.hpp"
#include "sokoplan/probes.hpp"
#include "sokoplan/trainer.hpp"

namespace sokoplan {

enum class Capture { FinalTick, AllTicks };

struct EpisodeActivations {
  Level level;
  std::uint64_t episode_seed = 0;
  int thinking_steps = 0;
  Trajectory trajectory;
  /// cells[t][j][d]: cell state of layer d at the j-th captured tick of step t.
  std::vector<std::vector<std::vector<FeatureMap<float>>>> cells;
};

struct ActivationDataset {
  std::string corpus;  // "train", "validation", ...
  DRCConfig config;
  Capture capture = Capture::FinalTick;
  std::vector<EpisodeActivations> episodes;

  int ticks_per_step() const { return capture == Capture::FinalTick ? 1 : config.N; }
  std::int64_t transitions() const;
};

/// Greedy episodes on levels[i % size] with episode seed i.
ActivationDataset collect_probe_dataset(const Params<float>& params, const std::vector<Level>& levels, int n_episodes,
                                        Capture capture, const std::string& corpus, int thinking_steps = 0);

/// Container with one tensor per episode and layer ([steps * ticks, 64, G]);
/// levels, seeds and actions live in the metadata and trajectories are
/// replayed on load.
std::string save_activation_dataset(const ActivationDataset& data);
ActivationDataset load_activation_dataset(const std::string& bytes);

/// Records for one probe: 64 per step for local probes, one per step for
/// global probes. Labels come from the concept labeler (or the future-action
/// label, PAD records dropped). `tick` picks the captured tick, default last.
ProbeDataset<float> make_probe_dataset(const ActivationDataset& data, const ProbeConfig& config,
                                       std::optional<int> tick = std::nullopt);

/// Probe predictions and labels over a whole dataset, for scoring.
struct Scored {
  std::vector<int> predictions;
  std::vector<int> labels;
};
Scored score_probe(const Probe<float>& probe, const ProbeDataset<float>& data);

/// Greedy rollout whose first k steps are forced NOOPs.
Rollout thinking_steps_rollout(const Params<float>& params, const Level& level, int k_steps,
                               std::uint64_t episode_seed = 0);

/// The steps after the thinking phase; concept labels for thinking-phase
/// plans are read at index 0 of this trajectory.
Trajectory after_thinking(const Trajectory& traj, int k_steps);

struct CurveSeries {
  ConceptKind kind = ConceptKind::AgentApproachDir;
  int layer = 0;
  std::vector<double> pooled;       // macro F1 over all episodes' squares per tick
  std::vector<double> per_episode;  // mean of per-episode macro F1 per tick
};

struct PlanQualityCurve {
  int ticks = 0;  // k_steps * N
  int episodes = 0;
  std::vector<CurveSeries> series;
  /// Columns: concept,layer,tick,pooled_f1,per_episode_f1.
  std::string to_csv() const;
};

/// Captured thinking-phase ticks of one episode and the behavior that
/// followed them.
struct CurveEpisode {
  std::vector<TickCapture<float>> ticks;
  Trajectory after;  // labels are read at its first step
};

/// Scores every probe at every tick. All episodes must have the same tick count.
PlanQualityCurve score_curve(const std::vector<Probe<float>>& probes, const std::vector<CurveEpisode>& episodes);

PlanQualityCurve plan_quality_curve(const Params<float>& params, const std::vector<Probe<float>>& probes,
                                    const std::vector<Level>& levels, int k_steps);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct CheckpointEntry {
  std::int64_t transitions = 0;
  Params<float> params;
};
/// Reads checkpoint files; the transition count comes from meta["transitions"].
std::vector<CheckpointEntry> load_checkpoints(const std::vector<std::string>& paths);

struct EmergenceRecipe {
  std::vector<ConceptKind> concepts{ConceptKind::AgentApproachDir, ConceptKind::BoxPushDir};
  int train_episodes = 50;
  int thinking_steps = 5;
  ProbeHyper hyper;
  std::uint64_t seed = 0;
};

struct EmergenceRow {
  std::int64_t transitions = 0;
  ConceptKind kind = ConceptKind::AgentApproachDir;
  int layer = 0;
  double f1_first_tick = 0;
  double f1_last_tick = 0;
  int solved_plain = 0;
  int solved_thinking = 0;

  double f1_gain() const { return f1_last_tick - f1_first_tick; }
  int extra_solved() const { return solved_thinking - solved_plain; }
};

struct EmergenceCorrelation {
  ConceptKind kind = ConceptKind::AgentApproachDir;
  int layer = 0;
  double r = 0;  // NaN when either series is constant
};

struct EmergenceResult {
  std::vector<EmergenceRow> rows;
  std::vector<EmergenceCorrelation> correlations;
  /// Columns: transitions,concept,layer,f1_first_tick,f1_last_tick,f1_gain,solved_plain,solved_thinking,extra_solved.
  std::string to_csv() const;
  /// Columns: concept,layer,pearson_r.
  std::string correlations_csv() const;
};

/// For every checkpoint: 1x1 probes per concept and layer retrained on that
/// checkpoint's own train-level episodes, plan quality at the first and last
/// thinking tick on the eval levels, and eval levels solved with and without
/// thinking steps. Pearson r of F1 gain against extra levels solved.
EmergenceResult emergence_scan(const std::vector<CheckpointEntry>& checkpoints, const std::vector<Level>& train_levels,
                               const std::vector<Level>& eval_levels, const EmergenceRecipe& recipe);

/// Something that plays a level after k forced NOOP steps.
class Player {
 public:
  virtual ~Player() = default;
  virtual Trajectory play(const Level& level, int thinking_steps) const = 0;
};

class NetworkPlayer : public Player {
 public:
  explicit NetworkPlayer(const Params<float>& params) : params_(params) {}
  Trajectory play(const Level& level, int thinking_steps) const override;

 private:
  const Params<float>& params_;
};

/// Replays the optimal solver plan after the NOOPs.
class SolverPlayer : public Player {
 public:
  Trajectory play(const Level& level, int thinking_steps) const override;
};

struct CorridorTable {
  std::vector<int> lengths;
  std::vector<int> ks;
  std::vector<std::vector<double>> solved;  // [length][k]
  /// Columns: corridor_length,thinking_steps,solve_fraction.
  std::string to_csv() const;
  /// Per length, the fewest thinking steps reaching its best fraction, and
  /// whether those counts rise with length.
  std::string monotonicity_report() const;
};

/// Levels are grouped by annotated corridor length.
CorridorTable corridor_experiment(const Player& player, const std::vector<Level>& levels, const std::vector<int>& ks);

struct Decoration {
  enum class Kind { Cross, Arrow };
  Kind kind = Kind::Cross;
  Pos pos;
  Direction dir = Direction::Up;  // Arrow only
};

/// Board with one arrow per directional cell of each grid (teal for
/// agent concepts, purple for box concepts; binary AGAIN cells get a dot),
/// plus white crosses and outlined arrows for interventions.
std::string render_plan_svg(const Board& board, const std::vector<std::pair<ConceptKind, ConceptGrid>>& grids,
                            const std::vector<Decoration>& decorations = {});

/// Decorations matching an intervention spec: crosses on NEVER entries and
/// outlined arrows on directional ones.
std::vector<Decoration> decorations_for(const InterventionSpec& spec);

struct DeskPipelineConfig {
  int train_levels = 500;
  int held_in = 200;
  int collect_episodes = 200;
  int test_levels = 50;
  int test_episodes = 50;
  GeneratorParams generator;
  DRCConfig drc;
  TrainHyper clone;
  ConceptSpec target{ConceptKind::BoxPushDir};
  int probe_seeds = 5;
  std::uint64_t seed = 42;

  DeskPipelineConfig();
};

struct DeskPipelineResult {
  Params<float> params;
  TrainReport report;
  std::int64_t demo_steps = 0;
  double solve_rate = 0;
  std::vector<double> cell_f1;  // per layer, mean over probe seeds
  double observation_f1 = 0;
  double margin = 0;  // final-layer cell F1 minus observation F1
  std::int64_t train_records = 0;
  std::int64_t test_records = 0;
  double seconds = 0;
};

/// Solver demos, behavior cloning, held-in solve rate, then 1x1 probes on
/// cell states and on observations, trained on train-corpus episodes and
/// scored on validation-corpus episodes. `log` receives progress lines.
DeskPipelineResult run_desk_pipeline(const DeskPipelineConfig& config,
                                     const std::function<void(const std::string&)>& log = {});

}  // namespace sokoplan
