#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sokoplan/agent.hpp"
#include "sokoplan/probes.hpp"

namespace sokoplan {

/// One vector added to the cell state at a square.
struct VectorEntry {
  Pos pos;
  Eigen::VectorXf vector;
  float alpha = 1.0f;
  std::string label;  // class name the vector came from, e.g. "NEVER"
};

enum class StopCondition { None, AgentEntered, BoxPushedOff };

/// Short-route entries apply at every step; directional entries apply until
/// the stop condition has occurred at the anchor.
struct InterventionSpec {
  std::vector<VectorEntry> short_route;
  std::vector<VectorEntry> directional;
  StopCondition stop = StopCondition::None;
  Pos anchor;
  int layer = 0;
  /// Apply only at the last tick of each step instead of at every tick.
  bool final_tick_only = false;

  /// Throws InvalidArgument for an off-grid square, a non-finite alpha or a
  /// layer outside [0, D).
  void validate(int D) const;
  bool empty() const { return short_route.empty() && directional.empty(); }
};

/// Whether the stop condition happened during the steps taken so far.
bool stop_reached(const InterventionSpec& spec, const Trajectory& so_far, const Board& current);

/// Hooks for one step. `ticks` is N of the network.
HookSet step_hooks(const InterventionSpec& spec, bool directional_active, int ticks);
HookSchedule make_schedule(const InterventionSpec& spec, int ticks);

/// Algorithm for Agent-Shortcut levels: NEVER vectors of the AgentApproachDir
/// probe on the short route, and the first p long-route squares with their
/// directions until the agent first moves onto the anchor. Throws
/// KindMismatch for a level of another kind or a probe that is not a 1x1
/// cell-state AgentApproachDir probe, MissingAnnotations without annotations.
InterventionSpec build_agent_shortcut(const Level& level, const Probe<float>& agent_probe, float alpha = 1.0f,
                                      int p = 1, bool final_tick_only = false);
/// Same shape with BoxPushDir vectors; stops once a box is pushed off the
/// free box's initial square.
InterventionSpec build_box_shortcut(const Level& level, const Probe<float>& box_probe, float alpha = 1.0f, int p = 1,
                                    bool final_tick_only = false);

enum class CutoffKind { AgentOnly, BoxOnly, AgentAndBox };
std::string_view cutoff_kind_name(CutoffKind k);
std::optional<CutoffKind> parse_cutoff_kind(std::string_view name);

/// AgentOnly: the AgentApproachDir vector for stepping into the corridor, on
/// the entrance target. BoxOnly: the BoxPushDir vector of the sideways push,
/// on the entrance box. Both stop once the entrance box moves. The probe a
/// kind does not use may be null.
InterventionSpec build_cutoff(CutoffKind kind, const Level& level, const Probe<float>* agent_probe,
                              const Probe<float>* box_probe, float alpha = 1.0f);

struct StepActivity {
  int short_route = 0;  // entries applied at this step
  int directional = 0;
};

struct EpisodeResult {
  Rollout rollout;
  bool solved = false;
  std::uint64_t visited = 0;    // bit per square the agent stood on
  std::uint64_t box_route = 0;  // bit per square any box occupied after step 0
  std::vector<StepActivity> activity;
  /// decoded[i][t]: grid of decode_probes[i] at the final tick of step t.
  std::vector<std::vector<ConceptGrid>> decoded;
};

struct InterventionRun {
  int max_steps = 0;
  std::uint64_t episode_seed = 0;
  std::vector<const Probe<float>*> decode_probes;
};

EpisodeResult run_with_interventions(const Params<float>& params, const Level& level, const InterventionSpec& spec,
                                     const InterventionRun& run = {});

/// AgentShortcut: solved, visited the first long-route square and never
/// stood on the short route. BoxShortcut: solved, the first push off the
/// anchor follows the long route and no box touched the short route after
/// step 0. Cutoff and Corridor: solved. Throws MissingAnnotations.
bool evaluate_success(const Trajectory& trajectory, const Level& level);

/// Probes for one layer and one probe kind; index i is repetition i.
struct SweepProbes {
  int layer = 0;
  std::string probe_kind;  // "trained" or "random"
  std::vector<Probe<float>> agent;
  std::vector<Probe<float>> box;
};

struct SweepGrid {
  std::vector<float> alphas{1.0f};
  std::vector<int> ps{1};
  std::vector<CutoffKind> cutoff_kinds{CutoffKind::AgentAndBox};
  int max_steps = 0;
  bool final_tick_only = false;
};

struct SweepRow {
  std::string schema;
  int layer = 0;
  std::string probe_kind;
  int seed = 0;
  float alpha = 0;
  int p = 0;
  double success = 0;  // fraction of levels
};

struct SweepCell {
  std::string schema;
  int layer = 0;
  std::string probe_kind;
  float alpha = 0;
  int p = 0;
  double mean = 0;
  double stddev = 0;  // population, over repetitions
  int repetitions = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;
  /// Columns: schema,layer,probe_kind,seed,alpha,p,success.
  std::string rows_csv() const;
  /// Columns: schema,layer,probe_kind,alpha,p,mean,std,repetitions.
  std::string cells_csv() const;
};

/// Every (schema, layer, probe kind, repetition, alpha, p) combination. The
/// schema is the level kind, or the cutoff kind for Cutoff levels (p is 0
/// there).
SweepResult sweep(const Params<float>& params, const std::vector<Level>& levels,
                  const std::vector<SweepProbes>& probe_sets, const SweepGrid& grid);

}  // namespace sokoplan
