#include "sokoplan/intervention.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace sokoplan {

void InterventionSpec::validate(int D) const {
  if (layer < 0 || layer >= D) throw Error(Errc::InvalidArgument, "intervention layer outside the network");
  for (const auto* list : {&short_route, &directional}) {
    for (const VectorEntry& e : *list) {
      if (!e.pos.on_grid()) throw Error(Errc::InvalidArgument, "intervention square off the grid");
      if (!std::isfinite(e.alpha)) throw Error(Errc::InvalidArgument, "non-finite intervention strength");
    }
  }
}

namespace {

const Board& board_after(const Trajectory& traj, std::size_t t, const Board& current) {
  return t + 1 < traj.steps.size() ? traj.steps[t + 1].board : current;
}

}  // namespace

bool stop_reached(const InterventionSpec& spec, const Trajectory& so_far, const Board& current) {
  const std::uint64_t bit = std::uint64_t{1} << spec.anchor.index();
  for (std::size_t t = 0; t < so_far.steps.size(); ++t) {
    const Board& before = so_far.steps[t].board;
    const Board& after = board_after(so_far, t, current);
    switch (spec.stop) {
      case StopCondition::None: return false;
      case StopCondition::AgentEntered:
        if (after.agent() == spec.anchor) return true;
        break;
      case StopCondition::BoxPushedOff:
        if ((before.box_mask() & bit) && !(after.box_mask() & bit)) return true;
        break;
    }
  }
  return false;
}

HookSet step_hooks(const InterventionSpec& spec, bool directional_active, int ticks) {
  HookSet hooks;
  const std::optional<int> tick = spec.final_tick_only ? std::optional<int>(ticks - 1) : std::nullopt;
  auto add = [&](const VectorEntry& e) { hooks.push_back(Hook{spec.layer, tick, e.pos, e.vector, e.alpha}); };
  for (const VectorEntry& e : spec.short_route) add(e);
  if (directional_active) {
    for (const VectorEntry& e : spec.directional) add(e);
  }
  return hooks;
}

HookSchedule make_schedule(const InterventionSpec& spec, int ticks) {
  return [spec, ticks](const Trajectory& so_far, const Board& current) {
    return step_hooks(spec, !stop_reached(spec, so_far, current), ticks);
  };
}

namespace {

const RouteAnnotations& annotations_of(const Level& level, LevelKind kind) {
  if (!level.annotations) throw Error(Errc::MissingAnnotations, "level '" + level.id + "' has no annotations");
  if (level.annotations->kind != kind) {
    throw Error(Errc::KindMismatch, "level '" + level.id + "' is " +
                                        std::string(level_kind_name(level.annotations->kind)) + ", expected " +
                                        std::string(level_kind_name(kind)));
  }
  return *level.annotations;
}

void require_probe(const Probe<float>* probe, ConceptKind kind) {
  if (!probe) throw Error(Errc::KindMismatch, std::string("missing ") + std::string(concept_kind_name(kind)) + " probe");
  const auto* spec = std::get_if<ConceptSpec>(&probe->config.target);
  if (!spec || spec->kind != kind) {
    throw Error(Errc::KindMismatch, "expected a " + std::string(concept_kind_name(kind)) + " probe");
  }
  if (probe->config.kernel != 1 || probe->config.source.kind != SourceKind::CellState) {
    throw Error(Errc::KindMismatch, "interventions need a 1x1 cell-state probe");
  }
}

VectorEntry entry(const Probe<float>& probe, Pos pos, ConceptClass cls, float alpha) {
  const ConceptKind kind = std::get<ConceptSpec>(probe.config.target).kind;
  return {pos, probe.class_vector(class_index(kind, cls)), alpha, std::string(concept_class_name(cls))};
}

InterventionSpec build_shortcut(const RouteAnnotations& ann, const Probe<float>& probe, float alpha, int p,
                                bool final_tick_only, StopCondition stop) {
  if (p < 0) throw Error(Errc::InvalidArgument, "p must be non-negative");
  InterventionSpec spec;
  spec.layer = probe.config.source.layer;
  spec.final_tick_only = final_tick_only;
  spec.stop = stop;
  spec.anchor = ann.anchor;
  for (Pos pos : ann.short_route) spec.short_route.push_back(entry(probe, pos, ConceptClass::Never, alpha));
  const int n = std::min<int>(p, static_cast<int>(ann.long_route_prefix.size()));
  for (int i = 0; i < n; ++i) {
    const RouteStep& s = ann.long_route_prefix[i];
    spec.directional.push_back(entry(probe, s.pos, class_of(s.dir), alpha));
  }
  return spec;
}

}  // namespace

InterventionSpec build_agent_shortcut(const Level& level, const Probe<float>& agent_probe, float alpha, int p,
                                      bool final_tick_only) {
  const RouteAnnotations& ann = annotations_of(level, LevelKind::AgentShortcut);
  require_probe(&agent_probe, ConceptKind::AgentApproachDir);
  return build_shortcut(ann, agent_probe, alpha, p, final_tick_only, StopCondition::AgentEntered);
}

InterventionSpec build_box_shortcut(const Level& level, const Probe<float>& box_probe, float alpha, int p,
                                    bool final_tick_only) {
  const RouteAnnotations& ann = annotations_of(level, LevelKind::BoxShortcut);
  require_probe(&box_probe, ConceptKind::BoxPushDir);
  return build_shortcut(ann, box_probe, alpha, p, final_tick_only, StopCondition::BoxPushedOff);
}

std::string_view cutoff_kind_name(CutoffKind k) {
  switch (k) {
    case CutoffKind::AgentOnly: return "AgentOnly";
    case CutoffKind::BoxOnly: return "BoxOnly";
    case CutoffKind::AgentAndBox: return "AgentAndBox";
  }
  return "?";
}

std::optional<CutoffKind> parse_cutoff_kind(std::string_view name) {
  for (CutoffKind k : {CutoffKind::AgentOnly, CutoffKind::BoxOnly, CutoffKind::AgentAndBox}) {
    if (cutoff_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

InterventionSpec build_cutoff(CutoffKind kind, const Level& level, const Probe<float>* agent_probe,
                              const Probe<float>* box_probe, float alpha) {
  const RouteAnnotations& ann = annotations_of(level, LevelKind::Cutoff);
  if (!ann.corridor || ann.corridor->interior.empty() || ann.long_route_prefix.empty()) {
    throw Error(Errc::MissingAnnotations, "cutoff level '" + level.id + "' lacks corridor annotations");
  }
  InterventionSpec spec;
  spec.stop = StopCondition::BoxPushedOff;
  spec.anchor = ann.anchor;
  const bool agent = kind != CutoffKind::BoxOnly, box = kind != CutoffKind::AgentOnly;
  if (agent) require_probe(agent_probe, ConceptKind::AgentApproachDir);
  if (box) require_probe(box_probe, ConceptKind::BoxPushDir);
  if (agent && box && agent_probe->config.source.layer != box_probe->config.source.layer) {
    throw Error(Errc::KindMismatch, "agent and box probes read different layers");
  }
  spec.layer = agent ? agent_probe->config.source.layer : box_probe->config.source.layer;
  if (agent) {
    const Pos entrance = ann.corridor->entrance;
    const auto dir = direction_between(entrance, ann.corridor->interior.front());
    if (!dir) throw Error(Errc::MissingAnnotations, "corridor entrance is not next to its interior");
    spec.directional.push_back(entry(*agent_probe, entrance, class_of(*dir), alpha));
  }
  if (box) {
    spec.directional.push_back(entry(*box_probe, ann.anchor, class_of(ann.long_route_prefix.front().dir), alpha));
  }
  return spec;
}

EpisodeResult run_with_interventions(const Params<float>& params, const Level& level, const InterventionSpec& spec,
                                     const InterventionRun& run) {
  spec.validate(params.config.D);
  RolloutOptions options;
  options.max_steps = run.max_steps;
  options.episode_seed = run.episode_seed;
  options.record_traces = true;
  if (!spec.empty()) options.hooks = make_schedule(spec, params.config.N);

  EpisodeResult out;
  out.rollout = greedy_rollout(params, level, options);
  const Trajectory& traj = out.rollout.trajectory;
  out.solved = traj.solved();
  for (const Transition& s : traj.steps) out.visited |= std::uint64_t{1} << s.board.agent().index();
  out.visited |= std::uint64_t{1} << traj.final_board.agent().index();
  for (std::size_t t = 1; t < traj.steps.size(); ++t) out.box_route |= traj.steps[t].board.box_mask();
  if (!traj.steps.empty()) out.box_route |= traj.final_board.box_mask();

  const std::size_t short_n = spec.short_route.size();
  for (const HookSet& hooks : out.rollout.hooks) {
    const int total = static_cast<int>(hooks.size());
    out.activity.push_back({std::min<int>(total, static_cast<int>(short_n)), total - static_cast<int>(short_n)});
  }
  for (const Probe<float>* probe : run.decode_probes) {
    std::vector<ConceptGrid> grids;
    for (const TickTrace<float>& trace : out.rollout.traces) grids.push_back(predict_grid(*probe, trace.back()));
    out.decoded.push_back(std::move(grids));
  }
  return out;
}

bool evaluate_success(const Trajectory& trajectory, const Level& level) {
  if (!level.annotations) throw Error(Errc::MissingAnnotations, "level '" + level.id + "' has no annotations");
  const RouteAnnotations& ann = *level.annotations;
  if (!trajectory.solved()) return false;
  std::uint64_t short_mask = 0;
  for (Pos p : ann.short_route) short_mask |= std::uint64_t{1} << p.index();

  switch (ann.kind) {
    case LevelKind::AgentShortcut: {
      if (ann.long_route_prefix.empty()) throw Error(Errc::MissingAnnotations, "no long route");
      const Pos first = ann.long_route_prefix.front().pos;
      bool visited_first = false;
      for (std::size_t t = 0; t <= trajectory.steps.size(); ++t) {
        const Pos a = t < trajectory.steps.size() ? trajectory.steps[t].board.agent() : trajectory.final_board.agent();
        if (short_mask >> a.index() & 1) return false;
        visited_first |= a == first;
      }
      return visited_first;
    }
    case LevelKind::BoxShortcut: {
      if (ann.long_route_prefix.empty()) throw Error(Errc::MissingAnnotations, "no long route");
      const std::uint64_t anchor = std::uint64_t{1} << ann.anchor.index();
      bool first_push_checked = false;
      for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
        const Board& before = trajectory.steps[t].board;
        const Board& after = t + 1 < trajectory.steps.size() ? trajectory.steps[t + 1].board : trajectory.final_board;
        if (after.box_mask() & short_mask) return false;
        if (!first_push_checked && (before.box_mask() & anchor) && !(after.box_mask() & anchor)) {
          const auto dir = to_direction(trajectory.steps[t].action);
          if (!dir || *dir != ann.long_route_prefix.front().dir) return false;
          first_push_checked = true;
        }
      }
      return first_push_checked;
    }
    case LevelKind::Cutoff:
    case LevelKind::Corridor: return true;
  }
  return false;
}

std::string SweepResult::rows_csv() const {
  std::ostringstream out;
  out << "schema,layer,probe_kind,seed,alpha,p,success\n";
  for (const SweepRow& r : rows) {
    out << r.schema << ',' << r.layer << ',' << r.probe_kind << ',' << r.seed << ',' << r.alpha << ',' << r.p << ','
        << r.success << '\n';
  }
  return out.str();
}

std::string SweepResult::cells_csv() const {
  std::ostringstream out;
  out << "schema,layer,probe_kind,alpha,p,mean,std,repetitions\n";
  for (const SweepCell& c : cells) {
    out << c.schema << ',' << c.layer << ',' << c.probe_kind << ',' << c.alpha << ',' << c.p << ',' << c.mean << ','
        << c.stddev << ',' << c.repetitions << '\n';
  }
  return out.str();
}

SweepResult sweep(const Params<float>& params, const std::vector<Level>& levels,
                  const std::vector<SweepProbes>& probe_sets, const SweepGrid& grid) {
  if (levels.empty() || probe_sets.empty() || grid.alphas.empty() || grid.ps.empty()) {
    throw Error(Errc::InvalidArgument, "sweep needs levels, probes, alphas and ps");
  }
  // Schemas present in the level set, each with the builder that makes its spec.
  struct Schema {
    std::string name;
    LevelKind kind;
    std::optional<CutoffKind> cutoff;
  };
  std::vector<Schema> schemas;
  for (LevelKind kind : {LevelKind::AgentShortcut, LevelKind::BoxShortcut, LevelKind::Cutoff}) {
    const bool present = std::any_of(levels.begin(), levels.end(), [&](const Level& l) {
      if (!l.annotations) throw Error(Errc::MissingAnnotations, "level '" + l.id + "' has no annotations");
      return l.annotations->kind == kind;
    });
    if (!present) continue;
    if (kind == LevelKind::Cutoff) {
      for (CutoffKind c : grid.cutoff_kinds) schemas.push_back({std::string(cutoff_kind_name(c)), kind, c});
    } else {
      schemas.push_back({std::string(level_kind_name(kind)), kind, std::nullopt});
    }
  }

  SweepResult result;
  for (const Schema& schema : schemas) {
    std::vector<const Level*> group;
    for (const Level& l : levels) {
      if (l.annotations->kind == schema.kind) group.push_back(&l);
    }
    const std::vector<int> ps = schema.cutoff ? std::vector<int>{0} : grid.ps;
    for (const SweepProbes& set : probe_sets) {
      const std::size_t reps = std::max(set.agent.size(), set.box.size());
      for (float alpha : grid.alphas) {
        for (int p : ps) {
          std::vector<double> rates;
          for (std::size_t rep = 0; rep < reps; ++rep) {
            const Probe<float>* agent = rep < set.agent.size() ? &set.agent[rep] : nullptr;
            const Probe<float>* box = rep < set.box.size() ? &set.box[rep] : nullptr;
            int successes = 0;
            for (const Level* level : group) {
              InterventionSpec spec;
              if (schema.kind == LevelKind::AgentShortcut) {
                require_probe(agent, ConceptKind::AgentApproachDir);
                spec = build_agent_shortcut(*level, *agent, alpha, p, grid.final_tick_only);
              } else if (schema.kind == LevelKind::BoxShortcut) {
                require_probe(box, ConceptKind::BoxPushDir);
                spec = build_box_shortcut(*level, *box, alpha, p, grid.final_tick_only);
              } else {
                spec = build_cutoff(*schema.cutoff, *level, agent, box, alpha);
                spec.final_tick_only = grid.final_tick_only;
              }
              InterventionRun run;
              run.max_steps = grid.max_steps;
              const EpisodeResult r = run_with_interventions(params, *level, spec, run);
              successes += evaluate_success(r.rollout.trajectory, *level);
            }
            const double rate = static_cast<double>(successes) / static_cast<double>(group.size());
            rates.push_back(rate);
            result.rows.push_back({schema.name, set.layer, set.probe_kind, static_cast<int>(rep), alpha, p, rate});
          }
          SweepCell cell{schema.name, set.layer, set.probe_kind, alpha, p, 0, 0, static_cast<int>(rates.size())};
          for (double r : rates) cell.mean += r;
          if (!rates.empty()) cell.mean /= static_cast<double>(rates.size());
          for (double r : rates) cell.stddev += (r - cell.mean) * (r - cell.mean);
          if (!rates.empty()) cell.stddev = std::sqrt(cell.stddev / static_cast<double>(rates.size()));
          result.cells.push_back(cell);
        }
      }
    }
  }
  return result;
}

}  // namespace sokoplan
