#include <filesystem>
#include <iostream>
#include <sstream>

#include "sokoplan/harness.hpp"
#include "sokoplan/service.hpp"

#include "CLI11.hpp"

using namespace sokoplan;
namespace fs = std::filesystem;

namespace {

// --config: a JSON object whose keys are long option names; nested objects
// hold the options of the subcommand of that name.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return dump(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static void flatten(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        flatten(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      auto text = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(text(v));
      } else {
        item.inputs.push_back(text(value));
      }
      items.push_back(std::move(item));
    }
  }

  static nlohmann::json dump(const CLI::App* app, bool default_also) {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const auto results = opt->results();
      if (!results.empty()) {
        j[opt->get_lnames()[0]] = results.size() == 1 ? nlohmann::json(results[0]) : nlohmann::json(results);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[opt->get_lnames()[0]] = opt->get_default_str();
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      nlohmann::json s = dump(sub, default_also);
      if (!s.empty()) j[sub->get_name()] = std::move(s);
    }
    return j;
  }
};

// Level sources: a Boxoban file (a sidecar "<stem>.annotations.json" next to
// it is attached when present), "handcrafted:<Kind>" for a whole orbit, or
// "corridor:<length>".
std::vector<Level> load_levels(const std::string& source) {
  const auto colon = source.find(':');
  if (colon != std::string::npos && !fs::exists(source)) {
    const std::string family = source.substr(0, colon), arg = source.substr(colon + 1);
    if (family == "handcrafted") {
      const auto kind = parse_level_kind(arg);
      if (!kind) throw Error(Errc::InvalidArgument, "unknown level kind '" + arg + "'");
      return handcrafted_orbit(*kind);
    }
    if (family == "corridor") return corridor_dataset(std::stoi(arg));
    throw Error(Errc::InvalidArgument, "unknown level source '" + source + "'");
  }
  std::vector<Level> levels = parse_boxoban(read_file(source));
  fs::path sidecar = fs::path(source);
  sidecar.replace_extension(".annotations.json");
  if (fs::exists(sidecar)) attach_annotations(levels, nlohmann::json::parse(read_file(sidecar.string())));
  return levels;
}

std::vector<Level> take(std::vector<Level> levels, int count) {
  if (count > 0 && static_cast<std::size_t>(count) < levels.size()) levels.resize(count);
  return levels;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

Params<float> load_params(const std::string& path) { return load_checkpoint(read_file(path)).first; }
Probe<float> load_probe_file(const std::string& path) { return load_probe(read_file(path)).first; }

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

struct Common {
  std::uint64_t seed = 0;
};

struct DrcFlags {
  int D = 3, N = 3, G = 32, head_dim = 256;
  void add(CLI::App* app) {
    app->add_option("--layers", D, "ConvLSTM layers (D)")->capture_default_str();
    app->add_option("--ticks", N, "internal ticks per step (N)")->capture_default_str();
    app->add_option("--channels", G, "hidden channels (G)")->capture_default_str();
    app->add_option("--head-dim", head_dim, "width of the MLP head")->capture_default_str();
  }
  DRCConfig config() const {
    DRCConfig c;
    c.D = D;
    c.N = N;
    c.G = G;
    c.head_dim = head_dim;
    return c;
  }
};

void add_hyper(CLI::App* app, TrainHyper& h) {
  app->add_option("--batch", h.batch_size, "episodes (or environments) per update")->capture_default_str();
  app->add_option("--lr", h.lr_start, "initial learning rate")->capture_default_str();
  app->add_option("--lr-end", h.lr_end, "final learning rate")->capture_default_str();
  app->add_option("--unroll", h.unroll, "BPTT window")->capture_default_str();
  app->add_option("--gamma", h.gamma)->capture_default_str();
  app->add_option("--entropy", h.entropy_coef)->capture_default_str();
  app->add_option("--value-coef", h.value_coef)->capture_default_str();
  app->add_option("--logit-l2", h.logit_l2)->capture_default_str();
  app->add_option("--head-l2", h.head_l2)->capture_default_str();
}

ProbeTarget parse_target(const std::string& concept_name, int future, int horizon, const std::string& convention) {
  if (future > 0) return FutureAction{future};
  const auto kind = parse_concept_kind(concept_name);
  if (!kind) throw Error(Errc::InvalidArgument, "unknown concept '" + concept_name + "'");
  ConceptSpec spec{*kind, horizon};
  if (convention == "side_of_approach") {
    spec.convention = DirectionConvention::SideOfApproach;
  } else if (convention != "movement") {
    throw Error(Errc::InvalidArgument, "convention is movement or side_of_approach");
  }
  return spec;
}

int parse_kernel(const std::string& k) { return k == "global" ? kGlobalKernel : std::stoi(k); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sokoban planning workbench: DRC agents, concept probes and interventions"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "master seed")->capture_default_str();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file of option values");

  // generate ------------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "write a level corpus as Boxoban text");
  int gen_count = 100;
  GeneratorParams gp;
  std::string gen_kind, gen_out, gen_prefix;
  int gen_corridor = 0;
  gen->add_option("--count", gen_count, "random levels to generate")->capture_default_str();
  gen->add_option("--boxes", gp.boxes)->capture_default_str();
  gen->add_option("--max-solution", gp.max_solution_length, "reject longer optimal plans (0 = any)")->capture_default_str();
  gen->add_option("--prefix", gen_prefix, "level id prefix");
  gen->add_option("--handcrafted", gen_kind, "write a handcrafted orbit instead (AgentShortcut, BoxShortcut, Cutoff, Corridor)");
  gen->add_option("--corridor-length", gen_corridor, "corridor length for Corridor orbits");
  gen->add_option("--out", gen_out, "output .txt; handcrafted sets also get <stem>.annotations.json")->required();

  // solve ---------------------------------------------------------------------
  auto* slv = app.add_subcommand("solve", "optimal plans as action letters, one 'id plan' line per level");
  std::string slv_levels;
  std::int64_t slv_nodes = 2'000'000;
  bool slv_no_prune = false;
  slv->add_option("levels", slv_levels, "level source")->required();
  slv->add_option("--max-nodes", slv_nodes)->capture_default_str();
  slv->add_flag("--no-deadlock-pruning", slv_no_prune);

  // clone ---------------------------------------------------------------------
  auto* cln = app.add_subcommand("clone", "behavior-clone a DRC agent on solver demonstrations");
  std::string cln_levels, cln_out, cln_report;
  int cln_count = 0, cln_eval = 200;
  DrcFlags cln_drc;
  TrainHyper cln_h;
  cln_h.lr_start = 2e-3;
  cln_h.batch_size = 4;
  cln_h.epochs = 16;
  cln->add_option("levels", cln_levels, "level source for demonstrations")->required();
  cln->add_option("--count", cln_count, "use the first N levels (0 = all)");
  cln->add_option("--epochs", cln_h.epochs)->capture_default_str();
  cln->add_option("--eval", cln_eval, "report the solve rate on the first N levels")->capture_default_str();
  cln->add_option("--out", cln_out, "checkpoint file")->required();
  cln->add_option("--report", cln_report, "training CSV");
  cln_drc.add(cln);
  add_hyper(cln, cln_h);

  // train ---------------------------------------------------------------------
  auto* trn = app.add_subcommand("train", "actor-critic training");
  std::string trn_levels, trn_out, trn_report, trn_init;
  std::int64_t trn_budget = 1'000'000;
  DrcFlags trn_drc;
  TrainHyper trn_h;
  trn->add_option("levels", trn_levels, "level source")->required();
  trn->add_option("--transitions", trn_budget, "environment transitions")->capture_default_str();
  trn->add_option("--init", trn_init, "start from this checkpoint");
  trn->add_option("--checkpoint-interval", trn_h.checkpoint_interval, "transitions between checkpoints");
  trn->add_option("--checkpoint-dir", trn_h.checkpoint_dir);
  trn->add_option("--out", trn_out, "final checkpoint")->required();
  trn->add_option("--report", trn_report, "training CSV");
  trn_drc.add(trn);
  add_hyper(trn, trn_h);

  // collect -------------------------------------------------------------------
  auto* col = app.add_subcommand("collect", "greedy episodes with captured cell states");
  std::string col_ckpt, col_levels, col_out, col_capture = "final", col_corpus = "train";
  int col_episodes = 200, col_thinking = 0;
  col->add_option("--checkpoint", col_ckpt)->required();
  col->add_option("--levels", col_levels)->required();
  col->add_option("--episodes", col_episodes)->capture_default_str();
  col->add_option("--capture", col_capture, "final or all ticks")->check(CLI::IsMember({"final", "all"}))->capture_default_str();
  col->add_option("--corpus", col_corpus, "corpus tag")->capture_default_str();
  col->add_option("--thinking", col_thinking, "forced NOOP steps")->capture_default_str();
  col->add_option("--out", col_out, "activation dataset")->required();

  // probe ---------------------------------------------------------------------
  auto* prb = app.add_subcommand("probe", "train a linear probe and score it on a held-out dataset");
  std::string prb_train, prb_test, prb_out, prb_metrics, prb_concept = "BoxPushDir", prb_kernel = "1",
                                                        prb_source = "cell", prb_conv = "movement";
  int prb_layer = 2, prb_future = 0, prb_horizon = 0, prb_tick = -1;
  bool prb_random = false;
  ProbeHyper prb_h;
  prb->add_option("--train", prb_train, "activation dataset")->required();
  prb->add_option("--test", prb_test, "activation dataset from another corpus");
  prb->add_option("--concept", prb_concept)->capture_default_str();
  prb->add_option("--future", prb_future, "future-action probe for step t+n-1 instead of a concept");
  prb->add_option("--horizon", prb_horizon, "concept look-ahead K (0 = unbounded)");
  prb->add_option("--convention", prb_conv)->capture_default_str();
  prb->add_option("--layer", prb_layer)->capture_default_str();
  prb->add_option("--source", prb_source, "cell or obs")->check(CLI::IsMember({"cell", "obs"}))->capture_default_str();
  prb->add_option("--kernel", prb_kernel, "1, 3, 5, 7 or global")->capture_default_str();
  prb->add_option("--tick", prb_tick, "captured tick to probe (default last)");
  prb->add_option("--lr", prb_h.lr)->capture_default_str();
  prb->add_option("--weight-decay", prb_h.weight_decay)->capture_default_str();
  prb->add_option("--epochs", prb_h.epochs)->capture_default_str();
  prb->add_option("--batch", prb_h.batch_size)->capture_default_str();
  prb->add_flag("--random", prb_random, "replace the trained probe with a norm-matched random one");
  prb->add_option("--out", prb_out, "probe file");
  prb->add_option("--metrics", prb_metrics, "per-class metrics CSV");

  // curve ---------------------------------------------------------------------
  auto* crv = app.add_subcommand("curve", "plan quality at every thinking tick");
  std::string crv_ckpt, crv_levels, crv_out;
  std::vector<std::string> crv_probes;
  int crv_k = 5, crv_count = 0;
  crv->add_option("--checkpoint", crv_ckpt)->required();
  crv->add_option("--levels", crv_levels)->required();
  crv->add_option("--count", crv_count, "first N levels (0 = all)");
  crv->add_option("--probe", crv_probes, "probe files")->required();
  crv->add_option("--thinking", crv_k)->capture_default_str();
  crv->add_option("--out", crv_out, "CSV (default stdout)");

  // emergence -----------------------------------------------------------------
  auto* emg = app.add_subcommand("emergence", "probe quality and thinking benefit across checkpoints");
  std::vector<std::string> emg_ckpts;
  std::string emg_train, emg_eval, emg_out, emg_corr;
  int emg_count = 100;
  EmergenceRecipe emg_r;
  emg->add_option("--checkpoints", emg_ckpts)->required();
  emg->add_option("--train-levels", emg_train)->required();
  emg->add_option("--eval-levels", emg_eval)->required();
  emg->add_option("--count", emg_count, "first N eval levels")->capture_default_str();
  emg->add_option("--episodes", emg_r.train_episodes, "probe-training episodes per checkpoint")->capture_default_str();
  emg->add_option("--thinking", emg_r.thinking_steps)->capture_default_str();
  emg->add_option("--out", emg_out);
  emg->add_option("--correlations", emg_corr);

  // corridor ------------------------------------------------------------------
  auto* cor = app.add_subcommand("corridor", "solve fraction per corridor length and thinking steps");
  std::string cor_ckpt, cor_out;
  std::vector<int> cor_lengths(kCorridorLengths.begin(), kCorridorLengths.end()), cor_ks{0, 1, 2, 4, 6, 8, 10};
  cor->add_option("--checkpoint", cor_ckpt, "network to test; omit to replay solver plans");
  cor->add_option("--lengths", cor_lengths)->capture_default_str();
  cor->add_option("--thinking", cor_ks)->capture_default_str();
  cor->add_option("--out", cor_out);

  // render --------------------------------------------------------------------
  auto* rnd = app.add_subcommand("render", "SVG of a board with decoded or ground-truth plans");
  std::string rnd_levels, rnd_ckpt, rnd_out;
  std::vector<std::string> rnd_probes, rnd_truth;
  int rnd_index = 0, rnd_k = 0;
  rnd->add_option("levels", rnd_levels)->required();
  rnd->add_option("--index", rnd_index)->capture_default_str();
  rnd->add_option("--checkpoint", rnd_ckpt, "decode plans from this network");
  rnd->add_option("--probe", rnd_probes, "probe files to decode");
  rnd->add_option("--thinking", rnd_k, "decode after this many thinking steps")->capture_default_str();
  rnd->add_option("--truth", rnd_truth, "concepts to draw from the solver plan");
  rnd->add_option("--out", rnd_out, "SVG (default stdout)");

  // intervene -----------------------------------------------------------------
  auto* itv = app.add_subcommand("intervene", "intervention success sweep");
  std::string itv_ckpt, itv_levels, itv_rows, itv_cells;
  std::vector<std::string> itv_agent, itv_box;
  std::vector<float> itv_alphas{0.25f, 0.5f, 1.0f, 2.0f};
  std::vector<int> itv_ps{1, 2, 3};
  int itv_layer = 2, itv_random = 0, itv_count = 0;
  bool itv_final = false;
  itv->add_option("--checkpoint", itv_ckpt)->required();
  itv->add_option("--levels", itv_levels, "annotated levels, e.g. handcrafted:AgentShortcut")->required();
  itv->add_option("--count", itv_count, "first N levels (0 = all)");
  itv->add_option("--agent-probe", itv_agent, "AgentApproachDir probe per repetition");
  itv->add_option("--box-probe", itv_box, "BoxPushDir probe per repetition");
  itv->add_option("--layer", itv_layer)->capture_default_str();
  itv->add_option("--random", itv_random, "also sweep N norm-matched random probes");
  itv->add_option("--alphas", itv_alphas)->capture_default_str();
  itv->add_option("--ps", itv_ps)->capture_default_str();
  itv->add_flag("--final-tick-only", itv_final);
  itv->add_option("--out", itv_rows, "per-repetition CSV");
  itv->add_option("--cells", itv_cells, "mean/std CSV");

  // serve ---------------------------------------------------------------------
  auto* srv = app.add_subcommand("serve", "steering HTTP service");
  std::string srv_host = "127.0.0.1";
  int srv_port = 8080;
  std::vector<std::string> srv_ckpts, srv_probes, srv_levels;
  srv->add_option("--host", srv_host)->capture_default_str();
  srv->add_option("--port", srv_port)->capture_default_str();
  srv->add_option("--checkpoint", srv_ckpts, "checkpoint files; the id is the file stem");
  srv->add_option("--probe", srv_probes, "probe files; the id is the file stem");
  srv->add_option("--levels", srv_levels, "level sources to register by id");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (!gen_kind.empty()) {
        const auto kind = parse_level_kind(gen_kind);
        if (!kind) throw Error(Errc::InvalidArgument, "unknown level kind '" + gen_kind + "'");
        HandcraftedParams hp;
        hp.corridor_length = gen_corridor;
        const std::vector<Level> levels = handcrafted_orbit(*kind, hp);
        write_file(gen_out, serialize_boxoban(levels));
        fs::path sidecar(gen_out);
        sidecar.replace_extension(".annotations.json");
        write_file(sidecar.string(), annotations_to_json(levels).dump(1) + "\n");
        std::cerr << levels.size() << " levels\n";
      } else {
        const std::vector<Level> levels = generate_corpus(gen_count, common.seed, gp, gen_prefix);
        write_file(gen_out, serialize_boxoban(levels));
        std::cerr << levels.size() << " levels\n";
      }
    } else if (*slv) {
      SearchBudget budget;
      budget.max_nodes = slv_nodes;
      SolveOptions opt;
      opt.deadlock_pruning = !slv_no_prune;
      for (const Level& l : load_levels(slv_levels)) {
        const SolveResult r = solve(l, budget, opt);
        std::cout << l.id << ' ';
        if (r.plan) {
          std::cout << plan_to_string(*r.plan) << '\n';
        } else {
          std::cout << (r.status == SolveStatus::ProvenUnsolvable ? "unsolvable" : "budget-exhausted") << '\n';
        }
      }
    } else if (*cln) {
      const std::vector<Level> levels = take(load_levels(cln_levels), cln_count);
      std::vector<Trajectory> demos;
      for (std::size_t i = 0; i < levels.size(); ++i) {
        if (auto d = demo_trajectory(levels[i], {}, common.seed + i)) demos.push_back(std::move(*d));
      }
      cln_h.seed = common.seed;
      std::cerr << demos.size() << " demonstrations\n";
      auto [params, report] =
          behavior_clone(init_params<float>(cln_drc.config(), common.seed), demos, cln_h, [&](int epoch, const Params<float>&) {
            std::cerr << "epoch " << epoch + 1 << " of " << cln_h.epochs << '\n';
          });
      write_file(cln_out, save_checkpoint(params, {{"transitions", report.rows.empty() ? 0 : report.rows.back().transitions}}));
      if (!cln_report.empty()) write_file(cln_report, report.to_csv());
      if (cln_eval > 0) std::cout << "solve_rate " << evaluate_solve_rate(params, take(levels, cln_eval), 0) << '\n';
    } else if (*trn) {
      const std::vector<Level> levels = load_levels(trn_levels);
      Params<float> init = trn_init.empty() ? init_params<float>(trn_drc.config(), common.seed) : load_params(trn_init);
      trn_h.seed = common.seed;
      auto [params, report] = a2c_train(std::move(init), levels, trn_h, trn_budget);
      write_file(trn_out, save_checkpoint(params, {{"transitions", report.rows.empty() ? 0 : report.rows.back().transitions}}));
      if (!trn_report.empty()) write_file(trn_report, report.to_csv());
      for (const auto& path : report.checkpoints) std::cerr << "checkpoint " << path << '\n';
    } else if (*col) {
      const ActivationDataset data =
          collect_probe_dataset(load_params(col_ckpt), load_levels(col_levels), col_episodes,
                                col_capture == "final" ? Capture::FinalTick : Capture::AllTicks, col_corpus, col_thinking);
      write_file(col_out, save_activation_dataset(data));
      std::cerr << data.episodes.size() << " episodes, " << data.transitions() << " transitions\n";
    } else if (*prb) {
      const ActivationDataset train = load_activation_dataset(read_file(prb_train));
      ProbeConfig cfg;
      cfg.target = parse_target(prb_concept, prb_future, prb_horizon, prb_conv);
      cfg.source = {prb_source == "cell" ? SourceKind::CellState : SourceKind::Observation, prb_source == "cell" ? prb_layer : 0};
      cfg.kernel = parse_kernel(prb_kernel);
      cfg.channels = prb_source == "cell" ? train.config.G : kNumSquareStates;
      cfg.seed = common.seed;
      const std::optional<int> tick = prb_tick >= 0 ? std::optional<int>(prb_tick) : std::nullopt;
      Probe<float> probe = train_probe(make_probe_dataset(train, cfg, tick), cfg, prb_h);
      if (prb_random) probe = random_probe(cfg, common.seed, probe);
      if (!prb_out.empty()) write_file(prb_out, save_probe(probe, {{"corpus", train.corpus}}));
      if (!prb_test.empty()) {
        const ActivationDataset test = load_activation_dataset(read_file(prb_test));
        if (test.corpus == train.corpus) std::cerr << "warning: train and test datasets share the corpus tag\n";
        const Scored s = score_probe(probe, make_probe_dataset(test, cfg, tick));
        const auto rows = per_class_metrics(s.predictions, s.labels, cfg.num_classes());
        if (!prb_metrics.empty()) write_file(prb_metrics, metrics_csv(rows, cfg.target));
        std::cout << "macro_f1 " << macro_f1(s.predictions, s.labels, cfg.num_classes()) << '\n';
      }
    } else if (*crv) {
      std::vector<Probe<float>> probes;
      for (const auto& p : crv_probes) probes.push_back(load_probe_file(p));
      emit(crv_out, plan_quality_curve(load_params(crv_ckpt), probes, take(load_levels(crv_levels), crv_count), crv_k).to_csv());
    } else if (*emg) {
      emg_r.seed = common.seed;
      const EmergenceResult r = emergence_scan(load_checkpoints(emg_ckpts), load_levels(emg_train),
                                               take(load_levels(emg_eval), emg_count), emg_r);
      emit(emg_out, r.to_csv());
      if (!emg_corr.empty()) write_file(emg_corr, r.correlations_csv());
    } else if (*cor) {
      std::vector<Level> levels;
      for (int length : cor_lengths) {
        const auto ds = corridor_dataset(length);
        levels.insert(levels.end(), ds.begin(), ds.end());
      }
      std::unique_ptr<Player> player;
      Params<float> params;
      if (cor_ckpt.empty()) {
        player = std::make_unique<SolverPlayer>();
      } else {
        params = load_params(cor_ckpt);
        player = std::make_unique<NetworkPlayer>(params);
      }
      const CorridorTable table = corridor_experiment(*player, levels, cor_ks);
      emit(cor_out, table.to_csv());
      std::cerr << table.monotonicity_report();
    } else if (*rnd) {
      const std::vector<Level> levels = load_levels(rnd_levels);
      if (rnd_index < 0 || static_cast<std::size_t>(rnd_index) >= levels.size()) {
        throw Error(Errc::BadIndex, "level index out of range");
      }
      const Level& level = levels[rnd_index];
      std::vector<std::pair<ConceptKind, ConceptGrid>> grids;
      if (!rnd_truth.empty()) {
        const auto plan = solve(level).plan;
        if (!plan) throw Error(Errc::InvalidArgument, "level has no solution");
        const Trajectory traj = rollout_actions(level.initial, plan->actions, level.id);
        for (const auto& name : rnd_truth) {
          const auto kind = parse_concept_kind(name);
          if (!kind) throw Error(Errc::InvalidArgument, "unknown concept '" + name + "'");
          grids.emplace_back(*kind, label_trajectory(traj, ConceptSpec{*kind})[0]);
        }
      }
      if (!rnd_probes.empty()) {
        if (rnd_ckpt.empty()) throw Error(Errc::InvalidArgument, "--probe needs --checkpoint");
        const Rollout r = thinking_steps_rollout(load_params(rnd_ckpt), level, rnd_k);
        const std::size_t at = std::min<std::size_t>(rnd_k, r.traces.size() - 1);
        for (const auto& path : rnd_probes) {
          const Probe<float> p = load_probe_file(path);
          const auto* spec = std::get_if<ConceptSpec>(&p.config.target);
          if (!spec) throw Error(Errc::InvalidArgument, "only concept probes can be drawn");
          grids.emplace_back(spec->kind, predict_grid(p, r.traces[at].back()));
        }
      }
      emit(rnd_out, render_plan_svg(level.initial, grids));
    } else if (*itv) {
      const Params<float> params = load_params(itv_ckpt);
      const std::vector<Level> levels = take(load_levels(itv_levels), itv_count);
      SweepProbes trained{itv_layer, "trained", {}, {}};
      for (const auto& p : itv_agent) trained.agent.push_back(load_probe_file(p));
      for (const auto& p : itv_box) trained.box.push_back(load_probe_file(p));
      std::vector<SweepProbes> sets{trained};
      if (itv_random > 0) {
        SweepProbes random{itv_layer, "random", {}, {}};
        for (int i = 0; i < itv_random; ++i) {
          const std::uint64_t seed = common.seed + static_cast<std::uint64_t>(i);
          if (!trained.agent.empty()) {
            const auto& ref = trained.agent[i % trained.agent.size()];
            random.agent.push_back(random_probe(ref.config, seed, ref));
          }
          if (!trained.box.empty()) {
            const auto& ref = trained.box[i % trained.box.size()];
            random.box.push_back(random_probe(ref.config, seed, ref));
          }
        }
        sets.push_back(std::move(random));
      }
      SweepGrid grid;
      grid.alphas = itv_alphas;
      grid.ps = itv_ps;
      grid.final_tick_only = itv_final;
      grid.cutoff_kinds = {CutoffKind::AgentOnly, CutoffKind::BoxOnly, CutoffKind::AgentAndBox};
      const SweepResult r = sweep(params, levels, sets, grid);
      emit(itv_rows, r.rows_csv());
      if (!itv_cells.empty()) write_file(itv_cells, r.cells_csv());
    } else if (*srv) {
      SteeringService service;
      for (const auto& p : srv_ckpts) service.add_checkpoint(stem(p), load_params(p));
      for (const auto& p : srv_probes) service.add_probe(stem(p), load_probe_file(p));
      for (const auto& src : srv_levels) {
        for (const Level& l : load_levels(src)) service.add_level(l);
      }
      HttpServer server(service);
      const int port = server.bind(srv_host, srv_port);
      std::cerr << "listening on " << srv_host << ':' << port << '\n';
      server.run();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
