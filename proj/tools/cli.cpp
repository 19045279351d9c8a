#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtbudget/bounds.hpp"
#include "mtbudget/errors.hpp"
#include "mtbudget/evaluation.hpp"

namespace mtb::cli {

namespace {

using nlohmann::ordered_json;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep))
    if (!part.empty()) out.push_back(part);
  return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  if (!(in >> out) || !in.eof()) throw InvalidArgument("bad value `" + value + "` for `" + key + "`");
  return out;
}

struct StreamSource {
  std::string data;
  std::string synth;
  std::size_t tasks = 0;
  std::optional<double> binarize;
  bool rescale = false;

  void attach(CLI::App* cmd) {
    auto* data_opt = cmd->add_option("--data", data, "Dataset in mtsvm line format");
    auto* synth_opt = cmd->add_option("--synth", synth, "Synthetic stream spec, e.g. k=3,d=10,n=2000,noise=0.1");
    data_opt->excludes(synth_opt);
    cmd->add_option("--tasks", tasks, "Task count (default: largest task id in the data)");
    cmd->add_option("--binarize", binarize, "Binarize real labels at this percentile");
    cmd->add_flag("--rescale", rescale, "Rescale non-binary features to [0,1]");
  }

  DatasetStream load(std::uint64_t default_seed) const {
    if (data.empty() == synth.empty()) throw InvalidArgument("give exactly one of --data or --synth");
    if (!synth.empty()) {
      DatasetStream s = generate_synthetic(parse_synth_spec(synth, default_seed)).stream;
      return rescale ? rescale_features(s) : s;
    }
    ScoredStream scored = load_dataset(data, tasks);
    if (rescale) scored = rescale_features(scored);
    return binarize ? binarize_by_percentile(scored, *binarize) : to_binary(scored);
  }

  bool seeded_by_run() const {
    if (synth.empty()) return false;
    for (const auto& kv : split(synth, ','))
      if (kv.rfind("seed=", 0) == 0) return false;
    return true;
  }

  std::string label() const { return data.empty() ? "synth:" + synth : data; }
};

ordered_json confusion_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}, {"f_measure", c.f_measure()}};
}

struct RunJob {
  Algorithm algorithm;
  std::string graph;
  std::string budget_text;
  std::uint64_t seed;
};

struct RunResult {
  RunJob job;
  std::size_t budget = 0;
  std::optional<std::size_t> baseline;
  StreamMetrics metrics;
  std::vector<std::string> warnings;
  double wall_ms = 0.0;
};

ordered_json run_json(const RunResult& r, const std::string& kernel, double eta, std::size_t epochs,
                      const DatasetStream& stream, const std::string& source) {
  ordered_json j;
  j["algo"] = std::string(to_string(r.job.algorithm));
  j["graph"] = r.job.graph;
  j["kernel"] = kernel;
  j["eta"] = eta;
  j["seed"] = r.job.seed;
  j["epochs"] = epochs;
  j["source"] = source;
  j["n"] = stream.size();
  j["k"] = stream.k;
  j["budget"] = r.job.budget_text;
  j["budget_resolved"] = r.budget;
  if (r.baseline) j["baseline_active"] = *r.baseline;
  j["f_measure"] = r.metrics.f_measure();
  j["mistakes"] = r.metrics.mistakes;
  j["final_active"] = r.metrics.final_active;
  j["micro"] = confusion_json(r.metrics.micro);
  ordered_json per_task = ordered_json::array();
  for (std::size_t t = 0; t < r.metrics.per_task.size(); ++t) {
    ordered_json entry = confusion_json(r.metrics.per_task[t]);
    entry["task"] = t + 1;
    per_task.push_back(std::move(entry));
  }
  j["per_task"] = std::move(per_task);
  ordered_json traj = ordered_json::array();
  for (const auto& p : r.metrics.trajectory)
    traj.push_back({{"step", p.step}, {"f_measure", p.f_measure}, {"active", p.active}});
  j["trajectory"] = std::move(traj);
  j["warnings"] = r.warnings;
  return j;
}

void print_table(std::ostream& out, const std::vector<RunResult>& results, double eta) {
  out << std::left << std::setw(12) << "algo" << std::setw(14) << "graph" << std::right << std::setw(8) << "B"
      << std::setw(8) << "eta" << std::setw(8) << "seed" << std::setw(11) << "F" << std::setw(10) << "mistakes"
      << std::setw(8) << "|S|" << '\n';
  for (const auto& r : results) {
    std::string graph = r.job.graph.size() > 13 ? r.job.graph.substr(0, 13) : r.job.graph;
    out << std::left << std::setw(12) << to_string(r.job.algorithm) << std::setw(14) << graph << std::right
        << std::setw(8) << r.budget << std::setw(8) << eta << std::setw(8) << r.job.seed << std::setw(11)
        << std::fixed << std::setprecision(4) << r.metrics.f_measure() << std::defaultfloat << std::setw(10)
        << r.metrics.mistakes << std::setw(8) << r.metrics.final_active << '\n';
  }
}

void print_csv(std::ostream& out, const std::vector<RunResult>& results, double eta) {
  out << "algo,graph,B,eta,seed,f_measure,mistakes,final_active,wall_ms\n";
  for (const auto& r : results) {
    out << to_string(r.job.algorithm) << ',' << r.job.graph << ',' << r.budget << ',' << eta << ',' << r.job.seed
        << ',' << std::setprecision(6) << r.metrics.f_measure() << ',' << r.metrics.mistakes << ','
        << r.metrics.final_active << ',' << std::fixed << std::setprecision(1) << r.wall_ms << std::defaultfloat
        << '\n';
  }
}

struct RunOptions {
  StreamSource source;
  std::string algos;
  std::string graphs = "complete";
  std::string budgets;
  std::string kernel;
  double eta = 0.01;
  std::string seeds = "0";
  std::size_t epochs = 1;
  std::string format = "json";
  bool csv = false;
  std::size_t threads = 0;
};

int do_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  const KernelSpec kernel = parse_kernel_spec(opt.kernel);
  if (!kernel.normalize) throw InvalidArgument("learner kernels must be normalized (append `:norm`)");
  if (!(opt.eta > 0.0)) throw InvalidArgument("--eta must be positive");
  if (opt.epochs == 0) throw InvalidArgument("--epochs must be positive");

  std::vector<Algorithm> algos;
  for (const auto& a : split(opt.algos, ',')) algos.push_back(parse_algorithm(a));
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split(opt.seeds, ',')) seeds.push_back(parse_value<std::uint64_t>("--seed", s));
  const auto graphs = split(opt.graphs, ',');
  auto budgets = split(opt.budgets, ',');
  if (algos.empty() || seeds.empty() || graphs.empty()) throw InvalidArgument("empty --algo/--seed/--graph list");
  if (budgets.empty()) {
    for (auto a : algos)
      if (a != Algorithm::perceptron_battery) throw InvalidArgument("--budget is required for budget algorithms");
    budgets.push_back("0");
  }

  struct Prepared {
    DatasetStream stream;
    std::optional<std::size_t> baseline;
  };
  const bool fractional = std::any_of(budgets.begin(), budgets.end(), is_fractional_budget);
  std::map<std::uint64_t, Prepared> prepared;
  for (auto s : seeds) {
    const std::uint64_t key = opt.source.seeded_by_run() ? s : seeds.front();
    if (prepared.count(key)) continue;
    Prepared p{opt.source.load(key), std::nullopt};
    if (fractional) p.baseline = baseline_active_size(p.stream, kernel);
    prepared.emplace(key, std::move(p));
  }
  const auto prepared_for = [&](std::uint64_t s) -> const Prepared& {
    return prepared.at(opt.source.seeded_by_run() ? s : seeds.front());
  };
  const std::size_t k = std::max<std::size_t>(prepared.begin()->second.stream.k, opt.source.tasks);
  if (k == 0) throw InvalidArgument("cannot determine the number of tasks; pass --tasks");

  std::map<std::string, TaskGraph> graph_cache;
  for (const auto& g : graphs) graph_cache.emplace(g, load_graph(g, k));

  std::vector<RunJob> jobs;
  for (auto a : algos)
    for (const auto& g : graphs)
      for (const auto& b : budgets)
        for (auto s : seeds) jobs.push_back({a, g, b, s});

  std::vector<std::function<RunResult()>> work;
  for (const auto& job : jobs) {
    LearnerConfig cfg;
    cfg.algorithm = job.algorithm;
    cfg.graph = graph_cache.at(job.graph);
    const Prepared& data = prepared_for(job.seed);
    cfg.budget =
        job.algorithm == Algorithm::perceptron_battery ? 0 : resolve_budget(job.budget_text, data.baseline.value_or(0));
    cfg.eta = opt.eta;
    cfg.kernel = kernel;
    cfg.seed = job.seed;
    work.emplace_back([cfg, job, &data, epochs = opt.epochs] {
      RunResult r{job, cfg.budget, is_fractional_budget(job.budget_text) ? data.baseline : std::nullopt, {}, {}, 0.0};
      r.warnings = config_warnings(cfg);
      const auto start = std::chrono::steady_clock::now();
      r.metrics = run_stream(data.stream, cfg, epochs);
      r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      return r;
    });
  }
  const std::size_t threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  const auto results = run_parallel(work, threads);

  for (const auto& r : results)
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';

  if (opt.csv) {
    print_csv(out, results, opt.eta);
  } else if (opt.format == "table") {
    print_table(out, results, opt.eta);
  } else {
    const std::string source = opt.source.label();
    ordered_json doc;
    if (results.size() == 1) {
      doc = run_json(results.front(), to_string(kernel), opt.eta, opt.epochs, prepared_for(results.front().job.seed).stream,
                     source);
    } else {
      doc = ordered_json::array();
      for (const auto& r : results)
        doc.push_back(run_json(r, to_string(kernel), opt.eta, opt.epochs, prepared_for(r.job.seed).stream, source));
    }
    out << doc.dump(2) << '\n';
  }
  return 0;
}

struct VerifyOptions {
  std::size_t k = 8;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::optional<double> p;
  std::string graph;
};

int do_verify(const VerifyOptions& opt, std::ostream& out) {
  constexpr double kTolerance = 1e-9;
  double worst = 0.0;
  std::size_t checked = 0;
  auto check = [&](const TaskGraph& g) {
    worst = std::max(worst, resistance_identity_error(g));
    ++checked;
  };

  if (!opt.graph.empty()) {
    check(load_graph(opt.graph, opt.k));
  } else {
    if (opt.k == 0) throw InvalidArgument("--k must be positive");
    static constexpr double kDensities[] = {0.2, 0.5, 0.8};
    for (std::size_t t = 0; t < opt.trials; ++t)
      check(TaskGraph::random(opt.k, opt.p.value_or(kDensities[t % 3]), opt.seed + t));
    check(TaskGraph::complete(opt.k));
    check(TaskGraph::disconnected(opt.k));
    check(TaskGraph::path(opt.k));
  }
  out << "graphs " << checked << " max_error " << std::scientific << std::setprecision(3) << worst
      << std::defaultfloat << (worst <= kTolerance ? " ok" : " FAIL") << '\n';
  return worst <= kTolerance ? 0 : 1;
}

struct SynthOptions {
  SyntheticConfig config;
  std::string shifts;
  std::string out_path;
  std::string refs_path;
};

int do_synth(SynthOptions opt, std::ostream& out) {
  for (const auto& ev : split(opt.shifts, ',')) {
    auto parts = split(ev, ':');
    if (parts.size() != 2) throw InvalidArgument("shift must look like <step>:<angle>");
    opt.config.shifts.push_back(
        {parse_value<std::size_t>("--shift", parts[0]), parse_value<double>("--shift", parts[1])});
  }
  const SyntheticData data = generate_synthetic(opt.config);
  std::ofstream file(opt.out_path);
  if (!file) throw Error("cannot write " + opt.out_path);
  write_dataset(file, data.stream);

  if (!opt.refs_path.empty()) {
    std::ofstream refs(opt.refs_path);
    if (!refs) throw Error("cannot write " + opt.refs_path);
    refs.precision(17);
    const auto seq = data.references.sequence();
    for (std::size_t s = 0; s < seq.size(); ++s) {
      const std::size_t from = s == 0 ? 0 : data.references.schedule[s - 1].first;
      for (std::size_t i = 0; i < seq[s].size(); ++i) {
        refs << from << ' ' << i + 1;
        for (Eigen::Index f = 0; f < seq[s][i].size(); ++f) refs << ' ' << seq[s][i][f];
        refs << '\n';
      }
    }
  }
  out << "wrote " << data.stream.size() << " examples (k=" << data.stream.k << ", d=" << data.stream.d << ") to "
      << opt.out_path << '\n';
  return 0;
}

}  // namespace

SyntheticConfig parse_synth_spec(const std::string& text, std::uint64_t default_seed) {
  SyntheticConfig cfg;
  cfg.seed = default_seed;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("synthetic spec item `" + item + "` lacks `=`");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "k") cfg.k = parse_value<std::size_t>(key, value);
    else if (key == "d") cfg.d = parse_value<std::size_t>(key, value);
    else if (key == "n") cfg.n = parse_value<std::size_t>(key, value);
    else if (key == "relatedness") cfg.relatedness = parse_value<double>(key, value);
    else if (key == "noise") cfg.noise = parse_value<double>(key, value);
    else if (key == "margin") cfg.margin = parse_value<double>(key, value);
    else if (key == "seed") cfg.seed = parse_value<std::uint64_t>(key, value);
    else if (key == "shifts") {
      for (const auto& ev : split(value, '/')) {
        auto parts = split(ev, ':');
        if (parts.size() != 2) throw InvalidArgument("shift must look like <step>:<angle>");
        cfg.shifts.push_back({parse_value<std::size_t>(key, parts[0]), parse_value<double>(key, parts[1])});
      }
    } else {
      throw InvalidArgument("unknown synthetic spec key `" + key + "`");
    }
  }
  return cfg;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multitask kernel online learning on a budget"};
  app.name("mtbudget");
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Stream a dataset through one or more budget learners");
  run.source.attach(run_cmd);
  run_cmd->add_option("--algo", run.algos, "mtbprj, mtbprj2, mtrbp, mtforg or perceptron (comma list)")->required();
  run_cmd->add_option("--graph", run.graphs, "complete, disconnected or a graph file (comma list)");
  run_cmd->add_option("--budget", run.budgets, "Budget as a count or a percentage of the baseline, e.g. 10% (comma list)");
  run_cmd->add_option("--kernel", run.kernel, "linear | poly:<deg>:<offset> | gauss:<gamma>, with :norm")->required();
  run_cmd->add_option("--eta", run.eta, "Projection threshold for mtbprj/mtbprj2");
  run_cmd->add_option("--seed", run.seeds, "Seed (comma list); each seed draws its own --synth stream unless --synth sets seed=");
  run_cmd->add_option("--epochs", run.epochs, "Passes over the stream");
  run_cmd->add_option("--format", run.format, "json or table")->check(CLI::IsMember({"json", "table"}));
  run_cmd->add_flag("--csv", run.csv, "One CSV row per run");
  run_cmd->add_option("--threads", run.threads, "Concurrent runs (default: hardware threads)");

  StreamSource base_source;
  std::string base_kernel;
  std::uint64_t base_seed = 0;
  auto* base_cmd = app.add_subcommand("baseline", "Run the k independent Perceptrons");
  base_source.attach(base_cmd);
  base_cmd->add_option("--kernel", base_kernel, "Kernel spec with :norm")->required();
  base_cmd->add_option("--seed", base_seed, "Seed for --synth");

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify-graph", "Check the resistance-distance identity for A^{-1}");
  verify_cmd->add_option("--k", verify.k, "Tasks per random graph");
  verify_cmd->add_option("--trials", verify.trials, "Random graphs to check");
  verify_cmd->add_option("--seed", verify.seed, "Seed of the first random graph");
  verify_cmd->add_option("--p", verify.p, "Edge probability (default: cycles 0.2, 0.5, 0.8)");
  verify_cmd->add_option("--graph", verify.graph, "Check a single graph file instead");

  auto* bounds_cmd = app.add_subcommand("bounds", "Mistake-bound calculators");
  bounds_cmd->require_subcommand(1);
  double rbp_loss = 0.0, rbp_cg = 1.0, rbp_shift = 0.0, rbp_eps = 0.5;
  std::size_t rbp_budget = 0;
  auto* rbp_cmd = bounds_cmd->add_subcommand("mtrbp", "Expected-mistake bound of mtrbp");
  rbp_cmd->add_option("--L", rbp_loss, "Cumulative hinge loss");
  rbp_cmd->add_option("--cG", rbp_cg, "Graph constant cG");
  rbp_cmd->add_option("--S", rbp_shift, "Total shift");
  rbp_cmd->add_option("--B", rbp_budget, "Budget")->required();
  rbp_cmd->add_option("--eps", rbp_eps, "Epsilon in (0,1)");
  double forg_loss = 0.0;
  std::size_t forg_budget = 0;
  auto* forg_cmd = bounds_cmd->add_subcommand("mtforg", "Mistake bound of mtforg (B > 83)");
  forg_cmd->add_option("--L", forg_loss, "Cumulative hinge loss");
  forg_cmd->add_option("--B", forg_budget, "Budget")->required();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic multitask dataset");
  synth_cmd->add_option("--k", synth.config.k, "Tasks");
  synth_cmd->add_option("--d", synth.config.d, "Dimension");
  synth_cmd->add_option("--n", synth.config.n, "Examples");
  synth_cmd->add_option("--relatedness", synth.config.relatedness, "Task relatedness in [0,1]");
  synth_cmd->add_option("--noise", synth.config.noise, "Label flip probability");
  synth_cmd->add_option("--margin", synth.config.margin, "Minimum |<g,x>| of accepted instances");
  synth_cmd->add_option("--seed", synth.config.seed, "Seed");
  synth_cmd->add_option("--shift", synth.shifts, "Rotations <step>:<angle>, comma separated");
  synth_cmd->add_option("--out", synth.out_path, "Output dataset path")->required();
  synth_cmd->add_option("--refs", synth.refs_path, "Also write the reference vectors here");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run_cmd) return do_run(run, out, err);
    if (*base_cmd) {
      const KernelSpec kernel = parse_kernel_spec(base_kernel);
      if (!kernel.normalize) throw InvalidArgument("learner kernels must be normalized (append `:norm`)");
      const DatasetStream stream = base_source.load(base_seed);
      PerceptronBattery battery(std::max<std::size_t>(stream.k, 1), kernel);
      const StreamMetrics m = run_stream(stream, battery);
      ordered_json j{{"algo", "perceptron"}, {"kernel", to_string(kernel)}, {"n", stream.size()},
                     {"k", stream.k},        {"f_measure", m.f_measure()},  {"mistakes", m.mistakes},
                     {"baseline_active", m.final_active}};
      out << j.dump(2) << '\n';
      return 0;
    }
    if (*verify_cmd) return do_verify(verify, out);
    if (*rbp_cmd) {
      bool flagged = false;
      const double v = mtrbp_bound(rbp_loss, rbp_cg, rbp_shift, rbp_budget, rbp_eps, &flagged);
      if (flagged) err << "warning: ln(B/3) <= 0 for B = " << rbp_budget << '\n';
      out << std::setprecision(10) << v << '\n';
      return 0;
    }
    if (*forg_cmd) {
      out << std::setprecision(10) << mtforg_bound(forg_loss, forg_budget) << '\n';
      return 0;
    }
    if (*synth_cmd) return do_synth(synth, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mtb::cli
