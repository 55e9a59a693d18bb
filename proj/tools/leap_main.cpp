#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "leap/baselines.hpp"
#include "leap/experiment.hpp"

namespace fs = std::filesystem;
using leap::config::ExperimentConfig;
using leap::graph::Task;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string dataset;
  std::string out_dir = "runs";
  std::string aggregator;
  std::string task;
  std::vector<std::uint64_t> seeds;
};

ExperimentConfig resolve_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty())
    cfg = leap::config::parse_config_file(o.config_path);
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (!o.aggregator.empty()) cfg.aggregator = o.aggregator;
  if (!o.task.empty()) {
    if (o.task == "lp") cfg.task = Task::link_prediction;
    else if (o.task == "wsn") cfg.task = Task::wsn_regression;
    else throw CLI::ValidationError("--task must be lp or wsn");
  }
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (cfg.dataset.empty())
    throw CLI::ValidationError("no dataset given (config or --dataset)");
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment config file");
  cmd->add_option("--dataset", o.dataset, "edge list path (overrides config)");
  cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_option("--aggregator", o.aggregator,
                  "avgpool|densemax|seqofseq|edgeconv (overrides config)");
  cmd->add_option("--task", o.task, "lp|wsn (overrides config)");
  cmd->add_option("--seed,--seeds", o.seeds, "seed list (overrides config)");
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return leap::config::content_hash(cfg.to_text());
}

void append_report(const std::string& out_dir, const ExperimentConfig& cfg,
                   const std::string& body, double wall_seconds) {
  fs::create_directories(out_dir);
  std::ofstream os(out_dir + "/report.txt", std::ios::app);
  os << "=== run ===\n";
  os << "config_hash = " << std::hex << config_hash(cfg) << std::dec << '\n';
  os << cfg.to_text();
  os << body;
  os << "wall_clock_s = " << wall_seconds << "\n\n";
}

int cmd_split(const CommonOpts& o, double fraction_override,
              std::uint64_t seed) {
  ExperimentConfig cfg = resolve_config(o);
  if (fraction_override > 0) cfg.test_fraction = fraction_override;
  auto g = leap::experiment::load_dataset(cfg);
  auto split = leap::graph::split_edges(g, cfg.test_fraction, seed, cfg.task);
  leap::experiment::write_split_files(o.out_dir, g, split);
  std::cout << "split written to " << o.out_dir << ": "
            << split.train_graph.edge_count() << " train edges, "
            << split.train_set.size() << " train pairs, "
            << split.test_set.size() << " test pairs\n";
  return 0;
}

int cmd_train(const CommonOpts& o) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = resolve_config(o);
  auto g = leap::experiment::load_dataset(cfg);
  fs::create_directories(o.out_dir);

  std::ostringstream body;
  std::ofstream metrics(o.out_dir + "/metrics.csv", std::ios::app);
  std::vector<double> primary;
  for (std::uint64_t seed : cfg.seeds) {
    leap::model::Model trained = leap::model::Model::create(cfg, g, seed);
    leap::model::TrainHistory hist;
    auto r = leap::experiment::run_single(cfg, g, seed, &trained, &hist);
    std::string ckpt = o.out_dir + "/model_seed" + std::to_string(seed) + ".ckpt";
    trained.save(ckpt);
    {
      std::ofstream hcsv(o.out_dir + "/history_seed" + std::to_string(seed) + ".csv");
      hcsv << "epoch,train_loss,val_loss\n";
      for (std::size_t e = 0; e < hist.epochs.size(); ++e)
        hcsv << e << ',' << hist.epochs[e].train_loss << ','
             << hist.epochs[e].val_loss << '\n';
    }
    if (cfg.task == Task::link_prediction) {
      body << "seed " << seed << ": auc = " << r.auc << " (epochs "
           << r.epochs_run << ")\n";
      metrics << cfg.dataset << ",lp," << cfg.aggregator << ',' << seed
              << ",auc," << r.auc << '\n';
      primary.push_back(r.auc);
      std::cout << "seed " << seed << " auc " << r.auc << '\n';
    } else {
      body << "seed " << seed << ": rmse = " << r.rmse << ", pcc = " << r.pcc
           << " (epochs " << r.epochs_run << ")\n";
      metrics << cfg.dataset << ",wsn," << cfg.aggregator << ',' << seed
              << ",rmse," << r.rmse << '\n';
      metrics << cfg.dataset << ",wsn," << cfg.aggregator << ',' << seed
              << ",pcc," << r.pcc << '\n';
      primary.push_back(r.rmse);
      std::cout << "seed " << seed << " rmse " << r.rmse << " pcc " << r.pcc
                << '\n';
    }
  }
  double mean = 0, var = 0;
  for (double x : primary) mean += x;
  mean /= static_cast<double>(primary.size());
  for (double x : primary) var += (x - mean) * (x - mean);
  double sd = primary.size() > 1
                  ? std::sqrt(var / static_cast<double>(primary.size() - 1))
                  : 0.0;
  body << "mean = " << mean << " +- " << sd << '\n';
  std::cout << "mean " << mean << " +- " << sd << '\n';
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0).count();
  append_report(o.out_dir, cfg, body.str(), secs);
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& pairs_path,
             const std::string& graph_path, const std::string& out_dir,
             const std::string& x_label, std::uint64_t seed) {
  auto m = leap::model::Model::load(model_path);
  leap::graph::LoadOptions opt;
  opt.directed = m.cfg().directed;
  opt.weighted = m.cfg().weighted;
  opt.numeric_ids = true;
  opt.min_node_count =
      static_cast<leap::graph::NodeId>(m.embeddings().values.rows());
  auto g = leap::graph::load_edge_list_file(graph_path, opt);
  if (m.cfg().task == Task::wsn_regression)
    g = leap::graph::normalize_weights(g);
  auto pairs = leap::experiment::read_pairs_file(pairs_path);
  auto preds = leap::experiment::predict_pairs(m, g, pairs, seed);

  fs::create_directories(out_dir);
  std::ofstream plot(out_dir + "/plot_data.csv", std::ios::app);
  if (m.cfg().task == Task::link_prediction) {
    double auc = leap::baselines::auc(preds, pairs.labels);
    std::cout << "auc " << auc << '\n';
    plot << x_label << ",auc," << auc << '\n';
  } else {
    double rmse = leap::baselines::rmse(preds, pairs.labels);
    double pcc = leap::baselines::pcc(preds, pairs.labels);
    std::cout << "rmse " << rmse << " pcc " << pcc << '\n';
    plot << x_label << ",rmse," << rmse << '\n';
    plot << x_label << ",pcc," << pcc << '\n';
  }
  std::ofstream scored(out_dir + "/scored_pairs.csv");
  leap::baselines::ScoredPairs sp{pairs.pairs, preds, pairs.labels};
  sp.export_csv(scored);
  return 0;
}

int cmd_baseline(const CommonOpts& o, const std::string& method,
                 double fraction_override) {
  ExperimentConfig cfg = resolve_config(o);
  if (fraction_override > 0) cfg.test_fraction = fraction_override;
  auto g = leap::experiment::load_dataset(cfg);
  fs::create_directories(o.out_dir);
  std::ofstream metrics(o.out_dir + "/metrics.csv", std::ios::app);

  auto known = cfg.task == Task::link_prediction
                   ? leap::experiment::lp_baseline_methods()
                   : leap::experiment::wsn_baseline_methods();
  if (std::find(known.begin(), known.end(), method) == known.end()) {
    std::ostringstream msg;
    msg << "unknown method '" << method << "'; available:";
    for (auto& k : known) msg << ' ' << k;
    throw CLI::ValidationError(msg.str());
  }

  for (std::uint64_t seed : cfg.seeds) {
    if (cfg.task == Task::link_prediction) {
      double auc = leap::experiment::baseline_lp_auc(g, method,
                                                     cfg.test_fraction, seed);
      std::cout << method << " seed " << seed << " auc " << auc << '\n';
      metrics << cfg.dataset << ",lp," << method << ',' << seed << ",auc,"
              << auc << '\n';
    } else {
      auto [rmse, pcc] = leap::experiment::baseline_wsn(g, method,
                                                        cfg.test_fraction, seed);
      std::cout << method << " seed " << seed << " rmse " << rmse << " pcc "
                << pcc << '\n';
      metrics << cfg.dataset << ",wsn," << method << ',' << seed << ",rmse,"
              << rmse << '\n';
      metrics << cfg.dataset << ",wsn," << method << ',' << seed << ",pcc,"
              << pcc << '\n';
    }
  }
  return 0;
}

int cmd_sweep(const CommonOpts& o, double from, double to, double step) {
  ExperimentConfig cfg = resolve_config(o);
  if (cfg.task != Task::wsn_regression)
    throw CLI::ValidationError("sweep is defined for --task wsn");
  auto g = leap::experiment::load_dataset(cfg);
  fs::create_directories(o.out_dir);
  std::ofstream plot(o.out_dir + "/sweep.csv", std::ios::app);
  plot << "delta,method,seed,metric,value\n";
  for (double delta = from; delta <= to + 1e-9; delta += step) {
    cfg.test_fraction = delta;
    for (std::uint64_t seed : cfg.seeds) {
      auto r = leap::experiment::run_single(cfg, g, seed);
      plot << delta << ",leap-" << cfg.aggregator << ',' << seed << ",rmse,"
           << r.rmse << '\n';
      plot << delta << ",leap-" << cfg.aggregator << ',' << seed << ",pcc,"
           << r.pcc << '\n';
      std::cout << "delta " << delta << " seed " << seed << " rmse " << r.rmse
                << " pcc " << r.pcc << '\n';
      for (auto& method : leap::experiment::wsn_baseline_methods()) {
        auto [rmse, pcc] = leap::experiment::baseline_wsn(g, method, delta, seed);
        plot << delta << ',' << method << ',' << seed << ",rmse," << rmse << '\n';
        plot << delta << ',' << method << ',' << seed << ",pcc," << pcc << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LEAP: edge property prediction from path aggregations"};
  app.require_subcommand(1);

  CommonOpts split_o, train_o, baseline_o, sweep_o;
  double split_fraction = 0, baseline_fraction = 0;
  std::uint64_t split_seed = 1;

  auto* split = app.add_subcommand("split", "write train/test split files");
  add_common(split, split_o);
  split->add_option("--fraction", split_fraction, "test fraction / delta");
  split->add_option("--split-seed", split_seed, "split seed");

  auto* train = app.add_subcommand("train", "train and evaluate LEAP");
  add_common(train, train_o);

  std::string eval_model, eval_pairs, eval_graph, eval_out = "runs",
              eval_x = "dataset";
  std::uint64_t eval_seed = 1;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a pair file");
  eval->add_option("--model", eval_model, "model checkpoint")->required();
  eval->add_option("--pairs", eval_pairs, "pairs file (u v label)")->required();
  eval->add_option("--graph", eval_graph, "train graph edge list")->required();
  eval->add_option("--out-dir", eval_out, "output directory");
  eval->add_option("--x-label", eval_x, "x value for plot_data.csv rows");
  eval->add_option("--seed", eval_seed, "path sampling seed");

  std::string baseline_method;
  auto* baseline = app.add_subcommand("baseline", "run a classical baseline");
  add_common(baseline, baseline_o);
  baseline->add_option("--method", baseline_method, "baseline method")->required();
  baseline->add_option("--fraction", baseline_fraction, "test fraction / delta");

  double sweep_from = 0.1, sweep_to = 0.8, sweep_step = 0.1;
  auto* sweep = app.add_subcommand("sweep", "WSN delta sweep");
  add_common(sweep, sweep_o);
  sweep->add_option("--from", sweep_from, "first delta");
  sweep->add_option("--to", sweep_to, "last delta");
  sweep->add_option("--step", sweep_step, "delta step");

  CLI11_PARSE(app, argc, argv);

  try {
    if (split->parsed()) return cmd_split(split_o, split_fraction, split_seed);
    if (train->parsed()) return cmd_train(train_o);
    if (eval->parsed())
      return cmd_eval(eval_model, eval_pairs, eval_graph, eval_out, eval_x,
                      eval_seed);
    if (baseline->parsed())
      return cmd_baseline(baseline_o, baseline_method, baseline_fraction);
    if (sweep->parsed())
      return cmd_sweep(sweep_o, sweep_from, sweep_to, sweep_step);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
