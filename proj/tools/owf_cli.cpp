// Command-line front end: ingest, synth, split, train, score, sweep, curve,
// select, identify, defend, report.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "owf/defenses.hpp"
#include "owf/harness.hpp"
#include "owf/kernels.hpp"
#include "owf/reporting.hpp"
#include "owf/rng.hpp"

namespace fs = std::filesystem;
using namespace owf;

namespace {

Dataset load_any(const std::string& source, uint64_t seed) {
  if (source.rfind("synth:", 0) == 0) return synth_dataset(parse_spec(source.substr(6)), seed);
  if (source.rfind("dir:", 0) == 0) return load_dataset_dir(source.substr(4));
  return load_dataset_dir(source);
}

void add_simd_option(CLI::App* cmd, std::string* simd) {
  cmd->add_option("--simd", *simd, "kernel backend: auto|scalar|avx2")
      ->default_val("auto");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"open-world website fingerprinting toolkit"};
  app.require_subcommand(1);

  // --- ingest ---
  std::string in_dir, out_dir;
  bool dedup = true;
  auto* ingest = app.add_subcommand("ingest", "validate a trace directory into a dataset dir");
  ingest->add_option("--in", in_dir, "directory with MANIFEST + trace files")->required();
  ingest->add_option("--out", out_dir, "output dataset directory")->required();
  ingest->add_flag("!--no-dedup", dedup, "keep similar-domain entries");
  ingest->callback([&] {
    Dataset data = load_dataset_dir(in_dir, dedup);
    save_dataset_dir(data, out_dir);
    std::cout << "ingested " << data.shape().to_string() << " -> " << out_dir << "\n";
  });

  // --- synth ---
  std::string synth_spec;
  uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
  synth->add_option("--spec", synth_spec, "AxB+C")->required();
  synth->add_option("--out", out_dir, "output dataset directory")->required();
  synth->add_option("--seed", seed, "rng seed")->default_val("0");
  synth->callback([&] {
    Dataset data = synth_dataset(parse_spec(synth_spec), seed);
    save_dataset_dir(data, out_dir);
    std::cout << "wrote " << data.shape().to_string() << " -> " << out_dir << "\n";
  });

  // --- split ---
  std::string dataset_src;
  int folds = 10;
  auto* split_cmd = app.add_subcommand("split", "emit per-fold train/test dataset dirs");
  split_cmd->add_option("--dataset", dataset_src, "dataset dir or synth:AxB+C")->required();
  split_cmd->add_option("--out", out_dir, "output directory")->required();
  split_cmd->add_option("--folds", folds)->default_val("10");
  split_cmd->add_option("--seed", seed)->default_val("0");
  split_cmd->callback([&] {
    Dataset data = load_any(dataset_src, seed);
    auto fold_sets = stratified_folds(data, folds, mix64(seed, 0xf01d));
    for (int f = 0; f < folds; ++f) {
      save_dataset_dir(fold_sets[static_cast<size_t>(f)].first,
                       (fs::path(out_dir) / ("fold" + std::to_string(f) + "_train")).string());
      save_dataset_dir(fold_sets[static_cast<size_t>(f)].second,
                       (fs::path(out_dir) / ("fold" + std::to_string(f) + "_test")).string());
    }
    std::cout << "wrote " << folds << " folds under " << out_dir << "\n";
  });

  // --- train ---
  std::string kind_name, model_path, config_path, simd = "auto";
  int threads = 0;
  auto* train_cmd = app.add_subcommand("train", "train one classifier and save the model");
  train_cmd->add_option("--dataset", dataset_src, "training dataset dir or synth:AxB+C")
      ->required();
  train_cmd->add_option("--classifier", kind_name, "bixcor|pasvm|caosad|waknn|hakfp|pacumul")
      ->required();
  train_cmd->add_option("--out", model_path, "model file")->required();
  train_cmd->add_option("--config", config_path, "experiment config for classifier params");
  train_cmd->add_option("--seed", seed)->default_val("0");
  train_cmd->add_option("--threads", threads)->default_val("0");
  add_simd_option(train_cmd, &simd);
  train_cmd->callback([&] {
    kernels::set_backend(simd);
    ClassifierConfig ccfg;
    if (!config_path.empty()) ccfg = load_config_file(config_path).classifier;
    ccfg.seed = seed;
    ccfg.threads = threads;
    Dataset data = load_any(dataset_src, seed);
    TrainedModel model = train(parse_classifier_kind(kind_name), data, ccfg);
    model.save(model_path);
    std::cout << "trained " << kind_name << " on " << data.shape().to_string() << " -> "
              << model_path << "\n";
  });

  // --- score ---
  std::string features_catalog;
  auto* score_cmd = app.add_subcommand("score", "score traces with a model (match CSV)");
  score_cmd->add_option("--model", model_path, "model file");
  score_cmd->add_option("--dataset", dataset_src, "dataset dir or synth:AxB+C")->required();
  score_cmd->add_option("--out", out_dir, "output CSV")->required();
  score_cmd->add_option("--export-features", features_catalog,
                        "skip scoring; dump this feature catalog as CSV");
  score_cmd->add_option("--seed", seed)->default_val("0");
  add_simd_option(score_cmd, &simd);
  score_cmd->callback([&] {
    kernels::set_backend(simd);
    Dataset data = load_any(dataset_src, seed);
    std::vector<PacketSequence> traces;
    std::vector<Label> truth;
    for (const auto& [page, ts] : data.monitored)
      for (const auto& t : ts) {
        traces.push_back(t);
        truth.push_back(Label::monitored(page));
      }
    for (const auto& t : data.unmonitored) {
      traces.push_back(t);
      truth.push_back(Label::non_monitored());
    }
    std::ofstream out(out_dir);
    if (!out) throw IoError("cannot write " + out_dir);
    if (!features_catalog.empty()) {
      FeatureCatalog cat = features_catalog == "pacumul" ? FeatureCatalog::PA_CUMUL
                           : features_catalog == "hakfp" ? FeatureCatalog::HA_KFP
                           : features_catalog == "waknn" ? FeatureCatalog::WA_KNN
                                                         : FeatureCatalog::PA_SVM;
      out << features_to_csv(traces, cat);
      std::cout << "wrote features -> " << out_dir << "\n";
      return;
    }
    if (model_path.empty()) throw ConfigError("score: --model required unless exporting features");
    TrainedModel model = TrainedModel::load(model_path);
    out << "# owf-scores v1\norigin,truth,predicted";
    for (Label l : model.roster()) out << ",m_" << l.to_string();
    out << "\n";
    for (size_t i = 0; i < traces.size(); ++i) {
      MatchVector mv = model.match(traces[i]);
      out << (traces[i].origin.empty() ? "-" : traces[i].origin) << ","
          << truth[i].to_string() << "," << model.roster()[argmax_index(mv)].to_string();
      char buf[40];
      for (double s : mv.scores) {
        snprintf(buf, sizeof(buf), ",%.10g", s);
        out << buf;
      }
      out << "\n";
    }
    std::cout << "scored " << traces.size() << " traces -> " << out_dir << "\n";
  });

  // --- sweep ---
  auto* sweep_cmd = app.add_subcommand("sweep", "run the full experiment from a config file");
  sweep_cmd->add_option("--config", config_path, "experiment config")->required();
  sweep_cmd->add_option("--out", out_dir, "override results CSV path");
  sweep_cmd->add_option("--seed", seed, "override config seed");
  sweep_cmd->add_option("--threads", threads, "override config threads");
  sweep_cmd->callback([&] {
    ExperimentConfig cfg = load_config_file(config_path);
    if (!out_dir.empty()) cfg.out_path = out_dir;
    if (sweep_cmd->count("--seed")) cfg.seed = seed;
    if (sweep_cmd->count("--threads")) cfg.threads = threads;
    SweepResult result = run_experiment(cfg);
    if (cfg.out_path.empty()) std::cout << result.to_csv();
    for (double r : cfg.r_values) {
      for (ClassifierKind kind : cfg.classifiers) {
        std::string name = classifier_kind_name(kind);
        const SweepRow* base = result.best(name, "baseline", r);
        if (!base) continue;
        PrecisionEstimate est = precision_estimate(base->counts, r);
        std::cout << name << " baseline pi_" << r << " lower "
                  << (est.lower ? std::to_string(*est.lower) : "-") << "\n";
      }
    }
  });

  // --- curve ---
  std::string n_grid_text;
  auto* curve_cmd = app.add_subcommand("curve", "open-world-size curve (pi_10 vs N)");
  curve_cmd->add_option("--config", config_path, "experiment config")->required();
  curve_cmd->add_option("--n", n_grid_text, "N grid, e.g. 100,500,1000")->required();
  curve_cmd->add_option("--out", out_dir, "output prefix")->required();
  curve_cmd->callback([&] {
    ExperimentConfig cfg = load_config_file(config_path);
    std::vector<int64_t> grid;
    for (double v : parse_grid(n_grid_text)) grid.push_back(static_cast<int64_t>(v));
    auto curves = openworld_size_curve(cfg, grid);
    for (const auto& [name, points] : curves) {
      std::string path = out_dir + "." + name + ".dat";
      std::ofstream out(path);
      if (!out) throw IoError("cannot write " + path);
      for (const auto& p : points) {
        double y = p.estimate.point ? *p.estimate.point : p.estimate.lower.value_or(0.0);
        out << p.x << " " << y << (p.degenerate ? " # closed-world point" : "") << "\n";
      }
      std::cout << "wrote " << path << "\n";
    }
  });

  // --- select ---
  int s_candidates = 100, trials = 10000, po_k = 1;
  double po_m = 0.9;
  bool no_po = false;
  auto* select_cmd = app.add_subcommand("select", "selection scenario success rate");
  select_cmd->add_option("--model", model_path)->required();
  select_cmd->add_option("--dataset", dataset_src, "held-out test dataset")->required();
  select_cmd->add_option("--s", s_candidates, "candidate count")->default_val("100");
  select_cmd->add_option("--trials", trials)->default_val("10000");
  select_cmd->add_flag("--no-po", no_po, "classify-and-pick instead of match ranking");
  select_cmd->add_option("--seed", seed)->default_val("0");
  select_cmd->add_option("--threads", threads)->default_val("0");
  add_simd_option(select_cmd, &simd);
  select_cmd->callback([&] {
    kernels::set_backend(simd);
    TrainedModel model = TrainedModel::load(model_path);
    Dataset data = load_any(dataset_src, seed);
    ScenarioPool pool = make_scenario_pool(model, data, ScenarioPo{}, threads);
    double rate = selection_scenario(pool, !no_po, s_candidates, trials, seed);
    std::cout << "selection success rate: " << rate << " (random guess "
              << 1.0 / s_candidates << ")\n";
  });

  // --- identify ---
  double b_rate = 0.01;
  int n_obs = 1000, m_identify = -1;
  double target_fi = 0.01;
  auto* id_cmd = app.add_subcommand("identify", "sensitive-client identification rates");
  id_cmd->add_option("--model", model_path)->required();
  id_cmd->add_option("--dataset", dataset_src, "held-out test dataset")->required();
  id_cmd->add_option("--b", b_rate, "sensitive visit rate")->default_val("0.01");
  id_cmd->add_option("--n-obs", n_obs, "observed accesses per client")->default_val("1000");
  id_cmd->add_option("--m-identify", m_identify, "threshold; -1 = calibrate to --target-fi")
      ->default_val("-1");
  id_cmd->add_option("--target-fi", target_fi)->default_val("0.01");
  id_cmd->add_option("--trials", trials)->default_val("10000");
  id_cmd->add_option("--po-k", po_k, "confidence PO K (0 disables PO)")->default_val("1");
  id_cmd->add_option("--po-m", po_m, "confidence PO M_match")->default_val("0.9");
  id_cmd->add_option("--seed", seed)->default_val("0");
  id_cmd->add_option("--threads", threads)->default_val("0");
  add_simd_option(id_cmd, &simd);
  id_cmd->callback([&] {
    kernels::set_backend(simd);
    TrainedModel model = TrainedModel::load(model_path);
    Dataset data = load_any(dataset_src, seed);
    ScenarioPo po;
    po.enabled = po_k > 0;
    po.k = std::max(1, po_k);
    po.m_match = po_m;
    ScenarioPool pool = make_scenario_pool(model, data, po, threads);
    if (m_identify < 0)
      m_identify = calibrate_m_identify(pool, n_obs, target_fi, trials, mix64(seed, 0xca1));
    IdentifyResult r = identify_client(pool, b_rate, n_obs, m_identify, trials, seed);
    std::cout << "m_identify " << m_identify << " detection " << r.detection_rate
              << " false-identification " << r.false_identification_rate << "\n";
  });

  // --- defend ---
  auto* defend_cmd = app.add_subcommand("defend", "apply a padding defense to a dataset");
  defend_cmd->add_option("--in", in_dir, "input dataset dir")->required();
  defend_cmd->add_option("--out", out_dir, "output dataset dir")->required();
  defend_cmd->add_option("--config", config_path, "defense config file")->required();
  defend_cmd->add_option("--seed", seed)->default_val("0");
  defend_cmd->callback([&] {
    DefenseConfig cfg = DefenseConfig::parse_file(config_path);
    Dataset data = load_dataset_dir(in_dir);
    Dataset defended;
    uint64_t i = 0;
    double bw = 0.0, tm = 0.0;
    int64_t tm_count = 0;
    for (const auto& [page, traces] : data.monitored) {
      for (const auto& t : traces) {
        PacketSequence d = apply_defense(t, cfg, mix64(seed, i++));
        OverheadReport o = measure_overhead(t, d);
        bw += o.bandwidth_overhead;
        if (o.time_overhead) {
          tm += *o.time_overhead;
          ++tm_count;
        }
        defended.monitored[page].push_back(std::move(d));
      }
    }
    for (const auto& t : data.unmonitored) {
      PacketSequence d = apply_defense(t, cfg, mix64(seed, i++));
      OverheadReport o = measure_overhead(t, d);
      bw += o.bandwidth_overhead;
      if (o.time_overhead) {
        tm += *o.time_overhead;
        ++tm_count;
      }
      defended.unmonitored.push_back(std::move(d));
    }
    save_dataset_dir(defended, out_dir);
    double n = static_cast<double>(data.total_elements());
    std::cout << "defended " << data.shape().to_string() << " mean bandwidth overhead "
              << bw / n << " mean time overhead " << (tm_count ? tm / tm_count : 0.0) << "\n";
  });

  // --- report ---
  std::string table_name;
  std::vector<std::string> inputs;
  std::string curve_classifier, curve_po, curve_x, bound_tpr;
  double curve_r = 1000.0, bound_np = 50000.0, bound_nn = 50000.0;
  auto* report_cmd = app.add_subcommand("report", "render tables/curves from sweep results");
  report_cmd->add_option("--table", table_name,
                         "baseline|confidence|distance|ensemble|defense|curve|bound-curve");
  report_cmd->add_option("--in", inputs, "result CSV files (unused for bound-curve)");
  report_cmd->add_option("--out", out_dir, "output file")->required();
  report_cmd->add_option("--curve-classifier", curve_classifier);
  report_cmd->add_option("--curve-po", curve_po);
  report_cmd->add_option("--curve-x", curve_x, "parameter name used as x axis");
  report_cmd->add_option("--curve-r", curve_r)->default_val("1000");
  report_cmd->add_option("--bound-tpr", bound_tpr, "TPR grid for the lower-bound curve");
  report_cmd->add_option("--bound-np", bound_np)->default_val("50000");
  report_cmd->add_option("--bound-nn", bound_nn)->default_val("50000");
  report_cmd->add_option("--seed", seed, "accepted for interface uniformity; rendering is pure");
  report_cmd->callback([&] {
    if (table_name == "bound-curve") {
      // Wilson/Wald lower bound with WPR = FPR = 0 over a TPR grid.
      auto grid = parse_grid(bound_tpr.empty() ? "0:1:0.05" : bound_tpr);
      auto curve = bound_curve(grid, bound_np, bound_nn, curve_r);
      std::ofstream out(out_dir);
      if (!out) throw IoError("cannot write " + out_dir);
      for (const auto& [tpr, lower] : curve) out << tpr << " " << lower << "\n";
      std::cout << "wrote " << out_dir << "\n";
      return;
    }
    if (inputs.empty()) throw ConfigError("report: --in required");
    if (table_name == "curve") {
      std::vector<ResultRecord> records;
      for (const auto& path : inputs) {
        auto part = read_results_csv(path);
        records.insert(records.end(), part.begin(), part.end());
      }
      render_curve(records, curve_classifier, curve_po, curve_x, curve_r, out_dir);
      std::cout << "wrote " << out_dir << "\n";
      return;
    }
    ReportSpec spec;
    if (table_name == "baseline")
      spec.table = ReportTable::BASELINE;
    else if (table_name == "confidence")
      spec.table = ReportTable::CONFIDENCE;
    else if (table_name == "distance")
      spec.table = ReportTable::DISTANCE;
    else if (table_name == "ensemble")
      spec.table = ReportTable::ENSEMBLE;
    else if (table_name == "defense")
      spec.table = ReportTable::DEFENSE;
    else
      throw ConfigError("unknown report table: " + table_name);
    spec.input_files = inputs;
    spec.output_path = out_dir;
    render(spec);
    std::cout << "wrote " << out_dir << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
