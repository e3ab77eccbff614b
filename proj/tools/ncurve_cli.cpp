#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ncurve/ncurve.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ncurve;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool quiet = false;
  std::string out;
};

void say(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cout << line << '\n';
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::Data, "cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw Error(ErrorCategory::Data, "failed writing " + path.string());
}

fs::path require_out(const Globals& g, const std::string& verb) {
  if (g.out.empty()) throw InvalidConfig(verb + ": --out is required");
  return g.out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Data, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string toy;
  std::string config;
  bool unstructured = false;
  std::size_t sequences = 0;
};

template <class Config>
void override_count(Config& c, const GenArgs& a) {
  if (a.sequences > 0) c.sequences = a.sequences;
}

void cmd_gen(const Globals& g, const GenArgs& a) {
  const fs::path dir = require_out(g, "gen");
  const json overrides = a.config.empty() ? json::object() : read_json(a.config);
  SequenceDataset ds;
  if (a.toy == "toy1") {
    Toy1Config c;
    c.sigma = overrides.value("sigma", c.sigma);
    c.noise_scale = overrides.value("noise_scale", c.noise_scale);
    c.sequences = overrides.value("sequences", c.sequences);
    override_count(c, a);
    ds = gen_toy1(g.seed, c);
  } else if (a.toy == "toy2") {
    Toy2Config c;
    c.sequences = overrides.value("sequences", c.sequences);
    c.steps = overrides.value("steps", c.steps);
    c.angle_min_deg = overrides.value("angle_min_deg", c.angle_min_deg);
    c.angle_max_deg = overrides.value("angle_max_deg", c.angle_max_deg);
    c.step_length = overrides.value("step_length", c.step_length);
    c.noise_sigma = overrides.value("noise_sigma", c.noise_sigma);
    override_count(c, a);
    ds = gen_toy2(g.seed, c);
  } else if (a.toy == "toy3" || a.toy == "toy5") {
    Toy3Config c;
    c.sequences = overrides.value("sequences", c.sequences);
    c.steps = overrides.value("steps", c.steps);
    c.noise_sigma = overrides.value("noise_sigma", c.noise_sigma);
    c.structured = overrides.value("structured", c.structured) && !a.unstructured;
    override_count(c, a);
    if (a.toy == "toy5") {
      if (!c.structured) throw InvalidConfig("toy5 is defined on structured data");
      ds = gen_toy5(g.seed, c);
    } else {
      ds = gen_toy3(g.seed, c);
    }
  } else if (a.toy == "toy4") {
    if (!overrides.empty() || a.sequences > 0)
      throw InvalidConfig("toy4 has a fixed ground truth and M = 1000");
    auto toy = gen_toy4(g.seed);
    ds = std::move(toy.data);
    ds.meta["truth"] = mixture_to_json(toy.truth);
    ds.meta["labels"] = toy.labels;
  } else {
    throw InvalidConfig("unknown toy '" + a.toy + "' (expected toy1..toy5)");
  }
  const std::string name = ds.meta.at("name").get<std::string>();
  fs::create_directories(dir);
  save_jsonl(ds, dir / (name + ".jsonl"));
  write_text(dir / (name + ".config.json"), ds.meta.dump(2) + "\n");
  say(g, name + ": M=" + std::to_string(ds.size()) + " n=" + std::to_string(ds.steps()) +
             " d=" + std::to_string(ds.dim()));
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::size_t k = 1;
  int controls = 4;
  std::size_t iters = 1000;
  double lr = 1e-3;
  std::size_t batch = 1024;
  std::string reduction = "mean";
  std::string cov = "full";
  std::size_t conditional = 0;
  std::vector<std::size_t> hidden{64};
  std::string activation = "tanh";
  bool scale = false;
  std::string envelope;
};

void write_envelope(const NCurveMixture& m, const IndexGrid& grid, const fs::path& path) {
  auto out = open_out(path);
  out << "component,t";
  for (Eigen::Index a = 0; a < m.dim(); ++a) out << ",mean_x" << a;
  for (Eigen::Index a = 0; a < m.dim(); ++a) out << ",half_x" << a;
  out << '\n';
  for (std::size_t k = 0; k < m.size(); ++k) {
    for (const auto& p : envelope(m.component(k), grid, 3.0)) {
      out << k << ',' << format_double(p.t);
      for (Eigen::Index a = 0; a < p.mean.size(); ++a) out << ',' << format_double(p.mean(a));
      for (Eigen::Index a = 0; a < p.mean.size(); ++a) out << ',' << format_double(p.half_width(a));
      out << '\n';
    }
  }
}

void cmd_fit(const Globals& g, const FitArgs& a) {
  const fs::path model_path = require_out(g, "fit");
  const SequenceDataset ds = load_sequences(a.data, {SequenceFormat::Auto, a.scale});
  const IndexGrid grid = uniform_grid(ds.steps());

  FitConfig cfg;
  cfg.components = a.k;
  cfg.degree = a.controls - 1;
  cfg.dim = ds.dim();
  cfg.steps = ds.steps();
  cfg.learning_rate = a.lr;
  cfg.max_iters = a.iters;
  cfg.batch_size = a.batch;
  cfg.seed = g.seed;
  cfg.full_cov = a.cov == "full";
  if (a.cov != "full" && a.cov != "diagonal") throw InvalidConfig("--cov must be full or diagonal");
  if (a.reduction == "mean") {
    cfg.loss_reduction = Reduction::Mean;
  } else if (a.reduction == "sum") {
    cfg.loss_reduction = Reduction::Sum;
  } else {
    throw InvalidConfig("--reduction must be mean or sum");
  }

  json training = {{"data", fs::path(a.data).filename().string()},
                   {"K", a.k},
                   {"controls", a.controls},
                   {"iters", a.iters},
                   {"learning_rate", a.lr},
                   {"batch_size", a.batch},
                   {"loss_reduction", a.reduction},
                   {"cov_mode", to_string(cfg.shape().cov_mode)},
                   {"steps", ds.steps()},
                   {"optimizer", "adam"}};
  if (ds.scaler) training["scaler"] = scaler_to_json(*ds.scaler);

  ModelFile model{NCurveMixture({1.0}, {NCurve({GaussianDist::standard(ds.dim())})}), std::nullopt,
                  {}, g.seed};
  std::vector<double> trace;
  if (a.conditional > 0) {
    if (a.conditional >= ds.steps())
      throw InvalidConfig("--conditional m must be smaller than the sequence length");
    EncoderConfig enc;
    enc.hidden_sizes = a.hidden;
    enc.activation = activation_from_string(a.activation);
    enc.observed_steps = a.conditional;
    enc.dim = ds.dim();
    enc.control_length = ds.has_control() ? ds.steps() : 0;
    std::vector<ConditionalExample> examples;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      examples.push_back({ds.sequences[j].leftCols(static_cast<Eigen::Index>(a.conditional)),
                          ds.has_control() ? ds.controls[j] : std::vector<double>{},
                          ds.sequences[j]});
    }
    auto fit = fit_conditional(examples, grid, cfg, enc);
    trace = std::move(fit.loss_trace);
    // the stored mixture is the prediction for the average observation
    const Encoder& e = fit.model.encoder;
    model.mixture = realize(fit.model.layout, as_span(e.forward(e.input_mean())));
    model.conditional = std::move(fit.model);
    training["observed_steps"] = a.conditional;
    training["encoder"] = {{"hidden_sizes", a.hidden}, {"activation", a.activation}};
  } else {
    auto fit = fit_unconditional(ds.sequences, grid, cfg);
    trace = std::move(fit.loss_trace);
    model.mixture = std::move(fit.mixture);
  }
  model.training = std::move(training);
  save_model(model, model_path);

  fs::path loss_path = model_path;
  loss_path.replace_extension(".loss.csv");
  {
    auto out = open_out(loss_path);
    out << "iter,nll\n";
    for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << format_double(trace[i]) << '\n';
  }
  if (!a.envelope.empty()) write_envelope(model.mixture, grid, a.envelope);

  std::string weights;
  for (double w : model.mixture.weights()) weights += (weights.empty() ? "" : " ") + format_double(w);
  say(g, "weights: " + weights);
  say(g, "final loss: " + format_double(trace.back()));
}

// ---- predict / eval helpers --------------------------------------------------

std::size_t model_steps(const ModelFile& m) {
  if (!m.training.contains("steps")) throw InvalidConfig("model does not record its sequence length");
  return m.training.at("steps").get<std::size_t>();
}

Matrix observed_part(const ConditionalModel& cm, const Sequence& s) {
  const auto m = static_cast<Eigen::Index>(cm.encoder.config().observed_steps);
  if (s.cols() < m) {
    throw ShapeMismatch("observation has " + std::to_string(s.cols()) + " steps, model expects m=" +
                        std::to_string(m));
  }
  return s.leftCols(m);
}

json point_mixture_json(const NCurveMixture& m, double t) {
  const PointMixture pm = mixture_at(m, t);
  json means = json::array(), covs = json::array();
  for (const auto& c : pm.components) {
    means.push_back(std::vector<double>(c.mean().data(), c.mean().data() + c.mean().size()));
    json rows = json::array();
    for (Eigen::Index r = 0; r < c.dim(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(c.dim()));
      for (Eigen::Index col = 0; col < c.dim(); ++col) row[static_cast<std::size_t>(col)] = c.cov()(r, col);
      rows.push_back(row);
    }
    covs.push_back(rows);
  }
  return {{"t", t}, {"weights", pm.weights}, {"means", means}, {"covs", covs}};
}

struct PredictArgs {
  std::string model;
  std::string obs;
  std::size_t n_pred = 0;
};

void cmd_predict(const Globals& g, const PredictArgs& a) {
  const fs::path out_path = require_out(g, "predict");
  const ModelFile model = load_model(a.model);
  std::vector<std::string> ids;
  std::vector<NCurveMixture> preds;
  std::size_t total = 0;
  if (model.conditional) {
    if (a.obs.empty()) throw InvalidConfig("predict: a conditional model needs --obs");
    const ConditionalModel& cm = *model.conditional;
    const std::size_t m = cm.encoder.config().observed_steps;
    const SequenceDataset obs = load_sequences(a.obs);
    if (obs.steps() != m) {
      throw ShapeMismatch("observations have " + std::to_string(obs.steps()) +
                          " steps, model expects m=" + std::to_string(m));
    }
    const std::size_t trained = model_steps(model);
    total = a.n_pred > 0 ? m + a.n_pred : trained;
    for (std::size_t j = 0; j < obs.size(); ++j) {
      ids.push_back(obs.ids[j]);
      preds.push_back(predict(cm, obs.sequences[j],
                              obs.has_control() ? std::span<const double>(obs.controls[j])
                                                : std::span<const double>{}));
    }
  } else {
    total = a.n_pred > 0 ? a.n_pred : model_steps(model);
    ids.push_back("model");
    preds.push_back(model.mixture);
  }
  const IndexGrid grid = uniform_grid(total);

  json out = json::array();
  fs::path traj_path = out_path;
  traj_path.replace_extension(".ml.csv");
  auto traj = open_out(traj_path);
  traj << "seq_id,step,t";
  for (Eigen::Index d = 0; d < preds.front().dim(); ++d) traj << ",x" << d;
  traj << '\n';
  for (std::size_t j = 0; j < preds.size(); ++j) {
    json steps = json::array();
    for (double t : grid.values()) steps.push_back(point_mixture_json(preds[j], t));
    out.push_back({{"id", ids[j]}, {"top_component", preds[j].top_component()}, {"steps", steps}});
    const Matrix path = mean_path(preds[j].component(preds[j].top_component()), grid);
    for (Eigen::Index i = 0; i < path.cols(); ++i) {
      traj << ids[j] << ',' << i << ',' << format_double(grid[static_cast<std::size_t>(i)]);
      for (Eigen::Index d = 0; d < path.rows(); ++d) traj << ',' << format_double(path(d, i));
      traj << '\n';
    }
  }
  write_text(out_path, json{{"steps", total}, {"predictions", out}}.dump(2) + "\n");
  say(g, "predicted " + std::to_string(preds.size()) + " mixture(s) over " + std::to_string(total) +
             " steps");
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string csv;
};

void cmd_eval(const Globals& g, const EvalArgs& a) {
  const fs::path out_path = require_out(g, "eval");
  const ModelFile model = load_model(a.model);
  const SequenceDataset gt = load_sequences(a.data);
  if (gt.size() == 0) throw EmptyInput("eval: no ground-truth sequences");
  const IndexGrid grid = uniform_grid(gt.steps());
  EvalReport report;
  std::size_t first = 0;
  if (model.conditional) {
    const ConditionalModel& cm = *model.conditional;
    first = cm.encoder.config().observed_steps;
    std::vector<NCurveMixture> preds;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      preds.push_back(predict(cm, observed_part(cm, gt.sequences[j]),
                              gt.has_control() ? std::span<const double>(gt.controls[j])
                                               : std::span<const double>{}));
    }
    report = evaluate(preds, grid, gt.sequences, first);
  } else {
    const std::vector<NCurveMixture> one{model.mixture};
    report = evaluate(one, grid, gt.sequences, 0);
  }
  report.config = {{"model", fs::path(a.model).filename().string()},
                   {"data", fs::path(a.data).filename().string()},
                   {"sequences", gt.size()},
                   {"steps", gt.steps()},
                   {"first_predicted_step", first},
                   {"conditional", model.conditional.has_value()}};
  write_text(out_path, report.to_json().dump(2) + "\n");
  if (!a.csv.empty()) {
    auto out = open_out(a.csv);
    out << "model,data,fde,nll,rmse\n"
        << report.config["model"].get<std::string>() << ',' << report.config["data"].get<std::string>()
        << ',' << format_double(report.fde) << ',' << format_double(report.nll) << ','
        << format_double(report.rmse) << '\n';
  }
  // The summary line is the command's result, printed even with --quiet.
  std::cout << "FDE=" << format_double(report.fde) << " NLL=" << format_double(report.nll)
            << " RMSE=" << format_double(report.rmse) << '\n';
}

struct PlotArgs {
  std::string model;
  std::size_t grid = 101;
  std::size_t samples = 0;
};

void cmd_plotdata(const Globals& g, const PlotArgs& a) {
  const fs::path dir = require_out(g, "plotdata");
  const ModelFile model = load_model(a.model);
  const NCurveMixture& m = model.mixture;
  const IndexGrid grid = uniform_grid(a.grid);
  fs::create_directories(dir);
  for (std::size_t k = 0; k < m.size(); ++k) {
    auto out = open_out(dir / ("component_" + std::to_string(k) + ".csv"));
    out << "t";
    for (Eigen::Index d = 0; d < m.dim(); ++d) out << ",mean_x" << d;
    for (Eigen::Index d = 0; d < m.dim(); ++d) out << ",sigma_x" << d;
    for (Eigen::Index d = 0; d < m.dim(); ++d) out << ",half3_x" << d;
    out << '\n';
    const auto env = envelope(m.component(k), grid, 3.0);
    for (const auto& p : env) {
      out << format_double(p.t);
      for (Eigen::Index d = 0; d < m.dim(); ++d) out << ',' << format_double(p.mean(d));
      for (Eigen::Index d = 0; d < m.dim(); ++d) out << ',' << format_double(p.half_width(d) / 3.0);
      for (Eigen::Index d = 0; d < m.dim(); ++d) out << ',' << format_double(p.half_width(d));
      out << '\n';
    }
  }
  if (a.samples > 0) {
    Rng rng(g.seed);
    auto out = open_out(dir / "samples.csv");
    out << "sample,component,step,t";
    for (Eigen::Index d = 0; d < m.dim(); ++d) out << ",x" << d;
    out << '\n';
    for (std::size_t s = 0; s < a.samples; ++s) {
      const auto r = sample_mixture_realization(m, grid, rng);
      for (Eigen::Index i = 0; i < r.sequence.cols(); ++i) {
        out << s << ',' << r.component << ',' << i << ','
            << format_double(grid[static_cast<std::size_t>(i)]);
        for (Eigen::Index d = 0; d < m.dim(); ++d) out << ',' << format_double(r.sequence(d, i));
        out << '\n';
      }
    }
  }
  say(g, "wrote " + std::to_string(m.size()) + " component file(s) to " + dir.string());
}

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Usage: return 1;
    case ErrorCategory::Data: return 2;
    case ErrorCategory::Numerical: return 3;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"N-Curve mixtures: generate, fit, predict, evaluate, plot"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_flag("-q,--quiet", g.quiet, "suppress progress output");
  app.add_option("-o,--out", g.out, "output file or directory");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a toy dataset (JSONL + config JSON)");
  gen_cmd->add_option("toy", gen.toy, "toy1 | toy2 | toy3 | toy4 | toy5")->required();
  gen_cmd->add_option("--config", gen.config, "JSON file with generator overrides");
  gen_cmd->add_flag("--unstructured", gen.unstructured, "toy3: pick the curve per step");
  gen_cmd->add_option("--sequences", gen.sequences, "number of sequences");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit an N-Curve mixture to a dataset");
  fit_cmd->add_option("data", fit.data, "JSONL or CSV sequences")->required();
  fit_cmd->add_option("--k", fit.k, "mixture components")->capture_default_str();
  fit_cmd->add_option("--controls", fit.controls, "control points per curve (N + 1)")->capture_default_str();
  fit_cmd->add_option("--iters", fit.iters, "optimizer iterations")->capture_default_str();
  fit_cmd->add_option("--lr", fit.lr, "Adam learning rate")->capture_default_str();
  fit_cmd->add_option("--batch", fit.batch, "mini-batch size")->capture_default_str();
  fit_cmd->add_option("--reduction", fit.reduction, "mean | sum over time steps")->capture_default_str();
  fit_cmd->add_option("--cov", fit.cov, "full | diagonal control covariances")->capture_default_str();
  fit_cmd->add_option("--conditional", fit.conditional, "observed steps m for a conditional fit");
  fit_cmd->add_option("--hidden", fit.hidden, "encoder hidden layer sizes")->capture_default_str();
  fit_cmd->add_option("--activation", fit.activation, "tanh | relu")->capture_default_str();
  fit_cmd->add_flag("--scale", fit.scale, "min-max scale the data to [-1, 1]");
  fit_cmd->add_option("--envelope", fit.envelope, "write the 3-sigma envelope CSV here");

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "evaluate a model on a time grid");
  pred_cmd->add_option("model", pred.model, "model JSON")->required();
  pred_cmd->add_option("--obs", pred.obs, "observed sequences (conditional models)");
  pred_cmd->add_option("--n-pred", pred.n_pred, "steps to predict after the observation");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "score a model against ground-truth sequences");
  eval_cmd->add_option("model", ev.model, "model JSON")->required();
  eval_cmd->add_option("data", ev.data, "ground-truth sequences")->required();
  eval_cmd->add_option("--csv", ev.csv, "also write a one-row CSV summary");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plotdata", "emit per-component curves and samples as CSV");
  plot_cmd->add_option("model", plot.model, "model JSON")->required();
  plot_cmd->add_option("--grid", plot.grid, "grid points")->capture_default_str();
  plot_cmd->add_option("--samples", plot.samples, "sampled realizations to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) cmd_gen(g, gen);
    if (*fit_cmd) cmd_fit(g, fit);
    if (*pred_cmd) cmd_predict(g, pred);
    if (*eval_cmd) cmd_eval(g, ev);
    if (*plot_cmd) cmd_plotdata(g, plot);
  } catch (const NonFiniteLoss& e) {
    std::cerr << "error: " << e.what() << " [iteration " << e.iteration() << "]\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
