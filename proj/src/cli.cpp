#include "opgd/cli.hpp"

#include "opgd/classifier.hpp"
#include "opgd/clustering.hpp"
#include "opgd/errors.hpp"
#include "opgd/eval.hpp"
#include "opgd/io.hpp"
#include "opgd/objective.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <random>

namespace opgd::cli {
namespace fs = std::filesystem;
using io::format_double;
using io::json;

namespace {

struct IngestFlags {
  std::string data;
  std::string labels;
  std::string group;
  double perturb = 0;
  bool drop_constant = false;
};

struct OptimFlags {
  double epsilon = OptimConfig{}.epsilon_init;
  double ridge = OptimConfig{}.ridge_frac;
  int max_iters = OptimConfig{}.max_iters;
};

struct Options {
  IngestFlags in;
  OptimFlags opt;
  std::uint64_t seed = 0;
  std::string out;
  std::string model;
  std::string test;
  std::string gmm;
  std::string method = "opgd";
  std::vector<std::string> methods;
  int dim = 0;
  int k = 0;
  int folds = 0;
  int repeats = 1;
  int instances = 100;
  double tolerance = 1e-5;
  double lambda = 0;
  double pca_threshold = 0;
  std::vector<double> grid;
  std::vector<double> split{0.5, 0.25, 0.25};
};

void add_ingest(CLI::App* cmd, Options& o, bool labels_required) {
  cmd->add_option("--data", o.in.data, "Input CSV with a header row")->required();
  auto* labels = cmd->add_option("--labels", o.in.labels, "Name of the label column");
  if (labels_required) labels->required();
  cmd->add_option("--group", o.in.group, "Name of a grouping column excluded from the features");
  cmd->add_flag("--perturb{1e-6}", o.in.perturb,
                "Add Gaussian noise with sd = fraction x column sd (default fraction 1e-6)");
  cmd->add_flag("--drop-constant", o.in.drop_constant, "Drop constant feature columns");
  cmd->add_option("--seed", o.seed, "Seed for every random choice");
}

void add_optim(CLI::App* cmd, Options& o) {
  cmd->add_option("--epsilon", o.opt.epsilon, "Weight of the total covariance in the warm start")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--ridge", o.opt.ridge, "Within-class ridge as a fraction of trace/p")->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iters", o.opt.max_iters, "Iteration cap for gradient ascent")->check(CLI::NonNegativeNumber);
}

OptimConfig optim_config(const Options& o) {
  OptimConfig c;
  c.epsilon_init = o.opt.epsilon;
  c.ridge_frac = o.opt.ridge;
  c.max_iters = o.opt.max_iters;
  c.seed = o.seed;
  validate(c);
  return c;
}

io::IngestOptions ingest_options(const Options& o) {
  io::IngestOptions in;
  if (!o.in.labels.empty()) in.label_column = o.in.labels;
  if (!o.in.group.empty()) in.group_column = o.in.group;
  in.perturb = o.in.perturb;
  in.drop_constant = o.in.drop_constant;
  in.seed = o.seed;
  return in;
}

json config_json(const Options& o, const io::Ingested& data) {
  json c;
  c["labels"] = o.in.labels;
  c["group"] = o.in.group;
  c["perturb"] = o.in.perturb;
  c["drop_constant"] = o.in.drop_constant;
  c["dropped_columns"] = data.dropped;
  c["epsilon"] = o.opt.epsilon;
  c["ridge"] = o.opt.ridge;
  c["max_iters"] = o.opt.max_iters;
  return c;
}

io::RunManifest start_manifest(const std::string& command, const Options& o, const io::Ingested& data) {
  io::RunManifest m;
  m.command = command;
  m.dataset = o.in.data;
  m.config = config_json(o, data);
  m.seed = o.seed;
  m.version = io::version_string();
  m.started = io::utc_timestamp();
  return m;
}

void finish_manifest(io::RunManifest& m, const fs::path& path) {
  m.finished = io::utc_timestamp();
  json j = m.to_json();
  j["manifest_id"] = m.id();
  io::write_atomic(path, io::dump(j));
}

fs::path prepare_dir(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create directory '" + out + "': " + ec.message());
  return fs::path(out);
}

std::vector<std::string> label_strings(const std::vector<int>& labels, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (int y : labels) out.push_back(names.at(static_cast<std::size_t>(y)));
  return out;
}

std::vector<std::string> cluster_names(int K) {
  std::vector<std::string> names;
  for (int k = 0; k < K; ++k) names.push_back(std::to_string(k + 1));
  return names;
}

void warn_constant(const io::Ingested& data, std::ostream& err) {
  for (const auto& name : data.constant)
    err << "warning: column '" << name << "' is constant (see --drop-constant or --perturb)\n";
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const io::Ingested data = io::ingest_csv(o.in.data, ingest_options(o));
  warn_constant(data, err);
  if (o.out.empty()) throw ConfigError("--out is required");
  io::RunManifest manifest = start_manifest("fit", o, data);
  manifest.config["dim"] = o.dim;
  const OpgdModel model = fit_opgd(data.data, o.dim, optim_config(o));
  io::write_atomic(o.out, io::dump(io::to_json(model, manifest.id())));
  manifest.artifacts.push_back(fs::path(o.out).filename().string());
  finish_manifest(manifest, o.out + ".manifest.json");

  const OpgdDiagnostics& d = model.diagnostics;
  out << "training_error=" << format_double(d.training_error) << "\n"
      << "initial_objective=" << format_double(d.initial_objective) << "\n"
      << "final_objective=" << format_double(d.final_objective) << "\n"
      << "iterations=" << d.iterations << "\n"
      << "stop_reason=" << d.stop_reason << "\n"
      << "clamp_events=" << d.clamp_events << "\n";
  return kOk;
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream& err) {
  const OpgdModel model = io::opgd_model_from_json(json::parse(io::read_file(o.model)));
  const io::Ingested data = io::ingest_csv(o.in.data, ingest_options(o));
  warn_constant(data, err);
  const Dataset aligned = io::align_to(data.data, model.feature_names, model.class_names);
  const Prediction pred = predict(model, aligned.X);

  std::string table = "label";
  for (const auto& name : model.class_names) table += ",p_" + name;
  table += '\n';
  for (Index i = 0; i < aligned.n(); ++i) {
    table += model.class_names[static_cast<std::size_t>(pred.labels[i])];
    for (Index k = 0; k < pred.posterior.cols(); ++k) table += "," + format_double(pred.posterior(i, k));
    table += '\n';
  }
  if (o.out.empty()) throw ConfigError("--out is required");
  io::RunManifest manifest = start_manifest("predict", o, data);
  manifest.config["model"] = o.model;
  io::write_atomic(o.out, table);
  manifest.artifacts.push_back(fs::path(o.out).filename().string());
  finish_manifest(manifest, o.out + ".manifest.json");
  if (aligned.labeled())
    out << "error=" << format_double(misclassification_error(pred.labels, aligned.labels)) << "\n";
  return kOk;
}

int cmd_features(const Options& o, std::ostream&, std::ostream& err) {
  const io::Ingested data = io::ingest_csv(o.in.data, ingest_options(o));
  warn_constant(data, err);
  const Dataset& d = data.data;
  const fs::path dir = prepare_dir(o.out);
  io::RunManifest manifest = start_manifest("features", o, data);
  manifest.config["dim"] = o.dim;
  manifest.config["method"] = o.method;

  Matrix V;
  const Method method = method_from_string(o.method);
  if (method == Method::Opgd) {
    const OpgdModel model = fit_opgd(d, o.dim, optim_config(o));
    V = model.projection;
    io::write_atomic(dir / "model.json", io::dump(io::to_json(model, manifest.id())));
    manifest.artifacts.push_back("model.json");
  } else if (method == Method::Lda) {
    V = lda_fit(d, o.dim, o.opt.ridge).scaling;
  } else if (method == Method::Save) {
    V = save_fit(d, o.dim).features.V;
  } else {
    throw ConfigError("rda does not produce features");
  }
  io::write_atomic(dir / "projection.csv", io::projection_csv(V, d.feature_names));
  io::write_atomic(dir / "coordinates.csv",
                   io::coordinates_csv(d.X * V, label_strings(d.labels, d.class_names)));
  manifest.artifacts.push_back("projection.csv");
  manifest.artifacts.push_back("coordinates.csv");
  finish_manifest(manifest, dir / "manifest.json");
  return kOk;
}

int cmd_cluster(const Options& o, std::ostream& out, std::ostream& err) {
  const io::Ingested data = io::ingest_csv(o.in.data, ingest_options(o));
  warn_constant(data, err);
  const Dataset& d = data.data;
  const fs::path dir = prepare_dir(o.out);
  io::RunManifest manifest = start_manifest("cluster", o, data);

  ClusterConfig cc;
  cc.seed = o.seed;
  if (o.lambda > 0) cc.lambda = o.lambda;
  if (o.pca_threshold > 0) cc.pca_threshold = o.pca_threshold;
  validate(cc);
  manifest.config["k"] = o.k;
  manifest.config["dim"] = o.dim;
  manifest.config["lambda"] = o.lambda;
  manifest.config["pca_threshold"] = o.pca_threshold;
  manifest.config["gmm"] = o.gmm;

  Matrix X = d.X;
  Matrix basis = Matrix::Identity(d.p(), d.p());
  Vector center = Vector::Zero(d.p());
  std::vector<std::string> working_names = d.feature_names;
  if (cc.pca_threshold) {
    if (!o.gmm.empty()) throw ConfigError("--gmm cannot be combined with --pca-threshold");
    PcaReduction pca = pca_prefilter(d.X, *cc.pca_threshold);
    X = std::move(pca.X);
    basis = std::move(pca.basis);
    center = std::move(pca.mean);
    working_names.clear();
    for (Index j = 0; j < X.cols(); ++j) working_names.push_back("pc" + std::to_string(j + 1));
    out << "pca_components=" << X.cols() << "\n";
  }

  GmmModel gmm;
  if (!o.gmm.empty()) {
    std::vector<std::string> names;
    gmm = io::gmm_from_json(json::parse(io::read_file(o.gmm)), &names);
    if (gmm.dim() != X.cols()) throw DataError("mixture dimension does not match the data");
    if (!names.empty() && names != working_names) throw DataError("mixture feature names do not match the data");
  } else {
    if (o.k < 1) throw ConfigError("--k is required unless --gmm is given");
    gmm = fit_gmm_em(X, o.k, cc).model;
  }
  const EnhanceResult result = enhance_gmm(X, gmm, o.dim, cc, optim_config(o));
  const int K = gmm.size();

  io::write_atomic(dir / "gmm.json", io::dump(io::to_json(gmm, working_names, manifest.id())));
  std::vector<std::string> proj_names;
  for (Index j = 0; j < result.V.cols(); ++j) proj_names.push_back("v" + std::to_string(j + 1));
  io::write_atomic(dir / "projected_gmm.json",
                   io::dump(io::to_json(result.projected_gmm, proj_names, manifest.id())));

  std::string labels = "initial,enhanced";
  if (d.labeled()) labels += ",truth";
  labels += '\n';
  for (Index i = 0; i < d.n(); ++i) {
    labels += std::to_string(result.initial_labels[i] + 1) + "," + std::to_string(result.labels[i] + 1);
    if (d.labeled()) labels += "," + d.class_names[static_cast<std::size_t>(d.labels[i])];
    labels += '\n';
  }
  io::write_atomic(dir / "labels.csv", labels);
  io::write_atomic(dir / "projection.csv", io::projection_csv(basis * result.V, d.feature_names));
  io::write_atomic(dir / "coordinates.csv",
                   io::coordinates_csv(X * result.V, label_strings(result.labels, cluster_names(K))));
  manifest.artifacts = {"gmm.json", "projected_gmm.json", "labels.csv", "projection.csv", "coordinates.csv"};

  out << "penalty=" << format_double(orthonormality_penalty(result.V)) << "\n"
      << "iterations=" << result.ascent.iterations << "\n"
      << "stop_reason=" << to_string(result.ascent.stop) << "\n";
  if (d.labeled()) {
    const double ari0 = adjusted_rand_index(result.initial_labels, d.labels);
    const double ari1 = adjusted_rand_index(result.labels, d.labels);
    const NmiResult nmi0 = normalized_mutual_information(result.initial_labels, d.labels);
    const NmiResult nmi1 = normalized_mutual_information(result.labels, d.labels);
    std::string metrics = "metric,initial,enhanced,difference\n";
    auto row = [&](const char* name, double a, double b) {
      metrics += std::string(name) + "," + format_double(100 * a) + "," + format_double(100 * b) + "," +
                 format_double(100 * (b - a)) + "\n";
      out << name << "_initial=" << format_double(100 * a) << "\n" << name << "_enhanced=" << format_double(100 * b) << "\n";
    };
    row("ari", ari0, ari1);
    row("nmi", nmi0.value, nmi1.value);
    if (nmi0.degenerate || nmi1.degenerate) err << "warning: NMI is degenerate (a partition has one block)\n";
    io::write_atomic(dir / "metrics.csv", metrics);
    manifest.artifacts.push_back("metrics.csv");
  }
  finish_manifest(manifest, dir / "manifest.json");
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  const io::Ingested data = io::ingest_csv(o.in.data, ingest_options(o));
  warn_constant(data, err);
  const fs::path dir = prepare_dir(o.out);
  io::RunManifest manifest = start_manifest("evaluate", o, data);

  std::vector<Method> methods;
  for (const auto& m : o.methods) methods.push_back(method_from_string(m));
  if (methods.empty()) methods = {Method::Opgd, Method::Lda, Method::Rda, Method::Save};
  std::optional<std::vector<double>> grid;
  if (!o.grid.empty()) {
    if (methods.size() != 1) throw ConfigError("--grid requires exactly one --method");
    grid = o.grid;
  }
  json names = json::array();
  for (Method m : methods) names.push_back(to_string(m));
  manifest.config["methods"] = names;
  manifest.config["grid"] = o.grid;
  const OptimConfig opt = optim_config(o);

  std::vector<ResultRow> rows;
  if (!o.test.empty()) {
    io::IngestOptions test_in = ingest_options(o);
    test_in.drop_constant = false;
    test_in.perturb = 0;
    const io::Ingested test_raw = io::ingest_csv(o.test, test_in);
    const Dataset test = io::align_to(test_raw.data, data.data.feature_names, data.data.class_names);
    const int k = o.folds > 0 ? o.folds : 10;
    const FoldPlan folds = make_folds(data.data.n(), k, data.data.groups, o.seed);
    manifest.config["test"] = o.test;
    manifest.config["folds"] = k;
    rows = evaluate_cv(data.data, test, folds, methods, opt, grid);
  } else {
    if (o.split.size() != 3) throw ConfigError("--split needs three ratios");
    manifest.config["split"] = o.split;
    manifest.config["repeats"] = o.repeats;
    rows = evaluate_splits(data.data, methods, o.repeats, {o.split[0], o.split[1], o.split[2]}, o.seed, opt, grid);
  }

  std::string table = "protocol,repeat,method,hyper,selection_error,test_error\n";
  for (const ResultRow& r : rows) {
    table += r.protocol + "," + std::to_string(r.repeat) + "," + to_string(r.method) + "," + format_double(r.hyper) +
             "," + format_double(r.selection_error) + "," + format_double(r.test_error) + "\n";
    out << r.protocol << " repeat=" << r.repeat << " method=" << to_string(r.method) << " hyper=" << format_double(r.hyper)
        << " selection_error=" << format_double(r.selection_error) << " test_error=" << format_double(r.test_error)
        << "\n";
  }
  io::write_atomic(dir / "results.csv", table);
  manifest.artifacts.push_back("results.csv");
  finish_manifest(manifest, dir / "manifest.json");
  return kOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out, std::ostream&) {
  if (o.instances < 1) throw ConfigError("--instances must be positive");
  const GradcheckReport report = gradcheck_suite(o.instances, o.seed, o.tolerance);
  out << "instances=" << report.instances << "\n"
      << "failures=" << report.failures << "\n"
      << "max_rel_error=" << format_double(report.max_rel_error) << "\n"
      << "cluster_failures=" << report.cluster_failures << "\n"
      << "cluster_max_rel_error=" << format_double(report.cluster_max_rel_error) << "\n";
  return report.failures == 0 && report.cluster_failures == 0 ? kOk : kNumerical;
}

// Extended-precision log-likelihood of the labels under the projected model.
long double reference_objective(const Dataset& data, const Matrix& V, const GaussianClassModel& model) {
  const int K = model.size();
  const Index q = V.cols();
  std::vector<std::vector<long double>> pm(K, std::vector<long double>(q)), pv(K, std::vector<long double>(q));
  for (int k = 0; k < K; ++k)
    for (Index t = 0; t < q; ++t) {
      long double m = 0, s = 0;
      for (Index a = 0; a < V.rows(); ++a) {
        m += static_cast<long double>(V(a, t)) * model.means[k][a];
        for (Index b = 0; b < V.rows(); ++b)
          s += static_cast<long double>(V(a, t)) * model.covariances[k](a, b) * V(b, t);
      }
      pm[k][t] = m;
      pv[k][t] = s;
    }
  const long double log2pi = std::log(2.0L * 3.14159265358979323846264338327950288L);
  long double total = 0;
  std::vector<long double> joint(K);
  for (Index i = 0; i < data.n(); ++i) {
    for (int k = 0; k < K; ++k) {
      long double l = std::log(static_cast<long double>(model.weights[k]));
      for (Index t = 0; t < q; ++t) {
        long double u = 0;
        for (Index a = 0; a < V.rows(); ++a) u += static_cast<long double>(V(a, t)) * data.X(i, a);
        const long double dev = u - pm[k][t];
        l -= 0.5L * (log2pi + std::log(pv[k][t]) + dev * dev / pv[k][t]);
      }
      joint[k] = l;
    }
    const long double top = *std::max_element(joint.begin(), joint.end());
    long double sum = 0;
    for (long double j : joint) sum += std::exp(j - top);
    total += joint[data.labels[i]] - top - std::log(sum);
  }
  return total;
}

}  // namespace

// Denominator floor for instances whose gradient vanishes identically (p = p' = 1).
constexpr double kGradientFloor = 1e-6;

GradcheckReport gradcheck_suite(int instances, std::uint64_t seed, double tolerance) {
  GradcheckReport report;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int inst = 0; inst < instances; ++inst) {
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(inst));
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int K = uniform_int(2, 4);
    const Index p = uniform_int(1, 8);
    const Index q = uniform_int(1, static_cast<int>(std::min<Index>(4, p)));
    std::vector<int> sizes(K);
    for (int& s : sizes) s = uniform_int(3, 50 / K);
    const Index n = std::accumulate(sizes.begin(), sizes.end(), Index{0});

    Matrix X(n, p);
    std::vector<int> labels;
    Index row = 0;
    for (int k = 0; k < K; ++k) {
      Vector mean(p);
      for (Index a = 0; a < p; ++a) mean[a] = 1.5 * normal(rng);
      Matrix A(p, p);
      for (Index a = 0; a < p; ++a)
        for (Index b = 0; b < p; ++b) A(a, b) = normal(rng) / std::sqrt(static_cast<double>(p)) + (a == b ? 0.5 : 0.0);
      for (int s = 0; s < sizes[k]; ++s, ++row) {
        Vector z(p);
        for (Index a = 0; a < p; ++a) z[a] = normal(rng);
        X.row(row) = (mean + A * z).transpose();
        labels.push_back(k);
      }
    }
    const Dataset data = make_dataset(std::move(X), std::move(labels), K);
    const GaussianClassModel model = estimate_class_model(data);
    Matrix V(p, q);
    for (Index a = 0; a < p; ++a)
      for (Index t = 0; t < q; ++t) V(a, t) = normal(rng);

    const Matrix G = grad_objective(data, V, model);
    Matrix fd(p, q);
    const double h = 1e-5;
    for (Index a = 0; a < p; ++a)
      for (Index t = 0; t < q; ++t) {
        Matrix plus = V, minus = V;
        plus(a, t) += h;
        minus(a, t) -= h;
        fd(a, t) = static_cast<double>((reference_objective(data, plus, model) - reference_objective(data, minus, model)) /
                                       (2.0L * h));
      }
    const double rel = (G - fd).norm() / std::max({G.norm(), fd.norm(), kGradientFloor});
    report.max_rel_error = std::max(report.max_rel_error, rel);
    if (!(rel < tolerance)) ++report.failures;
    ++report.instances;

    // Clustering objective with the class model as the mixture. Entries whose
    // perturbation changes any hard assignment are skipped.
    const GaussianComponents& gmm = model;
    const double lambda = static_cast<double>(n);
    const Matrix Gc = grad_cluster_objective(data.X, V, gmm, lambda);
    const std::vector<int> hard = argmax_rows(make_workspace(data.X, V, gmm).posteriors);
    Matrix diff = Matrix::Zero(p, q), ref = Matrix::Zero(p, q);
    for (Index a = 0; a < p; ++a)
      for (Index t = 0; t < q; ++t) {
        Matrix plus = V, minus = V;
        plus(a, t) += h;
        minus(a, t) -= h;
        if (argmax_rows(make_workspace(data.X, plus, gmm).posteriors) != hard ||
            argmax_rows(make_workspace(data.X, minus, gmm).posteriors) != hard)
          continue;
        const double f = (cluster_objective(data.X, plus, gmm, lambda) - cluster_objective(data.X, minus, gmm, lambda)) / (2 * h);
        diff(a, t) = Gc(a, t) - f;
        ref(a, t) = std::max(std::abs(Gc(a, t)), std::abs(f));
      }
    const double crel = diff.norm() / std::max({ref.norm(), kGradientFloor});
    report.cluster_max_rel_error = std::max(report.cluster_max_rel_error, crel);
    if (!(crel < tolerance)) ++report.cluster_failures;
  }
  return report;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal projections for Gaussian discriminants", "opgd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version_string());
  Options o;

  auto* fit = app.add_subcommand("fit", "Fit an OPGD classifier and write a model file");
  add_ingest(fit, o, true);
  add_optim(fit, o);
  fit->add_option("--dim", o.dim, "Number of projected dimensions")->required()->check(CLI::PositiveNumber);
  fit->add_option("--out", o.out, "Model file to write")->required();

  auto* pred = app.add_subcommand("predict", "Predict labels and posteriors with a fitted model");
  add_ingest(pred, o, false);
  pred->add_option("--model", o.model, "Model file")->required();
  pred->add_option("--out", o.out, "Prediction table to write")->required();

  auto* feat = app.add_subcommand("features", "Write discriminant directions and projected coordinates");
  add_ingest(feat, o, true);
  add_optim(feat, o);
  feat->add_option("--dim", o.dim, "Number of features")->required()->check(CLI::PositiveNumber);
  feat->add_option("--method", o.method, "opgd, lda or save")->check(CLI::IsMember({"opgd", "lda", "save"}));
  feat->add_option("--out", o.out, "Output directory")->required();

  auto* clus = app.add_subcommand("cluster", "Fit a GMM and enhance it with an optimal projection");
  add_ingest(clus, o, false);
  add_optim(clus, o);
  clus->add_option("--k", o.k, "Number of mixture components")->check(CLI::PositiveNumber);
  clus->add_option("--gmm", o.gmm, "Initial mixture file instead of running EM");
  clus->add_option("--dim", o.dim, "Number of projected dimensions")->required()->check(CLI::PositiveNumber);
  clus->add_option("--lambda", o.lambda, "Orthonormality penalty (default n)")->check(CLI::PositiveNumber);
  clus->add_flag("--pca-threshold{0.999}", o.pca_threshold,
                 "Keep leading principal components up to this share of variance first");
  clus->add_option("--out", o.out, "Output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "Model selection and test error for a set of methods");
  add_ingest(eval, o, true);
  add_optim(eval, o);
  eval->add_option("--test", o.test, "Separate test file; selects the cross-validation protocol");
  eval->add_option("--folds", o.folds, "Number of folds (grouped by --group when given)")->check(CLI::PositiveNumber);
  eval->add_option("--split", o.split, "Train/validation/test ratios")->delimiter(',')->expected(3);
  eval->add_option("--repeats", o.repeats, "Number of random splits")->check(CLI::PositiveNumber);
  eval->add_option("--method", o.methods, "Methods to run (opgd, lda, rda, save)")->delimiter(',');
  eval->add_option("--grid", o.grid, "Hyper-parameter grid for a single method")->delimiter(',');
  eval->add_option("--out", o.out, "Output directory")->required();

  auto* grad = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
  grad->add_option("--instances", o.instances, "Number of random instances");
  grad->add_option("--tolerance", o.tolerance, "Relative error tolerance");
  grad->add_option("--seed", o.seed, "Seed for the random instances");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*fit) return cmd_fit(o, out, err);
    if (*pred) return cmd_predict(o, out, err);
    if (*feat) return cmd_features(o, out, err);
    if (*clus) return cmd_cluster(o, out, err);
    if (*eval) return cmd_evaluate(o, out, err);
    if (*grad) return cmd_gradcheck(o, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kConfig;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace opgd::cli
