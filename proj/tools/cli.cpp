#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ktl/analytics.hpp"
#include "ktl/dataset_io.hpp"
#include "ktl/error.hpp"
#include "ktl/finite_dist.hpp"
#include "ktl/finite_dist_json.hpp"
#include "ktl/head.hpp"
#include "ktl/knn.hpp"
#include "ktl/pipeline.hpp"
#include "ktl/synthetic.hpp"
#include "ktl/verify.hpp"
#include "ktl/version.hpp"

namespace ktl::cli {
namespace {

using nlohmann::json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IngestionError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError(path + ": cannot open file for writing");
  f << text;
  if (!f) throw ValidationError(path + ": write failed");
}

void emit(std::ostream& out, const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    write_text(*path, text);
  } else {
    out << text;
  }
}

json envelope(const std::string& command, json config, json seed, json result) {
  return {{"tool", kToolName}, {"version", kVersion}, {"command", command},
          {"config", std::move(config)}, {"seed", std::move(seed)}, {"result", std::move(result)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// CSV artifacts carry provenance in leading comment lines.
std::string csv_preamble(const std::string& command, const json& config, const json& seed) {
  return "# tool=" + std::string(kToolName) + " version=" + kVersion + " command=" + command +
         " seed=" + seed.dump() + "\n# config=" + config.dump() + "\n";
}

// Values from a JSON config file apply only where the flag was not given.
template <typename T>
void take(const json& cfg, const CLI::Option* opt, const char* key, T& var) {
  if (opt->count() == 0 && cfg.contains(key)) {
    try {
      var = cfg.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(std::string("config field '") + key + "': " + e.what());
    }
  }
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = read_json(path);
  if (!j.is_object()) throw ValidationError(path + ": config must be a JSON object");
  return j;
}

template <typename T>
T require(const std::optional<T>& v, const char* flag) {
  if (!v) throw ValidationError(std::string("missing required option ") + flag);
  return *v;
}

json head_to_json(const LogisticHead& head) {
  json w = json::array();
  for (Eigen::Index r = 0; r < head.weights.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(head.weights.cols()));
    for (Eigen::Index c = 0; c < head.weights.cols(); ++c) row[static_cast<std::size_t>(c)] = head.weights(r, c);
    w.push_back(row);
  }
  return {{"weights", w}, {"bias", std::vector<double>(head.bias.data(), head.bias.data() + head.bias.size())}};
}

std::string records_csv(const std::vector<TransformationRecord>& records, std::size_t k, double exponent) {
  std::ostringstream s;
  write_records_csv(s, records, k, exponent);
  return s.str();
}

// --- safety ------------------------------------------------------------------

struct SafetyArgs {
  std::string dist;
  std::string map;
  std::optional<double> delta;
  std::optional<std::string> out;
};

int cmd_safety(const SafetyArgs& a, std::ostream& out) {
  const auto p = distribution_from_json(read_json(a.dist));
  const auto f = map_from_json(read_json(a.map), p);
  json result = to_json(safety_report(p, f));
  if (a.delta) {
    if (!(*a.delta >= 0.0)) throw ValidationError("--delta must be >= 0");
    result["certificate"] = to_json(pinsker_safety_certificate(p, f, *a.delta));
  }
  const json config = {{"distribution", a.dist}, {"map", a.map}, {"delta", a.delta ? json(*a.delta) : json(nullptr)}};
  emit(out, a.out, dump(envelope("safety", config, nullptr, result)));
  return kOk;
}

// --- convergence -------------------------------------------------------------

struct ConvergenceArgs {
  std::string config;
  std::optional<std::string> train;
  std::optional<std::string> test;
  std::vector<std::size_t> ks{1};
  std::vector<std::size_t> sizes;
  std::size_t runs = 30;
  std::uint64_t seed = 0;
  std::string format = "auto";
  std::optional<std::string> out;
  CLI::Option* o_train = nullptr;
  CLI::Option* o_test = nullptr;
  CLI::Option* o_k = nullptr;
  CLI::Option* o_sizes = nullptr;
  CLI::Option* o_runs = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_format = nullptr;
};

int cmd_convergence(ConvergenceArgs& a, std::ostream& out) {
  const json cfg = load_config(a.config);
  take(cfg, a.o_train, "train", a.train);
  take(cfg, a.o_test, "test", a.test);
  take(cfg, a.o_k, "k", a.ks);
  take(cfg, a.o_sizes, "sizes", a.sizes);
  take(cfg, a.o_runs, "runs", a.runs);
  take(cfg, a.o_seed, "seed", a.seed);
  take(cfg, a.o_format, "format", a.format);
  const auto fmt = parse_format(a.format);
  const auto train = read_dataset(require(a.train, "--train"), fmt);
  const auto test = read_dataset(require(a.test, "--test"), fmt);
  if (a.ks.empty()) throw ValidationError("--k must list at least one value");
  if (a.sizes.empty()) {
    const std::size_t kmax = *std::max_element(a.ks.begin(), a.ks.end());
    a.sizes = linear_sizes(std::max<std::size_t>(kmax, 1), train.size(), 10);
  }

  const json config = {{"train", *a.train}, {"test", *a.test}, {"k", a.ks}, {"sizes", a.sizes},
                       {"runs", a.runs},    {"seed", a.seed},  {"format", a.format}};
  std::ostringstream csv;
  csv.precision(std::numeric_limits<double>::max_digits10);
  csv << csv_preamble("convergence", config, a.seed) << "k,size,mean,sd,ci95,runs\n";
  for (std::size_t k : a.ks) {
    const auto curve = convergence_curve(train, test, KnnConfig{k}, a.sizes, a.runs, a.seed);
    for (const auto& pt : curve.points) {
      csv << k << ',' << pt.size << ',' << pt.mean << ',' << pt.sd << ',' << pt.ci95 << ',' << pt.runs << '\n';
    }
  }
  emit(out, a.out, csv.str());
  return kOk;
}

// --- train-head --------------------------------------------------------------

struct TrainHeadArgs {
  std::string train;
  std::string test;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  bool no_normalize = false;
  std::string format = "auto";
  std::optional<std::string> out;
};

int cmd_train_head(const TrainHeadArgs& a, std::ostream& out) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : train_config_from_json(read_json(a.config));
  if (a.seed) cfg.seed = *a.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  cfg.validate();
  const auto fmt = parse_format(a.format);
  LabeledDataset train = read_dataset(a.train, fmt);
  LabeledDataset test = read_dataset(a.test, fmt);
  if (!a.no_normalize) {
    auto splits = normalize_features(train, test);
    train = std::move(splits.train);
    test = std::move(splits.test);
  }
  const auto [head, report] = train_head(train, test, cfg);
  json result = to_json(report);
  result["head"] = head_to_json(head);
  const json config = {{"train", a.train},     {"test", a.test},      {"config", a.config},
                       {"normalize", !a.no_normalize}, {"format", a.format}, {"training", to_json(cfg)}};
  emit(out, a.out, dump(envelope("train-head", config, cfg.seed, result)));
  return kOk;
}

// --- correlate ---------------------------------------------------------------

struct CorrelateArgs {
  std::string records;
  std::string config;
  std::size_t k = 1;
  double exponent = 0.25;
  bool surrogate_terms = false;
  std::optional<std::string> out;
  std::optional<std::string> csv;
  CLI::Option* o_k = nullptr;
  CLI::Option* o_exponent = nullptr;
  CLI::Option* o_terms = nullptr;
};

int cmd_correlate(CorrelateArgs& a, std::ostream& out) {
  const json cfg = load_config(a.config);
  take(cfg, a.o_k, "k", a.k);
  take(cfg, a.o_exponent, "surrogate_exponent", a.exponent);
  take(cfg, a.o_terms, "surrogate_terms", a.surrogate_terms);
  if (a.exponent != 0.25 && a.exponent != 1.0) throw ValidationError("--surrogate-exponent must be 0.25 or 1.0");

  json input = read_json(a.records);
  if (input.is_object() && input.contains("result") && input.at("result").is_object()) input = input.at("result");
  const auto records = records_from_json(input);
  const auto report = build_correlation_report(records, a.k, a.exponent, a.surrogate_terms);

  json table = json::array();
  for (const auto& r : records) {
    table.push_back({{"name", r.name},
                     {"dim", r.dim},
                     {"mse", r.mse},
                     {"norm", r.frobenius_norm},
                     {"knn_err", r.knn_error.at(a.k)},
                     {"surrogate", r.surrogate(a.k, a.exponent)}});
  }
  json result = to_json(report);
  result["table"] = table;
  const json config = {{"records", a.records},
                       {"k", a.k},
                       {"surrogate_exponent", a.exponent},
                       {"surrogate_terms", a.surrogate_terms}};
  if (a.csv) write_text(*a.csv, csv_preamble("correlate", config, nullptr) + records_csv(records, a.k, a.exponent));
  emit(out, a.out, dump(envelope("correlate", config, nullptr, result)));
  return kOk;
}

// --- verify ------------------------------------------------------------------

struct VerifyArgs {
  std::string suite;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::optional<std::string> out;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  const auto r = run_suite(a.suite, a.trials, a.seed);
  const json config = {{"suite", a.suite}, {"trials", a.trials}, {"seed", a.seed}};
  emit(out, a.out, dump(envelope("verify", config, a.seed, to_json(r))));
  if (!r.passed()) {
    err << "suite " << a.suite << ": " << r.failures << " of " << r.trials << " trials failed\n";
    if (r.counterexample) err << "counterexample: " << r.counterexample->dump() << "\n";
    return kComputationError;
  }
  return kOk;
}

// --- family ------------------------------------------------------------------

struct FamilyArgs {
  std::string config;
  std::optional<std::size_t> dim;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> train_size;
  std::optional<std::size_t> test_size;
  std::optional<std::size_t> epochs;
  std::vector<std::size_t> ks;
  std::optional<std::string> out;
  std::optional<std::string> csv;
};

int cmd_family(const FamilyArgs& a, std::ostream& out) {
  FamilyConfig cfg = a.config.empty() ? FamilyConfig{} : family_config_from_json(read_json(a.config));
  if (a.dim) cfg.dim = *a.dim;
  if (a.seed) cfg.seed = *a.seed;
  if (a.train_size) cfg.train_size = *a.train_size;
  if (a.test_size) cfg.test_size = *a.test_size;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (!a.ks.empty()) cfg.ks = a.ks;
  cfg.validate();

  const auto run = run_family(cfg);
  const auto records = run.records();
  json recs = json::array();
  json heads = json::array();
  for (const auto& e : run.evaluations) {
    recs.push_back(to_json(e.record));
    heads.push_back({{"name", e.record.name},
                     {"report", to_json(e.head_report)},
                     {"gradient_deviation", e.gradient_deviation}});
  }
  json result = {{"bayes_error", run.bayes_error}, {"records", recs}, {"heads", heads}};
  result["correlation"] = to_json(build_correlation_report(records, cfg.ks.front()));
  const json config = to_json(cfg);
  if (a.csv) write_text(*a.csv, csv_preamble("family", config, cfg.seed) + records_csv(records, cfg.ks.front(), 0.25));
  emit(out, a.out, dump(envelope("family", config, cfg.seed, result)));
  return kOk;
}

// --- generate ----------------------------------------------------------------

struct GenerateArgs {
  double lipschitz = 1.0;
  std::size_t dim = 2;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double delta = 0.25;
  std::size_t x_size = 2;
  std::size_t y_size = 2;
  std::size_t xt_size = 1;
  std::size_t payload_dim = 0;
  std::string format = "csv";
  std::string out;
  std::string out_transformed;
  std::string map_out;
};

int cmd_generate(const std::string& which, const GenerateArgs& a, std::ostream& out) {
  json config;
  json result;
  json seed = a.seed;
  if (which == "lipschitz") {
    const auto fmt = parse_format(a.format);
    const auto task = gen_lipschitz_task(a.lipschitz, a.dim, a.seed);
    write_dataset(a.out, task.sample(a.n, a.stream), fmt == DatasetFormat::kAuto ? DatasetFormat::kCsv : fmt);
    config = {{"lipschitz", a.lipschitz}, {"dim", a.dim}, {"n", a.n}, {"stream", a.stream},
              {"format", a.format},       {"out", a.out}};
    result = {{"bayes_error", task.bayes_error()}, {"lipschitz_constant", task.lipschitz_constant()}};
  } else if (which == "tightness") {
    const auto fmt = parse_format(a.format);
    const auto [raw, collapsed] = gen_tightness_samples(a.delta, a.n, a.seed);
    const auto f = fmt == DatasetFormat::kAuto ? DatasetFormat::kCsv : fmt;
    write_dataset(a.out, raw, f);
    write_dataset(a.out_transformed, collapsed, f);
    config = {{"delta", a.delta}, {"n", a.n}, {"format", a.format}, {"out", a.out},
              {"out_transformed", a.out_transformed}};
    result = {{"delta_star", a.delta}};
  } else if (which == "finite") {
    const auto p = gen_random_finite(a.x_size, a.y_size, a.seed, a.payload_dim);
    write_text(a.out, dump(to_json(p)));
    config = {{"x_size", a.x_size}, {"y_size", a.y_size}, {"payload_dim", a.payload_dim}, {"out", a.out}};
    result = {{"bayes_error", bayes_error(p)}};
  } else {
    const auto inst = tightness_instance(a.delta, a.x_size, a.xt_size);
    write_text(a.out, dump(to_json(inst.distribution)));
    write_text(a.map_out, dump(to_json(inst.map, inst.distribution)));
    config = {{"delta", a.delta}, {"x_size", a.x_size}, {"xt_size", a.xt_size}, {"out", a.out},
              {"map_out", a.map_out}};
    result = {{"delta_star", delta_star(inst.distribution, inst.map)}};
    seed = nullptr;
  }
  out << dump(envelope("generate " + which, config, seed, result));
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"kNN classifiers over feature transformations: safety, convergence and correlation tools", "ktl"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
  app.require_subcommand(1);

  SafetyArgs safety;
  auto* s_safety = app.add_subcommand("safety", "Bayes error increase of a map on a finite distribution");
  s_safety->add_option("distribution", safety.dist, "Distribution JSON")->required();
  s_safety->add_option("map", safety.map, "Map JSON")->required();
  s_safety->add_option("--delta", safety.delta, "Also test the KL certificate for this delta");
  s_safety->add_option("--out", safety.out, "Write the report here instead of stdout");

  ConvergenceArgs conv;
  auto* s_conv = app.add_subcommand("convergence", "Subsampled kNN learning curves");
  s_conv->add_option("--config", conv.config, "JSON file with defaults for the options below");
  conv.o_train = s_conv->add_option("--train", conv.train, "Training pool");
  conv.o_test = s_conv->add_option("--test", conv.test, "Test set");
  conv.o_k = s_conv->add_option("--k", conv.ks, "Neighbor counts (comma separated)")->delimiter(',');
  conv.o_sizes = s_conv->add_option("--sizes", conv.sizes, "Subsample sizes (default: 10 linear steps)")->delimiter(',');
  conv.o_runs = s_conv->add_option("--runs", conv.runs, "Independent subsamples per size");
  conv.o_seed = s_conv->add_option("--seed", conv.seed, "Seed");
  conv.o_format = s_conv->add_option("--format", conv.format, "auto, csv or binary");
  s_conv->add_option("--out", conv.out, "Write the CSV here instead of stdout");

  TrainHeadArgs th;
  auto* s_th = app.add_subcommand("train-head", "Train a softmax head over the learning rate x l2 grid");
  s_th->add_option("--train", th.train, "Training set")->required();
  s_th->add_option("--test", th.test, "Test set")->required();
  s_th->add_option("--config", th.config, "Training config JSON");
  s_th->add_option("--seed", th.seed, "Override the config seed");
  s_th->add_option("--epochs", th.epochs, "Override the config epochs");
  s_th->add_flag("--no-normalize", th.no_normalize, "Skip the [-1, 1] feature normalization");
  s_th->add_option("--format", th.format, "auto, csv or binary");
  s_th->add_option("--out", th.out, "Write the report here instead of stdout");

  CorrelateArgs corr;
  auto* s_corr = app.add_subcommand("correlate", "Correlate kNN error with head statistics across transformations");
  s_corr->add_option("records", corr.records, "Records JSON")->required();
  s_corr->add_option("--config", corr.config, "JSON file with defaults for the options below");
  corr.o_k = s_corr->add_option("--k", corr.k, "Neighbor count whose error is correlated");
  corr.o_exponent = s_corr->add_option("--surrogate-exponent", corr.exponent, "Exponent on MSE: 0.25 or 1.0");
  corr.o_terms = s_corr->add_flag("--surrogate-terms", corr.surrogate_terms, "Also run CCA on the surrogate terms");
  s_corr->add_option("--out", corr.out, "Write the report here instead of stdout");
  s_corr->add_option("--csv", corr.csv, "Write the per-transformation table here");

  VerifyArgs ver;
  auto* s_ver = app.add_subcommand("verify", "Run a randomized property suite");
  s_ver->add_option("--suite", ver.suite, "Suite name")->required();
  s_ver->add_option("--trials", ver.trials, "Number of trials");
  s_ver->add_option("--seed", ver.seed, "Seed");
  s_ver->add_option("--out", ver.out, "Write the summary here instead of stdout");

  FamilyArgs fam;
  auto* s_fam = app.add_subcommand("family", "Evaluate the standard transformation family on a synthetic task");
  s_fam->add_option("--config", fam.config, "Family config JSON");
  s_fam->add_option("--dim", fam.dim, "Input dimension");
  s_fam->add_option("--seed", fam.seed, "Seed");
  s_fam->add_option("--train-size", fam.train_size, "Training points");
  s_fam->add_option("--test-size", fam.test_size, "Test points");
  s_fam->add_option("--epochs", fam.epochs, "Epochs per grid cell");
  s_fam->add_option("--k", fam.ks, "Neighbor counts (comma separated)")->delimiter(',');
  s_fam->add_option("--out", fam.out, "Write the records here instead of stdout");
  s_fam->add_option("--csv", fam.csv, "Write the per-transformation table here");

  GenerateArgs gen;
  auto* s_gen = app.add_subcommand("generate", "Write synthetic datasets and distributions");
  s_gen->require_subcommand(1);
  auto* g_lip = s_gen->add_subcommand("lipschitz", "Samples from the Lipschitz task");
  g_lip->add_option("--lipschitz", gen.lipschitz, "Lipschitz constant of the posterior");
  g_lip->add_option("--dim", gen.dim, "Dimension");
  g_lip->add_option("--n", gen.n, "Number of points");
  g_lip->add_option("--seed", gen.seed, "Task seed");
  g_lip->add_option("--stream", gen.stream, "Sample stream of the task");
  g_lip->add_option("--format", gen.format, "csv or binary");
  g_lip->add_option("--out", gen.out, "Output dataset")->required();
  auto* g_tight = s_gen->add_subcommand("tightness", "Samples from the two-point task and its collapsed copy");
  g_tight->add_option("--delta", gen.delta, "Posterior offset");
  g_tight->add_option("--n", gen.n, "Number of points");
  g_tight->add_option("--seed", gen.seed, "Seed");
  g_tight->add_option("--format", gen.format, "csv or binary");
  g_tight->add_option("--out", gen.out, "Raw dataset")->required();
  g_tight->add_option("--out-transformed", gen.out_transformed, "Collapsed dataset")->required();
  auto* g_fin = s_gen->add_subcommand("finite", "Random finite joint distribution");
  g_fin->add_option("--x-size", gen.x_size, "Support size of X");
  g_fin->add_option("--y-size", gen.y_size, "Number of classes");
  g_fin->add_option("--payload-dim", gen.payload_dim, "Payload dimension (0 for none)");
  g_fin->add_option("--seed", gen.seed, "Seed");
  g_fin->add_option("--out", gen.out, "Distribution JSON")->required();
  auto* g_inst = s_gen->add_subcommand("tightness-instance", "Exact two-point distribution and collapsing map");
  g_inst->add_option("--delta", gen.delta, "Posterior offset");
  g_inst->add_option("--x-size", gen.x_size, "Support size of X");
  g_inst->add_option("--xt-size", gen.xt_size, "Codomain size");
  g_inst->add_option("--out", gen.out, "Distribution JSON")->required();
  g_inst->add_option("--map-out", gen.map_out, "Map JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*s_safety) return cmd_safety(safety, out);
    if (*s_conv) return cmd_convergence(conv, out);
    if (*s_th) return cmd_train_head(th, out);
    if (*s_corr) return cmd_correlate(corr, out);
    if (*s_ver) return cmd_verify(ver, out, err);
    if (*s_fam) return cmd_family(fam, out);
    for (auto* g : {g_lip, g_tight, g_fin, g_inst}) {
      if (*g) return cmd_generate(g->get_name(), gen, out);
    }
    err << "error: no command given\n";
    return kInputError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "computation failed: " << e.what() << "\n";
    return kComputationError;
  }
}

}  // namespace ktl::cli
