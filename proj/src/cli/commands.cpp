#include "stablab/commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "stablab/attacks.hpp"
#include "stablab/dataset.hpp"
#include "stablab/errors.hpp"
#include "stablab/eval.hpp"
#include "stablab/gaussmix.hpp"
#include "stablab/linear.hpp"
#include "stablab/models.hpp"
#include "stablab/poison.hpp"
#include "stablab/reproduce.hpp"
#include "stablab/run_config.hpp"
#include "stablab/training.hpp"

namespace stablab {

namespace fs = std::filesystem;

namespace {

template <typename... Args>
std::string fmt(const char* format, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw_data(DataErrorKind::Io, "cannot write " + path.string());
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string scenario;
};

// ---------------------------------------------------------------------------
// Shared key groups

void declare_common(RunConfig& cfg) {
  cfg.declare("seed", "0", "master seed");
  cfg.declare("out", "", "run directory (default: runs/<UTC timestamp>-seed<seed>)");
}

void declare_spec(RunConfig& cfg) {
  cfg.declare("eta", "0.1", "mean of the non-robust coordinates");
  cfg.declare("sigma", "0.25", "per-coordinate standard deviation");
  cfg.declare("d", "50", "number of non-robust coordinates");
  cfg.declare("shift", "none", "training shift: none | adv | hyp");
  cfg.declare("eps", "0", "shift radius");
}

void declare_arch(RunConfig& cfg) {
  cfg.declare("arch", "32,32", "hidden layer widths (empty for a linear model)");
}

void declare_hyper(RunConfig& cfg, int warmup) {
  const TrainHyper h;
  cfg.declare("epochs", std::to_string(h.epochs), "training epochs");
  cfg.declare("batch_size", std::to_string(h.batch_size), "minibatch size");
  cfg.declare("lr", "0.05", "initial learning rate");
  cfg.declare("momentum", "0.9", "SGD momentum");
  cfg.declare("weight_decay", "0.0005", "L2 weight decay");
  cfg.declare("lr_drops", "20:0.1,26:0.1", "epoch:factor learning-rate drops");
  cfg.declare("holdout_fraction", "0.1", "fraction held out for early stopping");
  cfg.declare("warmup_epochs", std::to_string(warmup), "epochs of linear radius warm-up");
}

std::uint64_t read_seed(const RunConfig& cfg) { return cfg.get_u64("seed"); }

GaussMixSpec read_spec(const RunConfig& cfg) {
  GaussMixSpec spec;
  spec.eta = cfg.get_double("eta");
  spec.sigma = cfg.get_double("sigma");
  spec.d = cfg.get_int("d");
  const double eps = cfg.get_double("eps");
  const auto& shift = cfg.get("shift");
  if (shift == "none") {
    spec.shift = ShiftMode::none();
  } else if (shift == "adv") {
    spec.shift = ShiftMode::adversarial(eps);
  } else if (shift == "hyp") {
    spec.shift = ShiftMode::hypocritical(eps);
  } else {
    throw_config("'shift' must be none, adv or hyp, got '" + shift + "'");
  }
  spec.validate();
  return spec;
}

Architecture read_arch(const RunConfig& cfg) {
  Architecture arch{cfg.get_int_list("arch")};
  for (int width : arch.hidden) {
    if (width < 1) throw_config("'arch' widths must be positive");
  }
  return arch;
}

TrainHyper read_hyper(const RunConfig& cfg, std::uint64_t seed) {
  TrainHyper h;
  h.epochs = cfg.get_int("epochs");
  h.batch_size = cfg.get_int("batch_size");
  h.lr = cfg.get_double("lr");
  h.momentum = cfg.get_double("momentum");
  h.weight_decay = cfg.get_double("weight_decay");
  h.holdout_fraction = cfg.get_double("holdout_fraction");
  h.warmup_epochs = cfg.get_int("warmup_epochs");
  h.seed = seed;
  h.lr_drops.clear();
  for (const auto& item : cfg.get_list("lr_drops")) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw_config("'lr_drops' entries look like epoch:factor");
    RunConfig one;
    one.declare("epoch", item.substr(0, colon), "");
    one.declare("factor", item.substr(colon + 1), "");
    h.lr_drops.push_back({one.get_int("epoch"), one.get_double("factor")});
  }
  h.validate();
  return h;
}

PoisonKind read_poison_kind(const RunConfig& cfg) {
  const auto& kind = cfg.get("kind");
  if (kind == "hyp") return PoisonKind::Hypocritical;
  if (kind == "adv") return PoisonKind::Adversarial;
  throw_config("'kind' must be hyp or adv, got '" + kind + "'");
}

fs::path require_input(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw_data(DataErrorKind::Io, "no such file: " + path.string());
  return path;
}

/// Input paths are checked while the configuration is resolved, before any
/// run directory exists.
fs::path require_path(const RunConfig& cfg, const std::string& key) {
  const auto& value = cfg.get(key);
  if (value.empty()) throw_config("'" + key + "' is required");
  return require_input(value);
}

/// Creates the run directory and writes the resolved configuration into it.
fs::path prepare_run_dir(const RunConfig& cfg, const std::string& command, Context& ctx) {
  fs::path dir = cfg.get("out");
  if (dir.empty()) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
    dir = fs::path("runs") / (std::string(stamp) + "-seed" + cfg.get("seed"));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw_data(DataErrorKind::Io, "cannot create run directory " + dir.string());
  write_text(dir / "resolved.cfg",
             "# stablab " + command + "\n" + cfg.to_string({"out"}));
  ctx.out << "run directory: " << dir.string() << '\n';
  return dir;
}

// ---------------------------------------------------------------------------
// theory

void declare_theory(RunConfig& cfg) {
  declare_common(cfg);
  declare_spec(cfg);
  cfg.declare("eps_d", "0.2", "defense budgets (absolute or multiples of eps, suffix x)");
  cfg.declare("eps_test", "1x", "test-time radius on the clean distribution");
  cfg.declare("mc_n", "100000", "Monte Carlo sample size");
}

int run_theory(const RunConfig& cfg, Context& ctx) {
  const GaussMixSpec spec = read_spec(cfg);
  const auto eps_d_list = cfg.get_budget_list("eps_d", spec.shift.eps);
  const double eps_test = cfg.get_budget("eps_test", spec.shift.eps);
  const auto mc_n = static_cast<Eigen::Index>(cfg.get_u64("mc_n"));
  const auto seed = read_seed(cfg);
  if (mc_n < 1) throw_config("'mc_n' must be positive");
  const fs::path dir = prepare_run_dir(cfg, "theory", ctx);

  std::ostringstream report;
  GaussMixSpec clean = spec;
  clean.shift = ShiftMode::none();
  const double two_eta = 2.0 * spec.eta;
  const double nat_bound = prop1_nat_bound(spec.eta, spec.sigma, spec.d);
  const double rob_exact = prop1_rob_exact(spec.eta, spec.sigma);
  const double nat_exact =
      1.0 - analytic_adv_risk_linear(natural_classifier(spec.eta, spec.d), clean, two_eta);
  Rng mc0(derive_seed(seed, 0), streams::kMonteCarlo);
  Rng mc1(derive_seed(seed, 1), streams::kMonteCarlo);
  const double rob_mc =
      1.0 - monte_carlo_adv_risk(robust_classifier(spec.d), clean, two_eta, mc_n, mc0);
  const double nat_mc =
      1.0 - monte_carlo_adv_risk(natural_classifier(spec.eta, spec.d), clean, two_eta, mc_n, mc1);

  report << "spec: " << spec.describe() << '\n';
  report << fmt("robust accuracy at eps = 2*eta = %.6g on the clean distribution\n", two_eta);
  report << fmt("  f_nat: bound=%.7f exact=%.7f mc=%.7f\n", nat_bound, nat_exact, nat_mc);
  report << fmt("  f_rob: exact=%.7f mc=%.7f\n", rob_exact, rob_mc);

  std::ostringstream csv;
  csv << "eps_d,ratio,train_adv_risk,train_adv_risk_mc,clean_robust_acc,clean_robust_acc_mc\n";
  for (std::size_t i = 0; i < eps_d_list.size(); ++i) {
    const double eps_d = eps_d_list[i];
    const LinearClassifier f = optimal_linear_robust(spec, eps_d);
    const double ratio = nonrobust_ratio(f);
    const double risk = analytic_adv_risk_linear(f, spec, eps_d);
    Rng a(derive_seed(seed, 2 * i + 2), streams::kMonteCarlo);
    Rng b(derive_seed(seed, 2 * i + 3), streams::kMonteCarlo);
    const double risk_mc = monte_carlo_adv_risk(f, spec, eps_d, mc_n, a);
    const double acc = 1.0 - analytic_adv_risk_linear(f, clean, eps_test);
    const double acc_mc = 1.0 - monte_carlo_adv_risk(f, clean, eps_test, mc_n, b);
    report << fmt("eps_d=%.6g: ratio w_nr/w_1=%.6f", eps_d, ratio)
           << fmt(" train adv risk=%.6f (mc %.6f)", risk, risk_mc)
           << fmt(" clean robust acc at %.6g=%.6f (mc %.6f)\n", eps_test, acc, acc_mc);
    csv << fmt("%.6f,%.9f,%.9f,%.9f,%.9f,%.9f\n", eps_d, ratio, risk, risk_mc, acc, acc_mc);
  }
  ctx.out << report.str();
  write_text(dir / "theory.txt", report.str());
  write_text(dir / "theory.csv", csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample / import-idx

void declare_sample(RunConfig& cfg) {
  declare_common(cfg);
  declare_spec(cfg);
  cfg.declare("n", "10000", "number of rows");
  cfg.declare("csv", "false", "also export data.csv");
}

int run_sample(const RunConfig& cfg, Context& ctx) {
  const GaussMixSpec spec = read_spec(cfg);
  const auto n = static_cast<Eigen::Index>(cfg.get_u64("n"));
  const bool csv = cfg.get_bool("csv");
  const auto seed = read_seed(cfg);
  if (n < 1) throw_config("'n' must be positive");
  const fs::path dir = prepare_run_dir(cfg, "sample", ctx);

  Rng rng(seed, streams::kData);
  const Dataset ds = sample(spec, n, rng);
  save(ds, dir / "data.rslb");
  if (csv) export_csv(ds, dir / "data.csv");
  ctx.out << fmt("wrote %lld rows, hash %016llx\n", static_cast<long long>(ds.size()),
                 static_cast<unsigned long long>(dataset_hash(ds)));
  return kExitOk;
}

void declare_import(RunConfig& cfg) {
  declare_common(cfg);
  cfg.declare("images", "", "IDX image file");
  cfg.declare("labels", "", "IDX label file");
  cfg.declare("classes", "3,8", "digit classes to keep, in label order");
  cfg.declare("limit", "0", "maximum rows per class (0 = all)");
  cfg.declare("train_fraction", "1", "fraction written to train.rslb (1 = single data.rslb)");
}

int run_import(const RunConfig& cfg, Context& ctx) {
  const fs::path images = require_path(cfg, "images");
  const fs::path labels = require_path(cfg, "labels");
  const auto classes = cfg.get_int_list("classes");
  const auto limit = static_cast<std::size_t>(cfg.get_u64("limit"));
  const double fraction = cfg.get_double("train_fraction");
  const auto seed = read_seed(cfg);
  if (classes.size() < 2) throw_config("'classes' needs at least two entries");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw_config("'train_fraction' must be in (0, 1]");
  const fs::path dir = prepare_run_dir(cfg, "import-idx", ctx);

  const Dataset all = import_idx(images, labels, classes, limit);
  if (fraction == 1.0) {
    save(all, dir / "data.rslb");
    ctx.out << "wrote " << all.size() << " rows\n";
    return kExitOk;
  }
  Rng rng(seed, streams::kSplit);
  const auto [train, test] = split(all, fraction, rng);
  save(train, dir / "train.rslb");
  save(test, dir / "test.rslb");
  ctx.out << "wrote " << train.size() << " train / " << test.size() << " test rows\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// craft / train / attack / eval

void declare_craft(RunConfig& cfg) {
  declare_common(cfg);
  cfg.declare("data", "", "clean training set (RSLB)");
  cfg.declare("model", "", "crafting model (RSLM); trained from data when empty");
  cfg.declare("kind", "hyp", "poison kind: hyp | adv");
  cfg.declare("eps_a", "0.1", "attack budget");
  cfg.declare("eps_c", "0.25x", "crafting-model training budget");
  cfg.declare("crafting_epochs", "10", "epochs of crafting-model training");
  cfg.declare("steps", "100", "PGD steps");
  cfg.declare("step", "0.1x", "PGD step size");
  declare_arch(cfg);
  declare_hyper(cfg, 0);
}

int run_craft(const RunConfig& cfg, Context& ctx) {
  const fs::path data = require_path(cfg, "data");
  const fs::path model_path = cfg.get("model");
  if (!model_path.empty()) require_input(model_path);
  const double eps_a = cfg.get_double("eps_a");
  if (!(eps_a >= 0.0)) throw_config("'eps_a' must be non-negative");
  CraftConfig craft_cfg = CraftConfig::defaults(eps_a, read_poison_kind(cfg), false);
  craft_cfg.crafting_eps_c = cfg.get_budget("eps_c", eps_a);
  craft_cfg.crafting_epochs = cfg.get_int("crafting_epochs");
  craft_cfg.pgd.steps = cfg.get_int("steps");
  craft_cfg.pgd.step_size = cfg.get_budget("step", eps_a);
  const Architecture arch = read_arch(cfg);
  const auto seed = read_seed(cfg);
  const TrainHyper hyper = read_hyper(cfg, seed);
  craft_cfg.validate();
  const fs::path dir = prepare_run_dir(cfg, "craft", ctx);

  const Dataset ds = load(data);
  craft_cfg.pgd.clamp = ds.bounded;
  Mlp crafting;
  if (!model_path.empty()) {
    crafting = load_model(model_path);
  } else if (eps_a == 0.0) {
    crafting = Mlp(arch.layer_dims(ds));
  } else {
    crafting = train_crafting_model(arch, ds, craft_cfg, hyper).model;
    save_model(crafting, dir / "crafting.rslm");
  }
  const Dataset poisoned = craft(ds, crafting, craft_cfg);
  save(poisoned, dir / "poisoned.rslb");
  ctx.out << fmt("wrote %s poison, hash %016llx\n", to_string(craft_cfg.kind),
                 static_cast<unsigned long long>(dataset_hash(poisoned)));
  return kExitOk;
}

void declare_train(RunConfig& cfg) {
  declare_common(cfg);
  cfg.declare("data", "", "training set (RSLB)");
  cfg.declare("eps_a", "0.1", "reference budget for x-suffixed values");
  cfg.declare("eps_d", "1x", "defense budget (0 = natural training)");
  declare_arch(cfg);
  declare_hyper(cfg, 0);
}

int run_train(const RunConfig& cfg, Context& ctx) {
  const fs::path data = require_path(cfg, "data");
  const double eps_a = cfg.get_double("eps_a");
  const double eps_d = cfg.get_budget("eps_d", eps_a);
  const Architecture arch = read_arch(cfg);
  const TrainHyper hyper = read_hyper(cfg, read_seed(cfg));
  const fs::path dir = prepare_run_dir(cfg, "train", ctx);

  const Dataset ds = load(data);
  const TrainResult result = eps_d == 0.0
                                 ? train_natural(arch, ds, hyper)
                                 : train_pgd_at(arch, ds, hyper, eps_d,
                                                at_inner_attack(eps_d, ds.bounded));
  save_model(result.model, dir / "model.rslm");
  std::ostringstream log;
  log << "epoch,lr,train_loss,holdout_metric\n";
  for (const auto& e : result.log) {
    log << fmt("%d,%.9g,%.9f,%.6f\n", e.epoch, e.lr, e.train_loss, e.holdout_metric);
  }
  write_text(dir / "train_log.csv", log.str());
  ctx.out << fmt("best epoch %d, holdout metric %.4f, model hash %016llx\n", result.best_epoch,
                 result.holdout_metric, static_cast<unsigned long long>(model_hash(result.model)));
  return kExitOk;
}

void declare_attack(RunConfig& cfg) {
  declare_common(cfg);
  cfg.declare("model", "", "model to attack (RSLM)");
  cfg.declare("data", "", "examples to perturb (RSLB)");
  cfg.declare("method", "pgd", "pgd | fgsm");
  cfg.declare("eps", "0.1", "perturbation radius");
  cfg.declare("steps", "20", "PGD steps");
  cfg.declare("step", "0.25x", "PGD step size (x = multiple of eps)");
  cfg.declare("init", "random", "PGD start: random | zero");
  cfg.declare("mode", "max", "max raises the loss, min lowers it");
}

int run_attack(const RunConfig& cfg, Context& ctx) {
  const fs::path model_path = require_path(cfg, "model");
  const fs::path data = require_path(cfg, "data");
  const auto& method = cfg.get("method");
  if (method != "pgd" && method != "fgsm") throw_config("'method' must be pgd or fgsm");
  AttackConfig attack;
  attack.eps = cfg.get_double("eps");
  attack.steps = cfg.get_int("steps");
  attack.step_size = cfg.get_budget("step", attack.eps);
  const auto& init = cfg.get("init");
  if (init != "random" && init != "zero") throw_config("'init' must be random or zero");
  attack.init = init == "random" ? AttackInit::UniformRandom : AttackInit::Zero;
  const auto& mode = cfg.get("mode");
  if (mode != "max" && mode != "min") throw_config("'mode' must be max or min");
  attack.mode = mode == "max" ? AttackMode::Maximize : AttackMode::Minimize;
  attack.validate();
  const auto seed = read_seed(cfg);
  const fs::path dir = prepare_run_dir(cfg, "attack", ctx);

  const Mlp model = load_model(model_path);
  Dataset ds = load(data);
  if (model.input_dim() != ds.dim()) {
    throw_data(DataErrorKind::DimensionMismatch, "model input size does not match the dataset");
  }
  attack.clamp = ds.bounded;
  const auto y = loss_labels(ds, model.default_loss());
  const double before = accuracy(model, ds);
  if (method == "fgsm") {
    ds.features = fgsm_batch(model, ds.features, y, attack.eps, attack.mode, attack.clamp);
  } else {
    Rng rng(seed, streams::kAttack);
    ds.features = pgd_batch(model, ds.features, y, attack, rng);
  }
  ds.provenance += fmt(":attack=%s:eps=%.6g:mode=%s", method.c_str(), attack.eps, mode.c_str());
  ds.validate();
  save(ds, dir / "perturbed.rslb");
  ctx.out << fmt("accuracy %.4f -> %.4f\n", before, accuracy(model, ds));
  return kExitOk;
}

void declare_eval(RunConfig& cfg) {
  declare_common(cfg);
  cfg.declare("model", "", "model to evaluate (RSLM)");
  cfg.declare("data", "", "test set (RSLB)");
  cfg.declare("eps_a", "0.1", "attack radius");
}

int run_eval(const RunConfig& cfg, Context& ctx) {
  const fs::path model_path = require_path(cfg, "model");
  const fs::path data = require_path(cfg, "data");
  const double eps_a = cfg.get_double("eps_a");
  if (!(eps_a >= 0.0)) throw_config("'eps_a' must be non-negative");
  const auto seed = read_seed(cfg);
  const fs::path dir = prepare_run_dir(cfg, "eval", ctx);

  const Mlp model = load_model(model_path);
  const Dataset ds = load(data);
  if (model.input_dim() != ds.dim()) {
    throw_data(DataErrorKind::DimensionMismatch, "model input size does not match the dataset");
  }
  const EvalReport report = evaluate(model, ds, default_eval_attacks(eps_a, ds.bounded), seed);
  std::ostringstream csv;
  csv << "attack,accuracy\n" << fmt("natural,%.6f\n", report.natural_acc);
  ctx.out << fmt("natural %.4f", report.natural_acc);
  for (const auto& [name, acc] : report.robust_acc) {
    csv << fmt("%s,%.6f\n", name.c_str(), acc);
    ctx.out << fmt("  %s %.4f", name.c_str(), acc);
  }
  ctx.out << fmt("  (n=%lld)\n", static_cast<long long>(report.n_eval));
  write_text(dir / "eval.csv", csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep / reproduce

void declare_sweep(RunConfig& cfg) {
  declare_common(cfg);
  cfg.declare("train", "", "training sets as name=path[,name=path...]");
  cfg.declare("test", "", "test set (RSLB)");
  cfg.declare("eps_a", "0.1", "attack budget");
  cfg.declare("eps_d_list", "1.0x", "defense budgets (absolute or multiples of eps_a)");
  declare_arch(cfg);
  declare_hyper(cfg, 0);
}

int run_sweep(const RunConfig& cfg, Context& ctx) {
  std::vector<std::pair<std::string, fs::path>> sources;
  for (const auto& item : cfg.get_list("train")) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw_config("'train' entries look like name=path");
    }
    const std::string name = item.substr(0, eq);
    for (const auto& [seen, path] : sources) {
      if (seen == name) throw_config("duplicate training set name '" + name + "'");
    }
    sources.emplace_back(name, require_input(item.substr(eq + 1)));
  }
  if (sources.empty()) throw_config("'train' is required");
  const fs::path test_path = require_path(cfg, "test");
  SweepConfig sweep;
  sweep.eps_a = cfg.get_double("eps_a");
  if (!(sweep.eps_a >= 0.0)) throw_config("'eps_a' must be non-negative");
  sweep.eps_d_list = cfg.get_budget_list("eps_d_list", sweep.eps_a);
  if (sweep.eps_d_list.empty()) throw_config("'eps_d_list' is empty");
  sweep.arch = read_arch(cfg);
  sweep.master_seed = read_seed(cfg);
  sweep.hyper = read_hyper(cfg, sweep.master_seed);
  const fs::path dir = prepare_run_dir(cfg, "sweep", ctx);

  std::vector<SweepInput> inputs;
  for (const auto& [name, path] : sources) inputs.push_back({name, load(path)});
  const Dataset test = load(test_path);
  const SweepResult result = budget_sweep(inputs, test, sweep);
  std::ofstream csv(dir / "sweep.csv", std::ios::binary);
  write_sweep_csv(result, csv);
  if (!csv) throw_data(DataErrorKind::Io, "cannot write sweep.csv");
  write_sweep_csv(result, ctx.out);
  for (const auto& row : result.rows) {
    if (row.error) ctx.err << "row " << row.poison << " failed: " << *row.error << '\n';
  }
  return kExitOk;
}

void declare_reproduce(RunConfig& cfg) {
  declare_common(cfg);
  const MlpExperimentConfig defaults;
  cfg.declare("mc_n", "1000000", "gauss: Monte Carlo sample size");
  cfg.declare("images", std::string(STABLAB_DATA_DIR) + "/mnist/images-idx3-ubyte",
              "mlp: IDX image file");
  cfg.declare("labels", std::string(STABLAB_DATA_DIR) + "/mnist/labels-idx1-ubyte",
              "mlp: IDX label file");
  cfg.declare("classes", "3,8", "mlp: two digit classes");
  cfg.declare("limit", "0", "mlp: maximum rows per class (0 = all)");
  cfg.declare("train_fraction", "0.8", "mlp: train share of the imported rows");
  cfg.declare("eps_a", fmt("%.6g", defaults.eps_a), "mlp: attack budget");
  cfg.declare("multipliers", "1.25,1.5,1.75,2.0", "mlp: recovery budgets as multiples of eps_a");
  cfg.declare("min_clean_robust", "0.60", "mlp: clean PGD-20 robust-accuracy floor");
  cfg.declare("min_gap", "0.05", "mlp: minimum hypocritical damage");
  declare_arch(cfg);
  declare_hyper(cfg, defaults.hyper.warmup_epochs);
}

int run_reproduce(const RunConfig& cfg, Context& ctx) {
  const auto seed = read_seed(cfg);
  std::vector<Check> checks;
  std::ostringstream report;
  const auto emit = [&](const std::vector<Check>& list, const fs::path& dir) {
    bool ok = true;
    for (const auto& c : list) {
      report << (c.passed ? "PASS " : "FAIL ") << c.name << " | " << c.detail << '\n';
      ok = ok && c.passed;
    }
    report << (ok ? "ALL CHECKS PASSED\n" : "SOME CHECKS FAILED\n");
    ctx.out << report.str();
    write_text(dir / "report.txt", report.str());
    return ok ? kExitOk : kExitAcceptance;
  };

  if (ctx.scenario == "gauss") {
    const auto mc_n = static_cast<Eigen::Index>(cfg.get_u64("mc_n"));
    if (mc_n < 1) throw_config("'mc_n' must be positive");
    const fs::path dir = prepare_run_dir(cfg, "reproduce gauss", ctx);
    return emit(run_gauss_checks(seed, mc_n), dir);
  }

  MlpExperimentConfig exp;
  exp.images = require_path(cfg, "images");
  exp.labels = require_path(cfg, "labels");
  exp.classes = cfg.get_int_list("classes");
  if (exp.classes.size() != 2) throw_config("'classes' needs exactly two entries");
  exp.per_class_limit = static_cast<std::size_t>(cfg.get_u64("limit"));
  exp.train_fraction = cfg.get_double("train_fraction");
  if (!(exp.train_fraction > 0.0 && exp.train_fraction < 1.0)) {
    throw_config("'train_fraction' must be in (0, 1)");
  }
  exp.eps_a = cfg.get_double("eps_a");
  if (!(exp.eps_a > 0.0)) throw_config("'eps_a' must be positive");
  exp.recovery_multipliers.clear();
  for (const auto& m : cfg.get_list("multipliers")) exp.recovery_multipliers.push_back(parse_budget(m, 1.0));
  exp.arch = read_arch(cfg);
  exp.master_seed = seed;
  exp.hyper = read_hyper(cfg, seed);
  const double min_clean = cfg.get_double("min_clean_robust");
  const double min_gap = cfg.get_double("min_gap");
  const fs::path dir = prepare_run_dir(cfg, "reproduce mlp", ctx);

  const MlpExperimentReport rep = run_mlp_experiment(exp, &ctx.out);
  for (const auto& [name, result] : {std::pair{"clean", &rep.clean},
                                     std::pair{"hyp", &rep.hypocritical},
                                     std::pair{"adv", &rep.adversarial}}) {
    std::ofstream csv(dir / (std::string("sweep_") + name + ".csv"), std::ios::binary);
    write_sweep_csv(*result, csv);
  }
  report << fmt("clean pgd20 %.4f, hypocritical %.4f, adversarial %.4f\n", rep.clean_pgd20,
                rep.hyp_pgd20, rep.adv_pgd20);
  report << fmt("gap %.4f, recovered %.4f at eps_d=%.4f\n", rep.gap(), rep.recovered(),
                rep.best_eps_d);
  std::ostringstream hashes;
  for (auto h : rep.artifact_hashes) {
    hashes << fmt("%016llx\n", static_cast<unsigned long long>(h));
  }
  write_text(dir / "artifact_hashes.txt", hashes.str());
  return emit(mlp_experiment_checks(rep, exp.eps_a, min_clean, min_gap), dir);
}

// ---------------------------------------------------------------------------

struct Command {
  const char* name;
  const char* summary;
  void (*declare)(RunConfig&);
  int (*run)(const RunConfig&, Context&);
};

constexpr Command kCommands[] = {
    {"theory", "closed-form and Monte Carlo results on the Gaussian mixture", declare_theory,
     run_theory},
    {"sample", "draw a Gaussian-mixture dataset", declare_sample, run_sample},
    {"import-idx", "import a class subset of an IDX image dataset", declare_import, run_import},
    {"craft", "craft hypocritical or adversarial training perturbations", declare_craft,
     run_craft},
    {"train", "natural or PGD adversarial training", declare_train, run_train},
    {"attack", "perturb a dataset against a model", declare_attack, run_attack},
    {"eval", "natural and robust accuracy of a model", declare_eval, run_eval},
    {"sweep", "adversarial training over defense budgets and training sets", declare_sweep,
     run_sweep},
    {"reproduce", "run the verification suite: gauss | mlp", declare_reproduce, run_reproduce},
};

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Data:
      return kExitData;
    case ErrorCategory::Training:
      return kExitTraining;
    case ErrorCategory::Domain:
    case ErrorCategory::Config:
      break;
  }
  return kExitConfig;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"stability attacks on adversarial training"};
  app.name("stablab");
  app.require_subcommand(1);

  struct Slot {
    const Command* command;
    CLI::App* app;
    RunConfig cfg;
    std::string config_file;
    std::map<std::string, std::pair<CLI::Option*, std::string>> overrides;
    std::string scenario;
  };
  std::vector<std::unique_ptr<Slot>> slots;
  for (const auto& command : kCommands) {
    auto slot = std::make_unique<Slot>();
    slot->command = &command;
    slot->app = app.add_subcommand(command.name, command.summary);
    command.declare(slot->cfg);
    slot->app->add_option("--config", slot->config_file, "key = value file");
    for (const auto& key : slot->cfg.keys()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      auto& [opt, value] = slot->overrides[key];
      opt = slot->app->add_option("--" + flag, value,
                                  slot->cfg.help(key) + " [" + slot->cfg.get(key) + "]");
    }
    if (std::string(command.name) == "reproduce") {
      slot->app->add_option("scenario", slot->scenario, "gauss | mlp")
          ->required()
          ->check(CLI::IsMember({"gauss", "mlp"}));
    }
    slots.push_back(std::move(slot));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (auto& slot : slots) {
    if (!slot->app->parsed()) continue;
    Context ctx{out, err, slot->scenario};
    try {
      if (!slot->config_file.empty()) slot->cfg.load_file(slot->config_file);
      for (const auto& [key, entry] : slot->overrides) {
        if (entry.first->count() > 0) slot->cfg.set(key, entry.second);
      }
      return slot->command->run(slot->cfg, ctx);
    } catch (const Error& e) {
      err << "stablab " << slot->command->name << ": " << e.what() << '\n';
      return exit_code_for(e);
    } catch (const fs::filesystem_error& e) {
      err << "stablab " << slot->command->name << ": " << e.what() << '\n';
      return kExitData;
    }
  }
  return kExitConfig;
}

}  // namespace stablab
