#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hesim/errors.hpp"
#include "hesim/matvec.hpp"
#include "hesim/modelio.hpp"
#include "hesim/netcompile.hpp"

namespace {

using namespace hesim;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitCapacity = 2;
constexpr int kExitVerify = 3;

struct RunConfig {
  std::string model;
  std::string weights_path;
  std::string input_path;
  Eigen::Index n_slots = 0;  // 0 = keep model default
  std::string policy;
  std::string report_path;
  std::uint64_t seed = 0;
};

KernelPolicy parse_policy_flag(const std::string& s) {
  if (s == "hs") return KernelPolicy::HS;
  if (s == "lola-dense") return KernelPolicy::LoLaDense;
  if (s == "lola-stacked") return KernelPolicy::LoLaStacked;
  throw CLI::ValidationError("--policy", "unknown policy " + s);
}

ModelSpec configured_model(const RunConfig& cfg) {
  ModelSpec model = resolve_model(cfg.model);
  if (cfg.n_slots > 0) model.n_slots = cfg.n_slots;
  if (!cfg.policy.empty()) model.default_policy = parse_policy_flag(cfg.policy);
  return model;
}

ExecResult run_model(const RunConfig& cfg, const ModelSpec& model) {
  const ModelWeights weights =
      cfg.weights_path.empty() ? random_weights(model, cfg.seed)
                               : load_weights(model, cfg.weights_path);
  const Tensor3 input = cfg.input_path.empty()
                            ? random_input(model, cfg.seed)
                            : load_input(model, cfg.input_path);
  LoweredProgram prog = lower(model);
  MeterContext ctx;
  return execute(prog, weights, input, ctx);
}

std::string cell(std::int64_t v) { return v == 0 ? "-" : std::to_string(v); }

void print_table(const std::string& title, const OpReport& report) {
  std::printf("%s\n", title.c_str());
  std::printf("%-16s %8s %8s %8s %8s %8s %8s\n", "Layer", "HOPs", "AddPC",
              "AddCC", "MulPC", "MulCC", "Rot");
  auto line = [](const std::string& label, const OpTally& t, bool dash) {
    auto c = [&](std::int64_t v) {
      return dash ? cell(v) : std::to_string(v);
    };
    std::printf("%-16s %8s %8s %8s %8s %8s %8s\n", label.c_str(),
                std::to_string(t.total()).c_str(), c(t.add_pc).c_str(),
                c(t.add_cc).c_str(), c(t.mul_pc).c_str(), c(t.mul_cc).c_str(),
                c(t.rot).c_str());
  };
  for (const auto& [label, tally] : report.rows) line(label, tally, true);
  line("Total", report.total, false);
}

void emit_report(const RunConfig& cfg, const OpReport& report) {
  if (cfg.report_path.empty()) {
    std::fputs(report.to_csv().c_str(), stdout);
    return;
  }
  std::ofstream out(cfg.report_path, std::ios::binary);
  if (!out) throw IoError("cannot open " + cfg.report_path + " for writing");
  out << report.to_csv();
}

int cmd_run(const RunConfig& cfg) {
  const ModelSpec model = configured_model(cfg);
  const ExecResult res = run_model(cfg, model);
  for (Eigen::Index i = 0; i < res.logits.size(); ++i) {
    std::printf("logit,%lld,%.9g\n", static_cast<long long>(i),
                res.logits[i]);
  }
  emit_report(cfg, res.report);
  return kExitOk;
}

int cmd_count(const RunConfig& cfg) {
  const ModelSpec model = configured_model(cfg);
  const ExecResult res = run_model(cfg, model);
  print_table("model: " + model.name, res.report);
  if (model.name == "cryptonets-hs" || model.name == "me") {
    std::printf("\n");
    print_table("reference: lola-mnist (published pipeline)",
                lola_mnist_reference());
  }
  if (!cfg.report_path.empty()) emit_report(cfg, res.report);
  return kExitOk;
}

struct SweepConfig {
  Eigen::Index n_min = 16, n_max = 4096;
  Eigen::Index m_min = 4, m_max = 512;
  std::vector<Eigen::Index> slot_sizes = {4096, 16384};
  std::vector<std::string> methods = {"hs", "lola-dense", "lola-stacked"};
  std::string out_path;
  bool measure = false;
  bool worked = false;
  std::uint64_t seed = 0;
};

MatvecCost measure_kernel(const std::string& method, Eigen::Index m,
                          Eigen::Index n, Eigen::Index N,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(m) << 32) ^
                      static_cast<std::uint64_t>(n) ^
                      (static_cast<std::uint64_t>(N) << 16));
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Eigen::MatrixXd A(m, n);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < n; ++c) A(r, c) = dist(rng);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = dist(rng);
  const SlotVector v = pack(x, N, Kind::Ciphertext);
  MeterContext ctx;
  if (method == "hs") {
    hs_matvec(A, v, ctx);
  } else if (method == "lola-dense") {
    lola_dense_matvec(A, v, ctx);
  } else {
    lola_stacked_matvec(A, v, ctx);
  }
  return {ctx.tally.rot, ctx.tally.mul_pc, ctx.tally.add_cc};
}

int cmd_sweep(const SweepConfig& cfg) {
  std::ostringstream os;
  if (cfg.worked) {
    const WorkedExample ex = worked_example();
    os << "method,n,m,N,rotations,multiplications\n";
    auto row = [&](const char* method, const MatvecCost& c) {
      os << method << "," << ex.n << "," << ex.m << "," << ex.n_slots << ","
         << c.rotations << "," << c.multiplications << "\n";
    };
    row("hs", ex.hs);
    row("lola-dense", ex.lola_dense);
    row("lola-stacked", ex.lola_stacked);
    os << "# prose reference: hs rotations " << ex.prose_hs_rotations
       << ", lola-stacked rotations " << ex.prose_stacked_rotations
       << ", lola-stacked multiplications "
       << ex.prose_stacked_multiplications << "\n";
  } else {
    os << "method,n,m,N,rotations,multiplications";
    if (cfg.measure) os << ",measured_rotations,measured_multiplications";
    os << "\n";
    for (const std::string& method : cfg.methods) {
      for (Eigen::Index n = cfg.n_min; n <= cfg.n_max; n *= 2) {
        for (Eigen::Index m = cfg.m_min; m <= cfg.m_max; m *= 2) {
          for (Eigen::Index N : cfg.slot_sizes) {
            if (n > N || m > N) continue;
            MatvecCost c;
            if (method == "hs") {
              c = predict_hs(m, n, N);
            } else if (method == "lola-dense") {
              c = predict_lola_dense(m, n);
            } else if (method == "lola-stacked") {
              c = predict_lola_stacked(m, n, N);
            } else {
              throw CLI::ValidationError("--methods",
                                         "unknown method " + method);
            }
            os << method << "," << n << "," << m << "," << N << ","
               << c.rotations << "," << c.multiplications;
            if (cfg.measure) {
              const MatvecCost meas = measure_kernel(method, m, n, N,
                                                     cfg.seed);
              os << "," << meas.rotations << "," << meas.multiplications;
            }
            os << "\n";
          }
        }
      }
    }
  }
  if (cfg.out_path.empty()) {
    std::fputs(os.str().c_str(), stdout);
  } else {
    std::ofstream out(cfg.out_path, std::ios::binary);
    if (!out) throw IoError("cannot open " + cfg.out_path + " for writing");
    out << os.str();
  }
  return kExitOk;
}

struct VerifyConfig {
  std::uint64_t seed = 1;
  Eigen::Index cases = 500;
  bool corrupt_kernel = false;  // negative-control hook
};

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

int cmd_verify(const VerifyConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double max_err = 0.0;
  bool ok = true;

  // Kernel-vs-oracle over random shapes.
  for (Eigen::Index c = 0; c < cfg.cases; ++c) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 48);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 200);
    Eigen::Index N = next_power_of_two(std::max(m + n - 1, Eigen::Index{2}));
    if (rng() % 2) N *= 2;
    Eigen::MatrixXd A(m, n);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index j = 0; j < n; ++j) A(r, j) = dist(rng);
    Eigen::VectorXd x(n);
    for (Eigen::Index j = 0; j < n; ++j) x[j] = dist(rng);
    Eigen::VectorXd want = A * x;
    if (cfg.corrupt_kernel) want[0] += 1e-3;
    const SlotVector v = pack(x, N, Kind::Ciphertext);
    MeterContext ctx;
    const SlotVector hs = hs_matvec(A, v, ctx);
    for (Eigen::Index r = 0; r < m; ++r) {
      max_err = std::max(max_err, rel_err(hs[r], want[r]));
    }
    const auto rows = lola_dense_matvec(A, v, ctx);
    for (Eigen::Index r = 0; r < m; ++r) {
      max_err = std::max(max_err, rel_err(rows[r][0], want[r]));
    }
    const InterleavedResult st = lola_stacked_matvec(A, v, ctx);
    for (Eigen::Index r = 0; r < m; ++r) {
      max_err = std::max(max_err, rel_err(st.ct[st.slot_of_row[r]], want[r]));
    }
    if (max_err >= 1e-9) ok = false;
  }
  std::printf("kernel-vs-oracle: %lld cases, max relative error %.3g\n",
              static_cast<long long>(cfg.cases), max_err);

  // End-to-end: lowered (fused) execution vs the unfused plaintext
  // reference, 20 weight draws per builtin.
  double e2e_err = 0.0;
  if (cfg.cases > 0) {
    for (const char* name : {"cryptonets-hs", "me", "ce"}) {
      const ModelSpec model = *builtin_model(name);
      const LoweredProgram prog = lower(model);
      for (std::uint64_t draw = 0; draw < 20; ++draw) {
        const std::uint64_t seed = cfg.seed * 1000 + draw;
        const ModelWeights w = random_weights(model, seed);
        const Tensor3 in = random_input(model, seed);
        MeterContext ctx;
        const ExecResult res = execute(prog, w, in, ctx);
        const Eigen::VectorXd want = ref_forward(model, w, in);
        for (Eigen::Index i = 0; i < want.size(); ++i) {
          e2e_err = std::max(e2e_err, rel_err(res.logits[i], want[i]));
        }
      }
      std::printf("end-to-end %s: 20 draws, max relative error %.3g\n", name,
                  e2e_err);
    }
    if (e2e_err >= 1e-7) ok = false;
  }

  std::printf("max observed error: %.3g\n", std::max(max_err, e2e_err));
  std::printf("%s\n", ok ? "verify: PASS" : "verify: FAIL");
  return ok ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIMD slot-vector CNN lowering engine with operation metering"};
  app.require_subcommand(1);

  RunConfig rc;
  auto add_run_flags = [&rc](CLI::App* cmd) {
    cmd->add_option("--model", rc.model,
                    "builtin name (cryptonets-hs, me, ce) or model JSON path")
        ->required();
    cmd->add_option("--weights", rc.weights_path,
                    "float32 weights file (default: seeded random)");
    cmd->add_option("--input", rc.input_path,
                    "float32 input file (default: seeded random)");
    cmd->add_option("--n-slots", rc.n_slots, "override ciphertext slot count");
    cmd->add_option("--policy", rc.policy,
                    "kernel override: hs, lola-dense, lola-stacked");
    cmd->add_option("--report", rc.report_path, "write the op-report CSV here");
    cmd->add_option("--seed", rc.seed, "seed for generated weights/input");
  };
  CLI::App* run = app.add_subcommand("run", "execute a model and report ops");
  add_run_flags(run);
  CLI::App* count =
      app.add_subcommand("count", "print the per-layer operation table");
  add_run_flags(count);

  SweepConfig sc;
  CLI::App* sweep =
      app.add_subcommand("sweep", "matrix-vector kernel cost grid");
  sweep->add_option("--n-min", sc.n_min, "smallest input width (power of two)");
  sweep->add_option("--n-max", sc.n_max, "largest input width");
  sweep->add_option("--m-min", sc.m_min, "smallest output height");
  sweep->add_option("--m-max", sc.m_max, "largest output height");
  sweep->add_option("--n-slots", sc.slot_sizes, "slot counts to sweep");
  sweep->add_option("--methods", sc.methods, "subset of hs, lola-dense, lola-stacked");
  sweep->add_option("--out", sc.out_path, "write CSV here (default stdout)");
  sweep->add_flag("--measure", sc.measure,
                  "also run the kernels and report measured counts");
  sweep->add_flag("--worked-example", sc.worked,
                  "emit the m=64, n=4096, N=16384 example instead of a grid");
  sweep->add_option("--seed", sc.seed, "seed for measured matrices");

  VerifyConfig vc;
  CLI::App* verify =
      app.add_subcommand("verify", "randomized equivalence suites");
  verify->add_option("--seed", vc.seed, "base seed");
  verify->add_option("--cases", vc.cases, "kernel-vs-oracle case count");
  verify
      ->add_flag("--corrupt-kernel", vc.corrupt_kernel,
                 "negative control: perturb expectations to force failure")
      ->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(rc);
    if (count->parsed()) return cmd_count(rc);
    if (sweep->parsed()) return cmd_sweep(sc);
    return cmd_verify(vc);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCapacity;
  }
  return kExitOk;
}
