#include "gradsurge/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "gradsurge/bilevel.hpp"
#include "gradsurge/combiners.hpp"
#include "gradsurge/kernels.hpp"
#include "gradsurge/losses.hpp"
#include "gradsurge/metrics.hpp"
#include "gradsurge/quadratic.hpp"
#include "gradsurge/rng.hpp"

namespace gradsurge {

namespace {

double rel_err(double got, double want) {
  const double denom = std::max({std::fabs(got), std::fabs(want), 1e-12});
  return std::fabs(got - want) / denom;
}

double vec_rel_err(const FlatVec& got, const FlatVec& want) {
  FlatVec diff = got;
  kernels::axpy(-1.0, want, diff);
  return kernels::nrm2(diff) / std::max(kernels::nrm2(want), 1e-12);
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double away_from_zero = 0.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) {
    do {
      v = rng.uniform(-2.0, 2.0);
    } while (std::fabs(v) < away_from_zero);
  }
  return t;
}

// central finite difference of a scalar function of flat input data
double max_fd_gap(const std::function<double(const std::vector<Tensor>&)>& f,
                  std::vector<Tensor> inputs, const std::vector<FlatVec>& analytic) {
  double worst = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (analytic[t].empty()) continue;  // not differentiated w.r.t. this input
    for (std::size_t i = 0; i < inputs[t].size(); ++i) {
      const double x0 = inputs[t].data[i];
      const double h = 1e-6 * (1.0 + std::fabs(x0));
      inputs[t].data[i] = x0 + h;
      const double fp = f(inputs);
      inputs[t].data[i] = x0 - h;
      const double fm = f(inputs);
      inputs[t].data[i] = x0;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = analytic[t][i];
      if (std::max(std::fabs(fd), std::fabs(an)) > 1e-6) worst = std::max(worst, rel_err(an, fd));
    }
  }
  return worst;
}

struct OpCase {
  std::string name;
  // builds the scalar under test and returns leaf ids of differentiable inputs
  std::function<int(Tape&, const std::vector<Tensor>&, std::vector<int>&)> build;
  std::function<std::vector<Tensor>(Rng&)> gen;
};

std::vector<OpCase> op_cases() {
  std::vector<OpCase> cases;
  auto add_case = [&cases](std::string name, auto gen, auto build) {
    cases.push_back({std::move(name), build, gen});
  };

  add_case(
      "matmul",
      [](Rng& rng) {
        return std::vector<Tensor>{random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)};
      },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true), t.leaf(in[1], true)};
        return t.mean_all(t.matmul(leaves[0], leaves[1]));
      });
  add_case(
      "add",
      [](Rng& rng) {
        return std::vector<Tensor>{random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)};
      },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true), t.leaf(in[1], true)};
        return t.mean_all(t.add(leaves[0], leaves[1]));
      });
  add_case(
      "add-broadcast",
      [](Rng& rng) {
        return std::vector<Tensor>{random_tensor({3, 4}, rng), random_tensor({4}, rng)};
      },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true), t.leaf(in[1], true)};
        return t.mean_all(t.add(leaves[0], leaves[1]));
      });
  add_case(
      "mul",
      [](Rng& rng) {
        return std::vector<Tensor>{random_tensor({2, 5}, rng), random_tensor({2, 5}, rng)};
      },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true), t.leaf(in[1], true)};
        return t.mean_all(t.mul(leaves[0], leaves[1]));
      });
  add_case(
      "scalar-mul",
      [](Rng& rng) { return std::vector<Tensor>{random_tensor({4, 3}, rng)}; },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true)};
        return t.mean_all(t.scalar_mul(leaves[0], -1.7));
      });
  add_case(
      "relu",
      [](Rng& rng) { return std::vector<Tensor>{random_tensor({3, 3}, rng, 0.05)}; },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true)};
        return t.mean_all(t.relu(leaves[0]));
      });
  add_case(
      "sigmoid",
      [](Rng& rng) { return std::vector<Tensor>{random_tensor({3, 3}, rng)}; },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true)};
        return t.mean_all(t.sigmoid(leaves[0]));
      });
  add_case(
      "mean-reduce",
      [](Rng& rng) { return std::vector<Tensor>{random_tensor({4, 3}, rng)}; },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true)};
        // exercise both the row reduction and the full reduction
        return t.sum_all(t.mean_rows(leaves[0]));
      });
  add_case(
      "sum-reduce",
      [](Rng& rng) { return std::vector<Tensor>{random_tensor({4, 3}, rng)}; },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true)};
        return t.mean_all(t.sum_cols(leaves[0]));
      });
  add_case(
      "concat",
      [](Rng& rng) {
        return std::vector<Tensor>{random_tensor({2, 3}, rng), random_tensor({3, 3}, rng)};
      },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true), t.leaf(in[1], true)};
        return t.mean_all(t.concat_rows({leaves[0], leaves[1]}));
      });
  add_case(
      "index-gather",
      [](Rng& rng) { return std::vector<Tensor>{random_tensor({5, 3}, rng)}; },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true)};
        return t.mean_all(t.gather_rows(leaves[0], {0, 2, 2, 4}));
      });
  add_case(
      "transpose",
      [](Rng& rng) { return std::vector<Tensor>{random_tensor({2, 4}, rng)}; },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true)};
        return t.mean_all(t.matmul(t.transpose(leaves[0]), leaves[0]));
      });
  add_case(
      "binary-cross-entropy-with-logits",
      [](Rng& rng) {
        Tensor labels = Tensor::zeros({3, 2});
        for (double& v : labels.data) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
        return std::vector<Tensor>{random_tensor({3, 2}, rng), labels};
      },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true), -1};
        leaves.resize(1);
        return t.mean_all(t.bce_with_logits(leaves[0], t.constant(in[1])));
      });
  add_case(
      "softmax-cross-entropy",
      [](Rng& rng) {
        Tensor labels = Tensor::zeros({4});
        for (double& v : labels.data) v = rng.uniform_int(0, 2);
        return std::vector<Tensor>{random_tensor({4, 3}, rng), labels};
      },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true)};
        std::vector<int> y;
        for (double v : in[1].data) y.push_back(static_cast<int>(v));
        return t.mean_all(t.softmax_cross_entropy(leaves[0], y));
      });
  add_case(
      "mean-squared-error",
      [](Rng& rng) {
        return std::vector<Tensor>{random_tensor({3, 2}, rng), random_tensor({3, 2}, rng)};
      },
      [](Tape& t, const std::vector<Tensor>& in, std::vector<int>& leaves) {
        leaves = {t.leaf(in[0], true), t.leaf(in[1], true)};
        return t.mean_all(t.mse(leaves[0], leaves[1]));
      });
  return cases;
}

// one FD sweep of a single op case; returns worst relative error
double run_op_case(const OpCase& c, Rng& rng) {
  std::vector<Tensor> inputs = c.gen(rng);
  std::vector<int> leaves;
  Tape tape;
  const int loss = c.build(tape, inputs, leaves);
  tape.backward(loss);
  std::vector<FlatVec> analytic(inputs.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) analytic[i] = tape.grad(leaves[i]).data;

  auto f = [&](const std::vector<Tensor>& in) {
    Tape t2;
    std::vector<int> l2;
    return t2.scalar_val(c.build(t2, in, l2));
  };
  return max_fd_gap(f, inputs, analytic);
}

SyntheticGraph random_graph(Rng& rng, int n_min, int n_max, double p) {
  SyntheticGraph g;
  const int n = rng.uniform_int(n_min, n_max);
  g.node_types.resize(n);
  for (int& t : g.node_types) t = rng.uniform_int(0, kNodeTypes - 1);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) g.edges.emplace_back(u, v);
  g.motifs[0] = has_triangle(g) ? 1 : 0;
  g.motifs[1] = has_chordless_four_cycle(g) ? 1 : 0;
  g.target_label = (g.motifs[0] != 0) != majority_type_zero(g) ? 1 : 0;
  return g;
}

// independent motif detection: subsets against the adjacency matrix
bool brute_triangle(const SyntheticGraph& g) {
  const int n = g.n_nodes();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        if (g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c)) return true;
  return false;
}

bool brute_chordless_c4(const SyntheticGraph& g) {
  const int n = g.n_nodes();
  const std::array<std::array<int, 4>, 3> cycles{{{0, 1, 2, 3}, {0, 1, 3, 2}, {0, 2, 1, 3}}};
  std::array<int, 4> v;
  for (v[0] = 0; v[0] < n; ++v[0])
    for (v[1] = v[0] + 1; v[1] < n; ++v[1])
      for (v[2] = v[1] + 1; v[2] < n; ++v[2])
        for (v[3] = v[2] + 1; v[3] < n; ++v[3])
          for (const auto& c : cycles) {
            const int a = v[c[0]], b = v[c[1]], x = v[c[2]], d = v[c[3]];
            const bool cycle = g.has_edge(a, b) && g.has_edge(b, x) && g.has_edge(x, d) &&
                               g.has_edge(d, a);
            const bool chord = g.has_edge(a, x) || g.has_edge(b, d);
            if (cycle && !chord) return true;
          }
  return false;
}

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j])
        wins += 1.0;
      else if (s[i] == s[j])
        wins += 0.5;
    }
  return wins / static_cast<double>(pairs);
}

Model tiny_model(std::uint64_t seed) {
  EncoderConfig cfg;
  cfg.variant = EncoderVariant::MessagePassing;
  cfg.layers = 2;
  cfg.hidden = 6;
  return init_model(cfg, {TaskId::Am, TaskId::Ep, TaskId::Ig, TaskId::Mp}, seed);
}

}  // namespace

VerifyReport verify(const VerifyOptions& opts) {
  VerifyReport report;
  auto add = [&](std::string module, std::string property, bool pass, double observed,
                 double tolerance, std::string detail = "") {
    report.checks.push_back(
        {std::move(module), std::move(property), pass, observed, tolerance, std::move(detail)});
  };

  // ---- autodiff: per-op finite differences -------------------------------
  {
    Rng rng(derive_seed(opts.seed, 1));
    const double tol = 1e-4 * opts.tol_scale;
    for (const OpCase& c : op_cases()) {
      double worst = 0.0;
      for (int i = 0; i < 20; ++i) worst = std::max(worst, run_op_case(c, rng));
      add("autodiff", "fd-gradient/" + c.name, worst < tol, worst, tol);
    }
  }

  // ---- autodiff: hvp on quadratic forms ----------------------------------
  {
    Rng rng(derive_seed(opts.seed, 2));
    const double tol = 1e-6 * opts.tol_scale;
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
      const int dim = rng.uniform_int(2, 8);
      QuadraticBilevelProblem p =
          QuadraticBilevelProblem::random(dim, 0, rng.next_u64(), 0.5, 100.0);
      FlatVec theta(dim), v(dim);
      for (double& x : theta) x = rng.uniform(-1.0, 1.0);
      for (double& x : v) x = rng.uniform(-1.0, 1.0);
      FlatVec got = hvp(p.total_grad_fn({}), theta, v);
      Eigen::VectorXd ev = Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
      Eigen::VectorXd want = p.a * ev;
      FlatVec wantv(want.data(), want.data() + dim);
      worst = std::max(worst, vec_rel_err(got, wantv));
    }
    add("autodiff", "hvp-quadratic", worst < tol, worst, tol);
  }

  // ---- models: full-loss finite differences ------------------------------
  {
    Rng rng(derive_seed(opts.seed, 3));
    const double tol = 1e-4 * opts.tol_scale;
    for (TaskId task : {TaskId::Target, TaskId::Am, TaskId::Ep, TaskId::Ig, TaskId::Mp}) {
      double worst = 0.0;
      for (int inst = 0; inst < 2; ++inst) {
        Model m = tiny_model(rng.next_u64());
        std::vector<SyntheticGraph> gs;
        for (int i = 0; i < 3; ++i) gs.push_back(random_graph(rng, 4, 7, 0.35));
        Batch batch = make_batch(gs);
        const std::uint64_t seed = rng.next_u64();
        FlatVec analytic = eval_loss(m, task, batch, {}, seed, true).shared_grad;
        FlatVec theta = flatten_shared(m);
        for (std::size_t i = 0; i < theta.size(); ++i) {
          const double x0 = theta[i];
          const double h = 1e-5 * (1.0 + std::fabs(x0));
          Model probe = m;
          theta[i] = x0 + h;
          set_shared(probe, theta);
          const double fp = eval_loss(probe, task, batch, {}, seed, false).value;
          theta[i] = x0 - h;
          set_shared(probe, theta);
          const double fm = eval_loss(probe, task, batch, {}, seed, false).value;
          theta[i] = x0;
          const double fd = (fp - fm) / (2.0 * h);
          if (std::max(std::fabs(fd), std::fabs(analytic[i])) > 1e-6)
            worst = std::max(worst, rel_err(analytic[i], fd));
        }
      }
      add("models", "fd-gradient/loss-" + task_name(task), worst < tol, worst, tol);
    }
  }

  // ---- combiners: projection orthogonality -------------------------------
  {
    Rng rng(derive_seed(opts.seed, 4));
    bool pass = true;
    double worst_ratio = 0.0;
    for (int dim : {2, 10, 1000}) {
      for (int i = 0; i < 1000; ++i) {
        FlatVec ga(dim), gt(dim);
        for (double& x : ga) x = rng.uniform(-1.0, 1.0);
        for (double& x : gt) x = rng.uniform(-1.0, 1.0);
        FlatVec proj = pcgrad_project(ga, gt);
        const double bound = 1e-10 * kernels::nrm2(ga) * kernels::nrm2(gt);
        const double d = std::fabs(kernels::dot(proj, gt));
        worst_ratio = std::max(worst_ratio, bound > 0 ? d / bound : 0.0);
        pass = pass && d <= bound;
      }
    }
    add("combiners", "projection-orthogonality", pass, worst_ratio, 1.0);
  }

  // ---- combiners: reduction identities -----------------------------------
  {
    Rng rng(derive_seed(opts.seed, 5));
    double worst = 0.0;
    bool k0_ok = true;
    for (int i = 0; i < 500; ++i) {
      const int dim = rng.uniform_int(2, 30);
      const int k = rng.uniform_int(1, 4);
      GradientBundle b;
      b.target.resize(dim);
      for (double& x : b.target) x = rng.uniform(-1.0, 1.0);
      for (int t = 0; t < k; ++t) {
        FlatVec g(dim);
        for (double& x : g) x = rng.uniform(-1.0, 1.0);
        b.aux.push_back(std::move(g));
      }
      RotationScalars kap{0.0, std::vector<double>(k, 1.0)};
      FlatVec rc = combine_rcgrad(b, kap);
      // expected vector rebuilt branch by branch (kappa_t = 0 leaves the
      // target term at g_t either way)
      FlatVec want = b.target;
      for (const FlatVec& g : b.aux) {
        if (kernels::dot(b.target, g) < 0.0) {
          kernels::axpy(1.0, pcgrad_project(g, b.target), want);
        } else {
          const double an = kernels::nrm2(g);
          if (an > 0.0) kernels::axpy(std::max(1.0, kernels::nrm2(b.target) / an), g, want);
        }
      }
      for (int j = 0; j < dim; ++j) worst = std::max(worst, std::fabs(rc[j] - want[j]));

      GradientBundle empty;
      empty.target = b.target;
      k0_ok = k0_ok && combine_mtl(empty, {}) == b.target && combine_gradsim(empty) == b.target &&
              combine_gradscale(empty) == b.target && combine_pcgrad(empty) == b.target &&
              combine_rcgrad(empty, RotationScalars::init(0)) == b.target;
    }
    add("combiners", "rcgrad-reduction-identity", worst <= 1e-12, worst, 1e-12);
    add("combiners", "k0-ft-reduction", k0_ok, k0_ok ? 0.0 : 1.0, 0.5);
  }

  // ---- combiners: gradsim gating -----------------------------------------
  {
    Rng rng(derive_seed(opts.seed, 6));
    bool pass = true;
    for (int i = 0; i < 1000; ++i) {
      const int dim = rng.uniform_int(2, 20);
      GradientBundle b;
      b.target.resize(dim);
      for (double& x : b.target) x = rng.uniform(-1.0, 1.0);
      const int k = rng.uniform_int(1, 3);
      for (int t = 0; t < k; ++t) {
        FlatVec g(dim);
        for (double& x : g) x = rng.uniform(-1.0, 1.0);
        b.aux.push_back(std::move(g));
      }
      FlatVec out = combine_gradsim(b);
      // retained output never turns against the target
      pass = pass && kernels::dot(out, b.target) >= kernels::sumsq(b.target) - 1e-9;
      // dropped tasks contribute exactly zero: rebuild and compare
      FlatVec rebuilt = b.target;
      const double tn = kernels::nrm2(b.target);
      for (const FlatVec& g : b.aux) {
        const double gn = kernels::nrm2(g);
        const double c = gn > 0 ? kernels::dot(b.target, g) / (tn * gn) : 0.0;
        if (c > 0) kernels::axpy(c, g, rebuilt);
      }
      pass = pass && out == rebuilt;
    }
    add("combiners", "gradsim-gating", pass, pass ? 0.0 : 1.0, 0.5);
  }

  // ---- bilevel: Neumann vs analytic hypergradient ------------------------
  {
    Rng rng(derive_seed(opts.seed, 7));
    const double tol = 1e-4 * opts.tol_scale;
    if (opts.neumann_beta) {
      // advisory mode: report divergence rather than silently wrong values
      QuadraticBilevelProblem p = QuadraticBilevelProblem::random(8, 2, rng.next_u64());
      std::vector<double> w{0.5, 0.5};
      const double lmax = p.lambda_max(w);
      const double radius = 2.0 / lmax;
      BiLevelConfig cfg;
      cfg.neumann_steps = 200;
      cfg.neumann_beta = *opts.neumann_beta;
      FlatVec theta(p.best_response(w).data(), p.best_response(w).data() + p.dim());
      bool diverged = false;
      std::string msg;
      try {
        neumann_hypergrad(theta, p.total_grad_fn(w), p.val_grad_fn(), p.aux_grad_fns(), cfg);
      } catch (const NumericError& e) {
        diverged = true;
        msg = e.what();
      }
      if (cfg.neumann_beta > radius) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "beta=%.4g above convergence radius 2/lambda_max=%.4g: %s",
                      cfg.neumann_beta, radius, diverged ? "flagged divergent" : "NOT flagged");
        add("bilevel", "neumann-divergence-advisory", diverged, cfg.neumann_beta, radius,
            std::string(buf) + (msg.empty() ? "" : " | " + msg));
      } else {
        add("bilevel", "neumann-divergence-advisory", !diverged, cfg.neumann_beta, radius,
            "beta within convergence radius; no divergence expected");
      }
    } else {
      double worst = 0.0;
      for (int inst = 0; inst < 10; ++inst) {
        const int dim = rng.uniform_int(2, 12);
        const int k = rng.uniform_int(1, 3);
        QuadraticBilevelProblem p = QuadraticBilevelProblem::random(dim, k, rng.next_u64());
        std::vector<double> w(k);
        for (double& x : w) x = rng.uniform(0.0, 1.0);
        const Eigen::VectorXd th = p.best_response(w);
        FlatVec theta(th.data(), th.data() + dim);
        BiLevelConfig cfg;
        cfg.neumann_steps = 200;
        cfg.neumann_beta = 0.1 / p.lambda_max(w);
        std::vector<double> got =
            neumann_hypergrad(theta, p.total_grad_fn(w), p.val_grad_fn(), p.aux_grad_fns(), cfg);
        for (double& x : got) x *= cfg.neumann_beta;  // beta*q ~ H^-1 grad
        const std::vector<double> want = p.hypergrad(w);
        worst = std::max(worst, vec_rel_err(got, want));
      }
      add("bilevel", "neumann-vs-analytic", worst < tol, worst, tol);
    }
  }

  // ---- tasks: motif labels vs brute force --------------------------------
  {
    bool pass = true;
    long checked = 0;
    // exhaustive over every graph on up to 6 nodes
    for (int n = 3; n <= 6 && pass; ++n) {
      const int pairs = n * (n - 1) / 2;
      for (long mask = 0; mask < (1L << pairs) && pass; ++mask) {
        SyntheticGraph g;
        g.node_types.assign(n, 1);
        int bit = 0;
        for (int u = 0; u < n; ++u)
          for (int v = u + 1; v < n; ++v, ++bit)
            if (mask & (1L << bit)) g.edges.emplace_back(u, v);
        pass = pass && has_triangle(g) == brute_triangle(g) &&
               has_chordless_four_cycle(g) == brute_chordless_c4(g);
        ++checked;
      }
    }
    // randomized on 7..8 nodes
    Rng rng(derive_seed(opts.seed, 8));
    for (int i = 0; i < 2000 && pass; ++i) {
      SyntheticGraph g = random_graph(rng, 7, 8, rng.uniform(0.1, 0.6));
      pass = pass && has_triangle(g) == brute_triangle(g) &&
             has_chordless_four_cycle(g) == brute_chordless_c4(g);
      ++checked;
    }
    add("tasks", "motif-brute-force", pass, static_cast<double>(checked), 0.0,
        "exhaustive n<=6 plus 2000 random graphs on 7-8 nodes");
  }

  // ---- tasks: label rule independent reimplementation --------------------
  {
    DatasetParams dp;
    dp.seed = derive_seed(opts.seed, 9);
    dp.n_graphs = 1000;
    auto graphs = gen_dataset(dp);
    bool pass = true;
    for (const SyntheticGraph& g : graphs) {
      int count0 = 0;
      for (int t : g.node_types) count0 += t == 0;
      const bool maj0 = 2 * count0 > g.n_nodes();
      const bool tri = brute_triangle(g);
      pass = pass && g.target_label == ((tri != maj0) ? 1 : 0) && g.motifs[0] == (tri ? 1 : 0);
    }
    add("tasks", "label-rule-xor", pass, pass ? 0.0 : 1.0, 0.5, "1000 generated graphs");
  }

  // ---- harness: roc_auc vs brute force -----------------------------------
  {
    Rng rng(derive_seed(opts.seed, 10));
    double worst = 0.0;
    bool pass = true;
    for (int i = 0; i < 200; ++i) {
      const int n = rng.uniform_int(2, 50);
      std::vector<double> s(n);
      std::vector<int> y(n);
      for (double& x : s) x = rng.bernoulli(0.3) ? rng.uniform_int(0, 3) : rng.uniform(0.0, 1.0);
      bool both = false;
      while (!both) {
        int np = 0;
        for (int& l : y) np += (l = rng.bernoulli(0.5) ? 1 : 0);
        both = np > 0 && np < n;
      }
      const double gap = std::fabs(roc_auc(s, y) - brute_auc(s, y));
      worst = std::max(worst, gap);
      pass = pass && gap <= 1e-12;
    }
    const double example = roc_auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
    pass = pass && std::fabs(example - 0.75) < 1e-15;
    add("harness", "roc-auc-brute-force", pass, worst, 1e-12,
        "200 random instances plus the 0.75 fixed case");
  }

  return report;
}

std::string format_verify(const VerifyReport& report) {
  std::ostringstream os;
  for (const CheckResult& c : report.checks) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "[%s] %s/%s: observed=%.3g tol=%.3g", c.pass ? "PASS" : "FAIL",
                  c.module.c_str(), c.property.c_str(), c.observed, c.tolerance);
    os << buf;
    if (!c.detail.empty()) os << " (" << c.detail << ")";
    os << "\n";
  }
  os << (report.all_pass() ? "verification passed" : "VERIFICATION FAILED") << "\n";
  return os.str();
}

}  // namespace gradsurge
