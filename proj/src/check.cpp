#include "dca/check.hpp"

#include <cstdio>
#include <functional>
#include <sstream>

#include "dca/experiment.hpp"
#include "dca/network.hpp"
#include "dca/verify.hpp"

namespace dca {

bool mask_range_ok(const Tensor<float>& mask) {
  for (float e : mask.v)
    if (!(e > 0.f && e < 1.f)) return false;
  return true;
}

namespace {

using CheckFn = std::function<bool(std::string&)>;

DcaModule<float> toy_module(std::mt19937& rng, int r = 2) {
  DcaConfig cfg;
  cfg.in_channels_context = cfg.in_channels_spatial = 8;
  cfg.width = 8;
  cfg.context_scale = r;
  return DcaModule<float>(cfg, rng);
}

void add_fast_checks(std::vector<std::pair<std::string, CheckFn>>& checks) {
  checks.emplace_back("mask-range (0,1)", [](std::string& d) {
    std::mt19937 rng(5);
    auto mod = toy_module(rng);
    for (int t = 0; t < 20; ++t) {
      Var<float> x = make_var(random_tensor<float>({2, 8, 6, 6}, rng, -5.f, 5.f));
      auto out = mod.forward(x, x, false);
      if (!mask_range_ok(out.mask->value)) {
        d = "mask entry outside (0, 1)";
        return false;
      }
    }
    return true;
  });
  checks.emplace_back("residual identity under zeroed mask", [](std::string& d) {
    std::mt19937 rng(6);
    Tensor<float> fs = random_tensor<float>({1, 4, 5, 5}, rng);
    Tensor<float> zeros(fs.shape);
    Tensor<float> fs_t = random_tensor<float>({1, 4, 5, 5}, rng);
    Var<float> out = update_spatial(make_var(fs), make_var(zeros), make_var(fs_t));
    if (out->value.v != fs.v) {
      d = "not bit-identical to the residual operand";
      return false;
    }
    return true;
  });
  checks.emplace_back("pooling oracle conformance (200 instances)", [](std::string& d) {
    double diff = conformance_context_pool<float>(200);
    d = "max abs diff " + std::to_string(diff);
    return diff <= 1e-6;
  });
  checks.emplace_back("GAP degeneracy (r = 1)", [](std::string& d) {
    std::mt19937 rng(7);
    Tensor<float> f = random_tensor<float>({2, 3, 7, 9}, rng);
    Var<float> p = context_pool(make_var(f), 1);
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 3; ++c) {
        double m = 0;
        for (int i = 0; i < 7; ++i)
          for (int j = 0; j < 9; ++j) m += f.at(b, c, i, j);
        m /= 63;
        if (std::abs(m - p->value.at(b, c, 0, 0)) > 1e-6) {
          d = "per-channel mean mismatch";
          return false;
        }
      }
    return true;
  });
  checks.emplace_back("shape algebra of dca_forward", [](std::string& d) {
    std::mt19937 rng(8);
    auto mod = toy_module(rng, 3);
    Var<float> x = make_var(random_tensor<float>({2, 8, 6, 6}, rng));
    auto out = mod.forward(x, x, false);
    bool ok = out.spatial->value.shape == std::vector<int>{2, 8, 6, 6} &&
              out.context->value.shape == std::vector<int>{2, 16, 6, 6} &&
              out.mask->value.shape == std::vector<int>{2, 8, 6, 6};
    if (!ok) d = "unexpected output shapes";
    return ok;
  });
  checks.emplace_back("cascade channel bookkeeping", [](std::string& d) {
    std::mt19937 rng(9);
    CascadeDca<float> cas(32, 8, ScaleSchedule::cascade_default(), FinalTap::Context, false, 0, 8, rng);
    for (std::size_t i = 1; i < cas.modules().size(); ++i) {
      const auto& cfg = cas.modules()[i].config();
      if (cfg.in_channels_context != 16 || cfg.in_channels_spatial != 8) {
        d = "interior module " + std::to_string(i + 1) + " channel config wrong";
        return false;
      }
    }
    return true;
  });
  checks.emplace_back("schedule defaults", [](std::string& d) {
    bool ok = ScaleSchedule::cascade_default().scales == std::vector<int>{1, 4, 8, 16} &&
              ScaleSchedule::pyramid_default().scales == std::vector<int>{1, 2, 3, 6};
    if (!ok) d = "defaults drifted";
    return ok;
  });
  checks.emplace_back("loss-weight defaults and Eq-5 wiring", [](std::string& d) {
    LossWeights w;
    if (w.lambda_m != 1.0 || w.lambda_a != 0.2 || w.lambda_s != 0.05) {
      d = "default weights drifted";
      return false;
    }
    auto mk = [](float v) {
      Tensor<float> t({1});
      t.v[0] = v;
      return make_var(t);
    };
    auto total = total_loss(mk(2.f), mk(1.f), {mk(3.f), mk(1.f)}, w);
    if (std::abs(total->value.v[0] - 2.4f) > 1e-6f) {
      d = "total " + std::to_string(total->value.v[0]) + " != 2.4";
      return false;
    }
    return true;
  });
  checks.emplace_back("per-sample independence (inference stats)", [](std::string& d) {
    std::mt19937 rng(10);
    auto mod = toy_module(rng);
    Tensor<float> a = random_tensor<float>({1, 8, 6, 6}, rng);
    Tensor<float> b = random_tensor<float>({1, 8, 6, 6}, rng);
    Tensor<float> both({2, 8, 6, 6});
    std::copy(a.v.begin(), a.v.end(), both.v.begin());
    std::copy(b.v.begin(), b.v.end(), both.v.begin() + a.size());
    auto va = make_var(a), vb = make_var(b), vboth = make_var(both);
    auto oa = mod.forward(va, va, false), ob = mod.forward(vb, vb, false), oboth = mod.forward(vboth, vboth, false);
    for (std::size_t i = 0; i < oa.spatial->value.size(); ++i) {
      if (std::abs(oa.spatial->value.v[i] - oboth.spatial->value.v[i]) > 1e-6f ||
          std::abs(ob.spatial->value.v[i] - oboth.spatial->value.v[i + oa.spatial->value.size()]) > 1e-6f) {
        d = "batched forward differs from per-sample forward";
        return false;
      }
    }
    return true;
  });
  checks.emplace_back("forward determinism", [](std::string& d) {
    auto run = []() {
      std::mt19937 rng(42);
      auto mod = toy_module(rng);
      Var<float> x = make_var(random_tensor<float>({1, 8, 6, 6}, rng));
      return mod.forward(x, x, false).context->value.v;
    };
    if (run() != run()) {
      d = "repeated forward not identical";
      return false;
    }
    return true;
  });
  checks.emplace_back("poly LR schedule", [](std::string& d) {
    TrainConfig tc;
    tc.base_lr = 0.01;
    tc.power = 0.9;
    tc.max_iter = 100;
    double prev = poly_lr(0, tc);
    if (std::abs(prev - 0.01) > 1e-12) {
      d = "lr(0) != base_lr";
      return false;
    }
    for (long i = 1; i <= 100; ++i) {
      double lr = poly_lr(i, tc);
      if (lr >= prev) {
        d = "not strictly decreasing at iter " + std::to_string(i);
        return false;
      }
      prev = lr;
    }
    if (poly_lr(100, tc) != 0.0) {
      d = "lr(max_iter) != 0";
      return false;
    }
    return true;
  });
}

void add_full_checks(std::vector<std::pair<std::string, CheckFn>>& checks) {
  checks.emplace_back("spatial-update oracle conformance (200 instances)", [](std::string& d) {
    double diff = conformance_update_spatial<float>(200);
    d = "max abs diff " + std::to_string(diff);
    return diff <= 1e-6;
  });
  checks.emplace_back("dca_forward oracle composition (Eqs. of the module)", [](std::string& d) {
    double diff = conformance_dca_forward<float>(20);
    d = "max abs diff " + std::to_string(diff);
    return diff <= 1e-6;
  });
  checks.emplace_back("gradient check: standalone DCA module", [](std::string& d) {
    auto rep = grad_check_dca_module();
    d = "max rel error " + std::to_string(rep.max_rel_error) + " at " + rep.worst_coord;
    return rep.pass;
  });
  checks.emplace_back("gradient check: 2-module cascade", [](std::string& d) {
    auto rep = grad_check_cascade();
    d = "max rel error " + std::to_string(rep.max_rel_error) + " at " + rep.worst_coord;
    return rep.pass;
  });
  checks.emplace_back("ordering smoke run", [](std::string& d) {
    SynthSpec spec;
    spec.num_images = 16;
    spec.image_size = 32;
    spec.num_classes = 4;
    spec.min_shapes = 1;
    spec.max_shapes = 3;
    ExperimentConfig cfg;
    cfg.model.backbone_widths = {8, 12, 16, 24};
    cfg.model.width = 12;
    cfg.model.aux_width = 12;
    cfg.train.max_iter = 30;
    cfg.train.batch_size = 2;
    cfg.train.aug.crop_size = 32;
    cfg.data.val_images = 4;
    auto table = run_ordering_experiment({"baseline", "cascade"}, spec, cfg, {1, 2, 3});
    d = "complete=" + std::string(table.complete ? "yes" : "no");
    return table.complete && table.median_miou.count("baseline") && table.median_miou.count("cascade");
  });
}

}  // namespace

std::vector<CheckResult> run_check_suite(const std::string& level) {
  if (level != "fast" && level != "full") throw std::invalid_argument("check level must be 'fast' or 'full'");
  std::vector<std::pair<std::string, CheckFn>> checks;
  add_fast_checks(checks);
  if (level == "full") add_full_checks(checks);
  std::vector<CheckResult> results;
  for (auto& [name, fn] : checks) {
    CheckResult r;
    r.name = name;
    try {
      r.pass = fn(r.detail);
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

int print_check_results(const std::vector<CheckResult>& results) {
  int failures = 0;
  for (const auto& r : results) {
    std::printf("[%s] %s%s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.empty() ? "" : " — ",
                r.detail.c_str());
    if (!r.pass) ++failures;
  }
  std::printf("%zu checks, %d failure(s)\n", results.size(), failures);
  return failures;
}

}  // namespace dca
