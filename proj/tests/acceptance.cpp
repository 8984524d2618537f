// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unistd.h>

#include "dsf/harness.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace dsf;
using dsf::testing::layer_gradcheck;
using dsf::testing::network_gradcheck;
using dsf::testing::random_spd;
using dsf::testing::random_symmetric;
using dsf::testing::random_tensor;
using dsf::testing::white_noise;

namespace {

// Pinned tolerances.
constexpr double kGradTol = 1e-4;
constexpr std::size_t kGradSeeds = 20;
constexpr double kGradSeconds = 60.0;
constexpr double kLogmRoundTripTol = 1e-8;
constexpr double kLogmIdentityTol = 1e-12;
constexpr double kTaylorTarget = 0.10;
constexpr double kTaylorSeconds = 120.0;
constexpr std::size_t kTaylorWindows = 1000;
constexpr double kAugmentStdTol = 0.05;
constexpr double kOmegaTol = 1e-12;
constexpr double kCleanGap = 0.05;
constexpr double kNoisyGain = 0.10;
constexpr double kRobustnessSeconds = 900.0;
constexpr double kDetectorTol = 0.05;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& measured) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << what << " [" << measured
            << "]" << std::endl;
  failures += ok ? 0 : 1;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Central finite differences over every layer, DSF end to end, and the
// interpolation variants.
void gradient_integrity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < kGradSeeds; ++seed) {
    Rng rng(seed * 31 + 7);
    auto check = [&](Layer& layer, Tensor x) {
      ParamStore ps;
      layer.init_params(ps, rng);
      for (auto& e : ps.entries())
        for (double& v : e.value.data()) v = rng.normal(0.0, 0.5);
      worst = std::max(worst, layer_gradcheck(layer, ps, std::move(x), seed, Mode::train, true));
    };
    Dense dense("d", 6, 4);
    check(dense, random_tensor({3, 2, 3}, rng));
    TemporalConv tconv("t", 3, 5);
    check(tconv, random_tensor({2, 2, 12}, rng));
    SpatialConv sconv("s", 4, 3);
    check(sconv, random_tensor({2, 4, 7}, rng));
    Square sq;
    check(sq, random_tensor({2, 3, 5}, rng));
    Tensor pos = random_tensor({2, 3, 5}, rng);
    for (double& v : pos.data()) v = 0.1 + std::abs(v);
    SafeLog lg;
    check(lg, pos);
    AvgPool pool(4, 2);
    check(pool, random_tensor({2, 3, 11}, rng));
    Dropout drop(0.5);
    check(drop, random_tensor({2, 3, 5}, rng));
    Sigmoid sig;
    check(sig, random_tensor({2, 7}, rng));

    ShallowNetConfig ncfg;
    ncfg.kernel = 9;
    ncfg.pool_window = 10;
    ncfg.pool_stride = 5;
    for (auto v : {DsfVariant::dsfd, DsfVariant::dsfm, DsfVariant::dsfm_st}) {
      DsfConfig dc;
      dc.variant = v;
      dc.channels = 4;
      dc.channels_out = 3;
      Sequential net;
      net.emplace<DsfModule>(dc);
      net.add(make_shallownet(ncfg, 3, 64));
      ParamStore ps;
      Rng r(seed + 1000);
      net.init_params(ps, r);
      const Tensor x = random_tensor({2, 4, 64}, r, 3.0);
      worst = std::max(worst, network_gradcheck(net, ps, x, {0, 1}, {0.7, 1.3}, seed));
    }
    for (auto kind : {InterpKind::interp_only, InterpKind::scalar, InterpKind::vector,
                      InterpKind::dynamic}) {
      InterpModule m(kind, 4);
      ParamStore ps;
      Rng r(seed + 500);
      m.init_params(ps, r);
      const Tensor x = random_tensor({2, 4, 24}, r, 3.0);
      worst = std::max(worst, layer_gradcheck(m, ps, x, seed, Mode::train, kind == InterpKind::interp_only));
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst < kGradTol && secs < kGradSeconds,
         "finite-difference gradients (h=1e-5) over 20 seeds",
         "max rel err " + fmt(worst) + ", " + fmt(secs, 3) + " s");
}

// 2. logm(expm(S)) = S and logm(I) = 0.
void matrix_log_correctness() {
  Rng rng(2);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix s = random_symmetric(6, rng);
    worst = std::max(worst, frobenius_norm(matrix_log_eig(matrix_exp_eig(s)) - s) / frobenius_norm(s));
  }
  const double ident = max_abs(matrix_log_eig(Matrix::identity(6)));
  report(2, worst < kLogmRoundTripTol && ident <= kLogmIdentityTol,
         "logm(expm(S)) round trip on 100 symmetric 6x6, logm(I) = 0",
         "max rel err " + fmt(worst) + ", |logm(I)| " + fmt(ident));
}

// 3. Truncated-series log error on OAS-shrunk clean covariances.
void taylor_study() {
  const auto t0 = std::chrono::steady_clock::now();
  SynthConfig cfg;
  cfg.n_recordings = kTaylorWindows / cfg.windows_per_recording;
  std::vector<Matrix> windows;
  for (const auto& r : generate_dataset(cfg, 3).recordings)
    for (const auto& w : r.windows) windows.push_back(w);
  const std::vector<std::size_t> grid = {5, 10, 20, 50};
  const auto rows = taylor_error_study(windows, grid);
  bool monotone = true, reaches = false;
  std::string measured;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].median > rows[i - 1].median) monotone = false;
    if (rows[i].median < kTaylorTarget) reaches = true;
    measured += "n=" + std::to_string(rows[i].n_terms) + ":" + fmt(rows[i].median, 3) + " ";
  }
  const double secs = seconds_since(t0);
  report(3, monotone && reaches && secs < kTaylorSeconds && windows.size() == kTaylorWindows,
         "Taylor logm median error < 10% for some n <= 50, non-increasing",
         measured + fmt(secs, 3) + " s");
}

// 4. Parameter counts.
void parameter_counts() {
  DsfConfig small;
  small.variant = DsfVariant::dsfd;
  small.channels = small.channels_out = 4;
  DsfConfig six;
  six.variant = DsfVariant::dsfm;
  six.channels = six.channels_out = 6;
  const std::size_t a = dsf_param_count(small), b = dsf_param_count(six);
  report(4, a == 420 && b >= 420 && b <= 2864, "DSF parameter counts",
         "C=4 dsfd " + std::to_string(a) + ", C=6 dsfm " + std::to_string(b));
}

// 5. Augmentation endpoints.
void augmentation_endpoints() {
  Rng rng(5);
  const Matrix x = white_noise(6, 3000, 15.0, rng);
  const ChannelMask none(6, 0), all(6, 1);
  Rng r1(1), r2(2);
  const bool identity = corrupt_window(x, none, 0.8, 30.0, r1) == x && corrupt_window(x, all, 0.0, 30.0, r2) == x;

  const double sigma = 30.0;
  Rng ra(9), rb(9);
  const Matrix ya = corrupt_window(x, all, 1.0, sigma, ra);
  const Matrix yb = corrupt_window(white_noise(6, 3000, 80.0, rng), all, 1.0, sigma, rb);
  double worst = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto row = ya.row(i);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / double(row.size());
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    worst = std::max(worst, std::abs(std::sqrt(ss / double(row.size() - 1)) / sigma - 1.0));
  }
  report(5, identity && ya == yb && worst < kAugmentStdTol,
         "nu=0 or eta=0 bit-identical; nu=1, eta=1 independent of X, std within 5%",
         std::string("identity ") + (identity ? "yes" : "no") + ", X-independent " +
             (ya == yb ? "yes" : "no") + ", max std dev " + fmt(100.0 * worst, 3) + "%");
}

// 6. Dynamic interpolation as a single matrix product.
void dynamic_equivalence() {
  Rng rng(6);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t c = 2 + rep % 7;
    InterpModule m(InterpKind::dynamic, c);
    ParamStore ps;
    m.init_params(ps, rng);
    const Matrix x = white_noise(c, 50, 10.0, rng);
    const Matrix y = interp_forward(x, InterpKind::dynamic, ps);
    m.forward(stack_windows(std::span<const Matrix>(&x, 1)), ps, Mode::eval, rng);
    const auto& alpha = m.last_alpha().front();
    const auto& w = m.last_weights().front();
    const Matrix omega_x = matmul(dynamic_omega(alpha, w), x);
    // Reference: the two-term definition diag(a) X + diag(1 - a) W X.
    worst = std::max(worst, max_abs(omega_x - interp_two_term(alpha, w, x)));
    worst = std::max(worst, max_abs(omega_x - y));
  }
  report(6, worst < kOmegaTol, "dynamic interpolation equals Omega_X X", "max abs " + fmt(worst));
}

// 7 and 8. Trained vanilla vs DSFm-st + augmentation on the synthetic task.
void robustness_and_contributions() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = split_for(generate_dataset(SynthConfig{}, 1), {0.6, 0.2, 0.2}, 0);
  const TrainConfig tc;
  const ModelConfig mc;
  const CorruptionSpec augment;
  SweepConfig sc;
  const auto test = ds.subset(Split::test);
  std::vector<int> labels;
  for (const auto* r : test) labels.push_back(r->label);

  double van_clean = 0, van_noisy = 0, dsf_clean = 0, dsf_noisy = 0;
  int phi_drops = 0;
  std::string phi_detail;
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  for (std::uint64_t seed : seeds) {
    const auto clean = corrupt_test_set(test, cell_corruption(sc, 0.0, -1), derive_seed(seed, 0));
    const auto noisy = corrupt_test_set(test, cell_corruption(sc, 1.0, -1), derive_seed(seed, 1));
    const auto vanilla = train_model(ModelKind::vanilla, 0, ds, tc, mc, Denoise::none, augment, seed);
    const auto dsf = train_model(ModelKind::dsfm_st, 0, ds, tc, mc, Denoise::augmentation, augment, seed);
    auto bacc = [&](const TrainedModel& m, const std::vector<Recording>& recs) {
      return balanced_accuracy(predict_recordings(m, recs, ds, mc), labels, ds.n_classes).value;
    };
    van_clean += bacc(vanilla, clean) / 3.0;
    van_noisy += bacc(vanilla, noisy) / 3.0;
    dsf_clean += bacc(dsf, clean) / 3.0;
    dsf_noisy += bacc(dsf, noisy) / 3.0;

    const auto& params = std::get<TrainResult>(dsf.state).params;
    const auto phi_clean = inspect_filters(ModelKind::dsfm_st, 0, params, test, ds.channels, mc, {});
    const auto phi_noisy = inspect_filters(ModelKind::dsfm_st, 0, params, test, ds.channels, mc,
                                           {0, sc.sigma_uv, derive_seed(seed, 2)});
    const double a = phi_clean.summary.median[0], b = phi_noisy.summary.median[0];
    phi_drops += b < a;
    phi_detail += fmt(a, 3) + "->" + fmt(b, 3) + " ";
  }
  const double secs = seconds_since(t0);
  const bool clean_ok = std::abs(dsf_clean - van_clean) <= kCleanGap;
  const bool noisy_ok = dsf_noisy - van_noisy >= kNoisyGain;
  report(7, clean_ok && noisy_ok && secs < kRobustnessSeconds,
         "DSFm-st+augmentation vs vanilla: clean within 5 pts, eta=1 p=0.5 at least 10 pts better",
         "clean " + fmt(dsf_clean, 3) + " vs " + fmt(van_clean, 3) + ", noisy " + fmt(dsf_noisy, 3) +
             " vs " + fmt(van_noisy, 3) + ", " + fmt(secs, 4) + " s");
  report(8, phi_drops >= 2, "median phi of a fully noised channel drops in >= 2 of 3 seeds",
         "channel 0 median clean->noised: " + phi_detail);
}

// 9. Corruption-fraction detector.
void detector() {
  SynthConfig cfg;
  cfg.n_recordings = 4;
  const Dataset ds = generate_dataset(cfg, 9);
  double worst = 0.0;
  for (std::size_t k = 0; k <= cfg.channels; ++k) {
    CorruptionSpec spec;
    spec.scope = CorruptionScope::per_recording;
    spec.forced_count = k;
    spec.eta = {1.0, 1.0};
    spec.sigma_uv = {40.0, 40.0};
    Rng rng(100 + k);
    for (const auto& rec : ds.recordings) {
      const double f = corruption_fraction(corrupt_recording(rec, spec, rng), ds.sfreq);
      worst = std::max(worst, std::abs(f - double(k) / double(cfg.channels)));
    }
  }
  report(9, worst <= kDetectorTol, "detector fraction within 0.05 of k/C", "max dev " + fmt(worst, 3));
}

// 10. Balanced accuracy against a confusion-matrix oracle.
void metric_oracle() {
  Rng rng(10);
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t l = 2 + rng.below(4), n = 1 + rng.below(60);
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = int(rng.below(l));
      p[i] = int(rng.below(l));
    }
    std::vector<std::vector<double>> cm(l, std::vector<double>(l, 0.0));
    for (std::size_t i = 0; i < n; ++i) cm[std::size_t(y[i])][std::size_t(p[i])] += 1.0;
    double sum = 0.0;
    int present = 0;
    for (std::size_t k = 0; k < l; ++k) {
      const double row = std::accumulate(cm[k].begin(), cm[k].end(), 0.0);
      if (row == 0.0) continue;
      sum += cm[k][k] / row;
      ++present;
    }
    mismatches += balanced_accuracy(p, y, l).value != sum / present;
  }
  const std::vector<int> labels = {0, 0, 1, 1}, preds = {0, 0, 1, 0};
  const double half = balanced_accuracy(preds, labels, 2).value;
  report(10, mismatches == 0 && half == 0.75, "balanced accuracy matches confusion-matrix oracle",
         std::to_string(mismatches) + " mismatches of 1000, recalls (1, 0.5) -> " + fmt(half));
}

// 11. Sweep output independent of the worker count.
void sweep_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("dsf_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "sweep.ini");
    os << "[synth]\nchannels = 4\nsamples = 200\nn_recordings = 20\nwindows_per_recording = 4\n"
          "[train]\nmax_epochs = 2\npatience = 2\nt_max = 2\nbatch_size = 16\n"
          "[model]\nn_temporal = 4\nkernel = 11\nn_spatial = 4\npool_window = 50\npool_stride = 25\n"
          "logreg_epochs = 100\n"
          "[sweep]\nmodels = vanilla, dsfm_st, scalar, riemann, handcrafted\n"
          "denoise = none, augmentation\neta = 0, 0.5, 1\ncounts = -1, 2\nc_prime = 2, 4\nn_seeds = 2\n";
  }
  auto run = [&](int jobs, const std::string& name) {
    const std::string cmd = std::string(DSF_CLI_PATH) + " sweep --config " + (dir / "sweep.ini").string() +
                            " --seed 11 --jobs " + std::to_string(jobs) + " --out " + (dir / name).string();
    return std::system(cmd.c_str());
  };
  auto sorted_lines = [&](const std::string& name) {
    std::ifstream is(dir / name);
    std::vector<std::string> lines;
    for (std::string line; std::getline(is, line);) lines.push_back(line);
    std::sort(lines.begin(), lines.end());
    return lines;
  };
  const int s1 = run(1, "serial.csv"), s8 = run(8, "parallel.csv");
  const auto a = sorted_lines("serial.csv"), b = sorted_lines("parallel.csv");
  fs::remove_all(dir);
  report(11, s1 == 0 && s8 == 0 && !a.empty() && a == b, "sweep --jobs 1 and --jobs 8 give identical CSV",
         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " lines, " +
             (a == b ? "identical" : "different"));
}

}  // namespace

int main() {
  gradient_integrity();
  matrix_log_correctness();
  taylor_study();
  parameter_counts();
  augmentation_endpoints();
  dynamic_equivalence();
  robustness_and_contributions();
  detector();
  metric_oracle();
  sweep_determinism();
  std::cout << (failures ? "FAILED " + std::to_string(failures) + " criteria" : std::string("ALL PASSED"))
            << std::endl;
  return failures ? 1 : 0;
}
