#include "nonstat/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "nonstat/error_spectra.hpp"
#include "nonstat/errors.hpp"
#include "nonstat/montecarlo.hpp"
#include "nonstat/simulate.hpp"
#include "nonstat/transport.hpp"

namespace nonstat {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

json matern_json(double nu, double rho, double sigma2) {
  return json{{"kind", "matern"}, {"nu", nu}, {"rho", rho}, {"sigma2", sigma2}};
}

// second derivative multiplier: theta' field from phihat (d=1, xi = ik)
Field second_derivative_field(const Field& fourier) {
  const GridSpec& g = fourier.grid;
  Field f = fourier;
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    double k = g.freq(i)[0];
    f.v[i] *= -k * k;
  }
  Field p = ifft(f);
  for (auto& v : p.v) v = cplx(v.real(), 0.0);
  return p;
}

void write_summary(const std::string& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.experiment = j.value("experiment", std::string("custom"));
  cfg.seed = j.value("seed", std::uint64_t(1));
  cfg.M = j.value("M", 0);
  cfg.n = j.value("n", 0);
  cfg.workers = j.value("workers", 1);
  cfg.force = j.value("force", false);
  cfg.out_dir = j.value("out", std::string("."));
  cfg.band_modes = j.value("band_modes", 16);
  cfg.radial_bins = j.value("radial_bins", 24);
  if (j.contains("model")) cfg.model_json = j.at("model");
  return cfg;
}

json preset_model_json(const std::string& experiment, int n_override) {
  if (experiment == "fig1") {
    int n = n_override > 0 ? n_override : 1024;
    // eta_k = k is unbounded, so the second-order bias of the full-lattice
    // estimate grows with the frequency cutoff; the preset band-limits the
    // weights to half the lattice (about twice the spectral width of C),
    // and the displayed orderings are stable over a wide cutoff window.
    return json{{"grid", {{"d", 1}, {"L", 2.0 * M_PI}, {"n", n}}},
                {"C", matern_json(2.0, 0.025, 1.0)},
                {"eta", {{"kind", "linear"}}},
                {"xi", {{"kind", "ones"}}},
                {"prior", matern_json(3.0, 2.0 * M_PI / 10.0, 0.03 * 0.03)},
                {"noise", {{"kind", "constant"}, {"value", 0.0}}},
                {"marginal", "option1"},
                {"mask_fraction", 0.5}};
  }
  if (experiment == "fig2" || experiment == "fig2_cutlocus") {
    int n = n_override > 0 ? n_override : 10000;
    double t0 = experiment == "fig2" ? 1.5 : 1.5 / 7.0;
    return json{{"grid", {{"d", 1}, {"L", 10.0}, {"n", n}}},
                {"C", matern_json(2.0, 0.05, 1.0)},
                {"eta", {{"kind", "transport"}, {"target", matern_json(2.1, 0.05, 1.0)}, {"t0", t0}}},
                {"xi", {{"kind", "gradient"}}},
                {"prior", matern_json(5.0, 1.5, 225.0 / std::pow(2.0 * M_PI, 4))},
                {"noise", {{"kind", "constant"}, {"value", 0.0}}},
                {"marginal", "option1"},
                {"mask_fraction", 0.10}};
  }
  if (experiment == "fig3") {
    int n = n_override > 0 ? n_override : 128;
    return json{{"grid", {{"d", 2}, {"L", 2.0 * M_PI}, {"n", n}}},
                {"C", matern_json(1.5, 0.015, 1.0)},
                {"eta", {{"kind", "transport"}, {"target", matern_json(1.7, 0.014, 1.0)}, {"t0", 1.5}}},
                {"xi", {{"kind", "rot_gradient"}}},
                {"prior", matern_json(5.0, 0.3 * M_PI, 0.25)},
                {"noise", {{"kind", "constant"}, {"value", 0.0}}},
                {"marginal", "option1"},
                {"mask_fraction", 0.0}};
  }
  throw ValidationError("preset_model_json: unknown experiment '" + experiment + "'");
}

RadialProfile radial_profile(const GridSpec& g, const rvec& spectrum, int nbins) {
  if (g.d != 2) throw ValidationError("radial_profile: requires a d=2 grid");
  if (nbins < 1) throw ValidationError("radial_profile: need at least one bin");
  double rmax = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) rmax = std::max(rmax, g.freq_norm(i));
  const double width = rmax * (1.0 + 1e-12) / nbins;
  RadialProfile prof;
  prof.center.resize(nbins);
  prof.mean.assign(nbins, 0.0);
  prof.count.assign(nbins, 0);
  for (int b = 0; b < nbins; ++b) prof.center[b] = (b + 0.5) * width;
  for (std::size_t i = 1; i < spectrum.size(); ++i) {  // skip l = 0
    int b = std::min(nbins - 1, static_cast<int>(g.freq_norm(i) / width));
    prof.mean[b] += spectrum[i];
    prof.count[b] += 1;
  }
  for (int b = 0; b < nbins; ++b)
    if (prof.count[b]) prof.mean[b] /= static_cast<double>(prof.count[b]);
  return prof;
}

// -------------------------------------------------------------------------
// fig1: analytic variance/bias spectra of the local invariant and tilde
// estimates on the comparison model (d=1, eta_k = k, theta = phi).

void run_fig1(const ExperimentConfig& cfg) {
  json mj = cfg.model_json.is_null() ? preset_model_json("fig1", cfg.n) : cfg.model_json;
  ModelConfig mc = model_config_from_json(mj);
  PhaseModel model = build_model(mc);
  const GridSpec& g = model.grid;
  auto mask = nyquist_mask(g, mc.mask_fraction);

  EstimatorKernel ker_li = build_kernel(model, mask, Variant::local_invariant);
  EstimatorKernel ker_t = build_kernel(model, mask, Variant::tilde);

  rvec var_li = var_spectrum(ker_li, CXXOption::matched);
  rvec var_t = var_spectrum(ker_t, CXXOption::matched);
  rvec bias_li = bias_spectrum_exact(ker_li, g.size());
  rvec bias_t = bias_spectrum_exact(ker_t, g.size());

  fs::create_directories(cfg.out_dir);
  CsvWriter csv(cfg.out_dir + "/fig1_spectra.csv");
  csv.header({"ell", "ell2_Cvar_li", "ell2_Cbias_li", "ell2_Cvar_tilde", "ell2_Cbias_tilde",
              "ell2_Cphiphi"});
  for (int j = 1; j < g.n / 2; ++j) {
    double l = j * g.dk;
    double l2 = l * l;
    std::size_t i = static_cast<std::size_t>(j);
    csv.row({l, l2 * var_li[i], l2 * bias_li[i], l2 * var_t[i], l2 * bias_t[i],
             l2 * model.Cphi[i]});
  }

  // orderings over the lowest 20 nonzero frequencies
  bool li_ok = true, tilde_ok = true;
  for (int j = 1; j <= std::min(20, g.n / 2 - 1); ++j) {
    li_ok = li_ok && bias_li[j] < std::min(model.Cphi[j], var_li[j]);
    tilde_ok = tilde_ok && bias_t[j] > std::max(model.Cphi[j], var_t[j]);
  }
  json summary = {{"experiment", "fig1"},
                  {"n", g.n},
                  {"li_bias_below_min", li_ok},
                  {"tilde_bias_above_max", tilde_ok}};
  write_summary(cfg.out_dir + "/fig1_summary.json", summary);
}

// -------------------------------------------------------------------------
// fig2 / fig2_cutlocus: conditional Monte Carlo at a fixed potential.

void run_fig2(const ExperimentConfig& cfg) {
  const bool cutlocus = cfg.experiment == "fig2_cutlocus";
  json mj = cfg.model_json.is_null() ? preset_model_json(cfg.experiment, cfg.n) : cfg.model_json;
  ModelConfig mc = model_config_from_json(mj);
  PhaseModel model = build_model(mc);
  const GridSpec& g = model.grid;
  const std::size_t sz = g.size();
  const int M = cfg.M > 0 ? cfg.M : 100;
  auto mask = nyquist_mask(g, mc.mask_fraction);
  EstimatorKernel ker = build_kernel(model, mask, Variant::local_invariant);

  // one pinned potential; realizations share it
  GaussianRng phi_rng(substream_seed(cfg.seed, 0));
  Field phi = simulate_phi(model.prior, g, phi_rng);
  auto theta = theta_from_phi(phi, model.xi);
  Field phik = fft(phi);
  Field theta_prime = second_derivative_field(phik);

  SimulateOptions sopt;
  sopt.force = cfg.force;
  sopt.workers = 1;  // realization-level parallelism instead

  std::atomic<double> t_est{0.0};
  WelfordArray acc;
  acc.init(sz);
  std::vector<rvec> first_estimates;  // theta-prime maps of the first 5 draws
  monte_carlo_stream(
      M, cfg.workers,
      [&](std::size_t i) -> cvec {
        GaussianRng rng(substream_seed(cfg.seed, i + 1));
        SimResult sim = simulate_Z(model, theta, rng, sopt);
        double t0 = now_seconds();
        Field ph = estimate_fast(sim.z, ker);
        t_est.fetch_add(now_seconds() - t0);
        return ph.v;
      },
      [&](std::size_t i, const cvec& v) {
        acc.add(v);
        if (i < 5) {
          Field f = make_field(g, Domain::fourier);
          f.v = v;
          first_estimates.push_back(real_part(second_derivative_field(f).v));
        }
      });

  Field mean_phihat = make_field(g, Domain::fourier);
  mean_phihat.v = acc.mean();
  Field mean_tp = second_derivative_field(mean_phihat);

  rvec var_emp = acc.variance();           // per-mode E|phihat - mean|^2
  rvec var_an = var_spectrum(ker, CXXOption::matched);
  rvec bias_fast = bias_spectrum_fast(ker);
  bool have_exact = sz <= (std::size_t(1) << 13);
  rvec bias_exact;
  if (have_exact) bias_exact = bias_spectrum_exact(ker);

  fs::create_directories(cfg.out_dir);
  {
    CsvWriter csv(cfg.out_dir + "/" + cfg.experiment + "_estimates.csv");
    std::vector<std::string> names = {"x", "theta_prime_true", "mean_thetahat_prime"};
    for (std::size_t r = 0; r < first_estimates.size(); ++r)
      names.push_back("thetahat_prime_" + std::to_string(r + 1));
    csv.header(names);
    for (std::size_t i = 0; i < sz; ++i) {
      std::vector<double> row = {g.coord(i)[0] - 0.5 * g.L, theta_prime.v[i].real(),
                                 mean_tp.v[i].real()};
      for (const auto& e : first_estimates) row.push_back(e[i]);
      csv.row(row);
    }
  }
  {
    CsvWriter csv(cfg.out_dir + "/" + cfg.experiment + "_spectra.csv");
    if (have_exact)
      csv.header({"ell", "ell2_Cvar", "ell2_Cbias_fast", "ell2_Cbias_exact", "ell2_Cphiphi"});
    else
      csv.header({"ell", "ell2_Cvar", "ell2_Cbias_fast", "ell2_Cphiphi"});
    for (int j = 1; j < g.n / 2; ++j) {
      double l = j * g.dk, l2 = l * l;
      std::size_t i = static_cast<std::size_t>(j);
      if (have_exact)
        csv.row({l, l2 * var_an[i], l2 * bias_fast[i], l2 * bias_exact[i], l2 * model.Cphi[i]});
      else
        csv.row({l, l2 * var_an[i], l2 * bias_fast[i], l2 * model.Cphi[i]});
    }
  }
  {
    // banded empirical variance and conditional bias against the analytic spectra
    CsvWriter csv(cfg.out_dir + "/" + cfg.experiment + "_bands.csv");
    csv.header({"ell_center", "Cvar_band", "emp_var_band", "Cbias_fast_band", "emp_bias_band"});
    const int B = cfg.band_modes;
    const cvec& mean_hat = acc.mean();
    for (int j0 = 1; j0 + B <= g.n / 2; j0 += B) {
      double cv = 0, ev = 0, cb = 0, eb = 0;
      int used = 0;
      for (int j = j0; j < j0 + B; ++j) {
        std::size_t i = static_cast<std::size_t>(j);
        if (!ker.validA[i]) continue;
        cv += var_an[i];
        ev += var_emp[i] * g.dk_d();
        cb += bias_fast[i];
        eb += std::norm(mean_hat[i] - phik.v[i]) * g.dk_d();
        ++used;
      }
      if (!used) continue;
      csv.row({(j0 + 0.5 * (B - 1)) * g.dk, cv / used, ev / used, cb / used, eb / used});
    }
  }

  json summary = {{"experiment", cfg.experiment}, {"n", g.n},      {"M", M},
                  {"seed", cfg.seed},             {"t0", mc.has_transport ? mc.transport.t0 : 0.0},
                  {"estimate_seconds_total", t_est.load()}};

  if (cutlocus && mc.has_transport) {
    CutLocusResult cl = cut_locus_c0(model.eta_raw, {1.0, 0.0, 0.0, 1.0}, g);
    summary["c0"] = cl.c0;
    std::size_t exceed_n = 0, agree = 0, pos_exceed = 0, pos_err_up = 0, neg_exceed = 0,
                neg_err_up = 0;
    CsvWriter csv(cfg.out_dir + "/fig2_cutlocus_band.csv");
    csv.header({"x", "theta_prime_true", "mean_thetahat_prime", "exceeds_band"});
    for (std::size_t i = 0; i < sz; ++i) {
      double tp = theta_prime.v[i].real();
      double mt = mean_tp.v[i].real();
      bool exceed = std::fabs(tp) > cl.c0;
      csv.row({g.coord(i)[0] - 0.5 * g.L, tp, mt, exceed ? 1.0 : 0.0});
      if (exceed) {
        ++exceed_n;
        double err = mt - tp;
        if ((err > 0) == (tp > 0)) ++agree;
        if (tp > 0) {
          ++pos_exceed;
          if (err > 0) ++pos_err_up;
        } else {
          ++neg_exceed;
          if (err > 0) ++neg_err_up;
        }
      }
    }
    summary["exceeding_pixels"] = exceed_n;
    summary["sign_agreement"] = exceed_n ? static_cast<double>(agree) / exceed_n : 0.0;
    summary["pos_exceed_fraction_err_up"] =
        pos_exceed ? static_cast<double>(pos_err_up) / pos_exceed : 0.0;
    summary["neg_exceed_fraction_err_up"] =
        neg_exceed ? static_cast<double>(neg_err_up) / neg_exceed : 0.0;
  }
  write_summary(cfg.out_dir + "/" + cfg.experiment + "_summary.json", summary);
}

// -------------------------------------------------------------------------
// fig3: d=2 marginal Monte Carlo with radial summaries.

void run_fig3(const ExperimentConfig& cfg) {
  json mj = cfg.model_json.is_null() ? preset_model_json("fig3", cfg.n) : cfg.model_json;
  ModelConfig mc = model_config_from_json(mj);
  PhaseModel model = build_model(mc);
  const GridSpec& g = model.grid;
  const std::size_t sz = g.size();
  const int M = cfg.M > 0 ? cfg.M : 50;
  auto mask = nyquist_mask(g, mc.mask_fraction);
  EstimatorKernel ker = build_kernel(model, mask, Variant::local_invariant);

  SimulateOptions sopt;
  sopt.force = cfg.force;
  sopt.workers = 1;

  // theta divergence check (spectral): xi = (ik2, -ik1) gives div theta = 0
  {
    GaussianRng rng(substream_seed(cfg.seed, 9999));
    Field phi = simulate_phi(model.prior, g, rng);
    auto theta = theta_from_phi(phi, model.xi);
    Field t0k = fft(theta[0]);
    Field t1k = fft(theta[1]);
    double div2 = 0, ref = 0;
    for (std::size_t i = 0; i < sz; ++i) {
      auto k = g.freq(i);
      cplx div = cplx(0, k[0]) * t0k.v[i] + cplx(0, k[1]) * t1k.v[i];
      div2 += std::norm(div);
      ref += std::norm(t0k.v[i]) + std::norm(t1k.v[i]);
    }
    if (ref > 0 && std::sqrt(div2 / ref) > 1e-8)
      throw ValidationError("run_fig3: theta failed the divergence-free check");
  }

  rvec mse(sz, 0.0);
  double corr_sum = 0.0;
  Field first_phi = make_field(g, Domain::pixel);
  Field first_phihat = make_field(g, Domain::pixel);
  Field first_zobs = make_field(g, Domain::pixel);

  monte_carlo_stream(
      M, cfg.workers,
      [&](std::size_t i) -> cvec {
        GaussianRng rng(substream_seed(cfg.seed, i + 1));
        Field phi = simulate_phi(model.prior, g, rng);
        auto theta = theta_from_phi(phi, model.xi);
        SimResult sim = simulate_Z(model, theta, rng, sopt);
        Field ph = estimate_fast(sim.z, ker);
        // pack: phihat_k then phi pixels then z pixels
        cvec out(3 * sz);
        std::copy(ph.v.begin(), ph.v.end(), out.begin());
        std::copy(phi.v.begin(), phi.v.end(), out.begin() + sz);
        std::copy(sim.z.v.begin(), sim.z.v.end(), out.begin() + 2 * sz);
        return out;
      },
      [&](std::size_t i, const cvec& packed) {
        Field phi = make_field(g, Domain::pixel);
        std::copy(packed.begin() + sz, packed.begin() + 2 * sz, phi.v.begin());
        Field phik = fft(phi);
        for (std::size_t l = 0; l < sz; ++l)
          if (ker.validA[l]) mse[l] += std::norm(packed[l] - phik.v[l]);
        // pixel correlation of the estimate
        Field ph = make_field(g, Domain::fourier);
        std::copy(packed.begin(), packed.begin() + sz, ph.v.begin());
        Field php = ifft(ph);
        double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
        for (std::size_t p = 0; p < sz; ++p) {
          double a = php.v[p].real(), b = phi.v[p].real();
          sxy += a * b;
          sxx += a * a;
          syy += b * b;
          sx += a;
          sy += b;
        }
        double nn = static_cast<double>(sz);
        double cov = sxy / nn - (sx / nn) * (sy / nn);
        double va = sxx / nn - (sx / nn) * (sx / nn);
        double vb = syy / nn - (sy / nn) * (sy / nn);
        corr_sum += cov / std::sqrt(va * vb);
        if (i == 0) {
          first_phi = phi;
          first_phihat = php;
          std::copy(packed.begin() + 2 * sz, packed.end(), first_zobs.v.begin());
        }
      });

  for (auto& v : mse) v = v / M * g.dk_d();
  rvec var_an = var_spectrum(ker, CXXOption::matched);
  rvec bias_fast = bias_spectrum_fast(ker);

  fs::create_directories(cfg.out_dir);
  write_field(cfg.out_dir + "/fig3_phi.bin", first_phi);
  write_field(cfg.out_dir + "/fig3_phihat.bin", first_phihat);
  write_field(cfg.out_dir + "/fig3_zobs.bin", first_zobs);

  rvec ell2var(sz, 0.0), ell2phi(sz, 0.0), ell2bias(sz, 0.0), ell2mse(sz, 0.0);
  for (std::size_t i = 0; i < sz; ++i) {
    double l2 = g.freq_norm(i) * g.freq_norm(i);
    ell2var[i] = l2 * var_an[i];
    ell2phi[i] = l2 * model.Cphi[i];
    ell2bias[i] = l2 * bias_fast[i];
    ell2mse[i] = l2 * mse[i];
  }
  RadialProfile pv = radial_profile(g, ell2var, cfg.radial_bins);
  RadialProfile pp = radial_profile(g, ell2phi, cfg.radial_bins);
  RadialProfile pb = radial_profile(g, ell2bias, cfg.radial_bins);
  RadialProfile pm = radial_profile(g, ell2mse, cfg.radial_bins);
  CsvWriter csv(cfg.out_dir + "/fig3_radial.csv");
  csv.header({"ell_center", "ell2_Cvar", "ell2_Cphiphi", "ell2_Cbias_fast", "ell2_emp_mse",
              "count"});
  for (int b = 0; b < cfg.radial_bins; ++b)
    csv.row({pv.center[b], pv.mean[b], pp.mean[b], pb.mean[b], pm.mean[b],
             static_cast<double>(pv.count[b])});

  json summary = {{"experiment", "fig3"},
                  {"n", g.n},
                  {"M", M},
                  {"seed", cfg.seed},
                  {"mean_pixel_correlation", corr_sum / M}};
  write_summary(cfg.out_dir + "/fig3_summary.json", summary);
}

void run_custom(const ExperimentConfig& cfg) {
  if (cfg.model_json.is_null())
    throw ValidationError("custom experiment requires a model block in the config");
  ModelConfig mc = model_config_from_json(cfg.model_json);
  PhaseModel model = build_model(mc);
  const GridSpec& g = model.grid;
  auto mask = nyquist_mask(g, mc.mask_fraction);
  EstimatorKernel ker = build_kernel(model, mask, Variant::local_invariant);
  rvec var_an = var_spectrum(ker, CXXOption::matched);
  rvec bias_fast = bias_spectrum_fast(ker);
  fs::create_directories(cfg.out_dir);
  CsvWriter csv(cfg.out_dir + "/custom_spectra.csv");
  csv.header({"ell_index", "ell_norm", "Cvar", "Cbias_fast", "Cphiphi", "valid"});
  for (std::size_t i = 0; i < g.size(); ++i)
    csv.row({static_cast<double>(i), g.freq_norm(i), var_an[i], bias_fast[i], model.Cphi[i],
             static_cast<double>(ker.validA[i])});
}

int run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "fig1")
    run_fig1(cfg);
  else if (cfg.experiment == "fig2" || cfg.experiment == "fig2_cutlocus")
    run_fig2(cfg);
  else if (cfg.experiment == "fig3")
    run_fig3(cfg);
  else if (cfg.experiment == "custom")
    run_custom(cfg);
  else
    throw ValidationError("run_experiment: unknown experiment '" + cfg.experiment + "'");
  return 0;
}

}  // namespace nonstat
