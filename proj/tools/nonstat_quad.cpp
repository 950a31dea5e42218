// nonstat-quad: simulate, estimate and analyze locally invariant
// nonstationary random fields of the spectral phase type.
//
//   nonstat-quad <simulate|estimate|var|bias|transport|cutlocus|experiment>
//                --config <json> [--seed N] [--out DIR] [--force] [--workers N]
//
// Exit codes: 0 success, 1 validation error, 2 cost-cap refusal.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nonstat/error_spectra.hpp"
#include "nonstat/errors.hpp"
#include "nonstat/experiment.hpp"
#include "nonstat/simulate.hpp"
#include "nonstat/transport.hpp"

using nlohmann::json;
using namespace nonstat;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  json j;
  in >> j;
  return j;
}

struct CommonArgs {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 1;
  bool force = false;
  int workers = 1;
  std::string field;  // input field for `estimate`
};

int cmd_simulate(const CommonArgs& a) {
  json j = load_json(a.config);
  ModelConfig mc = model_config_from_json(j);
  PhaseModel model = build_model(mc);
  GaussianRng rng(a.seed);
  Field phi = simulate_phi(model.prior, model.grid, rng);
  auto theta = theta_from_phi(phi, model.xi);
  SimulateOptions opt;
  opt.force = a.force;
  opt.workers = a.workers;
  SimResult sim = simulate_Z(model.Ck, model.eta_raw, theta, white_noise_fourier(model.grid, rng),
                             opt);
  Field zobs = add_noise(sim.z, model.noise, rng);
  std::filesystem::create_directories(a.out);
  write_field(a.out + "/zobs.bin", zobs);
  write_field(a.out + "/phi.bin", phi);
  for (int p = 0; p < model.grid.d; ++p)
    write_field(a.out + "/theta" + std::to_string(p + 1) + ".bin", theta[p]);
  std::printf("wrote zobs.bin, phi.bin and theta fields to %s\n", a.out.c_str());
  return 0;
}

int cmd_estimate(const CommonArgs& a) {
  json j = load_json(a.config);
  ModelConfig mc = model_config_from_json(j);
  PhaseModel model = build_model(mc);
  if (a.field.empty()) throw ValidationError("estimate: --field <zobs.bin> is required");
  Field zobs = read_field(a.field);
  if (!(zobs.grid == model.grid)) throw ValidationError("estimate: field grid differs from model grid");
  auto mask = nyquist_mask(model.grid, mc.mask_fraction);
  EstimatorKernel ker = build_kernel(model, mask, Variant::local_invariant);
  Field phihat_k = estimate_fast(zobs, ker);
  Field phihat_x = ifft(phihat_k);
  for (auto& v : phihat_x.v) v = cplx(v.real(), 0.0);
  std::filesystem::create_directories(a.out);
  write_field(a.out + "/phihat_fourier.bin", phihat_k);
  write_field(a.out + "/phihat_pixel.bin", phihat_x);
  CsvWriter csv(a.out + "/normalization.csv");
  csv.header({"ell_index", "ell_norm", "A", "valid"});
  for (std::size_t i = 0; i < model.grid.size(); ++i)
    csv.row({static_cast<double>(i), model.grid.freq_norm(i), ker.A[i],
             static_cast<double>(ker.validA[i])});
  std::printf("wrote phihat fields and normalization.csv to %s\n", a.out.c_str());
  return 0;
}

int cmd_var(const CommonArgs& a) {
  json j = load_json(a.config);
  ModelConfig mc = model_config_from_json(j);
  PhaseModel model = build_model(mc);
  auto mask = nyquist_mask(model.grid, mc.mask_fraction);
  EstimatorKernel ker = build_kernel(model, mask, Variant::local_invariant);
  std::string cxx = j.value("cxx", std::string("matched"));
  CXXOption opt = cxx == "option1"   ? CXXOption::option1
                  : cxx == "option2" ? CXXOption::option2
                                     : CXXOption::matched;
  ErrorSpectra es = make_error_spectra(ker, opt);
  std::filesystem::create_directories(a.out);
  CsvWriter csv(a.out + "/var.csv");
  csv.header({"ell_index", "ell_norm", "Cvar", "Cphiphi", "valid"});
  for (std::size_t i = 0; i < model.grid.size(); ++i)
    csv.row({static_cast<double>(i), model.grid.freq_norm(i), es.Cvar[i], model.Cphi[i],
             static_cast<double>(ker.validA[i])});
  std::printf("model hash %016llx\n", (unsigned long long)es.model_hash);
  std::printf("wrote var.csv to %s\n", a.out.c_str());
  return 0;
}

int cmd_bias(const CommonArgs& a) {
  json j = load_json(a.config);
  ModelConfig mc = model_config_from_json(j);
  PhaseModel model = build_model(mc);
  auto mask = nyquist_mask(model.grid, mc.mask_fraction);
  EstimatorKernel ker = build_kernel(model, mask, Variant::local_invariant);
  ErrorSpectra es_fast = make_error_spectra(ker, CXXOption::matched);
  const rvec& fast = es_fast.Cbias;
  bool want_exact = j.value("exact", false);
  rvec exact;
  if (want_exact)
    exact = bias_spectrum_exact(ker, a.force ? model.grid.size() : (std::size_t(1) << 13));
  std::filesystem::create_directories(a.out);
  CsvWriter csv(a.out + "/bias.csv");
  if (want_exact)
    csv.header({"ell_index", "ell_norm", "Cbias_fast", "Cbias_exact", "Cphiphi", "valid"});
  else
    csv.header({"ell_index", "ell_norm", "Cbias_fast", "Cphiphi", "valid"});
  for (std::size_t i = 0; i < model.grid.size(); ++i) {
    if (want_exact)
      csv.row({static_cast<double>(i), model.grid.freq_norm(i), fast[i], exact[i], model.Cphi[i],
               static_cast<double>(ker.validA[i])});
    else
      csv.row({static_cast<double>(i), model.grid.freq_norm(i), fast[i], model.Cphi[i],
               static_cast<double>(ker.validA[i])});
  }
  std::printf("wrote bias.csv to %s\n", a.out.c_str());
  return 0;
}

int cmd_transport(const CommonArgs& a) {
  json j = load_json(a.config);
  ModelConfig mc = model_config_from_json(j);
  if (!mc.has_transport)
    throw ValidationError("transport: config must use an eta descriptor of kind 'transport'");
  const GridSpec& g = mc.grid;
  std::filesystem::create_directories(a.out);
  {
    CsvWriter csv(a.out + "/eta.csv");
    csv.header({"r", "eta"});
    for (int jn = 0; jn <= g.n / 2; ++jn) {
      double r = jn * g.dk;
      csv.row({r, r == 0.0 ? 0.0 : (mc.transport.psi_prime(r) - r) / mc.transport.t0});
    }
  }
  int nsteps = j.value("geodesic_steps", 5);
  rvec radii;
  for (int jn = 0; jn <= g.n / 2; ++jn) radii.push_back(jn * g.dk);
  for (int s = 0; s <= nsteps; ++s) {
    double t = mc.transport.t0 * s / nsteps;
    GeodesicTable tab = geodesic_density(mc.transport, t, radii);
    CsvWriter csv(a.out + "/geodesic_" + std::to_string(s) + ".csv");
    csv.header({"r", "density"});
    for (std::size_t i = 0; i < tab.s.size(); ++i) csv.row({tab.s[i], tab.density[i]});
  }
  std::printf("wrote eta.csv and geodesic tables to %s\n", a.out.c_str());
  return 0;
}

int cmd_cutlocus(const CommonArgs& a) {
  json j = load_json(a.config);
  ModelConfig mc = model_config_from_json(j);
  PhaseModel model = build_model(mc);
  const GridSpec& g = model.grid;
  std::array<double, 4> A = {1.0, 0.0, 0.0, 1.0};
  if (j.contains("A")) {
    auto v = j.at("A").get<std::vector<double>>();
    for (std::size_t i = 0; i < v.size() && i < 4; ++i) A[i] = v[i];
  }
  CutLocusResult res = cut_locus_c0(model.eta_raw, A, g);
  std::filesystem::create_directories(a.out);
  std::ofstream out(a.out + "/cutlocus.json");
  json summary = {{"c0", res.unbounded ? -1.0 : res.c0}, {"unbounded", res.unbounded}};
  out << summary.dump(2) << "\n";
  if (!res.unbounded) {
    CsvWriter csv(a.out + "/cutlocus_profile.csv");
    csv.header({"ell_index", "ell_norm", "min_eigenvalue"});
    for (std::size_t i = 0; i < g.size(); ++i)
      csv.row({static_cast<double>(i), g.freq_norm(i), res.min_eig_profile[i]});
  }
  if (res.unbounded)
    std::printf("c0: unbounded\n");
  else
    std::printf("c0 = %.6g\n", res.c0);
  return 0;
}

int cmd_experiment(const CommonArgs& a) {
  json j = load_json(a.config);
  ExperimentConfig cfg = experiment_config_from_json(j);
  if (a.out != ".") cfg.out_dir = a.out;
  if (a.seed != 1) cfg.seed = a.seed;
  if (a.force) cfg.force = true;
  if (a.workers != 1) cfg.workers = a.workers;
  int rc = run_experiment(cfg);
  std::printf("experiment %s finished; outputs in %s\n", cfg.experiment.c_str(),
              cfg.out_dir.c_str());
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadratic estimation of locally invariant nonstationarity"};
  app.require_subcommand(1);

  CommonArgs a;
  auto add_common = [&](CLI::App* sub, bool need_config = true) {
    auto* opt = sub->add_option("--config", a.config, "JSON config file");
    if (need_config) opt->required();
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--seed", a.seed, "random seed");
    sub->add_option("--workers", a.workers, "worker threads");
    sub->add_flag("--force", a.force, "lift cost caps");
  };

  auto* sim = app.add_subcommand("simulate", "simulate phi, theta and Z^obs");
  add_common(sim);
  auto* est = app.add_subcommand("estimate", "quadratic estimate from a field file");
  add_common(est);
  est->add_option("--field", a.field, "input Z^obs field (binary format)")->required();
  auto* var = app.add_subcommand("var", "analytic variance spectrum");
  add_common(var);
  auto* bias = app.add_subcommand("bias", "analytic bias spectra");
  add_common(bias);
  auto* tra = app.add_subcommand("transport", "eta table and geodesic densities");
  add_common(tra);
  auto* cut = app.add_subcommand("cutlocus", "symmetric two-sided cut locus");
  add_common(cut);
  auto* expn = app.add_subcommand("experiment", "run a preset or custom experiment");
  add_common(expn);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(a);
    if (est->parsed()) return cmd_estimate(a);
    if (var->parsed()) return cmd_var(a);
    if (bias->parsed()) return cmd_bias(a);
    if (tra->parsed()) return cmd_transport(a);
    if (cut->parsed()) return cmd_cutlocus(a);
    if (expn->parsed()) return cmd_experiment(a);
  } catch (const CostCapError& e) {
    std::cerr << "cost cap: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
