#include "nonstat/io.hpp"

#include <cstdio>
#include <fstream>

#include "nonstat/errors.hpp"

namespace nonstat {

using nlohmann::json;

void write_field(const std::string& path, const Field& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("write_field: cannot open " + path);
  json header = {{"d", f.grid.d},
                 {"L", f.grid.L},
                 {"n", f.grid.n},
                 {"domain", f.domain == Domain::pixel ? "pixel" : "fourier"}};
  out << header.dump() << "\n";
  if (f.domain == Domain::pixel) {
    rvec vals = real_part(f.v);
    out.write(reinterpret_cast<const char*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * sizeof(double)));
  } else {
    out.write(reinterpret_cast<const char*>(f.v.data()),
              static_cast<std::streamsize>(f.v.size() * 2 * sizeof(double)));
  }
  if (!out) throw ValidationError("write_field: write failed for " + path);
}

Field read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("read_field: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("read_field: missing header in " + path);
  json header = json::parse(line);
  GridSpec g = make_grid(header.at("d").get<int>(), header.at("L").get<double>(),
                         header.at("n").get<int>());
  std::string dom = header.at("domain").get<std::string>();
  Field f = make_field(g, dom == "pixel" ? Domain::pixel : Domain::fourier);
  if (dom == "pixel") {
    rvec vals(g.size());
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!in) throw ValidationError("read_field: truncated data in " + path);
    for (std::size_t i = 0; i < vals.size(); ++i) f.v[i] = cplx(vals[i], 0.0);
  } else {
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * 2 * sizeof(double)));
    if (!in) throw ValidationError("read_field: truncated data in " + path);
  }
  return f;
}

GridSpec grid_from_json(const json& j) {
  return make_grid(j.at("d").get<int>(), j.at("L").get<double>(), j.at("n").get<int>());
}

SpectralDensity density_from_json(const json& j, int d) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "matern")
    return matern(j.at("nu").get<double>(), j.at("rho").get<double>(),
                  j.at("sigma2").get<double>(), d);
  if (kind == "constant") return constant_density(j.at("value").get<double>());
  if (kind == "zero") return zero_density();
  if (kind == "tabulated")
    return tabulated_density(j.at("r").get<rvec>(), j.at("value").get<rvec>());
  throw ValidationError("density_from_json: unknown kind '" + kind + "'");
}

static SpectralMultiplier multiplier_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "gradient") return {SpectralMultiplier::Kind::gradient};
  if (kind == "ones") return {SpectralMultiplier::Kind::ones};
  if (kind == "rot_gradient") return {SpectralMultiplier::Kind::rot_gradient};
  throw ValidationError("multiplier_from_json: unknown kind '" + kind + "'");
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.grid = grid_from_json(j.at("grid"));
  cfg.C = density_from_json(j.at("C"), cfg.grid.d);
  cfg.prior = j.contains("prior") ? density_from_json(j.at("prior"), cfg.grid.d) : zero_density();
  cfg.noise = j.contains("noise") ? density_from_json(j.at("noise"), cfg.grid.d) : zero_density();
  cfg.xi = j.contains("xi") ? multiplier_from_json(j.at("xi"))
                            : SpectralMultiplier{SpectralMultiplier::Kind::gradient};
  if (j.contains("marginal") && j.at("marginal").get<std::string>() == "option2")
    cfg.marginal = MarginalOption::option2;
  cfg.mask_fraction = j.value("mask_fraction", 0.0);

  const json& je = j.at("eta");
  std::string kind = je.at("kind").get<std::string>();
  if (kind == "zero") {
    cfg.eta = zero_eta();
  } else if (kind == "linear") {
    cfg.eta = linear_eta();
  } else if (kind == "table") {
    cfg.eta = tabulated_eta(je.at("r").get<rvec>(), je.at("value").get<rvec>());
  } else if (kind == "transport") {
    SpectralDensity target = density_from_json(je.at("target"), cfg.grid.d);
    cfg.transport = build_transport(cfg.C, target, je.at("t0").get<double>(), cfg.grid.d);
    cfg.eta = cfg.transport.eta;
    cfg.has_transport = true;
  } else {
    throw ValidationError("eta descriptor: unknown kind '" + kind + "'");
  }
  return cfg;
}

PhaseModel build_model(const ModelConfig& cfg, std::size_t option2_cap) {
  return build_phase_model(cfg.grid, cfg.C, cfg.eta, cfg.xi, cfg.prior, cfg.noise, cfg.marginal,
                           option2_cap);
}

CsvWriter::CsvWriter(const std::string& path) {
  f_ = std::fopen(path.c_str(), "w");
  if (!f_) throw ValidationError("CsvWriter: cannot open " + path);
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(static_cast<std::FILE*>(f_));
}

void CsvWriter::header(const std::vector<std::string>& names) {
  auto* f = static_cast<std::FILE*>(f_);
  for (std::size_t i = 0; i < names.size(); ++i)
    std::fprintf(f, "%s%s", names[i].c_str(), i + 1 < names.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<double>& values) {
  auto* f = static_cast<std::FILE*>(f_);
  for (std::size_t i = 0; i < values.size(); ++i)
    std::fprintf(f, "%.17g%s", values[i], i + 1 < values.size() ? "," : "\n");
}

}  // namespace nonstat
