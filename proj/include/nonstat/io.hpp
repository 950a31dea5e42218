#ifndef NONSTAT_IO_HPP
#define NONSTAT_IO_HPP

#include <string>
#include <vector>

#include "json.hpp"
#include "nonstat/grid.hpp"
#include "nonstat/spectral.hpp"
#include "nonstat/transport.hpp"

namespace nonstat {

// Binary field format: one JSON header line {d, L, n, domain}, newline, then
// little-endian 64-bit floats, row-major. Pixel fields store the real values;
// fourier fields store interleaved re,im pairs.
void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);

// JSON model descriptors, e.g.
//   {"grid": {"d":1,"L":10,"n":1024},
//    "C": {"kind":"matern","nu":2,"rho":0.05,"sigma2":1},
//    "eta": {"kind":"transport","target":{"kind":"matern",...},"t0":1.5},
//    "xi": {"kind":"gradient"},
//    "prior": {"kind":"matern",...}, "noise": {"kind":"constant","value":0},
//    "marginal": "option1"}
SpectralDensity density_from_json(const nlohmann::json& j, int d);
GridSpec grid_from_json(const nlohmann::json& j);

struct ModelConfig {
  GridSpec grid;
  SpectralDensity C, prior, noise;
  EtaField eta;
  SpectralMultiplier xi;
  MarginalOption marginal = MarginalOption::option1;
  double mask_fraction = 0.0;
  // set when eta came from a transport descriptor
  bool has_transport = false;
  TransportSpec transport;
};

ModelConfig model_config_from_json(const nlohmann::json& j);
PhaseModel build_model(const ModelConfig& cfg, std::size_t option2_cap = std::size_t(1) << 13);

// CSV with a fixed %.17g number format so reruns are byte-identical.
struct CsvWriter {
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  void header(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);

 private:
  void* f_ = nullptr;
};

}  // namespace nonstat

#endif
