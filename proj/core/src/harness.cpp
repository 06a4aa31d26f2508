#include "blockboot/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "blockboot/errors.hpp"
#include "blockboot/parallel.hpp"
#include "blockboot/rng.hpp"

namespace blockboot {

namespace {

using njson = nlohmann::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Substream lanes: 1 = replication series, 2 = bootstrap draws, 3 = oracle.
constexpr std::uint64_t kLaneSeries = 1;
constexpr std::uint64_t kLaneDraws = 2;
constexpr std::uint64_t kLaneOracle = 3;

std::uint64_t cell_tag(std::size_t b, std::size_t ell) noexcept {
  return (static_cast<std::uint64_t>(b) << 32) ^ static_cast<std::uint64_t>(ell);
}

// Grid-point layout within one (b, ell) cell:
// [NBC] [UNS: one per k1] [EBC: k1-major, c2-minor].
struct CellLayout {
  bool has_nbc = false;
  bool has_uns = false;
  bool has_ebc = false;
  std::size_t nk1 = 0;
  std::size_t nc2 = 0;

  std::size_t points() const noexcept {
    return (has_nbc ? 1 : 0) + (has_uns ? nk1 : 0) + (has_ebc ? nk1 * nc2 : 0);
  }
  std::size_t nbc_point() const noexcept { return 0; }
  std::size_t uns_point(std::size_t k1i) const noexcept {
    return (has_nbc ? 1 : 0) + k1i;
  }
  std::size_t ebc_point(std::size_t k1i, std::size_t c2i) const noexcept {
    return (has_nbc ? 1 : 0) + (has_uns ? nk1 : 0) + k1i * nc2 + c2i;
  }
};

CellLayout make_layout(const ExperimentConfig& cfg,
                       BootstrapMethod only = BootstrapMethod::Custom,
                       bool restrict_method = false) {
  CellLayout lay;
  for (const BootstrapMethod m : cfg.methods) {
    if (restrict_method && m != only) continue;
    if (m == BootstrapMethod::NBC) lay.has_nbc = true;
    if (m == BootstrapMethod::UNS) lay.has_uns = true;
    if (m == BootstrapMethod::EBC) lay.has_ebc = true;
  }
  lay.nk1 = cfg.k1_grid.size();
  lay.nc2 = cfg.c2_grid.size();
  return lay;
}

// Number of first-term values <= threshold; `first` must be sorted.
std::size_t count_leq(const std::vector<double>& first, double threshold) {
  return static_cast<std::size_t>(
      std::upper_bound(first.begin(), first.end(), threshold) - first.begin());
}

// Fills phat[r * P + gp] with the bootstrap CDF estimates for one (b, ell)
// cell. One shared set of B*b block indices per replication serves every
// grid point, so each P_hat keeps its B-draw Monte Carlo law while the whole
// tuning grid costs one pass per bandwidth.
void run_cell_grid(const ExperimentConfig& cfg, std::size_t b, std::size_t ell,
                   const CellLayout& lay, unsigned workers,
                   std::vector<double>& phat) {
  const std::size_t n = cfg.n;
  const std::size_t m = n - ell + 1;
  const std::size_t P = lay.points();
  const std::uint64_t B = cfg.B;
  const std::uint64_t master = *cfg.master_seed;
  const double y = cfg.y;

  // Parameter sets that do not depend on the replication.
  BootstrapParams nbc;
  if (lay.has_nbc) {
    nbc = make_nbc_params(n, cfg.h, b, ell, cfg.c0);
    nbc.validate(n);
  }
  struct EbcConsts {
    double tau, k2, k3;
  };
  std::vector<EbcConsts> ebc(lay.has_ebc ? lay.nc2 : 0);
  if (lay.has_ebc) {
    for (std::size_t c2i = 0; c2i < lay.nc2; ++c2i) {
      const BootstrapParams p =
          make_ebc_params(n, cfg.h, b, ell, cfg.k1_grid.front(), cfg.c0,
                          cfg.c2_grid[c2i]);
      ebc[c2i] = {p.tau, p.k2, p.k3};
    }
    make_ebc_params(n, cfg.h, b, ell, cfg.k1_grid.front(), cfg.c0,
                    cfg.c2_grid.front())
        .validate(n);
  }
  if (lay.has_uns) {
    make_uns_params(b, ell, cfg.k1_grid.front()).validate(n);
  }

  phat.assign(static_cast<std::size_t>(cfg.R) * P, 0.0);

  parallel_for_index(cfg.R, workers, [&](std::size_t r) {
    const TimeSeriesSample sample =
        simulate(cfg.model, n, substream_seed(master, kLaneSeries, r));

    RngStream rng(substream_seed(master, kLaneDraws, r, cell_tag(b, ell)));
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(B) * b);
    for (auto& v : idx) v = static_cast<std::uint32_t>(rng.uniform_index(m));

    double* out = phat.data() + r * P;
    const double bd = static_cast<double>(b);
    std::vector<double> first(B);

    const auto fill_first = [&](const BlockStats& stats, double scale,
                                double cm) {
      const double* u = stats.values.data();
      const std::uint32_t* id = idx.data();
      for (std::uint64_t j = 0; j < B; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < b; ++i) sum += u[id[i]];
        id += b;
        first[j] = scale * (sum / bd - cm);
      }
    };

    if (lay.has_nbc) {
      const BlockStats stats = block_stats(sample, ell, nbc.k1, cfg.x0, cfg.kernel);
      const double cm = conditional_mean(stats);
      const double f3 = kde(sample, DensityEvalPoint{cfg.x0, nbc.k3}, cfg.kernel);
      const double shift = nbc.tau * (cm - f3);
      const double scale = std::sqrt(bd * static_cast<double>(ell) * nbc.k1);
      fill_first(stats, scale, cm);
      std::size_t count = 0;
      for (std::uint64_t j = 0; j < B; ++j) {
        if (first[j] <= y - shift) ++count;
      }
      out[lay.nbc_point()] =
          static_cast<double>(count) / static_cast<double>(B);
    }

    if (lay.has_uns || lay.has_ebc) {
      // The EBC correction term does not depend on k1.
      std::vector<double> ebc_shift(lay.has_ebc ? lay.nc2 : 0);
      for (std::size_t c2i = 0; c2i < ebc_shift.size(); ++c2i) {
        const BlockStats s2 =
            block_stats(sample, ell, ebc[c2i].k2, cfg.x0, cfg.kernel);
        const double f3 =
            kde(sample, DensityEvalPoint{cfg.x0, ebc[c2i].k3}, cfg.kernel);
        ebc_shift[c2i] = ebc[c2i].tau * (conditional_mean(s2) - f3);
      }

      for (std::size_t k1i = 0; k1i < lay.nk1; ++k1i) {
        const double k1 = cfg.k1_grid[k1i];
        const BlockStats stats = block_stats(sample, ell, k1, cfg.x0, cfg.kernel);
        const double cm = conditional_mean(stats);
        const double scale = std::sqrt(bd * static_cast<double>(ell) * k1);
        fill_first(stats, scale, cm);
        std::sort(first.begin(), first.end());
        if (lay.has_uns) {
          out[lay.uns_point(k1i)] =
              static_cast<double>(count_leq(first, y)) /
              static_cast<double>(B);
        }
        if (lay.has_ebc) {
          for (std::size_t c2i = 0; c2i < lay.nc2; ++c2i) {
            out[lay.ebc_point(k1i, c2i)] =
                static_cast<double>(count_leq(first, y - ebc_shift[c2i])) /
                static_cast<double>(B);
          }
        }
      }
    }
  });
}

struct GridPointStats {
  double mse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double mc_std_err = 0.0;
};

// Fixed-order reduction over replications (deterministic for any worker count).
GridPointStats reduce_point(const std::vector<double>& phat, std::size_t P,
                            std::size_t gp, std::uint64_t R, double oracle_p) {
  double se = 0.0, se2 = 0.0, se4 = 0.0;
  for (std::uint64_t r = 0; r < R; ++r) {
    const double e = phat[r * P + gp] - oracle_p;
    const double e2 = e * e;
    se += e;
    se2 += e2;
    se4 += e2 * e2;
  }
  const double rd = static_cast<double>(R);
  GridPointStats s;
  s.mse = se2 / rd;
  s.bias = se / rd;
  s.variance = s.mse - s.bias * s.bias;
  s.mc_std_err = std::sqrt(std::max(0.0, se4 / rd - s.mse * s.mse) / rd);
  return s;
}

}  // namespace

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 1) {
    throw std::invalid_argument("log_spaced requires 0 < lo < hi, count >= 1");
  }
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i) {
    g[i] = std::exp(llo + (lhi - llo) * i / (count - 1));
  }
  return g;
}

std::vector<double> default_k1_grid() { return log_spaced(0.05, 12.0, 37); }
std::vector<double> default_c2_grid() { return log_spaced(0.2, 60.0, 29); }

void ExperimentConfig::validate() const {
  if (n < 2) throw ConfigError("n must be >= 2");
  if (B < 1 || R < 1 || oracle_R < 1) {
    throw ConfigError("B, R and oracle_R must be >= 1");
  }
  if (!(h > 0.0)) throw ConfigError("h must be positive");
  if (!(c0 > 0.0 && c0 < 1.0)) throw ConfigError("c0 must lie in (0,1)");
  if (methods.empty()) throw ConfigError("methods must be nonempty");
  if (grid_bl.empty()) throw ConfigError("grid_bl must be nonempty");
  const bool needs_k1 =
      std::find(methods.begin(), methods.end(), BootstrapMethod::UNS) !=
          methods.end() ||
      std::find(methods.begin(), methods.end(), BootstrapMethod::EBC) !=
          methods.end();
  const bool needs_c2 =
      std::find(methods.begin(), methods.end(), BootstrapMethod::EBC) !=
      methods.end();
  if (needs_k1 && k1_grid.empty()) {
    throw ConfigError("k1_grid must be nonempty for UNS/EBC");
  }
  if (needs_c2 && c2_grid.empty()) {
    throw ConfigError("c2_grid must be nonempty for EBC");
  }
  for (const double v : k1_grid) {
    if (!(v > 0.0)) throw ConfigError("k1_grid values must be positive");
  }
  for (const double v : c2_grid) {
    if (!(v > 0.0)) throw ConfigError("c2_grid values must be positive");
  }
  for (const auto& [b, ell] : grid_bl) {
    if (b < 1 || ell < 1) throw ConfigError("grid_bl entries must be >= 1");
  }
}

namespace {

std::vector<double> parse_grid_node(const njson& node, const std::string& name) {
  if (node.is_array()) {
    std::vector<double> g;
    for (const auto& v : node) {
      if (!v.is_number()) {
        throw ConfigError(name + " array entries must be numbers");
      }
      g.push_back(v.get<double>());
    }
    return g;
  }
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) {
      (void)v;
      if (k != "min" && k != "max" && k != "points" && k != "scale") {
        throw ConfigError("unknown key in " + name + ": " + k);
      }
    }
    const double lo = node.at("min").get<double>();
    const double hi = node.at("max").get<double>();
    const int count = node.at("points").get<int>();
    const std::string scale = node.value("scale", "log");
    if (scale == "log") return log_spaced(lo, hi, count);
    if (scale == "linear") {
      std::vector<double> g(count);
      for (int i = 0; i < count; ++i) {
        g[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
      }
      return g;
    }
    throw ConfigError(name + ".scale must be \"log\" or \"linear\"");
  }
  throw ConfigError(name + " must be an array or {min,max,points[,scale]}");
}

BootstrapMethod parse_method(const std::string& s) {
  if (s == "EBC" || s == "ebc") return BootstrapMethod::EBC;
  if (s == "NBC" || s == "nbc") return BootstrapMethod::NBC;
  if (s == "UNS" || s == "uns") return BootstrapMethod::UNS;
  throw ConfigError("unknown method: " + s);
}

KernelSpec parse_kernel(const std::string& s) {
  if (s == "epanechnikov") return KernelSpec::epanechnikov();
  if (s == "gaussian") return KernelSpec::gaussian();
  throw ConfigError("unknown kernel: " + s);
}

void apply_overrides(
    njson& j, const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [key, value] : overrides) {
    njson* node = &j;
    std::size_t start = 0;
    for (;;) {
      const std::size_t dot = key.find('.', start);
      const std::string part = key.substr(start, dot - start);
      if (part.empty()) throw ConfigError("malformed override key: " + key);
      if (dot == std::string::npos) {
        njson parsed = njson::parse(value, nullptr, false);
        (*node)[part] = parsed.is_discarded() ? njson(value) : parsed;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(
    const std::string& json_text,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  njson j;
  try {
    j = njson::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  apply_overrides(j, overrides);

  static const std::set<std::string> known = {
      "model", "n", "x0", "y", "h", "kernel", "methods", "grid_bl",
      "k1_grid", "c2_grid", "c0", "B", "R", "oracle_R", "master_seed"};
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!known.count(k)) throw ConfigError("unknown config key: " + k);
  }

  ExperimentConfig cfg;
  try {
    if (j.contains("model")) {
      const njson& jm = j["model"];
      static const std::set<std::string> mkeys = {"phi", "theta",
                                                  "innovation_sd", "id"};
      for (const auto& [k, v] : jm.items()) {
        (void)v;
        if (!mkeys.count(k)) throw ConfigError("unknown config key: model." + k);
      }
      cfg.model = ProcessModel(jm.value("phi", 0.4), jm.value("theta", 0.3),
                               jm.value("innovation_sd", 1.0),
                               jm.value("id", std::string("arma11")));
    }
    if (j.contains("n")) cfg.n = j["n"].get<std::size_t>();
    if (j.contains("x0")) cfg.x0 = j["x0"].get<double>();
    if (j.contains("y")) cfg.y = j["y"].get<double>();
    if (j.contains("h")) cfg.h = j["h"].get<double>();
    if (j.contains("kernel")) cfg.kernel = parse_kernel(j["kernel"].get<std::string>());
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& v : j["methods"]) {
        cfg.methods.push_back(parse_method(v.get<std::string>()));
      }
    }
    if (j.contains("grid_bl")) {
      cfg.grid_bl.clear();
      for (const auto& v : j["grid_bl"]) {
        if (!v.is_array() || v.size() != 2) {
          throw ConfigError("grid_bl entries must be [b, ell] pairs");
        }
        cfg.grid_bl.emplace_back(v[0].get<std::size_t>(),
                                 v[1].get<std::size_t>());
      }
    }
    if (j.contains("k1_grid")) cfg.k1_grid = parse_grid_node(j["k1_grid"], "k1_grid");
    if (j.contains("c2_grid")) cfg.c2_grid = parse_grid_node(j["c2_grid"], "c2_grid");
    if (j.contains("c0")) cfg.c0 = j["c0"].get<double>();
    if (j.contains("B")) cfg.B = j["B"].get<std::uint64_t>();
    if (j.contains("R")) cfg.R = j["R"].get<std::uint64_t>();
    if (j.contains("oracle_R")) cfg.oracle_R = j["oracle_R"].get<std::uint64_t>();
    if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), overrides);
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  njson j;
  j["model"] = {{"phi", cfg.model.phi()},
                {"theta", cfg.model.theta()},
                {"innovation_sd", cfg.model.innovation_sd()},
                {"id", cfg.model.id()}};
  j["n"] = cfg.n;
  j["x0"] = cfg.x0;
  j["y"] = cfg.y;
  j["h"] = cfg.h;
  j["kernel"] = cfg.kernel.name();
  njson methods = njson::array();
  for (const auto m : cfg.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  njson grid = njson::array();
  for (const auto& [b, ell] : cfg.grid_bl) grid.push_back({b, ell});
  j["grid_bl"] = grid;
  j["k1_grid"] = cfg.k1_grid;
  j["c2_grid"] = cfg.c2_grid;
  j["c0"] = cfg.c0;
  j["B"] = cfg.B;
  j["R"] = cfg.R;
  j["oracle_R"] = cfg.oracle_R;
  if (cfg.master_seed) j["master_seed"] = *cfg.master_seed;
  return j.dump(2);
}

OracleResult true_cdf_oracle(const ProcessModel& model, std::size_t n,
                             double x0, double y, double h,
                             const KernelSpec& kernel, std::uint64_t oracle_R,
                             std::uint64_t seed, unsigned workers) {
  if (oracle_R < 100) throw InfeasibleError("oracle_R must be >= 100");
  const double f_true = model.marginal_density(x0);
  std::vector<std::uint8_t> hit(oracle_R, 0);
  parallel_for_index(oracle_R, resolve_workers(workers), [&](std::size_t r) {
    const TimeSeriesSample s = simulate(model, n, substream_seed(seed, kLaneSeries, r));
    const double t = t_statistic(s, DensityEvalPoint{x0, h}, kernel, f_true);
    hit[r] = t <= y ? 1 : 0;
  });
  std::uint64_t count = 0;
  for (const auto v : hit) count += v;
  OracleResult res;
  res.p = static_cast<double>(count) / static_cast<double>(oracle_R);
  res.std_err =
      std::sqrt(res.p * (1.0 - res.p) / static_cast<double>(oracle_R));
  return res;
}

double kde_bias_oracle(const ProcessModel& model, std::size_t n, double x0,
                       double h, const KernelSpec& kernel,
                       std::uint64_t oracle_R, std::uint64_t seed,
                       unsigned workers) {
  if (oracle_R < 100) throw InfeasibleError("oracle_R must be >= 100");
  const double f_true = model.marginal_density(x0);
  std::vector<double> dev(oracle_R, 0.0);
  parallel_for_index(oracle_R, resolve_workers(workers), [&](std::size_t r) {
    const TimeSeriesSample s = simulate(model, n, substream_seed(seed, kLaneSeries, r));
    dev[r] = kde(s, DensityEvalPoint{x0, h}, kernel) - f_true;
  });
  double sum = 0.0;
  for (const double v : dev) sum += v;
  return sum / static_cast<double>(oracle_R);
}

MseReport mse_experiment(const ExperimentConfig& cfg, unsigned workers) {
  cfg.validate();
  if (!cfg.master_seed) {
    throw ConfigError("master_seed is required for mse_experiment");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const unsigned w = resolve_workers(workers);

  MseReport report;
  report.master_seed = *cfg.master_seed;
  report.config_json = experiment_config_to_json(cfg);

  const OracleResult oracle = true_cdf_oracle(
      cfg.model, cfg.n, cfg.x0, cfg.y, cfg.h, cfg.kernel, cfg.oracle_R,
      substream_seed(*cfg.master_seed, kLaneOracle), w);
  report.oracle_p = oracle.p;
  report.oracle_std_err = oracle.std_err;

  const CellLayout lay = make_layout(cfg);
  std::vector<double> phat;
  for (const auto& [b, ell] : cfg.grid_bl) {
    if (ell > cfg.n) {
      for (const BootstrapMethod m : cfg.methods) {
        MseCell cell;
        cell.method = m;
        cell.b = b;
        cell.ell = ell;
        cell.feasible = false;
        report.cells.push_back(cell);
      }
      continue;
    }
    run_cell_grid(cfg, b, ell, lay, w, phat);
    const std::size_t P = lay.points();

    for (const BootstrapMethod m : cfg.methods) {
      MseCell cell;
      cell.method = m;
      cell.b = b;
      cell.ell = ell;
      if (m == BootstrapMethod::NBC) {
        const GridPointStats s =
            reduce_point(phat, P, lay.nbc_point(), cfg.R, oracle.p);
        cell.best_k1 = make_nbc_params(cfg.n, cfg.h, b, ell, cfg.c0).k1;
        cell.mse = s.mse;
        cell.bias = s.bias;
        cell.variance = s.variance;
        cell.mc_std_err = s.mc_std_err;
      } else if (m == BootstrapMethod::UNS) {
        GridPointStats best;
        std::size_t best_i = 0;
        for (std::size_t k1i = 0; k1i < lay.nk1; ++k1i) {
          const GridPointStats s =
              reduce_point(phat, P, lay.uns_point(k1i), cfg.R, oracle.p);
          if (k1i == 0 || s.mse < best.mse) {
            best = s;
            best_i = k1i;
          }
        }
        cell.best_k1 = cfg.k1_grid[best_i];
        cell.mse = best.mse;
        cell.bias = best.bias;
        cell.variance = best.variance;
        cell.mc_std_err = best.mc_std_err;
      } else {  // EBC
        GridPointStats best;
        std::size_t best_k1i = 0, best_c2i = 0;
        bool first_pt = true;
        for (std::size_t k1i = 0; k1i < lay.nk1; ++k1i) {
          for (std::size_t c2i = 0; c2i < lay.nc2; ++c2i) {
            const GridPointStats s = reduce_point(
                phat, P, lay.ebc_point(k1i, c2i), cfg.R, oracle.p);
            if (first_pt || s.mse < best.mse) {
              best = s;
              best_k1i = k1i;
              best_c2i = c2i;
              first_pt = false;
            }
          }
        }
        cell.best_k1 = cfg.k1_grid[best_k1i];
        cell.best_c2 = cfg.c2_grid[best_c2i];
        cell.mse = best.mse;
        cell.bias = best.bias;
        cell.variance = best.variance;
        cell.mc_std_err = best.mc_std_err;
      }
      report.cells.push_back(cell);
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

std::string mse_report_csv(const MseReport& report) {
  std::ostringstream os;
  os << "method,b,ell,best_k1,best_c2,mse,bias,variance,mc_std_err\n";
  const auto field = [](double v) {
    return std::isnan(v) ? std::string() : fmt17(v);
  };
  for (const MseCell& c : report.cells) {
    os << to_string(c.method) << ',' << c.b << ',' << c.ell << ','
       << field(c.best_k1) << ',' << field(c.best_c2) << ',' << field(c.mse)
       << ',' << field(c.bias) << ',' << field(c.variance) << ','
       << field(c.mc_std_err) << '\n';
  }
  return os.str();
}

void write_mse_csv(const std::filesystem::path& path, const MseReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << mse_report_csv(report);
}

void write_mse_sidecar_json(const std::filesystem::path& path,
                            const MseReport& report) {
  njson j;
  j["config"] = njson::parse(report.config_json);
  j["oracle_p"] = report.oracle_p;
  j["oracle_std_err"] = report.oracle_std_err;
  j["master_seed"] = report.master_seed;
  j["wall_seconds"] = report.wall_seconds;
  j["cells"] = report.cells.size();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<CumulantRow> cumulant_check(const ProcessModel& model,
                                        std::span<const std::size_t> n_list,
                                        const HRule& h_rule, double x0,
                                        const KernelSpec& kernel,
                                        std::uint64_t R, std::uint64_t seed,
                                        unsigned workers) {
  if (R < 1000) throw InfeasibleError("cumulant_check requires R >= 1000");
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) {
      throw InfeasibleError("n_list must be increasing");
    }
  }
  const unsigned w = resolve_workers(workers);
  const TrueDensity td = model.true_density(x0);

  std::vector<CumulantRow> rows;
  std::vector<double> fhat(R);
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const std::size_t n = n_list[ni];
    const double h =
        h_rule.c * std::pow(static_cast<double>(n), -h_rule.exponent);
    parallel_for_index(R, w, [&](std::size_t r) {
      const TimeSeriesSample s =
          simulate(model, n, substream_seed(seed, kLaneSeries, r, ni));
      fhat[r] = kde(s, DensityEvalPoint{x0, h}, kernel);
    });
    double mean = 0.0;
    for (const double v : fhat) mean += v;
    mean /= static_cast<double>(R);
    double var = 0.0, m4 = 0.0;
    for (const double v : fhat) {
      const double d = v - mean;
      var += d * d;
      m4 += d * d * d * d;
    }
    var /= static_cast<double>(R);
    m4 /= static_cast<double>(R);

    CumulantRow row;
    row.n = n;
    row.h = h;
    row.var_hat = var;
    const double scale = static_cast<double>(n) * h / (td.f_x0 * kernel.nu2());
    row.ratio = var * scale;
    row.ratio_std_err =
        std::sqrt(std::max(0.0, m4 - var * var) / static_cast<double>(R)) *
        scale;
    row.mean_fhat = mean;
    row.expected_mean = td.f_x0 + h * h * td.f2_x0 * kernel.mu2() / 2.0;
    row.mean_std_err = std::sqrt(var / static_cast<double>(R));
    rows.push_back(row);
  }
  return rows;
}

std::string cumulant_rows_csv(std::span<const CumulantRow> rows) {
  std::ostringstream os;
  os << "n,h,var_hat,ratio,ratio_std_err,mean_fhat,expected_mean,mean_std_err\n";
  for (const CumulantRow& r : rows) {
    os << r.n << ',' << fmt17(r.h) << ',' << fmt17(r.var_hat) << ','
       << fmt17(r.ratio) << ',' << fmt17(r.ratio_std_err) << ','
       << fmt17(r.mean_fhat) << ',' << fmt17(r.expected_mean) << ','
       << fmt17(r.mean_std_err) << '\n';
  }
  return os.str();
}

std::vector<ScanPoint> sensitivity_scan(const ExperimentConfig& cfg,
                                        std::pair<std::size_t, std::size_t> cell,
                                        BootstrapMethod method,
                                        ScanParam param, unsigned workers) {
  cfg.validate();
  if (!cfg.master_seed) {
    throw ConfigError("master_seed is required for sensitivity_scan");
  }
  if (method == BootstrapMethod::NBC) {
    throw InfeasibleError("NBC has no tuning constants to scan");
  }
  if (method == BootstrapMethod::UNS && param != ScanParam::K1) {
    throw InfeasibleError("UNS has only the k1 constant");
  }
  const auto [b, ell] = cell;
  if (ell > cfg.n) throw InfeasibleError("block length exceeds sample");

  ExperimentConfig sub = cfg;
  sub.methods = {method};
  const CellLayout lay = make_layout(sub, method, true);
  const unsigned w = resolve_workers(workers);

  const OracleResult oracle = true_cdf_oracle(
      sub.model, sub.n, sub.x0, sub.y, sub.h, sub.kernel, sub.oracle_R,
      substream_seed(*sub.master_seed, kLaneOracle), w);

  std::vector<double> phat;
  run_cell_grid(sub, b, ell, lay, w, phat);
  const std::size_t P = lay.points();

  const auto mse_at = [&](std::size_t gp) {
    return reduce_point(phat, P, gp, sub.R, oracle.p).mse;
  };

  std::vector<ScanPoint> out;
  if (method == BootstrapMethod::UNS) {
    for (std::size_t k1i = 0; k1i < lay.nk1; ++k1i) {
      out.push_back({sub.k1_grid[k1i], std::numeric_limits<double>::quiet_NaN(),
                     mse_at(lay.uns_point(k1i))});
    }
    return out;
  }

  // EBC: locate the per-cell optimum first.
  std::size_t best_k1i = 0, best_c2i = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k1i = 0; k1i < lay.nk1; ++k1i) {
    for (std::size_t c2i = 0; c2i < lay.nc2; ++c2i) {
      const double m = mse_at(lay.ebc_point(k1i, c2i));
      if (m < best) {
        best = m;
        best_k1i = k1i;
        best_c2i = c2i;
      }
    }
  }
  switch (param) {
    case ScanParam::K1:
      for (std::size_t k1i = 0; k1i < lay.nk1; ++k1i) {
        out.push_back({sub.k1_grid[k1i], sub.c2_grid[best_c2i],
                       mse_at(lay.ebc_point(k1i, best_c2i))});
      }
      break;
    case ScanParam::C2:
      for (std::size_t c2i = 0; c2i < lay.nc2; ++c2i) {
        out.push_back({sub.k1_grid[best_k1i], sub.c2_grid[c2i],
                       mse_at(lay.ebc_point(best_k1i, c2i))});
      }
      break;
    case ScanParam::K1AndC2:
      for (std::size_t k1i = 0; k1i < lay.nk1; ++k1i) {
        for (std::size_t c2i = 0; c2i < lay.nc2; ++c2i) {
          out.push_back({sub.k1_grid[k1i], sub.c2_grid[c2i],
                         mse_at(lay.ebc_point(k1i, c2i))});
        }
      }
      break;
  }
  return out;
}

}  // namespace blockboot
