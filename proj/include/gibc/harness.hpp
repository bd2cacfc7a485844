// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_HARNESS_HPP
#define GIBC_HARNESS_HPP

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "gibc/io.hpp"
#include "gibc/parallel.hpp"

namespace gibc::harness
{

namespace fs = std::filesystem;

inline constexpr const char *kToolName = "gibc";
inline constexpr const char *kToolVersion = "0.3.0";
inline constexpr int kSchemaVersion = 1;

enum ExitCode
{
  kExitPass = 0,
  kExitAssertion = 1,
  kExitInvalidConfig = 2,
  kExitRuntime = 3
};

inline std::string sha256_hex(std::string_view data)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX *ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1)
  {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
  {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

inline std::string read_file(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in)
  {
    throw Error("cannot read " + p.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sha256_file(const fs::path &p) { return sha256_hex(read_file(p)); }

inline std::string utc_timestamp()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------------------

inline const std::vector<std::string> &experiment_names()
{
  static const std::vector<std::string> names{"weyl",        "fgf_convergence",   "multiplier_profile",
                                              "impedance_check", "acoustic_spectrum", "monte_carlo"};
  return names;
}

inline bool uses_mesh(const std::string &experiment)
{
  return experiment == "acoustic_spectrum" || experiment == "monte_carlo";
}

struct ExperimentConfig
{
  int schema_version = kSchemaVersion;
  std::string experiment;
  json geometry;  // null when the experiment uses a mesh
  json mesh;      // null when the experiment uses a boundary geometry
  json params = json::object();
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int workers = 0;  // 0: GIBC_WORKERS or hardware concurrency
  json tolerances = json::object();

  json to_json() const
  {
    json j{{"schema_version", schema_version},
           {"experiment", experiment},
           {"params", params},
           {"output_dir", output_dir},
           {"seed", seed},
           {"workers", workers},
           {"tolerances", tolerances}};
    if (!geometry.is_null())
    {
      j["geometry"] = geometry;
    }
    if (!mesh.is_null())
    {
      j["mesh"] = mesh;
    }
    return j;
  }

  static ExperimentConfig from_json(const json &j)
  {
    ExperimentConfig c;
    c.schema_version = j.value("schema_version", kSchemaVersion);
    c.experiment = j.value("experiment", "");
    c.geometry = j.value("geometry", json());
    c.mesh = j.value("mesh", json());
    c.params = j.value("params", json::object());
    c.output_dir = j.value("output_dir", "out");
    c.seed = j.value("seed", std::uint64_t{0});
    c.workers = j.value("workers", 0);
    c.tolerances = j.value("tolerances", json::object());
    return c;
  }

  bool operator==(const ExperimentConfig &o) const { return to_json() == o.to_json(); }
};

inline Tolerances tolerances_from_json(const json &j)
{
  Tolerances t;
  t.orth_curve = j.value("orth_curve", t.orth_curve);
  t.orth_surface = j.value("orth_surface", t.orth_surface);
  t.eigen_residual = j.value("eigen_residual", t.eigen_residual);
  t.psd_relative = j.value("psd_relative", t.psd_relative);
  t.psd_absolute = j.value("psd_absolute", t.psd_absolute);
  t.halfplane = j.value("halfplane", t.halfplane);
  return t;
}

// Sets a dotted path, e.g. "params.n_samples=20". The value is parsed as JSON when it
// parses, otherwise stored as a string.
inline void apply_override(json &cfg, const std::string &assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
  {
    throw InvalidArgument("override must be key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded())
  {
    value = raw;
  }
  json *node = &cfg;
  std::size_t start = 0;
  while (true)
  {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty())
    {
      throw InvalidArgument("empty path segment in override " + key);
    }
    if (!node->is_object())
    {
      *node = json::object();
    }
    if (dot == std::string::npos)
    {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

namespace detail
{

class Validator
{
public:
  std::vector<std::string> errors;

  void fail(const std::string &where, const std::string &msg) { errors.push_back(where + ": " + msg); }

  bool is_number(const json &j, const std::string &key, const std::string &where, bool required,
                 double lo = -std::numeric_limits<double>::infinity(),
                 double hi = std::numeric_limits<double>::infinity(), bool open_lo = false)
  {
    if (!j.contains(key))
    {
      if (required)
      {
        fail(where, "missing \"" + key + "\"");
      }
      return false;
    }
    if (!j.at(key).is_number())
    {
      fail(where + "." + key, "must be a number");
      return false;
    }
    const double v = j.at(key).get<double>();
    if (v < lo || v > hi || (open_lo && v == lo))
    {
      std::ostringstream os;
      os << "value " << v << " outside " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
      fail(where + "." + key, os.str());
      return false;
    }
    return true;
  }

  bool is_int(const json &j, const std::string &key, const std::string &where, bool required, long lo,
              long hi = std::numeric_limits<long>::max())
  {
    if (!j.contains(key))
    {
      if (required)
      {
        fail(where, "missing \"" + key + "\"");
      }
      return false;
    }
    if (!j.at(key).is_number_integer())
    {
      fail(where + "." + key, "must be an integer");
      return false;
    }
    const long v = j.at(key).get<long>();
    if (v < lo || v > hi)
    {
      fail(where + "." + key, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
      return false;
    }
    return true;
  }

  bool number_list(const json &j, const std::string &key, const std::string &where, bool required)
  {
    if (!j.contains(key))
    {
      if (required)
      {
        fail(where, "missing \"" + key + "\"");
      }
      return false;
    }
    const json &v = j.at(key);
    if (!v.is_array() || v.empty())
    {
      fail(where + "." + key, "must be a non-empty array");
      return false;
    }
    for (const auto &x : v)
    {
      if (!x.is_number())
      {
        fail(where + "." + key, "entries must be numbers");
        return false;
      }
    }
    return true;
  }

  void file_exists(const json &j, const std::string &where)
  {
    if (j.is_object() && j.contains("file"))
    {
      if (!j.at("file").is_string())
      {
        fail(where + ".file", "must be a path string");
      }
      else if (!fs::exists(j.at("file").get<std::string>()))
      {
        fail(where + ".file", "file does not exist: " + j.at("file").get<std::string>());
      }
    }
  }

  void geometry(const json &g)
  {
    const std::string w = "geometry";
    if (!g.is_object())
    {
      fail(w, "must be an object");
      return;
    }
    file_exists(g, w);
    if (g.contains("file"))
    {
      return;
    }
    if (!g.contains("builtin"))
    {
      if (!g.contains("dim"))
      {
        fail(w, "needs \"builtin\", \"file\" or an inline geometry with \"dim\"");
      }
      return;
    }
    const std::string b = g.at("builtin").is_string() ? g.at("builtin").get<std::string>() : "";
    is_number(g, "radius", w, false, 0.0, std::numeric_limits<double>::infinity(), true);
    if (b == "circle")
    {
    }
    else if (b == "regular_polygon")
    {
      is_int(g, "sides", w, true, 3);
    }
    else if (b == "icosphere" || b == "two_icospheres")
    {
      is_int(g, "level", w, true, 0, 8);
    }
    else
    {
      fail(w + ".builtin", "unknown builtin \"" + b + "\"");
    }
  }

  void mesh(const json &m, const std::string &w)
  {
    if (!m.is_object())
    {
      fail(w, "must be an object");
      return;
    }
    file_exists(m, w);
    if (m.contains("file"))
    {
      return;
    }
    const std::string b = m.contains("builtin") && m.at("builtin").is_string() ? m.at("builtin").get<std::string>() : "";
    if (b == "disk")
    {
      is_number(m, "radius", w, false, 0.0, std::numeric_limits<double>::infinity(), true);
      is_int(m, "rings", w, true, 1, 2000);
    }
    else if (b == "annulus")
    {
      is_number(m, "r_in", w, true, 0.0, std::numeric_limits<double>::infinity(), true);
      is_number(m, "r_out", w, true, 0.0, std::numeric_limits<double>::infinity(), true);
      is_int(m, "layers", w, true, 1, 2000);
      is_int(m, "segments", w, true, 6, 100000);
      if (m.contains("r_in") && m.contains("r_out") && m.at("r_in").is_number() && m.at("r_out").is_number() &&
          m.at("r_in").get<double>() >= m.at("r_out").get<double>())
      {
        fail(w, "r_in must be smaller than r_out");
      }
    }
    else if (b == "polygon")
    {
      if (!m.contains("vertices") || !m.at("vertices").is_array() || m.at("vertices").size() < 3)
      {
        fail(w + ".vertices", "needs at least 3 points");
      }
      is_number(m, "h", w, true, 0.0, std::numeric_limits<double>::infinity(), true);
    }
    else
    {
      fail(w, "needs \"file\" or builtin disk/annulus/polygon");
    }
    is_number(m, "beta", w, false, 0.0, std::numeric_limits<double>::infinity(), true);
  }

  void function_source(const json &f, const std::string &w)
  {
    if (!f.is_object() || !f.contains("kind") || !f.at("kind").is_string())
    {
      fail(w, "needs a string \"kind\"");
      return;
    }
    const std::string k = f.at("kind").get<std::string>();
    if (k == "constant")
    {
    }
    else if (k == "mode")
    {
      is_int(f, "index", w, true, 1);
    }
    else if (k == "coeffs")
    {
      number_list(f, "coeffs_re", w, true);
    }
    else if (k == "cantor")
    {
      is_number(f, "r", w, false, 0.0, 0.5, true);
      is_number(f, "samples", w, false, 1.0);
    }
    else if (k == "random")
    {
      random_impedance(f, w);
    }
    else
    {
      fail(w + ".kind", "unknown function kind \"" + k + "\"");
    }
  }

  void random_impedance(const json &r, const std::string &w)
  {
    is_number(r, "c", w, false);
    is_number(r, "s", w, false, 0.0, std::numeric_limits<double>::infinity(), true);
    if (r.contains("kernel_weights"))
    {
      if (number_list(r, "kernel_weights", w, false))
      {
        for (const auto &x : r.at("kernel_weights"))
        {
          if (x.get<double>() < 0.0)
          {
            fail(w + ".kernel_weights", "weights must be nonnegative");
            break;
          }
        }
      }
    }
    if (r.contains("kernel_law"))
    {
      try
      {
        kernel_law_from_json(r.at("kernel_law"));
      }
      catch (const std::exception &e)
      {
        fail(w + ".kernel_law", e.what());
      }
    }
  }

  void impedance(const json &z, const std::string &w)
  {
    if (!z.is_object() || !z.contains("kind") || !z.at("kind").is_string())
    {
      fail(w, "needs a string \"kind\"");
      return;
    }
    const std::string k = z.at("kind").get<std::string>();
    if (k == "zero")
    {
    }
    else if (k == "multiplier")
    {
      if (!z.contains("phi"))
      {
        fail(w, "multiplier needs \"phi\"");
      }
      else
      {
        function_source(z.at("phi"), w + ".phi");
      }
    }
    else if (k == "symbol")
    {
      try
      {
        parse_symbol(z.at("symbol").get<std::string>());
      }
      catch (const std::exception &e)
      {
        fail(w + ".symbol", e.what());
      }
    }
    else if (k == "matrix")
    {
      if (!z.contains("re") || !z.at("re").is_array() || z.at("re").empty())
      {
        fail(w + ".re", "needs a non-empty square array");
      }
    }
    else
    {
      fail(w + ".kind", "unknown impedance kind \"" + k + "\"");
    }
  }

  void checkpoints(const json &p, const std::string &w)
  {
    if (!p.contains("checkpoints"))
    {
      return;
    }
    const json &c = p.at("checkpoints");
    if (!c.is_array() || c.size() < 4)
    {
      fail(w + ".checkpoints", "needs at least 4 entries");
      return;
    }
    for (std::size_t i = 0; i < c.size(); ++i)
    {
      if (!c[i].is_number_integer() || c[i].get<long>() < 1 ||
          (i > 0 && c[i].get<long>() != 2 * c[i - 1].get<long>()))
      {
        fail(w + ".checkpoints", "must be positive integers, each double the previous");
        return;
      }
    }
  }

  void solver(const json &p, const std::string &w)
  {
    is_int(p, "n_b", w, false, 0, 4096);
    is_int(p, "n_wanted", w, false, 1, 2000);
    if (p.contains("shift"))
    {
      const json &s = p.at("shift");
      if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
      {
        fail(w + ".shift", "must be [re, im]");
      }
    }
  }
};

}  // namespace detail

// All problems found in the config, in document order. Empty means valid.
inline std::vector<std::string> validate_config(const json &j)
{
  detail::Validator v;
  if (!j.is_object())
  {
    v.fail("config", "must be a JSON object");
    return v.errors;
  }
  if (!j.contains("schema_version"))
  {
    v.fail("config", "missing \"schema_version\"");
  }
  else if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion)
  {
    v.fail("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  static const std::set<std::string> known{"schema_version", "experiment", "geometry", "mesh", "params",
                                           "output_dir", "seed", "workers", "tolerances"};
  for (const auto &[key, val] : j.items())
  {
    if (!known.count(key))
    {
      v.fail("config", "unknown key \"" + key + "\"");
    }
  }
  std::string exp;
  if (!j.contains("experiment") || !j.at("experiment").is_string())
  {
    v.fail("config", "missing string \"experiment\"");
  }
  else
  {
    exp = j.at("experiment").get<std::string>();
    const auto &names = experiment_names();
    if (std::find(names.begin(), names.end(), exp) == names.end())
    {
      v.fail("experiment", "unknown experiment \"" + exp + "\"");
      exp.clear();
    }
  }
  if (j.contains("seed") && !(j.at("seed").is_number_unsigned() || (j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() >= 0)))
  {
    v.fail("seed", "must be a nonnegative integer");
  }
  v.is_int(j, "workers", "config", false, 0, 4096);
  if (j.contains("output_dir") && !j.at("output_dir").is_string())
  {
    v.fail("output_dir", "must be a string");
  }
  if (j.contains("tolerances"))
  {
    const json &t = j.at("tolerances");
    if (!t.is_object())
    {
      v.fail("tolerances", "must be an object");
    }
    else
    {
      for (const auto &[key, val] : t.items())
      {
        static const std::set<std::string> names{"orth_curve",   "orth_surface", "eigen_residual",
                                                 "psd_relative", "psd_absolute", "halfplane"};
        if (!names.count(key))
        {
          v.fail("tolerances", "unknown tolerance \"" + key + "\"");
        }
        else
        {
          v.is_number(t, key, "tolerances", true, 0.0, 1.0, true);
        }
      }
    }
  }
  const json params = j.value("params", json::object());
  if (!params.is_object())
  {
    v.fail("params", "must be an object");
    return v.errors;
  }
  if (exp.empty())
  {
    return v.errors;
  }
  if (uses_mesh(exp))
  {
    if (!j.contains("mesh"))
    {
      v.fail("config", "experiment \"" + exp + "\" needs \"mesh\"");
    }
    else
    {
      v.mesh(j.at("mesh"), "mesh");
    }
  }
  else
  {
    if (!j.contains("geometry"))
    {
      v.fail("config", "experiment \"" + exp + "\" needs \"geometry\"");
    }
    else
    {
      v.geometry(j.at("geometry"));
    }
  }
  const std::string w = "params";
  if (exp == "weyl")
  {
    v.is_int(params, "count", w, false, 21);
    v.is_int(params, "fit_first", w, false, 1);
    v.is_int(params, "fit_last", w, false, 2);
    const long count = params.value("count", 400L);
    const long first = params.value("fit_first", 21L);
    const long last = params.value("fit_last", 200L);
    if (last - first + 1 < 20)
    {
      v.fail(w, "fit range needs at least 20 eigenvalues");
    }
    if (last > count)
    {
      v.fail(w, "fit_last exceeds count");
    }
  }
  else if (exp == "fgf_convergence")
  {
    v.number_list(params, "s", w, true);
    if (params.contains("t") == params.contains("t_offsets"))
    {
      v.fail(w, "give exactly one of \"t\" and \"t_offsets\"");
    }
    else
    {
      v.number_list(params, params.contains("t") ? "t" : "t_offsets", w, true);
    }
    v.is_int(params, "seeds", w, false, 30);
    v.checkpoints(params, w);
    v.is_number(params, "eps_conv", w, false, 0.0, 1.0, true);
    v.is_number(params, "margin", w, false, 0.0, 10.0);
  }
  else if (exp == "multiplier_profile")
  {
    if (!params.contains("phi"))
    {
      v.fail(w, "missing \"phi\"");
    }
    else
    {
      v.function_source(params.at("phi"), w + ".phi");
    }
    v.number_list(params, "n_trunc", w, true);
    v.is_number(params, "s1", w, false, 0.0);
    v.is_number(params, "s2", w, false, 0.0);
    v.is_int(params, "phi_modes", w, false, 1);
    if (params.contains("ranks"))
    {
      v.number_list(params, "ranks", w, true);
    }
  }
  else if (exp == "impedance_check")
  {
    if (!params.contains("impedance"))
    {
      v.fail(w, "missing \"impedance\"");
    }
    else
    {
      v.impedance(params.at("impedance"), w + ".impedance");
    }
    v.is_int(params, "n_trunc", w, false, 1, 4096);
  }
  else if (exp == "acoustic_spectrum")
  {
    if (!params.contains("impedance"))
    {
      v.fail(w, "missing \"impedance\"");
    }
    else
    {
      v.impedance(params.at("impedance"), w + ".impedance");
    }
    v.solver(params, w);
    if (params.contains("refinement"))
    {
      const json &r = params.at("refinement");
      if (!r.contains("meshes") || !r.at("meshes").is_array() || r.at("meshes").size() < 3)
      {
        v.fail(w + ".refinement.meshes", "needs at least 3 meshes");
      }
      else
      {
        for (std::size_t i = 0; i < r.at("meshes").size(); ++i)
        {
          v.mesh(r.at("meshes")[i], w + ".refinement.meshes[" + std::to_string(i) + "]");
        }
      }
      v.is_int(r, "n_track", w + ".refinement", false, 1, 100);
      if (r.contains("reference"))
      {
        v.number_list(r, "reference", w + ".refinement", true);
      }
    }
  }
  else if (exp == "monte_carlo")
  {
    v.random_impedance(params.value("random", json::object()), w + ".random");
    v.is_int(params, "n_samples", w, false, 1, 100000);
    v.solver(params, w);
  }
  return v.errors;
}

// ---------------------------------------------------------------------------------------
// Spectrum cache: <out>/cache/spectrum_<hash>_<N>.bin plus a JSON sidecar with the full
// geometry hash. A sidecar mismatch discards the dump.
// ---------------------------------------------------------------------------------------

class SpectrumCache
{
public:
  explicit SpectrumCache(fs::path dir) : dir_(std::move(dir)) {}

  SpectrumPtr get(std::shared_ptr<const BoundaryGeometry> geom, int count)
  {
    const std::string hash = sha256_hex(geometry_to_json(*geom).dump());
    const std::string stem = "spectrum_" + hash.substr(0, 16) + "_" + std::to_string(count);
    const fs::path bin = dir_ / (stem + ".bin");
    const fs::path side = dir_ / (stem + ".json");
    if (fs::exists(bin) && fs::exists(side))
    {
      try
      {
        const json meta = json::parse(read_file(side));
        if (meta.value("geometry_sha256", "") == hash && meta.value("count", -1) == count &&
            meta.value("sha256", "") == sha256_file(bin))
        {
          std::ifstream in(bin, std::ios::binary);
          auto spec = std::make_shared<const BoundarySpectrum>(load_spectrum(in, geom));
          ++hits_;
          return spec;
        }
      }
      catch (const std::exception &)
      {
      }
    }
    auto spec = std::make_shared<const BoundarySpectrum>(build_spectrum(geom, count));
    fs::create_directories(dir_);
    {
      std::ofstream out(bin, std::ios::binary);
      save_spectrum(out, *spec);
    }
    std::ofstream(side) << json{{"geometry_sha256", hash}, {"count", count}, {"sha256", sha256_file(bin)}}.dump(2);
    ++misses_;
    return spec;
  }

  int hits() const { return hits_; }
  int misses() const { return misses_; }

private:
  fs::path dir_;
  int hits_ = 0;
  int misses_ = 0;
};

// ---------------------------------------------------------------------------------------
// Run context and experiments
// ---------------------------------------------------------------------------------------

struct Assertion
{
  std::string name;
  bool passed;
  std::string detail;
};

struct RunContext
{
  ExperimentConfig config;
  fs::path out;
  int workers = 1;
  Tolerances tol{};
  SpectrumCache cache;
  json artifacts = json::array();
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;
  json summary = json::object();

  RunContext(ExperimentConfig c, fs::path o, int w)
      : config(std::move(c)), out(std::move(o)), workers(w), tol(tolerances_from_json(config.tolerances)),
        cache(out / "cache")
  {
  }

  const json &params() const { return config.params; }

  void write(const std::string &id, const std::string &file, const std::string &content, json plot = json())
  {
    const fs::path p = out / file;
    std::ofstream(p, std::ios::binary) << content;
    json a{{"id", id}, {"file", file}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}};
    if (!plot.is_null())
    {
      a["plot"] = std::move(plot);
    }
    artifacts.push_back(std::move(a));
  }

  void write_json(const std::string &id, const std::string &file, const json &j) { write(id, file, j.dump(2) + "\n"); }

  void check(const std::string &name, bool ok, const std::string &detail)
  {
    assertions.push_back({name, ok, detail});
  }
};

namespace detail
{

inline std::string fmt(double v)
{
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::shared_ptr<const BoundaryGeometry> geometry_of(const RunContext &ctx)
{
  return std::make_shared<const BoundaryGeometry>(geometry_from_source(ctx.config.geometry));
}

inline SolveOptions solve_options(const json &p, const RunContext &ctx)
{
  SolveOptions so;
  so.n_wanted = p.value("n_wanted", so.n_wanted);
  if (p.contains("shift"))
  {
    so.shift = Complex(p.at("shift")[0].get<double>(), p.at("shift")[1].get<double>());
  }
  so.residual_tol = ctx.tol.eigen_residual;
  so.seed = ctx.config.seed;
  so.tol = ctx.tol;
  return so;
}

inline json complex_pair(Complex z) { return json::array({z.real(), z.imag()}); }

}  // namespace detail

inline void run_weyl(RunContext &ctx)
{
  const json &p = ctx.params();
  auto geom = detail::geometry_of(ctx);
  const int count = p.value("count", 400);
  const int first = p.value("fit_first", 21);
  const int last = p.value("fit_last", 200);
  const SpectrumPtr spec = ctx.cache.get(geom, count);
  const WeylDiagnostic wd = weyl_diagnostic(*spec, first, last);
  double sx = 0.0, sy = 0.0;
  for (int n = first; n <= last; ++n)
  {
    sx += std::log(static_cast<double>(n));
    sy += std::log(spec->mu(n - 1));
  }
  const double m = last - first + 1;
  const double prefactor = std::exp((sy - wd.slope * sx) / m);
  const double expected = p.value("expected_slope", 2.0 / (spec->dim() - 1));
  const double slope_tol = p.value("slope_tol", spec->dim() == 2 ? 0.05 : 0.15);
  const int orth_n = std::min(count, p.value("orth_modes", 200));
  const double orth = spec->orthonormality_error(orth_n);
  const double orth_tol = spec->dim() == 2 ? ctx.tol.orth_curve : ctx.tol.orth_surface;

  std::ostringstream csv;
  write_spectrum_csv(csv, *spec);
  ctx.write("spectrum", "spectrum.csv", csv.str(),
            {{"x", "n"}, {"y", {"mu_n"}}, {"power_law", {{"prefactor", prefactor}, {"exponent", wd.slope}}}});
  const json report{{"dim", spec->dim()},
                    {"count", count},
                    {"b0", spec->b0()},
                    {"fit_first", first},
                    {"fit_last", last},
                    {"slope", wd.slope},
                    {"prefactor", prefactor},
                    {"c_lower", wd.c_lower},
                    {"c_upper", wd.c_upper},
                    {"expected_slope", expected},
                    {"slope_tol", slope_tol},
                    {"orthonormality_error", orth},
                    {"orthonormality_modes", orth_n}};
  ctx.write_json("weyl", "weyl.json", report);
  ctx.summary = report;
  ctx.check("weyl_slope", std::abs(wd.slope - expected) <= slope_tol,
            "slope " + detail::fmt(wd.slope) + " vs " + detail::fmt(expected) + " +- " + detail::fmt(slope_tol));
  ctx.check("orthonormality", orth <= orth_tol, "max |G - I| = " + detail::fmt(orth));
}

inline void run_fgf_convergence(RunContext &ctx)
{
  const json &p = ctx.params();
  auto geom = detail::geometry_of(ctx);
  const auto s_list = p.at("s").get<std::vector<double>>();
  std::vector<int> cps = p.value("checkpoints", std::vector<int>{64, 128, 256, 512, 1024, 2048, 4096});
  const int seeds = p.value("seeds", 50);
  ClassifierOptions co;
  co.eps_conv = p.value("eps_conv", co.eps_conv);
  co.margin = p.value("margin", co.margin);
  co.workers = ctx.workers;
  co.first_seed = ctx.config.seed;
  const SpectrumPtr spec = ctx.cache.get(geom, cps.back());
  const double half = 0.5 * (spec->dim() - 1);

  std::ostringstream csv;
  csv.precision(17);
  csv << "cell,s,t,checkpoint,median_ratio,q10,q90\n";
  json cells = json::array();
  int matched = 0;
  int decided = 0;
  int cell = 0;
  for (double s : s_list)
  {
    std::vector<double> ts;
    if (p.contains("t"))
    {
      ts = p.at("t").get<std::vector<double>>();
    }
    else
    {
      for (double off : p.at("t_offsets").get<std::vector<double>>())
      {
        ts.push_back(s - half + off);
      }
    }
    for (double t : ts)
    {
      const ClassifierReport r = convergence_classifier(spec, s, t, seeds, cps, co);
      Verdict expected = t < r.threshold ? Verdict::Converges : Verdict::Diverges;
      if (std::abs(t - r.threshold) < co.margin)
      {
        expected = Verdict::Indeterminate;
      }
      const bool ok = r.verdict == expected;
      matched += ok ? 1 : 0;
      decided += expected != Verdict::Indeterminate ? 1 : 0;
      json j = classifier_report_to_json(r, s, t);
      j["expected"] = to_string(expected);
      j["match"] = ok;
      cells.push_back(std::move(j));
      for (std::size_t k = 0; k < r.median_ratios.size(); ++k)
      {
        csv << cell << ',' << s << ',' << t << ',' << cps[k + 1] << ',' << r.median_ratios[k] << ','
            << r.ratio_q10[k] << ',' << r.ratio_q90[k] << '\n';
      }
      ++cell;
    }
  }
  ctx.write("ratios", "ratios.csv", csv.str(), {{"x", "checkpoint"}, {"y", {"median_ratio"}}, {"series", "cell"}});
  const json report{{"cells", cells}, {"matched", matched}, {"total", cell}, {"decided", decided}};
  ctx.write_json("classifier", "classifier.json", report);
  ctx.summary = {{"matched", matched}, {"total", cell}};
  ctx.check("classifier_matches_theory", matched == cell,
            std::to_string(matched) + "/" + std::to_string(cell) + " cells match");
}

inline void run_multiplier_profile(RunContext &ctx)
{
  const json &p = ctx.params();
  auto geom = detail::geometry_of(ctx);
  auto truncs = p.at("n_trunc").get<std::vector<int>>();
  std::sort(truncs.begin(), truncs.end());
  const int phi_modes = p.value("phi_modes", 2 * truncs.back() + 1);
  const SpectrumPtr spec = ctx.cache.get(geom, std::max(phi_modes, truncs.back()));
  const SpectralFunction phi = function_from_json(p.at("phi"), spec, ctx.config.seed).truncated(phi_modes);
  const double s1 = p.value("s1", 0.5);
  const double s2 = p.value("s2", 0.5);
  const auto ranks = p.value("ranks", std::vector<int>{1, 64});

  std::ostringstream csv;
  csv.precision(17);
  csv << "k,sigma_k,N_trunc\n";
  json levels = json::array();
  std::vector<double> norms;
  for (int n : truncs)
  {
    const MultiplierMatrix a = build_multiplier(phi, s1, s2, n);
    const Vec sv = weighted_singular_values(a);
    for (int k = 0; k < sv.size(); ++k)
    {
      csv << (k + 1) << ',' << sv(k) << ',' << n << '\n';
    }
    const PositivityResult pos = positivity_test(phi, n, ctx.tol);
    json sig = json::object();
    for (int r : ranks)
    {
      if (r >= 1 && r <= sv.size())
      {
        sig[std::to_string(r)] = sv(r - 1);
      }
    }
    norms.push_back(sv(0));
    levels.push_back({{"n_trunc", n},
                      {"norm", sv(0)},
                      {"min_eig", pos.min_eig},
                      {"is_nonneg", pos.is_nonneg},
                      {"sigma", sig}});
  }
  ctx.write("singular_values", "singular_values.csv", csv.str(), {{"x", "k"}, {"y", {"sigma_k"}}, {"series", "N_trunc"}});
  json report{{"s1", s1}, {"s2", s2}, {"phi_modes", phi_modes}, {"levels", levels}};
  if (norms.size() >= 2)
  {
    report["relative_norm_change"] = std::abs(norms.back() - norms[norms.size() - 2]) / norms.back();
  }
  ctx.write_json("multiplier", "multiplier.json", report);
  ctx.summary = report;
  const json expect = p.value("expect", json::object());
  if (expect.contains("max_norm_change") && norms.size() >= 2)
  {
    const double ch = report["relative_norm_change"].get<double>();
    ctx.check("norm_stable", ch <= expect["max_norm_change"].get<double>(), "relative change " + detail::fmt(ch));
  }
  if (expect.contains("sigma_ratio"))
  {
    const int r = expect["sigma_ratio"].value("rank", 64);
    const double mx = expect["sigma_ratio"].value("max", 0.2);
    const MultiplierMatrix a = build_multiplier(phi, s1, s2, truncs.back());
    const Vec sv = weighted_singular_values(a);
    require(r <= sv.size(), "sigma_ratio rank exceeds the truncation");
    const double ratio = sv(r - 1) / sv(0);
    ctx.check("sigma_ratio", ratio <= mx, "sigma_" + std::to_string(r) + "/sigma_1 = " + detail::fmt(ratio));
  }
  if (expect.contains("nonneg"))
  {
    const bool want = expect["nonneg"].get<bool>();
    bool all = true;
    for (const auto &l : levels)
    {
      all = all && l["is_nonneg"].get<bool>() == want;
    }
    ctx.check("positivity", all, std::string("expected is_nonneg = ") + (want ? "true" : "false"));
  }
}

inline void run_impedance_check(RunContext &ctx)
{
  const json &p = ctx.params();
  auto geom = detail::geometry_of(ctx);
  const json &zj = p.at("impedance");
  int n = p.value("n_trunc", 64);
  if (zj.value("kind", "") == "matrix")
  {
    n = static_cast<int>(zj.at("re").size());
  }
  const int count = p.value("spectrum_count", 2 * n + 1);
  const SpectrumPtr spec = ctx.cache.get(geom, count);
  const ImpedanceOperator z = impedance_from_json(zj, spec, n, ctx.config.seed);
  const AccretivityResult acc_z = is_accretive(z, ctx.tol);
  const CMat zt = conjugate_to_l2(z);
  const AccretivityResult acc_zt = is_accretive(zt, ctx.tol);
  json report{{"kind", to_string(z.kind())},
              {"n_trunc", n},
              {"accretive_z", acc_z.verdict},
              {"min_herm_eig_z", acc_z.min_herm_eig},
              {"accretive_z_tilde", acc_zt.verdict},
              {"min_herm_eig_z_tilde", acc_zt.min_herm_eig},
              {"selfadjoint", selfadjointness_criterion(z, ctx.tol)}};
  bool contraction = false;
  bool cayley_ok = false;
  try
  {
    const CayleyPair cp = cayley(z);
    contraction = cp.norm_k <= 1.0 + psd_tolerance(1.0, ctx.tol);
    const CMat back = inverse_cayley(cp.k);
    const double rt = (back - zt).norm() / std::max(1.0, zt.norm());
    report["norm_k"] = cp.norm_k;
    report["roundtrip_error"] = rt;
    cayley_ok = rt <= 1e-10;
  }
  catch (const Error &e)
  {
    report["cayley_error"] = e.what();
    cayley_ok = true;  // Z~ + I singular already rules out accretivity
  }
  report["contraction"] = contraction;
  const bool agree = acc_z.verdict == acc_zt.verdict && acc_zt.verdict == contraction;
  report["agree"] = agree;
  ctx.write_json("impedance", "impedance.json", report);
  ctx.summary = report;
  ctx.check("three_way_agreement", agree, "Z psd / Z~ psd / ||K|| <= 1 agree");
  ctx.check("cayley_roundtrip", cayley_ok, report.contains("roundtrip_error")
                                               ? "relative error " + detail::fmt(report["roundtrip_error"].get<double>())
                                               : std::string("Cayley transform undefined"));
  if (p.contains("expect_accretive"))
  {
    ctx.check("accretive_as_expected", acc_z.verdict == p["expect_accretive"].get<bool>(),
              std::string("accretive = ") + (acc_z.verdict ? "true" : "false"));
  }
}

inline void run_acoustic_spectrum(RunContext &ctx)
{
  const json &p = ctx.params();
  const DomainMesh mesh = mesh_from_source(ctx.config.mesh);
  const SolveOptions so = detail::solve_options(p, ctx);
  const int nb = p.value("n_b", 0) > 0 ? p.value("n_b", 0) : default_boundary_modes(mesh);
  const SpectrumPtr spec = boundary_spectrum_for(mesh, 2 * nb + 2);
  const ImpedanceOperator z = impedance_from_json(p.at("impedance"), spec, nb, ctx.config.seed);
  const AcousticPencil pen = assemble_pencil(mesh, z, nb);
  const EigenReport rep = solve_pencil(pen, so);

  std::ostringstream csv;
  write_eigen_csv_header(csv);
  write_eigen_csv_rows(csv, rep, 0);
  ctx.write("eigenvalues", "eigenvalues.csv", csv.str(), {{"x", "re"}, {"y", {"im"}}, {"series", "sample_id"}});

  json dj{{"dofs", pen.size()},
          {"n_b", nb},
          {"h", mesh.max_edge()},
          {"accretive", is_accretive(z, ctx.tol).verdict},
          {"domain_components", mesh.domain_components()},
          {"eigen", eigen_report_summary(rep)}};
  const bool do_resolvent = p.value("resolvent", true);
  DissipativityReport dr = verify_mdissipativity(pen, rep, do_resolvent ? default_resolvent_grid() : std::vector<Complex>{},
                                                 ctx.tol);
  dj["herm_check"] = dr.herm_check;
  dj["halfplane_check"] = dr.halfplane_check;
  dj["halfplane_ok"] = dr.halfplane_ok;
  json res = json::array();
  for (const auto &r : dr.resolvent)
  {
    res.push_back({{"z", detail::complex_pair(r.z)}, {"norm", r.norm}, {"bound", r.bound}, {"violation", r.violation}});
  }
  dj["resolvent"] = res;
  dj["max_resolvent_violation"] = dr.resolvent.empty() ? 0.0 : dr.max_violation;

  const json expect = p.value("expect", json::object());
  ctx.check("all_converged", rep.unconverged == 0, std::to_string(rep.unconverged) + " unconverged eigenpairs");
  ctx.check("zero_cluster", rep.zero_cluster_size >= expect.value("zero_cluster_min", 0),
            "zero cluster size " + std::to_string(rep.zero_cluster_size));
  if (expect.value("halfplane", dj["accretive"].get<bool>()))
  {
    ctx.check("halfplane", dr.halfplane_ok, "max Im/(1+|l|) = " + detail::fmt(dr.halfplane_check));
  }
  if (expect.contains("real"))
  {
    ctx.check("real_spectrum", rep.real_within_tol == expect["real"].get<bool>(),
              "max |Im|/(1+|l|) = " + detail::fmt(rep.max_abs_imag_scaled));
  }
  if (do_resolvent && dj["accretive"].get<bool>())
  {
    const double lim = expect.value("max_resolvent_violation", 1e-6);
    ctx.check("resolvent_bound", dr.max_violation <= lim, "max violation " + detail::fmt(dr.max_violation));
  }

  if (p.contains("refinement"))
  {
    const json &rj = p.at("refinement");
    std::vector<DomainMesh> meshes;
    for (const auto &m : rj.at("meshes"))
    {
      meshes.push_back(mesh_from_source(m));
    }
    RefinementOptions ro;
    ro.n_track = rj.value("n_track", 5);
    ro.n_b = p.value("n_b", 0);
    ro.solve = so;
    ro.workers = ctx.workers;
    if (rj.contains("reference"))
    {
      ro.reference = rj.at("reference").get<std::vector<double>>();
    }
    const json zspec = p.at("impedance");
    const std::uint64_t seed = ctx.config.seed;
    const RefinementTable tab = refinement_study(
        meshes, [&](SpectrumPtr sp, int n) { return impedance_from_json(zspec, sp, n, seed); }, ro);
    std::ostringstream rc;
    rc.precision(17);
    rc << "level,h,dofs,track,re,im\n";
    for (std::size_t l = 0; l < tab.matched.size(); ++l)
    {
      for (std::size_t k = 0; k < tab.matched[l].size(); ++k)
      {
        rc << l << ',' << tab.levels[l].h << ',' << tab.levels[l].dofs << ',' << k << ','
           << tab.matched[l][k].real() << ',' << tab.matched[l][k].imag() << '\n';
      }
    }
    ctx.write("refinement", "refinement.csv", rc.str(), {{"x", "h"}, {"y", {"re", "im"}}, {"series", "track"}});
    dj["refinement"] = {{"observed_order", tab.observed_order},
                        {"last_relative_change", tab.last_relative_change},
                        {"min_gap", tab.min_gap},
                        {"ambiguous", tab.ambiguous},
                        {"notes", tab.notes}};
    ctx.check("tracking_unambiguous", !tab.ambiguous, tab.notes.empty() ? "ok" : tab.notes.front());
    if (expect.contains("min_order") && !tab.observed_order.empty())
    {
      const double mo = *std::min_element(tab.observed_order.begin(), tab.observed_order.end());
      ctx.check("refinement_order", mo >= expect["min_order"].get<double>(), "min observed order " + detail::fmt(mo));
    }
    if (expect.contains("max_last_change") && !tab.last_relative_change.empty())
    {
      const double mc = *std::max_element(tab.last_relative_change.begin(), tab.last_relative_change.end());
      ctx.check("refinement_cauchy", mc <= expect["max_last_change"].get<double>(),
                "max relative change " + detail::fmt(mc));
    }
  }
  ctx.write_json("dissipativity", "dissipativity.json", dj);
  ctx.summary = dj;
}

inline void run_monte_carlo(RunContext &ctx)
{
  const json &p = ctx.params();
  const DomainMesh mesh = mesh_from_source(ctx.config.mesh);
  const RandomImpedanceSpec rs = random_impedance_from_json(p.value("random", json::object()));
  MonteCarloOptions mo;
  mo.n_samples = p.value("n_samples", 50);
  mo.first_seed = p.value("first_seed", ctx.config.seed);
  mo.n_b = p.value("n_b", 0);
  mo.solve = detail::solve_options(p, ctx);
  mo.workers = ctx.workers;
  const MonteCarloReport mc = monte_carlo_spectrum(mesh, rs, mo);

  std::ostringstream csv;
  write_eigen_csv_header(csv);
  json samples = json::array();
  for (const auto &s : mc.samples)
  {
    if (s.ok)
    {
      write_eigen_csv_rows(csv, s.report, s.seed);
    }
    json sj{{"seed", s.seed}, {"ok", s.ok}};
    if (s.ok)
    {
      sj["eigen"] = eigen_report_summary(s.report);
      sj["selfadjoint"] = s.selfadjoint;
      sj["accretive"] = s.accretive;
    }
    else
    {
      sj["error"] = s.error;
    }
    samples.push_back(std::move(sj));
  }
  ctx.write("cloud", "cloud.csv", csv.str(), {{"x", "re"}, {"y", {"im"}}, {"series", "sample_id"}});
  const double want_real = rs.all_kernel_weights_zero() ? 1.0 : 0.0;
  const json expect = p.value("expect", json::object());
  const double exp_real = expect.value("fraction_real", want_real);
  const double exp_half = expect.value("fraction_halfplane", 1.0);
  const json report{{"n_samples", mo.n_samples},
                    {"failures", mc.failures},
                    {"fraction_halfplane", mc.fraction_halfplane},
                    {"fraction_real", mc.fraction_real},
                    {"theorem_regime", mc.theorem_regime},
                    {"expected_fraction_real", exp_real},
                    {"samples", samples}};
  ctx.write_json("ensemble", "ensemble.json", report);
  ctx.summary = {{"fraction_halfplane", mc.fraction_halfplane},
                 {"fraction_real", mc.fraction_real},
                 {"failures", mc.failures}};
  ctx.check("fraction_halfplane", mc.fraction_halfplane >= exp_half,
            "fraction " + detail::fmt(mc.fraction_halfplane));
  ctx.check("fraction_real", std::abs(mc.fraction_real - exp_real) <= 1e-12,
            "fraction " + detail::fmt(mc.fraction_real) + " vs " + detail::fmt(exp_real));
  if (mc.failures > 0)
  {
    ctx.notes.push_back(std::to_string(mc.failures) + " samples failed; see ensemble.json");
  }
}

// ---------------------------------------------------------------------------------------
// run / emit_plotdata
// ---------------------------------------------------------------------------------------

struct RunOptions
{
  std::optional<std::string> output_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

struct RunResult
{
  int exit_code = kExitPass;
  json manifest;
  fs::path manifest_path;
  std::vector<std::string> errors;
};

inline json apply_run_options(json cfg, const RunOptions &ro)
{
  for (const auto &o : ro.overrides)
  {
    apply_override(cfg, o);
  }
  if (ro.output_dir)
  {
    cfg["output_dir"] = *ro.output_dir;
  }
  if (ro.workers)
  {
    cfg["workers"] = *ro.workers;
  }
  if (ro.seed)
  {
    cfg["seed"] = *ro.seed;
  }
  return cfg;
}

// Validates, executes and writes artifacts plus manifest.json. Never throws for config or
// numerical failures; they are reported through the exit code and the errors list.
inline RunResult run(const json &raw, const RunOptions &ro = {})
{
  RunResult res;
  json cfgj;
  try
  {
    cfgj = apply_run_options(raw, ro);
  }
  catch (const std::exception &e)
  {
    res.errors.push_back(e.what());
    res.exit_code = kExitInvalidConfig;
    return res;
  }
  res.errors = validate_config(cfgj);
  if (!res.errors.empty())
  {
    res.exit_code = kExitInvalidConfig;
    return res;
  }
  const ExperimentConfig cfg = ExperimentConfig::from_json(cfgj);
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  RunContext ctx(cfg, out, resolve_workers(cfg.workers));
  const std::string started = utc_timestamp();
  const auto t0 = std::chrono::steady_clock::now();
  std::string runtime_error;
  try
  {
    const std::string &e = cfg.experiment;
    if (e == "weyl")
    {
      run_weyl(ctx);
    }
    else if (e == "fgf_convergence")
    {
      run_fgf_convergence(ctx);
    }
    else if (e == "multiplier_profile")
    {
      run_multiplier_profile(ctx);
    }
    else if (e == "impedance_check")
    {
      run_impedance_check(ctx);
    }
    else if (e == "acoustic_spectrum")
    {
      run_acoustic_spectrum(ctx);
    }
    else
    {
      run_monte_carlo(ctx);
    }
  }
  catch (const std::exception &ex)
  {
    runtime_error = ex.what();
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string cfg_text = cfg.to_json().dump(2) + "\n";
  ctx.write_json("config", "config.json", cfg.to_json());
  json assertions = json::array();
  bool passed = runtime_error.empty();
  for (const auto &a : ctx.assertions)
  {
    assertions.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
    passed = passed && a.passed;
  }
  json cache = json::array();
  if (fs::exists(out / "cache"))
  {
    std::vector<fs::path> files;
    for (const auto &f : fs::directory_iterator(out / "cache"))
    {
      files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto &f : files)
    {
      cache.push_back({{"file", fs::relative(f, out).string()}, {"sha256", sha256_file(f)}});
    }
  }
  res.manifest = {{"tool", kToolName},
                  {"version", kToolVersion},
                  {"schema_version", kSchemaVersion},
                  {"experiment", cfg.experiment},
                  {"config_sha256", sha256_hex(cfg_text)},
                  {"started", started},
                  {"finished", utc_timestamp()},
                  {"elapsed_seconds", elapsed},
                  {"workers", ctx.workers},
                  {"artifacts", ctx.artifacts},
                  {"cache", cache},
                  {"cache_hits", ctx.cache.hits()},
                  {"cache_misses", ctx.cache.misses()},
                  {"assertions", assertions},
                  {"summary", ctx.summary},
                  {"notes", ctx.notes},
                  {"passed", passed}};
  if (!runtime_error.empty())
  {
    res.manifest["runtime_error"] = runtime_error;
    res.errors.push_back(runtime_error);
  }
  res.manifest_path = out / "manifest.json";
  std::ofstream(res.manifest_path) << res.manifest.dump(2) << "\n";
  res.exit_code = !runtime_error.empty() ? kExitRuntime : (passed ? kExitPass : kExitAssertion);
  return res;
}

namespace detail
{
inline std::vector<std::string> split_csv_line(const std::string &line)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ','))
  {
    out.push_back(cur);
  }
  if (!line.empty() && line.back() == ',')
  {
    out.emplace_back();
  }
  return out;
}
}  // namespace detail

// Long-format CSV (series, x, y) for one artifact of a finished run.
inline void emit_plotdata(const fs::path &manifest_path, const std::string &artifact_id, std::ostream &os)
{
  const json manifest = json::parse(read_file(manifest_path));
  const json *art = nullptr;
  for (const auto &a : manifest.at("artifacts"))
  {
    if (a.at("id") == artifact_id)
    {
      art = &a;
    }
  }
  if (art == nullptr)
  {
    std::string known;
    for (const auto &a : manifest.at("artifacts"))
    {
      if (a.contains("plot"))
      {
        known += (known.empty() ? "" : ", ") + a.at("id").get<std::string>();
      }
    }
    throw InvalidArgument("unknown artifact \"" + artifact_id + "\" (plottable: " + known + ")");
  }
  if (!art->contains("plot"))
  {
    throw InvalidArgument("artifact \"" + artifact_id + "\" is not tabular");
  }
  const json &plot = art->at("plot");
  std::ifstream in(manifest_path.parent_path() / art->at("file").get<std::string>());
  if (!in)
  {
    throw Error("artifact file missing: " + art->at("file").get<std::string>());
  }
  std::string line;
  std::getline(in, line);
  const auto header = detail::split_csv_line(line);
  auto col = [&](const std::string &name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
    {
      throw Error("column \"" + name + "\" missing from " + art->at("file").get<std::string>());
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t xc = col(plot.at("x").get<std::string>());
  std::vector<std::pair<std::string, std::size_t>> ys;
  for (const auto &y : plot.at("y"))
  {
    ys.emplace_back(y.get<std::string>(), col(y.get<std::string>()));
  }
  std::optional<std::size_t> sc;
  std::string sname;
  if (plot.contains("series"))
  {
    sname = plot.at("series").get<std::string>();
    sc = col(sname);
  }
  os << "series,x,y\n";
  std::vector<double> xs;
  while (std::getline(in, line))
  {
    if (line.empty())
    {
      continue;
    }
    const auto f = detail::split_csv_line(line);
    for (const auto &[yname, yc] : ys)
    {
      if (f[yc].empty())
      {
        continue;
      }
      std::string series = yname;
      if (sc)
      {
        series = sname + "=" + f[*sc] + (ys.size() > 1 ? ":" + yname : "");
      }
      os << series << ',' << f[xc] << ',' << f[yc] << '\n';
    }
    xs.push_back(std::stod(f[xc]));
  }
  if (plot.contains("power_law"))
  {
    const double c = plot["power_law"].at("prefactor").get<double>();
    const double e = plot["power_law"].at("exponent").get<double>();
    std::ostringstream fit;
    fit.precision(17);
    for (double x : xs)
    {
      fit << "fit," << x << ',' << c * std::pow(x, e) << '\n';
    }
    os << fit.str();
  }
}

}  // namespace gibc::harness

#endif  // GIBC_HARNESS_HPP
