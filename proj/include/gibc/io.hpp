// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_IO_HPP
#define GIBC_IO_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibc/acoustic.hpp"
#include "gibc/boundary_spectrum.hpp"
#include "gibc/fgf.hpp"
#include "gibc/geometry.hpp"
#include "gibc/impedance.hpp"
#include "gibc/mesh.hpp"
#include "gibc/multipliers.hpp"

namespace gibc
{

using json = nlohmann::json;

inline json spectral_function_to_json(const SpectralFunction &f)
{
  std::vector<double> re(static_cast<std::size_t>(f.size()));
  std::vector<double> im(static_cast<std::size_t>(f.size()));
  for (int i = 0; i < f.size(); ++i)
  {
    re[static_cast<std::size_t>(i)] = f[i].real();
    im[static_cast<std::size_t>(i)] = f[i].imag();
  }
  return {{"coeffs_re", re}, {"coeffs_im", im}};
}

inline SpectralFunction spectral_function_from_json(const json &j, SpectrumPtr spec)
{
  require(j.contains("coeffs_re"), "spectral function needs \"coeffs_re\"");
  const auto re = j.at("coeffs_re").get<std::vector<double>>();
  std::vector<double> im(re.size(), 0.0);
  if (j.contains("coeffs_im"))
  {
    im = j.at("coeffs_im").get<std::vector<double>>();
    require(im.size() == re.size(), "coeffs_re and coeffs_im differ in length");
  }
  require(static_cast<int>(re.size()) <= spec->count(), "more coefficients than spectrum modes");
  CVec c(static_cast<Eigen::Index>(re.size()));
  for (std::size_t i = 0; i < re.size(); ++i)
  {
    c(static_cast<Eigen::Index>(i)) = Complex(re[i], im[i]);
  }
  return {std::move(spec), c};
}

inline json fgf_sample_to_json(const FgfSample &s)
{
  std::vector<double> c(s.coeffs.data(), s.coeffs.data() + s.coeffs.size());
  return {{"s", s.s}, {"seed", s.seed}, {"n_trunc", s.n_trunc}, {"hurst", s.hurst()}, {"coeffs", c}};
}

inline json classifier_report_to_json(const ClassifierReport &r, double s, double t)
{
  return {{"s", s},
          {"t", t},
          {"threshold", r.threshold},
          {"verdict", to_string(r.verdict)},
          {"final_ratio", r.final_ratio},
          {"in_margin_band", r.in_margin_band},
          {"checkpoints", r.checkpoints},
          {"median_ratios", r.median_ratios},
          {"ratio_q10", r.ratio_q10},
          {"ratio_q90", r.ratio_q90},
          {"seeds", r.seeds}};
}

// Rows re, im, residual, q_factor, sample_id; q_factor is empty when undefined.
inline void write_eigen_csv_header(std::ostream &os) { os << "re,im,residual,q_factor,sample_id\n"; }

inline void write_eigen_csv_rows(std::ostream &os, const EigenReport &rep, std::uint64_t sample_id)
{
  os.precision(17);
  for (std::size_t i = 0; i < rep.size(); ++i)
  {
    os << rep.lambda[i].real() << ',' << rep.lambda[i].imag() << ',' << rep.residual[i] << ',';
    if (i < rep.q_factor.size() && std::isfinite(rep.q_factor[i]))
    {
      os << rep.q_factor[i];
    }
    os << ',' << sample_id << '\n';
  }
}

inline json eigen_report_summary(const EigenReport &rep)
{
  double max_res = 0.0;
  for (double r : rep.residual)
  {
    max_res = std::max(max_res, r);
  }
  return {{"count", rep.size()},
          {"zero_cluster_size", rep.zero_cluster_size},
          {"in_lower_halfplane", rep.in_lower_halfplane},
          {"real_within_tol", rep.real_within_tol},
          {"max_imag_scaled", std::isfinite(rep.max_imag_scaled) ? rep.max_imag_scaled : 0.0},
          {"max_residual", max_res},
          {"unconverged", rep.unconverged},
          {"krylov_dim", rep.krylov_dim}};
}

inline KernelLaw kernel_law_from_json(const json &j)
{
  KernelLaw law;
  const std::string kind = j.value("kind", "exponential");
  if (kind == "exponential")
  {
    law.kind = KernelLaw::Kind::Exponential;
    law.a = j.value("rate", 1.0);
  }
  else if (kind == "uniform")
  {
    law.kind = KernelLaw::Kind::Uniform;
    law.a = j.value("lo", 0.0);
    law.b = j.value("hi", 1.0);
  }
  else if (kind == "constant")
  {
    law.kind = KernelLaw::Kind::Constant;
    law.a = j.value("value", 1.0);
  }
  else
  {
    throw InvalidArgument("unknown kernel law \"" + kind + "\"");
  }
  law.validate();
  return law;
}

inline RandomImpedanceSpec random_impedance_from_json(const json &j)
{
  RandomImpedanceSpec rs;
  rs.c = j.value("c", 0.0);
  rs.s = j.value("s", 0.5);
  if (j.contains("kernel_weights"))
  {
    rs.kernel_weights = j.at("kernel_weights").get<std::vector<double>>();
  }
  if (j.contains("kernel_law"))
  {
    rs.kernel_law = kernel_law_from_json(j.at("kernel_law"));
  }
  rs.validate();
  return rs;
}

//
// Sources of a boundary function phi:
//   {"kind": "constant", "value": z} | {"kind": "mode", "index": n (1-based), "value": z}
//   {"kind": "coeffs", "coeffs_re": [...], "coeffs_im": [...]}
//   {"kind": "cantor", "r": 1/3, "component": 0, "samples": 1e6, "scale": c}
//   {"kind": "random", <random impedance fields>}
// Complex values are numbers or [re, im] pairs.
//
inline Complex complex_from_json(const json &j)
{
  if (j.is_array())
  {
    require(j.size() == 2, "complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
  }
  return {j.get<double>(), 0.0};
}

inline SpectralFunction function_from_json(const json &j, SpectrumPtr spec, std::uint64_t seed)
{
  const std::string kind = j.value("kind", "");
  const int n = spec->count();
  if (kind == "constant")
  {
    return SpectralFunction::constant(spec, n, complex_from_json(j.value("value", json(1.0))));
  }
  if (kind == "mode")
  {
    const int idx = j.at("index").get<int>();
    require(idx >= 1 && idx <= n, "mode index outside the spectrum");
    return SpectralFunction::mode(spec, n, idx - 1, complex_from_json(j.value("value", json(1.0))));
  }
  if (kind == "coeffs")
  {
    return spectral_function_from_json(j, spec);
  }
  if (kind == "cantor")
  {
    const SpectralFunction f = cantor_measure_coeffs(
        spec, j.value("r", 1.0 / 3.0), j.value("component", 0), n,
        static_cast<long>(j.value("samples", 1000000.0)), j.value("seed", seed));
    return f * complex_from_json(j.value("scale", json(1.0)));
  }
  if (kind == "random")
  {
    return sample_random_impedance(spec, random_impedance_from_json(j), n, j.value("seed", seed));
  }
  throw InvalidArgument("unknown function kind \"" + kind + "\"");
}

//
// Impedance operator specs:
//   {"kind": "zero"}
//   {"kind": "multiplier", "phi": <function source>}
//   {"kind": "symbol", "symbol": "[+|-][i*][c2*](mu+c1)^(t/2)"}
//   {"kind": "matrix", "re": [[...]], "im": [[...]]}
//
inline ImpedanceOperator impedance_from_json(const json &j, SpectrumPtr spec, int n_trunc,
                                             std::uint64_t seed)
{
  const std::string kind = j.value("kind", "");
  if (kind == "zero")
  {
    return ImpedanceOperator::zero(spec, n_trunc);
  }
  if (kind == "multiplier")
  {
    require(j.contains("phi"), "multiplier impedance needs \"phi\"");
    return ImpedanceOperator::multiplier(function_from_json(j.at("phi"), spec, seed), n_trunc);
  }
  if (kind == "symbol")
  {
    return ImpedanceOperator::symbol(spec, parse_symbol(j.at("symbol").get<std::string>()), n_trunc);
  }
  if (kind == "matrix")
  {
    const auto re = j.at("re").get<std::vector<std::vector<double>>>();
    const std::size_t n = re.size();
    std::vector<std::vector<double>> im(n, std::vector<double>(n, 0.0));
    if (j.contains("im"))
    {
      im = j.at("im").get<std::vector<std::vector<double>>>();
    }
    require(im.size() == n, "matrix re/im size mismatch");
    CMat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r)
    {
      require(re[r].size() == n && im[r].size() == n, "impedance matrix must be square");
      for (std::size_t c = 0; c < n; ++c)
      {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = Complex(re[r][c], im[r][c]);
      }
    }
    return ImpedanceOperator::matrix(spec, m);
  }
  throw InvalidArgument("unknown impedance kind \"" + kind + "\"");
}

inline json read_json_file(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InvalidArgument("cannot open " + path);
  }
  return json::parse(in);
}

//
// Geometry sources: raw geometry JSON, {"file": path}, or a builtin:
//   {"builtin": "circle", "radius": r} (exact circle)
//   {"builtin": "regular_polygon", "sides": n, "radius": r}
//   {"builtin": "icosphere", "level": l, "radius": r}
//   {"builtin": "two_icospheres", "level": l} (unit spheres centred 3 apart)
//
inline BoundaryGeometry geometry_from_source(const json &j)
{
  if (j.contains("file"))
  {
    return geometry_from_json(read_json_file(j.at("file").get<std::string>()));
  }
  if (!j.contains("builtin"))
  {
    return geometry_from_json(j);
  }
  const std::string b = j.at("builtin").get<std::string>();
  const double r = j.value("radius", 1.0);
  if (b == "circle")
  {
    return BoundaryGeometry::curves({CurveComponent::circle({0.0, 0.0}, r)});
  }
  if (b == "regular_polygon")
  {
    return BoundaryGeometry::curves({regular_polygon(j.at("sides").get<int>(), r)});
  }
  if (b == "icosphere")
  {
    return BoundaryGeometry::surface(icosphere(j.at("level").get<int>(), r));
  }
  if (b == "two_icospheres")
  {
    const int level = j.at("level").get<int>();
    return BoundaryGeometry::surface(
        merge_meshes(icosphere(level, 1.0), icosphere(level, 1.0, Eigen::Vector3d(3.0, 0.0, 0.0))));
  }
  throw InvalidArgument("unknown builtin geometry \"" + b + "\"");
}

//
// Mesh sources: {"file": path} or a builtin:
//   {"builtin": "disk", "radius": r, "rings": n, "segments": m}
//   {"builtin": "annulus", "r_in": a, "r_out": b, "layers": n, "segments": m}
//   {"builtin": "polygon", "vertices": [[x,y],...], "h": h}
// Materials "alpha": [a11,a12,a22] and "beta" apply uniformly to builtins.
//
inline DomainMesh mesh_from_source(const json &j)
{
  if (j.contains("file"))
  {
    return mesh_from_json(read_json_file(j.at("file").get<std::string>()));
  }
  require(j.contains("builtin"), "mesh source needs \"file\" or \"builtin\"");
  const std::string b = j.at("builtin").get<std::string>();
  auto with_materials = [&](DomainMesh m) {
    Eigen::Matrix2d alpha = Eigen::Matrix2d::Identity();
    if (j.contains("alpha"))
    {
      const auto a = j.at("alpha").get<std::vector<double>>();
      require(a.size() == 3, "alpha is [a11, a12, a22]");
      alpha << a[0], a[1], a[1], a[2];
    }
    m.set_uniform_materials(alpha, j.value("beta", 1.0));
    return m;
  };
  if (b == "disk")
  {
    return with_materials(disk_mesh(j.value("radius", 1.0), j.at("rings").get<int>(), j.value("segments", 0)));
  }
  if (b == "annulus")
  {
    return with_materials(annulus_mesh(j.at("r_in").get<double>(), j.at("r_out").get<double>(),
                                       j.at("layers").get<int>(), j.at("segments").get<int>()));
  }
  if (b == "polygon")
  {
    std::vector<Eigen::Vector2d> pts;
    for (const auto &p : j.at("vertices"))
    {
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return with_materials(star_polygon_mesh(pts, j.at("h").get<double>()));
  }
  throw InvalidArgument("unknown builtin mesh \"" + b + "\"");
}

}  // namespace gibc

#endif  // GIBC_IO_HPP
