#pragma once

#include <Eigen/Geometry>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <type_traits>
#include <sstream>
#include <string>
#include <vector>

#include "geoflow/classify.hpp"
#include "geoflow/curve.hpp"
#include "geoflow/random_sim.hpp"

namespace geoflow {

/// A labeled point cloud with provenance.
template <typename Scalar>
struct Dataset {
  std::vector<ManifoldPoint<Scalar>> points;
  std::vector<int> labels;  // +1 / -1
  std::string source;
};

enum class DataFormat { xyz, lonlat };

namespace io_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_double(const std::string& s, const std::string& path,
                           std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << path << ": line " << line_no << ": cannot parse number '" << s
        << "'";
    throw ParseError(msg.str());
  }
  return v;
}

inline int find_column(const std::vector<std::string>& header,
                       const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (lower(header[i]) == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace io_detail

/// Guesses the on-disk encoding from the header columns.
inline std::optional<DataFormat> detect_format(const std::string& header_line) {
  const auto header = io_detail::split_csv(header_line);
  const bool has_xyz = io_detail::find_column(header, "x") >= 0 &&
                       io_detail::find_column(header, "y") >= 0 &&
                       io_detail::find_column(header, "z") >= 0;
  const bool has_ll = io_detail::find_column(header, "lon") >= 0 &&
                      io_detail::find_column(header, "lat") >= 0;
  if (has_xyz) return DataFormat::xyz;
  if (has_ll) return DataFormat::lonlat;
  return std::nullopt;
}

/// Reads a CSV point cloud. xyz rows must be unit vectors up to 1e-3 and
/// are renormalized; lon/lat rows are degrees. A `label` column, when
/// present, must hold +1 or -1; otherwise every point is labeled +1.
template <typename Scalar>
Dataset<Scalar> load_dataset(const std::string& path, DataFormat format) {
  std::ifstream in(path);
  if (!in) throw IOError("load_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path + ": line 1: missing header row");
  }
  const auto header = io_detail::split_csv(line);
  const int label_col = io_detail::find_column(header, "label");
  int c0 = -1, c1 = -1, c2 = -1;
  if (format == DataFormat::xyz) {
    c0 = io_detail::find_column(header, "x");
    c1 = io_detail::find_column(header, "y");
    c2 = io_detail::find_column(header, "z");
    if (c0 < 0 || c1 < 0 || c2 < 0) {
      throw ParseError(path + ": line 1: header must declare x,y,z columns");
    }
  } else {
    c0 = io_detail::find_column(header, "lon");
    c1 = io_detail::find_column(header, "lat");
    if (c0 < 0 || c1 < 0) {
      throw ParseError(path + ": line 1: header must declare lon,lat columns");
    }
  }

  Dataset<Scalar> out;
  out.source = path;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::trim(line).empty()) continue;
    const auto fields = io_detail::split_csv(line);
    const auto need = [&](int col) -> const std::string& {
      if (col < 0 || static_cast<std::size_t>(col) >= fields.size()) {
        std::ostringstream msg;
        msg << path << ": line " << line_no << ": missing column";
        throw ParseError(msg.str());
      }
      return fields[static_cast<std::size_t>(col)];
    };
    Vec3<Scalar> v;
    if (format == DataFormat::xyz) {
      v = Vec3<Scalar>(
          Scalar(io_detail::parse_double(need(c0), path, line_no)),
          Scalar(io_detail::parse_double(need(c1), path, line_no)),
          Scalar(io_detail::parse_double(need(c2), path, line_no)));
      if (std::abs(v.norm() - Scalar(1)) > Scalar(1e-3)) {
        std::ostringstream msg;
        msg << path << ": line " << line_no
            << ": xyz row deviates from unit norm by more than 1e-3";
        throw NormalizationError(msg.str());
      }
    } else {
      const Scalar lon = Scalar(io_detail::parse_double(need(c0), path, line_no)) *
                         pi_v<Scalar> / Scalar(180);
      const Scalar lat = Scalar(io_detail::parse_double(need(c1), path, line_no)) *
                         pi_v<Scalar> / Scalar(180);
      v = Vec3<Scalar>(std::cos(lat) * std::cos(lon),
                       std::cos(lat) * std::sin(lon), std::sin(lat));
    }
    int label = 1;
    if (label_col >= 0) {
      const double l = io_detail::parse_double(need(label_col), path, line_no);
      if (l != 1.0 && l != -1.0) {
        std::ostringstream msg;
        msg << path << ": line " << line_no << ": label must be +1 or -1";
        throw ParseError(msg.str());
      }
      label = static_cast<int>(l);
    }
    out.points.emplace_back(v);
    out.labels.push_back(label);
  }
  return out;
}

template <typename Scalar>
std::pair<Scalar, Scalar> to_lonlat_degrees(const ManifoldPoint<Scalar>& p) {
  const auto& c = p.coords();
  const Scalar lat = std::asin(std::clamp(c.z(), Scalar(-1), Scalar(1)));
  const Scalar lon = std::atan2(c.y(), c.x());
  return {lon * Scalar(180) / pi_v<Scalar>, lat * Scalar(180) / pi_v<Scalar>};
}

// ---------------------------------------------------------------------------
// Synthetic band generators
// ---------------------------------------------------------------------------

enum class BandShape { C, S, GreatCircle };

inline BandShape band_shape_from_string(const std::string& s) {
  const std::string l = io_detail::lower(s);
  if (l == "c") return BandShape::C;
  if (l == "s") return BandShape::S;
  if (l == "greatcircle") return BandShape::GreatCircle;
  throw ParseError("unknown band shape '" + s + "' (want C, S or greatcircle)");
}

/// Template curve of a band shape in canonical pose, discretized at roughly
/// 0.01 rad node spacing.
template <typename Scalar>
Curve<Scalar> band_template(const Manifold<Scalar>& m, BandShape shape,
                            const Mat3<Scalar>& pose) {
  std::vector<ManifoldPoint<Scalar>> nodes;
  const auto add = [&](const Vec3<Scalar>& v) {
    nodes.emplace_back(Vec3<Scalar>(pose * v));
  };
  switch (shape) {
    case BandShape::GreatCircle: {
      // Equator arc of 2.4 rad.
      const int n = 241;
      for (int i = 0; i < n; ++i) {
        const Scalar t = Scalar(-1.2) + Scalar(2.4) * Scalar(i) / Scalar(n - 1);
        add(Vec3<Scalar>(std::cos(t), std::sin(t), Scalar(0)));
      }
      break;
    }
    case BandShape::C: {
      // 240-degree sweep of a small circle at colatitude 0.7 around +z.
      const Scalar rho = Scalar(0.7);
      const int n = 271;
      for (int i = 0; i < n; ++i) {
        const Scalar phi = Scalar(-2.1) + Scalar(4.2) * Scalar(i) / Scalar(n - 1);
        add(Vec3<Scalar>(std::sin(rho) * std::cos(phi),
                         std::sin(rho) * std::sin(phi), std::cos(rho)));
      }
      break;
    }
    case BandShape::S: {
      // Two half circles of colatitude 0.5 bending opposite ways, joined
      // with a continuous tangent.
      const Scalar rho = Scalar(0.5);
      const int half = 151;
      Vec3<Scalar> junction = Vec3<Scalar>::Zero();
      for (int i = 0; i < half; ++i) {
        const Scalar phi = pi_v<Scalar> * Scalar(i) / Scalar(half - 1);
        const Vec3<Scalar> p(std::sin(rho) * std::cos(phi),
                             std::sin(rho) * std::sin(phi), std::cos(rho));
        add(p);
        junction = p;
      }
      const Vec3<Scalar> tangent(-std::sin(pi_v<Scalar>), std::cos(pi_v<Scalar>),
                                 Scalar(0));
      const Vec3<Scalar> binormal = junction.cross(tangent);
      const Vec3<Scalar> axis2 =
          (std::cos(rho) * junction - std::sin(rho) * binormal).normalized();
      for (int i = 1; i < half; ++i) {
        // Negative rotation continues the junction tangent direction.
        const Scalar psi = -pi_v<Scalar> * Scalar(i) / Scalar(half - 1);
        const Eigen::AngleAxis<Scalar> rot(psi, axis2);
        add(rot * junction);
      }
      break;
    }
  }
  return Curve<Scalar>(m, dedup_nodes(m, nodes));
}

/// Samples a noisy band along a template shape; deterministic under seed.
template <typename Scalar>
Dataset<Scalar> generate_band(const Manifold<Scalar>& m, BandShape shape,
                              std::size_t n, Scalar noise_sd,
                              const Mat3<Scalar>& pose, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_band: n must be >= 2");
  const Curve<Scalar> tmpl = band_template(m, shape, pose);
  const auto dist = make_curve_distribution(tmpl, noise_sd, seed);
  Dataset<Scalar> out;
  out.points = sample_along_curve(m, dist, n);
  out.labels.assign(n, 1);
  std::ostringstream src;
  src << "generate_band(shape="
      << (shape == BandShape::C ? "C"
                                : (shape == BandShape::S ? "S" : "greatcircle"))
      << ", n=" << n << ", noise_sd=" << noise_sd << ", seed=" << seed << ")";
  out.source = src.str();
  return out;
}

/// Rotation from z-y-x Euler angles in degrees.
template <typename Scalar>
Mat3<Scalar> pose_from_euler_degrees(Scalar yaw, Scalar pitch, Scalar roll) {
  const Scalar d = pi_v<Scalar> / Scalar(180);
  return (Eigen::AngleAxis<Scalar>(yaw * d, Vec3<Scalar>::UnitZ()) *
          Eigen::AngleAxis<Scalar>(pitch * d, Vec3<Scalar>::UnitY()) *
          Eigen::AngleAxis<Scalar>(roll * d, Vec3<Scalar>::UnitX()))
      .toRotationMatrix();
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

namespace io_detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot open " + path + " for writing");
  return out;
}

}  // namespace io_detail

enum class PolylineFormat { csv, svg };

inline PolylineFormat polyline_format_from_string(const std::string& s) {
  const std::string l = io_detail::lower(s);
  if (l == "csv") return PolylineFormat::csv;
  if (l == "svg") return PolylineFormat::svg;
  throw ParseError("unknown output format '" + s + "' (want csv or svg)");
}

/// Optional lon/lat crop applied when rendering.
struct GeoBBox {
  double lon_min, lon_max, lat_min, lat_max;  // degrees

  template <typename Scalar>
  bool contains(const ManifoldPoint<Scalar>& p) const {
    const auto [lon, lat] = to_lonlat_degrees(p);
    return lon >= Scalar(lon_min) && lon <= Scalar(lon_max) &&
           lat >= Scalar(lat_min) && lat <= Scalar(lat_max);
  }
};

struct SvgOptions {
  std::optional<Vec3<double>> viewpoint;  // default: centroid of the content
  std::optional<GeoBBox> bbox;
  int size_px = 800;
};

template <typename Scalar>
struct SvgCloud {
  std::vector<ManifoldPoint<Scalar>> points;
  std::string color = "#666666";
};

/// Renders curves and point clouds under an orthographic projection from a
/// viewpoint; hidden-hemisphere content is dropped. Output is byte-stable
/// for fixed inputs.
template <typename Scalar>
void emit_svg(const std::string& path, std::type_identity_t<std::span<const Curve<Scalar>>> curves,
              std::span<const std::string> curve_colors,
              std::type_identity_t<std::span<const SvgCloud<Scalar>>> clouds,
              const SvgOptions& options = {}) {
  Vec3<double> view(0, 0, 1);
  if (options.viewpoint.has_value()) {
    view = options.viewpoint->normalized();
  } else {
    Vec3<double> centroid = Vec3<double>::Zero();
    for (const auto& c : curves) {
      for (const auto& p : c.nodes()) centroid += p.coords().template cast<double>();
    }
    for (const auto& cl : clouds) {
      for (const auto& p : cl.points) centroid += p.coords().template cast<double>();
    }
    if (centroid.norm() > 1e-9) view = centroid.normalized();
  }
  Vec3<double> up = std::abs(view.z()) > 0.99 ? Vec3<double>(1, 0, 0)
                                              : Vec3<double>(0, 0, 1);
  const Vec3<double> right = up.cross(view).normalized();
  up = view.cross(right);

  const double half = options.size_px / 2.0;
  const double scale = half * 0.95;
  const auto visible = [&](const ManifoldPoint<Scalar>& p) {
    if (options.bbox.has_value() && !options.bbox->contains(p)) return false;
    return p.coords().template cast<double>().dot(view) > 0.0;
  };
  const auto to_px = [&](const ManifoldPoint<Scalar>& p) {
    const Vec3<double> c = p.coords().template cast<double>();
    return std::pair<double, double>{half + scale * c.dot(right),
                                     half - scale * c.dot(up)};
  };

  auto out = io_detail::open_out(path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << options.size_px << "\" height=\"" << options.size_px << "\">\n";
  out << "<circle cx=\"" << io_detail::fmt_px(half) << "\" cy=\""
      << io_detail::fmt_px(half) << "\" r=\"" << io_detail::fmt_px(scale)
      << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const std::string color =
        ci < curve_colors.size() ? curve_colors[ci] : "#000000";
    std::string d;
    bool pen_down = false;
    for (const auto& p : curves[ci].nodes()) {
      if (!visible(p)) {
        pen_down = false;
        continue;
      }
      const auto [x, y] = to_px(p);
      d += pen_down ? " L " : (d.empty() ? "M " : " M ");
      d += io_detail::fmt_px(x) + " " + io_detail::fmt_px(y);
      pen_down = true;
    }
    if (!d.empty()) {
      out << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
    }
  }
  for (const auto& cloud : clouds) {
    for (const auto& p : cloud.points) {
      if (!visible(p)) continue;
      const auto [x, y] = to_px(p);
      out << "<circle cx=\"" << io_detail::fmt_px(x) << "\" cy=\""
          << io_detail::fmt_px(y) << "\" r=\"2.5\" fill=\"" << cloud.color
          << "\"/>\n";
    }
  }
  out << "</svg>\n";
  if (!out) throw IOError("write failed for " + path);
}

/// One node per row: x, y, z, cumulative arc length. Multi-curve output
/// adds a leading curve index column.
template <typename Scalar>
void emit_polyline(std::type_identity_t<std::span<const Curve<Scalar>>> curves,
                   const std::string& path, PolylineFormat format,
                   const SvgOptions& options = {}) {
  if (curves.empty()) {
    throw std::invalid_argument("emit_polyline: no curves given");
  }
  if (format == PolylineFormat::svg) {
    std::vector<std::string> colors = {"#7a28a8", "#1f77b4", "#2ca02c",
                                       "#d62728"};
    colors.resize(std::max(colors.size(), curves.size()), "#000000");
    emit_svg(path, curves, std::span<const std::string>(colors),
             std::span<const SvgCloud<Scalar>>{}, options);
    return;
  }
  auto out = io_detail::open_out(path);
  const bool multi = curves.size() > 1;
  out << (multi ? "curve,x,y,z,cumlen\n" : "x,y,z,cumlen\n");
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& v = c.node(i).coords();
      if (multi) out << ci << ",";
      out << io_detail::fmt(double(v.x())) << "," << io_detail::fmt(double(v.y()))
          << "," << io_detail::fmt(double(v.z())) << ","
          << io_detail::fmt(double(c.cumulative_length(i))) << "\n";
    }
  }
  if (!out) throw IOError("write failed for " + path);
}

template <typename Scalar>
void emit_polyline(const Curve<Scalar>& curve, const std::string& path,
                   PolylineFormat format, const SvgOptions& options = {}) {
  emit_polyline(std::span<const Curve<Scalar>>(&curve, 1), path, format,
                options);
}

/// Re-ingests an emitted polyline CSV (single-curve layout).
template <typename Scalar>
Curve<Scalar> load_polyline(const Manifold<Scalar>& m,
                            const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("load_polyline: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path + ": line 1: missing header row");
  }
  std::vector<ManifoldPoint<Scalar>> nodes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::trim(line).empty()) continue;
    const auto fields = io_detail::split_csv(line);
    if (fields.size() < 3) {
      std::ostringstream msg;
      msg << path << ": line " << line_no << ": expected x,y,z[,cumlen]";
      throw ParseError(msg.str());
    }
    nodes.emplace_back(
        Vec3<Scalar>(Scalar(io_detail::parse_double(fields[0], path, line_no)),
                     Scalar(io_detail::parse_double(fields[1], path, line_no)),
                     Scalar(io_detail::parse_double(fields[2], path, line_no))));
  }
  return Curve<Scalar>(m, std::move(nodes));
}

template <typename Scalar>
void emit_dataset(const Dataset<Scalar>& data, const std::string& path) {
  auto out = io_detail::open_out(path);
  out << "x,y,z,label\n";
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    const auto& v = data.points[i].coords();
    out << io_detail::fmt(double(v.x())) << "," << io_detail::fmt(double(v.y()))
        << "," << io_detail::fmt(double(v.z())) << "," << data.labels[i]
        << "\n";
  }
  if (!out) throw IOError("write failed for " + path);
}

template <typename Scalar>
void emit_convergence_table(std::type_identity_t<std::span<const ConvergenceRow<Scalar>>> rows,
                            const std::string& path) {
  auto out = io_detail::open_out(path);
  out << "sd,flow_error,flow_se,boundary_error,boundary_se\n";
  for (const auto& r : rows) {
    out << io_detail::fmt(double(r.sd)) << "," << io_detail::fmt(double(r.flow_error))
        << "," << io_detail::fmt(double(r.flow_se)) << ","
        << io_detail::fmt(double(r.boundary_error)) << ","
        << io_detail::fmt(double(r.boundary_se)) << "\n";
  }
  if (!out) throw IOError("write failed for " + path);
}

/// Decisions as CSV: coordinates, decision kind, label and the distances;
/// relative gaps are blank outside the overlap case.
template <typename Scalar>
void emit_decisions(std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> mesh,
                    std::type_identity_t<std::span<const Decision<Scalar>>> decisions,
                    const std::string& path) {
  if (mesh.size() != decisions.size()) {
    throw LengthMismatchError("emit_decisions: mesh/decision size mismatch");
  }
  auto out = io_detail::open_out(path);
  out << "x,y,z,decision,label,d1,d2,r1,r2\n";
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto& v = mesh[i].coords();
    const auto& d = decisions[i];
    const char* kind = "";
    switch (d.kind) {
      case Decision<Scalar>::Kind::assigned: kind = "class"; break;
      case Decision<Scalar>::Kind::boundary: kind = "boundary"; break;
      case Decision<Scalar>::Kind::overlap_resolved: kind = "overlap"; break;
      case Decision<Scalar>::Kind::failed: kind = "failed"; break;
    }
    out << io_detail::fmt(double(v.x())) << "," << io_detail::fmt(double(v.y()))
        << "," << io_detail::fmt(double(v.z())) << "," << kind << ","
        << d.label << "," << io_detail::fmt(double(d.d1)) << ","
        << io_detail::fmt(double(d.d2)) << ",";
    if (d.r1.has_value()) out << io_detail::fmt(double(*d.r1));
    out << ",";
    if (d.r2.has_value()) out << io_detail::fmt(double(*d.r2));
    out << "\n";
  }
  if (!out) throw IOError("write failed for " + path);
}

}  // namespace geoflow
