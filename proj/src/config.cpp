#include "topoforge/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "topoforge/error.hpp"

namespace topoforge {

// ---------------------------------------------------------------------------------------------
// Presets

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"short_beam", "l_beam", "cantilever", "quarter_annulus"};
  return names;
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "short_beam") {
    c.control_u = c.control_v = 61;
    c.degree_u = c.degree_v = 3;
    c.load = 1e5;
    c.volume_fraction = 0.5;
  } else if (name == "l_beam") {
    c.control_u = 103;
    c.control_v = 52;
    c.degree_u = c.degree_v = 2;
    c.load = 1e5;
    c.volume_fraction = 0.5;
  } else if (name == "cantilever") {
    c.control_u = 101;
    c.control_v = 51;
    c.degree_u = c.degree_v = 2;
    c.load = 1e6;
    c.volume_fraction = 0.4;
  } else if (name == "quarter_annulus") {
    c.control_u = c.control_v = 62;
    c.degree_u = c.degree_v = 2;
    c.load = 1e6;
    c.volume_fraction = 0.4;
  } else {
    fail(ErrorCode::Parse, "unknown preset '" + name + "'");
  }
  return c;
}

namespace {

struct Homogeneous {
  double wx, wy, w;
};

// Boehm insertion of one knot into a rational curve held in homogeneous coordinates.
void insert_knot(std::vector<double>& knots, int degree, std::vector<Homogeneous>& pts, double t) {
  const int p = degree;
  int k = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), t) - knots.begin()) - 1;
  std::vector<Homogeneous> q(pts.size() + 1);
  for (int i = 0; i <= k - p; ++i) q[i] = pts[i];
  for (int i = k - p + 1; i <= k; ++i) {
    const double alpha = (t - knots[i]) / (knots[i + p] - knots[i]);
    q[i] = {alpha * pts[i].wx + (1 - alpha) * pts[i - 1].wx, alpha * pts[i].wy + (1 - alpha) * pts[i - 1].wy,
            alpha * pts[i].w + (1 - alpha) * pts[i - 1].w};
  }
  for (std::size_t i = k + 1; i < q.size(); ++i) q[i] = pts[i - 1];
  knots.insert(knots.begin() + k + 1, t);
  pts = std::move(q);
}

// Exact quarter ring between radii r and R in the second quadrant: u sweeps the angle from pi down to
// pi/2 (degree 2, rational), v runs radially outward. The radial direction is affine in v, so any
// open knot vector with control points at the Greville abscissae represents it exactly.
NurbsSurface quarter_annulus(double r, double R, int count_u, int count_v, int degree_v) {
  if (count_u < 3) fail(ErrorCode::InvalidArgument, "quarter annulus needs at least 3 angular control points");
  const double s = std::numbers::sqrt2 / 2.0;
  std::vector<double> knots = {0, 0, 0, 1, 1, 1};
  std::vector<Homogeneous> arc = {{-1.0, 0.0, 1.0}, {-s, s, s}, {0.0, 1.0, 1.0}};  // unit circle
  const int spans = count_u - 2;
  for (int k = 1; k < spans; ++k) insert_knot(knots, 2, arc, static_cast<double>(k) / spans);
  KnotVector ku(knots, 2);
  KnotVector kv = KnotVector::open_uniform(degree_v, count_v);
  const auto gv = kv.greville();
  Grid2D<Point2> cps(count_u, count_v);
  Grid2D<double> w(count_u, count_v);
  for (int i = 0; i < count_u; ++i)
    for (int j = 0; j < count_v; ++j) {
      const double radius = r + gv[j] * (R - r);
      cps(i, j) = {radius * arc[i].wx / arc[i].w, radius * arc[i].wy / arc[i].w};
      w(i, j) = arc[i].w;
    }
  return NurbsSurface(std::move(ku), std::move(kv), std::move(cps), std::move(w));
}

void add_load(Problem& pb, Cell cp, double magnitude) { pb.bc.loads.push_back({cp.a, cp.b, 1, -magnitude}); }

// Coefficients whose support is contained in the excluded region of the domain.
std::vector<std::uint8_t> pinned_outside(const NurbsSurface& g, const DomainMask& domain) {
  std::vector<std::uint8_t> pinned(static_cast<std::size_t>(g.count_u()) * g.count_v(), 0);
  if (domain.full()) return pinned;
  const KnotVector& ku = g.knots_u();
  const KnotVector& kv = g.knots_v();
  const int p = ku.degree(), q = kv.degree();
  for (int i = 0; i < g.count_u(); ++i)
    for (int j = 0; j < g.count_v(); ++j) {
      const ParamRect support{ku[i], ku[i + p + 1], kv[j], kv[j + q + 1]};
      for (const auto& ex : domain.excluded)
        if (support.u0 >= ex.u0 && support.u1 <= ex.u1 && support.v0 >= ex.v0 && support.v1 <= ex.v1)
          pinned[static_cast<std::size_t>(i) * g.count_v() + j] = 1;
    }
  return pinned;
}

}  // namespace

Problem build_problem(const RunConfig& c) {
  const KnotVector ku = KnotVector::open_uniform(c.degree_u, c.control_u);
  const KnotVector kv = KnotVector::open_uniform(c.degree_v, c.control_v);
  if (c.preset == "short_beam") {
    // 2:1 beam clamped on the left, loaded at the lower-right corner.
    Problem pb{make_rectangle(ku, kv, 2.0, 1.0), {}, {}, {}, {}};
    fix_edge(pb.bc, pb.geometry, Edge::UMin);
    add_load(pb, nearest_control_point(pb.geometry, {2.0, 0.0}), c.load);
    pb.pinned = pinned_outside(pb.geometry, pb.domain);
    return pb;
  }
  if (c.preset == "l_beam") {
    // Unit square minus the upper-right block beyond 0.4; top of the vertical arm clamped, load at
    // the tip of the horizontal arm.
    DomainMask domain{{ParamRect{0.4, 1.0, 0.4, 1.0}}};
    Problem pb{make_rectangle(ku, kv, 1.0, 1.0), domain, {}, {}, {}};
    fix_edge(pb.bc, pb.geometry, Edge::VMax, domain);
    add_load(pb, nearest_control_point_on_edge(pb.geometry, Edge::UMax, {1.0, 0.4}), c.load);
    pb.pinned = pinned_outside(pb.geometry, pb.domain);
    return pb;
  }
  if (c.preset == "cantilever") {
    Problem pb{make_rectangle(ku, kv, 3.0, 1.0), {}, {}, {}, {}};
    fix_edge(pb.bc, pb.geometry, Edge::UMin);
    add_load(pb, nearest_control_point_on_edge(pb.geometry, Edge::UMax, {3.0, 0.5}), c.load);
    pb.pinned = pinned_outside(pb.geometry, pb.domain);
    return pb;
  }
  if (c.preset == "quarter_annulus") {
    if (c.degree_u != 2) fail(ErrorCode::InvalidArgument, "quarter_annulus requires mesh.degree_u = 2 (exact conic)");
    Problem pb{quarter_annulus(5.0, 10.0, c.control_u, c.control_v, c.degree_v), {}, {}, {}, {}};
    fix_edge(pb.bc, pb.geometry, Edge::UMin);  // straight edge on the negative x-axis
    add_load(pb, nearest_control_point(pb.geometry, {0.0, 10.0}), c.load);
    pb.pinned = pinned_outside(pb.geometry, pb.domain);
    return pb;
  }
  fail(ErrorCode::Parse, "unknown preset '" + c.preset + "'");
}

// ---------------------------------------------------------------------------------------------
// Config text

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(std::string_view key, std::string_view s) {
  const std::string t(s);
  try {
    std::size_t pos = 0;
    const double v = std::stod(t, &pos);
    if (pos != t.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::Parse, std::string(key) + ": expected a number, got '" + t + "'");
  }
}

int to_int(std::string_view key, std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrorCode::Parse, std::string(key) + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

bool to_bool(std::string_view key, std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  fail(ErrorCode::Parse, std::string(key) + ": expected true or false, got '" + std::string(s) + "'");
}

std::string to_string(std::string_view key, std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return std::string(s.substr(1, s.size() - 2));
  if (s.find_first_of(" \t\"") != std::string_view::npos)
    fail(ErrorCode::Parse, std::string(key) + ": strings with spaces must be quoted");
  return std::string(s);
}

struct Field {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

using FieldTable = std::vector<std::pair<std::string, Field>>;

Field dbl(double RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view v) { c.*m = to_double("", v); },
          [m](const RunConfig& c) { return fmt_double(c.*m); }};
}
Field integer(int RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view v) { c.*m = to_int("", v); },
          [m](const RunConfig& c) { return std::to_string(c.*m); }};
}
Field boolean(bool RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view v) { c.*m = to_bool("", v); },
          [m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}
Field mat(double Material::*m) {
  return {[m](RunConfig& c, std::string_view v) { c.material.*m = to_double("", v); },
          [m](const RunConfig& c) { return fmt_double(c.material.*m); }};
}

// Ordered so serialization groups keys by section.
const FieldTable& fields() {
  static const FieldTable table = [] {
    FieldTable t;
    t.emplace_back("preset", Field{[](RunConfig& c, std::string_view v) { c.preset = to_string("preset", v); },
                                   [](const RunConfig& c) { return "\"" + c.preset + "\""; }});
    t.emplace_back("output_dir",
                   Field{[](RunConfig& c, std::string_view v) { c.output_dir = to_string("output_dir", v); },
                         [](const RunConfig& c) { return "\"" + c.output_dir + "\""; }});
    t.emplace_back("mesh.control_u", integer(&RunConfig::control_u));
    t.emplace_back("mesh.control_v", integer(&RunConfig::control_v));
    t.emplace_back("mesh.degree_u", integer(&RunConfig::degree_u));
    t.emplace_back("mesh.degree_v", integer(&RunConfig::degree_v));
    t.emplace_back("load.magnitude", dbl(&RunConfig::load));
    t.emplace_back("material.young_modulus", mat(&Material::young_modulus));
    t.emplace_back("material.poisson_ratio", mat(&Material::poisson_ratio));
    t.emplace_back("material.penalty", mat(&Material::penalty));
    t.emplace_back("problem.volume_fraction", dbl(&RunConfig::volume_fraction));
    t.emplace_back("problem.max_holes",
                   Field{[](RunConfig& c, std::string_view v) {
                           c.max_holes = (v == "inf" || v == "unlimited") ? -1 : to_int("", v);
                         },
                         [](const RunConfig& c) { return std::to_string(c.max_holes); }});
    t.emplace_back("problem.threshold", dbl(&RunConfig::threshold));
    t.emplace_back("problem.rho_min", dbl(&RunConfig::rho_min));
    t.emplace_back("problem.initial_density", dbl(&RunConfig::initial_density));
    t.emplace_back("topology.mu0", dbl(&RunConfig::mu0));
    t.emplace_back("topology.mu1", dbl(&RunConfig::mu1));
    t.emplace_back("topology.activation_iter", integer(&RunConfig::activation_iter));
    t.emplace_back("topology.ph_resolution_u", integer(&RunConfig::ph_res_u));
    t.emplace_back("topology.ph_resolution_v", integer(&RunConfig::ph_res_v));
    t.emplace_back("topology.freeze_excess", boolean(&RunConfig::freeze_excess));
    t.emplace_back("optimizer.max_iter", integer(&RunConfig::max_iter));
    t.emplace_back("optimizer.move_limit", dbl(&RunConfig::move_limit));
    t.emplace_back("optimizer.filter_radius", dbl(&RunConfig::filter_radius));
    t.emplace_back("optimizer.compliance_weight", dbl(&RunConfig::compliance_weight));
    t.emplace_back("optimizer.stop_on_convergence", boolean(&RunConfig::stop_on_convergence));
    t.emplace_back("optimizer.convergence_tol", dbl(&RunConfig::convergence_tol));
    t.emplace_back("optimizer.convergence_window", integer(&RunConfig::convergence_window));
    t.emplace_back("output.snapshot_every", integer(&RunConfig::snapshot_every));
    return t;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& [name, f] : fields())
    if (name == key) return &f;
  return nullptr;
}

// Unit notes emitted as comments by the serializer.
const std::map<std::string, std::string>& units() {
  static const std::map<std::string, std::string> u = {
      {"load.magnitude", "N"},
      {"material.young_modulus", "Pa"},
      {"problem.max_holes", "-1 = unlimited"},
      {"problem.threshold", "density"},
      {"problem.initial_density", "negative = volume_fraction"},
      {"optimizer.filter_radius", "control-grid spacings h"},
  };
  return u;
}

}  // namespace

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (!f) fail(ErrorCode::Parse, "unknown key '" + std::string(key) + "'");
  try {
    f->set(config, trim(value));
  } catch (const Error& e) {
    fail(e.code(), std::string(key) + e.what());
  }
}

RunConfig parse_config_text(std::string_view text, std::string_view source) {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  auto where = [&](int line) { return std::string(source) + ":" + std::to_string(line) + ": "; };

  while (std::getline(in, raw)) {
    ++lineno;
    // Strip comments outside quotes.
    bool quoted = false;
    std::size_t cut = raw.size();
    for (std::size_t k = 0; k < raw.size(); ++k) {
      if (raw[k] == '"') quoted = !quoted;
      if (raw[k] == '#' && !quoted) {
        cut = k;
        break;
      }
    }
    const std::string line = trim(std::string_view(raw).substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::Parse, where(lineno) + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) fail(ErrorCode::Parse, where(lineno) + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Parse, where(lineno) + "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || value.empty()) fail(ErrorCode::Parse, where(lineno) + "expected 'key = value'");
    const std::string dotted = section.empty() ? key : section + "." + key;
    if (!find_field(dotted)) fail(ErrorCode::Parse, where(lineno) + "unknown key '" + dotted + "'");
    for (const auto& e : entries)
      if (e.key == dotted) fail(ErrorCode::Parse, where(lineno) + "duplicate key '" + dotted + "'");
    entries.push_back({dotted, value, lineno});
  }

  const auto preset = std::find_if(entries.begin(), entries.end(), [](const Entry& e) { return e.key == "preset"; });
  if (preset == entries.end()) fail(ErrorCode::Parse, std::string(source) + ": missing 'preset'");
  RunConfig config;
  try {
    config = preset_config(to_string("preset", preset->value));
  } catch (const Error& e) {
    fail(ErrorCode::Parse, where(preset->line) + e.what());
  }
  for (const auto& e : entries) {
    try {
      set_config_value(config, e.key, e.value);
    } catch (const Error& err) {
      fail(ErrorCode::Parse, where(e.line) + err.what());
    }
  }
  try {
    config.validate();
  } catch (const Error& err) {
    // Point at the line that set the offending key when the message names one.
    const std::string msg = err.what();
    for (const auto& e : entries)
      if (msg.find(e.key) != std::string::npos) fail(ErrorCode::Parse, where(e.line) + msg);
    fail(ErrorCode::Parse, std::string(source) + ": " + msg);
  }
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const auto& [name, f] : fields()) {
    const auto dot = name.find('.');
    const std::string sec = dot == std::string::npos ? "" : name.substr(0, dot);
    const std::string key = dot == std::string::npos ? name : name.substr(dot + 1);
    if (sec != section) {
      os << "\n[" << sec << "]\n";
      section = sec;
    }
    os << key << " = " << f.get(config);
    if (auto u = units().find(name); u != units().end()) os << "  # " << u->second;
    os << '\n';
  }
  return os.str();
}

}  // namespace topoforge
