#include "gpcn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace gpcn::sim {

namespace {

struct Vec3 {
  double x, y, z;
};
Vec3 sub(const std::vector<double>& p, std::size_t a, std::size_t b) {
  return {p[3 * a] - p[3 * b], p[3 * a + 1] - p[3 * b + 1], p[3 * a + 2] - p[3 * b + 2]};
}
double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
void add_to(std::vector<double>& f, std::size_t i, Vec3 v, double s) {
  f[3 * i] += s * v.x;
  f[3 * i + 1] += s * v.y;
  f[3 * i + 2] += s * v.z;
}

constexpr double kDegenerateSin = 1e-6;

// (theta - theta0) / sin(theta), with the collinear limit for straight angles.
std::optional<double> angle_ratio(double theta, double theta0, double sin_theta) {
  if (sin_theta > kDegenerateSin) return (theta - theta0) / sin_theta;
  if (std::abs(theta0 - std::numbers::pi) < 1e-12 && theta > std::numbers::pi / 2) {
    const double d = std::numbers::pi - theta;
    return -(1.0 + d * d / 6.0);
  }
  return std::nullopt;
}

double strength(const ForceField& ff, Strength s) { return ff.strengths[static_cast<std::size_t>(s)]; }

}  // namespace

const char* to_string(Strength s) {
  switch (s) {
    case Strength::lat_assoc:
      return "LatAssoc";
    case Strength::long_assoc:
      return "LongAssoc";
    case Strength::lat_angle:
      return "LatAngle";
    case Strength::long_angle:
      return "LongAngle";
    case Strength::quad_angles:
      return "QuadAngles";
  }
  return "unknown";
}

Strength strength_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kStrengthCount; ++i)
    if (name == to_string(static_cast<Strength>(i))) return static_cast<Strength>(i);
  throw std::invalid_argument("unknown strength parameter '" + name +
                              "' (expected LatAssoc, LongAssoc, LatAngle, LongAngle or QuadAngles)");
}

Strength strength_of(BondKind k) {
  return k == BondKind::longitudinal ? Strength::long_assoc : Strength::lat_assoc;
}

Strength strength_of(AngleKind k) {
  switch (k) {
    case AngleKind::lat_angle:
      return Strength::lat_angle;
    case AngleKind::long_angle:
      return Strength::long_angle;
    default:
      return Strength::quad_angles;
  }
}

double bond_length(const std::vector<double>& pos, const Bond& b) { return norm(sub(pos, b.j, b.i)); }

double angle_value(const std::vector<double>& pos, const Angle& a) {
  const Vec3 u = sub(pos, a.i, a.j);
  const Vec3 w = sub(pos, a.k, a.j);
  return std::atan2(norm(cross(u, w)), dot(u, w));
}

MtModel build_geometry(const GeometryOptions& o) {
  if (o.n_rings < 2 || o.k < 3 || o.offset < 0 || o.offset >= o.n_rings)
    throw std::invalid_argument("build_geometry: need n_rings >= 2, k >= 3 and 0 <= offset < n_rings");
  if (!(o.long_spacing > 0.0) || !(o.lateral_length > 0.0))
    throw std::invalid_argument("build_geometry: spacings must be positive");
  MtModel m;
  m.n_rings = o.n_rings;
  m.k = o.k;
  m.offset = o.offset;
  m.n = static_cast<std::size_t>(o.n_rings) * static_cast<std::size_t>(o.k);
  m.rise = o.offset * o.long_spacing / o.k;
  const double chord_sq = o.lateral_length * o.lateral_length - m.rise * m.rise;
  if (!(chord_sq > 0.0))
    throw std::invalid_argument("build_geometry: lateral length is shorter than the helical rise");
  m.radius = std::sqrt(chord_sq) / (2.0 * std::sin(std::numbers::pi / o.k));

  m.positions.resize(3 * m.n);
  auto id = [&](int i, int j) { return static_cast<std::size_t>(i) * o.k + static_cast<std::size_t>(j); };
  for (int i = 0; i < o.n_rings; ++i)
    for (int j = 0; j < o.k; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / o.k;
      const std::size_t p = id(i, j);
      m.positions[3 * p] = m.radius * std::cos(phi);
      m.positions[3 * p + 1] = m.radius * std::sin(phi);
      m.positions[3 * p + 2] = o.long_spacing * i + j * m.rise;
    }

  auto next = [&](int i, int j) -> std::optional<std::pair<int, int>> {
    if (j < o.k - 1) return std::pair{i, j + 1};
    if (i + o.offset < o.n_rings) return std::pair{i + o.offset, 0};
    return std::nullopt;
  };
  auto prev = [&](int i, int j) -> std::optional<std::pair<int, int>> {
    if (j > 0) return std::pair{i, j - 1};
    if (i - o.offset >= 0) return std::pair{i - o.offset, o.k - 1};
    return std::nullopt;
  };

  const auto& pos = m.positions;
  auto add_bond = [&](std::size_t a, std::size_t b, BondKind kind) {
    Bond bd{a, b, 0.0, kind};
    bd.rest_length = bond_length(pos, bd);
    m.bonds.push_back(bd);
  };
  auto add_angle = [&](std::size_t a, std::size_t b, std::size_t c, AngleKind kind) {
    Angle an{a, b, c, 0.0, kind};
    an.rest_angle = angle_value(pos, an);
    m.angles.push_back(an);
  };

  for (int i = 0; i < o.n_rings; ++i)
    for (int j = 0; j < o.k; ++j) {
      if (auto nx = next(i, j))
        add_bond(id(i, j), id(nx->first, nx->second), j < o.k - 1 ? BondKind::lat_lattice : BondKind::lat_seam);
      if (i + 1 < o.n_rings) add_bond(id(i, j), id(i + 1, j), BondKind::longitudinal);
    }
  for (int i = 0; i < o.n_rings; ++i)
    for (int j = 0; j < o.k; ++j) {
      const auto pv = prev(i, j);
      const auto nx = next(i, j);
      if (pv && nx) add_angle(id(pv->first, pv->second), id(i, j), id(nx->first, nx->second), AngleKind::lat_angle);
      if (i > 0 && i + 1 < o.n_rings) add_angle(id(i - 1, j), id(i, j), id(i + 1, j), AngleKind::long_angle);
    }
  // Lattice cell a=(i,j), b=next(a), c=(i+1,j), d=next(c).
  for (int i = 0; i + 1 < o.n_rings; ++i)
    for (int j = 0; j < o.k; ++j) {
      const auto b = next(i, j);
      const auto d = next(i + 1, j);
      if (!b || !d) continue;
      const std::size_t ia = id(i, j), ib = id(b->first, b->second), ic = id(i + 1, j), idd = id(d->first, d->second);
      add_angle(ic, ia, ib, AngleKind::quad_acute);
      add_angle(ia, ib, idd, AngleKind::quad_obtuse);
      add_angle(ib, idd, ic, AngleKind::quad_acute);
      add_angle(idd, ic, ia, AngleKind::quad_obtuse);
    }

  // Every interaction of one kind must see the same rest value.
  auto check = [](auto& items, auto rest, const char* what) {
    std::vector<std::pair<int, double>> first;
    for (const auto& it : items) {
      const int kind = static_cast<int>(it.kind);
      auto f = std::find_if(first.begin(), first.end(), [&](const auto& e) { return e.first == kind; });
      if (f == first.end()) {
        first.emplace_back(kind, rest(it));
      } else if (std::abs(rest(it) - f->second) > 1e-2) {
        throw std::invalid_argument(std::string("build_geometry: inconsistent ") + what + " rest values (" +
                                    std::to_string(rest(it)) + " vs " + std::to_string(f->second) + ")");
      }
    }
  };
  check(m.bonds, [](const Bond& b) { return b.rest_length; }, "bond");
  check(m.angles, [](const Angle& a) { return a.rest_angle * 180.0 / std::numbers::pi; }, "angle");
  return m;
}

double bond_energy(const std::vector<double>& pos, const Bond& b, double k) {
  const double d = bond_length(pos, b) - b.rest_length;
  return k * d * d;
}

double angle_energy(const std::vector<double>& pos, const Angle& a, double k) {
  const double d = angle_value(pos, a) - a.rest_angle;
  return k * d * d;
}

void add_bond_force(const std::vector<double>& pos, const Bond& b, double k, std::vector<double>& forces) {
  const Vec3 d = sub(pos, b.j, b.i);
  const double l = norm(d);
  if (l == 0.0) return;
  const double s = 2.0 * k * (l - b.rest_length) / l;
  add_to(forces, b.i, d, s);
  add_to(forces, b.j, d, -s);
}

void add_angle_force(const std::vector<double>& pos, const Angle& a, double k, std::vector<double>& forces) {
  const Vec3 u = sub(pos, a.i, a.j);
  const Vec3 w = sub(pos, a.k, a.j);
  const double lu = norm(u);
  const double lw = norm(w);
  if (lu == 0.0 || lw == 0.0) return;
  const double c = norm(cross(u, w));
  const double uw = dot(u, w);
  const double theta = std::atan2(c, uw);
  const auto ratio = angle_ratio(theta, a.rest_angle, c / (lu * lw));
  if (!ratio) return;
  const double s = 2.0 * k * *ratio / (lu * lw);
  // Components of each arm perpendicular to the other.
  const Vec3 fi{w.x - uw / (lu * lu) * u.x, w.y - uw / (lu * lu) * u.y, w.z - uw / (lu * lu) * u.z};
  const Vec3 fk{u.x - uw / (lw * lw) * w.x, u.y - uw / (lw * lw) * w.y, u.z - uw / (lw * lw) * w.z};
  add_to(forces, a.i, fi, s);
  add_to(forces, a.k, fk, s);
  add_to(forces, a.j, fi, -s);
  add_to(forces, a.j, fk, -s);
}

EnergyReport potential_energy(const MtModel& m, const ForceField& ff, const std::vector<double>& pos) {
  EnergyReport r;
  r.per_particle.assign(m.n, 0.0);
  for (const Bond& b : m.bonds) {
    const double e = bond_energy(pos, b, ff.bond_unit * strength(ff, strength_of(b.kind)));
    r.total += e;
    r.per_particle[b.i] += 0.5 * e;
    r.per_particle[b.j] += 0.5 * e;
  }
  for (const Angle& a : m.angles) {
    const double e = angle_energy(pos, a, ff.angle_unit * strength(ff, strength_of(a.kind)));
    r.total += e;
    r.per_particle[a.i] += e / 3.0;
    r.per_particle[a.j] += e / 3.0;
    r.per_particle[a.k] += e / 3.0;
  }
  return r;
}

double compute_forces(const MtModel& m, const ForceField& ff, const std::vector<double>& pos,
                      std::vector<double>& forces) {
  forces.assign(3 * m.n, 0.0);
  double total = 0.0;
  for (const Bond& b : m.bonds) {
    const double k = ff.bond_unit * strength(ff, strength_of(b.kind));
    total += bond_energy(pos, b, k);
    add_bond_force(pos, b, k, forces);
  }
  for (const Angle& a : m.angles) {
    const double k = ff.angle_unit * strength(ff, strength_of(a.kind));
    total += angle_energy(pos, a, k);
    add_angle_force(pos, a, k, forces);
  }
  return total;
}

void default_boundary(const MtModel& m, SimConfig& c) {
  const std::size_t ring = static_cast<std::size_t>(m.k);
  const std::size_t two = std::min<std::size_t>(2 * ring, m.n);
  c.clamp_set.clear();
  c.forced_set.clear();
  for (std::size_t i = 0; i < two; ++i) c.clamp_set.push_back(i);
  for (std::size_t i = m.n - two; i < m.n; ++i) c.forced_set.push_back(i);
}

double effective_temperature(const MtModel& m, const SimConfig& c) {
  if (c.temperature >= 0.0) return c.temperature;
  const double tau = c.damping_steps * c.dt;
  const double target = 0.01 * c.max_force;
  return target * target * tau * c.dt / (2.0 * m.mass);
}

namespace {

struct Dynamics {
  std::vector<char> clamped;
  std::vector<char> forced;
  double tau;
  double noise;
};

Dynamics prepare(const MtModel& m, const SimConfig& c) {
  if (!(c.dt > 0.0)) throw std::invalid_argument("simulation: dt must be positive");
  if (c.langevin && !(c.damping_steps > 0.0)) throw std::invalid_argument("simulation: damping must be positive");
  Dynamics d;
  d.clamped.assign(m.n, 0);
  d.forced.assign(m.n, 0);
  for (std::size_t i : c.clamp_set) {
    if (i >= m.n) throw std::invalid_argument("simulation: clamp index out of range");
    d.clamped[i] = 1;
  }
  for (std::size_t i : c.forced_set) {
    if (i >= m.n) throw std::invalid_argument("simulation: forced index out of range");
    d.forced[i] = 1;
  }
  d.tau = c.damping_steps * c.dt;
  const double kt = effective_temperature(m, c);
  d.noise = c.langevin ? std::sqrt(2.0 * m.mass * kt / (d.tau * c.dt)) : 0.0;
  return d;
}

void total_forces(const MtModel& m, const SimConfig& c, const Dynamics& d, State& s, Rng* rng) {
  s.potential = compute_forces(m, c.field, s.x, s.f);
  const double ramp = c.ramp_steps > 0 ? std::min(1.0, static_cast<double>(s.step) / c.ramp_steps) : 1.0;
  const double load = ramp * c.max_force;
  for (std::size_t p = 0; p < m.n; ++p) {
    if (d.forced[p]) s.f[3 * p + 1] -= load;
    if (!c.langevin || d.clamped[p]) continue;
    for (int a = 0; a < 3; ++a) {
      double extra = -m.mass / d.tau * s.v[3 * p + a];
      if (rng && d.noise > 0.0) extra += d.noise * rng->normal();
      s.f[3 * p + a] += extra;
    }
  }
}

}  // namespace

State initial_state(const MtModel& m, const SimConfig& c) {
  const Dynamics d = prepare(m, c);
  State s;
  s.x = m.positions;
  s.v.assign(3 * m.n, 0.0);
  total_forces(m, c, d, s, nullptr);
  return s;
}

void step(const MtModel& m, const SimConfig& c, State& s, Rng& rng) {
  const Dynamics d = prepare(m, c);
  const double h = 0.5 * c.dt / m.mass;
  for (std::size_t p = 0; p < m.n; ++p) {
    if (d.clamped[p]) continue;
    for (int a = 0; a < 3; ++a) {
      s.v[3 * p + a] += h * s.f[3 * p + a];
      s.x[3 * p + a] += c.dt * s.v[3 * p + a];
    }
  }
  ++s.step;
  total_forces(m, c, d, s, &rng);
  for (std::size_t p = 0; p < m.n; ++p) {
    if (d.clamped[p]) {
      for (int a = 0; a < 3; ++a) s.v[3 * p + a] = 0.0;
      continue;
    }
    for (int a = 0; a < 3; ++a) {
      s.v[3 * p + a] += h * s.f[3 * p + a];
      const double xv = s.x[3 * p + a];
      if (!std::isfinite(xv) || std::abs(xv) > c.guard || !std::isfinite(s.v[3 * p + a]))
        throw SimulationDiverged("simulation diverged at step " + std::to_string(s.step) + ": particle " +
                                 std::to_string(p) + " coordinate " + std::to_string(xv));
    }
  }
}

double kinetic_energy(const MtModel& m, const State& s) {
  double e = 0.0;
  for (double v : s.v) e += v * v;
  return 0.5 * m.mass * e;
}

std::vector<std::string> frame_columns(bool eleven) {
  std::vector<std::string> c = {"x", "y", "z", "vx", "vy", "vz", "LatAssoc", "LongAssoc", "LongAngle", "QuadAngles"};
  if (eleven) c.push_back("LatAngle");
  return c;
}

std::vector<Frame> run_simulation(const MtModel& m, const SimConfig& c) {
  if (c.ramp_steps < 0 || c.hold_steps < 0 || c.save_every <= 0)
    throw std::invalid_argument("simulation: step counts must be nonnegative and save_every positive");
  const long total = static_cast<long>(c.ramp_steps) + c.hold_steps;
  if (total == 0 || total % c.save_every != 0)
    throw std::invalid_argument("simulation: save_every must divide ramp_steps + hold_steps");
  for (double s : c.field.strengths)
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("simulation: strengths must be positive");

  Rng rng(c.seed);
  State s = initial_state(m, c);
  const std::vector<double> coeff = {c.field.strengths[0], c.field.strengths[1], c.field.strengths[3],
                                     c.field.strengths[4], c.field.strengths[2]};
  const std::size_t ncol = c.eleven_columns ? 11 : 10;
  std::vector<Frame> frames;
  while (s.step < total) {
    step(m, c, s, rng);
    if (s.step % c.save_every != 0) continue;
    Frame f;
    f.step = s.step;
    f.x = Matrix(m.n, ncol);
    const EnergyReport e = potential_energy(m, c.field, s.x);
    f.y = Matrix(m.n, 1);
    for (std::size_t p = 0; p < m.n; ++p) {
      for (int a = 0; a < 3; ++a) {
        f.x(p, a) = s.x[3 * p + a];
        f.x(p, 3 + a) = s.v[3 * p + a];
      }
      for (std::size_t q = 6; q < ncol; ++q) f.x(p, q) = coeff[q - 6];
      f.y(p, 0) = e.per_particle[p];
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

double tip_deflection(const MtModel& m, const Frame& f, const SimConfig& c) {
  if (c.forced_set.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t p : c.forced_set) s += m.positions[3 * p + 1] - f.x(p, 1);
  return s / static_cast<double>(c.forced_set.size());
}

}  // namespace gpcn::sim
