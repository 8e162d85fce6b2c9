#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpcn/linalg.hpp"
#include "gpcn/rng.hpp"

namespace gpcn::sim {

// Unit system: length nm, time ns, mass attogram. Force is then pN and
// energy zJ (1e-21 J).
namespace units {
inline constexpr double dalton_in_ag = 1.66053906660e-6;
inline constexpr double newton_in_pn = 1e12;
inline constexpr double monomer_mass_da = 50.0;
inline constexpr double max_force_newton = 3e-15;
}  // namespace units

enum class Strength { lat_assoc = 0, long_assoc = 1, lat_angle = 2, long_angle = 3, quad_angles = 4 };
inline constexpr std::size_t kStrengthCount = 5;
const char* to_string(Strength s);
// Throws std::invalid_argument naming the unknown key.
Strength strength_from_string(const std::string& name);

using Strengths = std::array<double, kStrengthCount>;
inline constexpr Strengths kUnitStrengths = {1.0, 1.0, 1.0, 1.0, 1.0};

enum class BondKind { lat_lattice, lat_seam, longitudinal };
enum class AngleKind { lat_angle, long_angle, quad_acute, quad_obtuse };

struct Bond {
  std::size_t i, j;
  double rest_length;  // nm
  BondKind kind;
};

// Angle at vertex j between arms j->i and j->k.
struct Angle {
  std::size_t i, j, k;
  double rest_angle;  // radians
  AngleKind kind;
};

Strength strength_of(BondKind k);
Strength strength_of(AngleKind k);

struct GeometryOptions {
  int n_rings = 48;
  int k = 13;
  int offset = 3;
  double long_spacing = 5.0;        // nm
  double lateral_length = 5.15639;  // nm
};

struct MtModel {
  std::size_t n = 0;
  int n_rings = 0;
  int k = 0;
  int offset = 0;
  double radius = 0.0;
  double rise = 0.0;  // axial rise per column
  std::vector<double> positions;  // 3n, rest geometry
  double mass = units::monomer_mass_da * units::dalton_in_ag;
  std::vector<Bond> bonds;
  std::vector<Angle> angles;
};

// Helical lattice: node (ring i, column j) sits at angle 2 pi j / k and height
// long_spacing * i + j * rise, with rise = offset * long_spacing / k so that the
// seam bond is congruent with lattice bonds. The radius follows from the
// lateral rest length. Rest values are measured from these positions.
MtModel build_geometry(const GeometryOptions& options = {});

// Harmonic energies s * K * (x - x0)^2; K is the bond or angle unit.
struct ForceField {
  Strengths strengths = kUnitStrengths;
  double bond_unit = 1.0;    // zJ / nm^2
  double angle_unit = 25.0;  // zJ / rad^2
};

double bond_length(const std::vector<double>& pos, const Bond& b);
double angle_value(const std::vector<double>& pos, const Angle& a);
double bond_energy(const std::vector<double>& pos, const Bond& b, double k);
double angle_energy(const std::vector<double>& pos, const Angle& a, double k);
// Accumulate -dE/dx into forces (3n).
void add_bond_force(const std::vector<double>& pos, const Bond& b, double k, std::vector<double>& forces);
void add_angle_force(const std::vector<double>& pos, const Angle& a, double k, std::vector<double>& forces);

struct EnergyReport {
  double total = 0.0;
  std::vector<double> per_particle;  // bonds split 1/2, angles 1/3
};

EnergyReport potential_energy(const MtModel& m, const ForceField& ff, const std::vector<double>& pos);
// Conservative forces; returns the total potential.
double compute_forces(const MtModel& m, const ForceField& ff, const std::vector<double>& pos,
                      std::vector<double>& forces);

struct SimConfig {
  ForceField field;
  int ramp_steps = 2000;
  int hold_steps = 4000;
  double dt = 1e-3;  // ns
  int save_every = 500;
  double max_force = units::max_force_newton * units::newton_in_pn;  // pN per forced particle
  bool langevin = true;
  // kT in zJ; negative selects the value whose noise force std is 1% of max_force.
  double temperature = -1.0;
  double damping_steps = 100.0;  // damping time in units of dt
  std::vector<std::size_t> clamp_set;
  std::vector<std::size_t> forced_set;
  double guard = 1e4;  // nm
  bool eleven_columns = false;
  std::uint64_t seed = 0;
};

// Clamp the first two rings and force the last two.
void default_boundary(const MtModel& m, SimConfig& config);
double effective_temperature(const MtModel& m, const SimConfig& c);

struct State {
  std::vector<double> x, v, f;
  double potential = 0.0;
  long step = 0;
};

class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

State initial_state(const MtModel& m, const SimConfig& config);
// One velocity-Verlet step with Langevin friction and noise on unclamped
// particles and the ramped -y load on the forced set.
void step(const MtModel& m, const SimConfig& config, State& s, Rng& rng);

double kinetic_energy(const MtModel& m, const State& s);

struct Frame {
  Matrix x;  // n x 10 (or 11)
  Matrix y;  // n x 1
  long step = 0;
};

std::vector<std::string> frame_columns(bool eleven_columns);

std::vector<Frame> run_simulation(const MtModel& m, const SimConfig& config);

// Mean -y displacement of the forced set.
double tip_deflection(const MtModel& m, const Frame& f, const SimConfig& config);

}  // namespace gpcn::sim
