#pragma once

#include <array>
#include <stdexcept>
#include <vector>

namespace qbeats {

// Atomic basis order used everywhere: g_-, g_0, g_+, e_-, e_0, e_+.
enum Atom : int { GMinus = 0, GZero = 1, GPlus = 2, EMinus = 3, EZero = 4, EPlus = 5 };
inline constexpr int n_atom_levels = 6;
inline constexpr bool is_excited(int a) { return a >= EMinus; }
inline constexpr int magnetic_number(int a) { return (a % 3) - 1; }

enum class Polarization { Pi, SigmaPlus, SigmaMinus };

struct Transition {
  int lower;  // ground level
  int upper;  // excited level
  Polarization pol;
  double weight;
};

// Simplified three-plus-three level scheme: pi transitions connect equal m,
// sigma+- connect dm = +-1.  The V cavity mode couples the pi lines, the H
// mode the sigma lines.  Weights are relative amplitudes; free-space decay
// rates are renormalized per excited state so every excited level decays at
// the total rate gamma.
struct LevelScheme {
  std::array<double, 3> pi_weight = {1.0, 1.0, 1.0};  // g_m <-> e_m for m = -,0,+
  double sigma_g0_eplus = 1.0;                        // |g_0><e_+|
  double sigma_g0_eminus = 1.0;                       // |g_0><e_-|
  double sigma_gminus_e0 = 1.0;                       // |g_-><e_0|
  double sigma_gplus_e0 = 1.0;                        // |g_+><e_0|
  // Uniform energy offset of the excited manifold (re-references the bare
  // transition frequency; cancels against an equal shift of delta_drive).
  double excited_offset = 0.0;

  static LevelScheme standard() { return LevelScheme{}; }

  // Detection operator restricted to sigma_H = |g0><e+| + |g0><e-|.
  static LevelScheme detection_only() {
    LevelScheme s;
    s.sigma_gminus_e0 = 0.0;
    s.sigma_gplus_e0 = 0.0;
    return s;
  }

  std::vector<Transition> transitions() const {
    std::vector<Transition> t;
    t.push_back({GMinus, EMinus, Polarization::Pi, pi_weight[0]});
    t.push_back({GZero, EZero, Polarization::Pi, pi_weight[1]});
    t.push_back({GPlus, EPlus, Polarization::Pi, pi_weight[2]});
    // emission e -> g with dm = m_e - m_g = +1 is sigma+
    t.push_back({GZero, EPlus, Polarization::SigmaPlus, sigma_g0_eplus});
    t.push_back({GMinus, EZero, Polarization::SigmaPlus, sigma_gminus_e0});
    t.push_back({GZero, EMinus, Polarization::SigmaMinus, sigma_g0_eminus});
    t.push_back({GPlus, EZero, Polarization::SigmaMinus, sigma_gplus_e0});
    return t;
  }

  void validate() const {
    for (const auto& t : transitions()) {
      if (t.weight < 0) throw std::invalid_argument("LevelScheme: negative transition weight");
      int dm = magnetic_number(t.upper) - magnetic_number(t.lower);
      if (t.pol == Polarization::Pi && dm != 0)
        throw std::invalid_argument("LevelScheme: pi transition with dm != 0");
      if (t.pol == Polarization::SigmaPlus && dm != 1)
        throw std::invalid_argument("LevelScheme: sigma+ transition with dm != 1");
      if (t.pol == Polarization::SigmaMinus && dm != -1)
        throw std::invalid_argument("LevelScheme: sigma- transition with dm != -1");
    }
  }
};

}  // namespace qbeats
