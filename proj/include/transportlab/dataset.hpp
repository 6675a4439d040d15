#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "transportlab/scenarios.hpp"

namespace transportlab {

enum class Regime { Observational, DoZ, DoS1Z };

/// Regime plus the assigned arm for interventional regimes.
struct RegimeSpec {
  Regime regime = Regime::Observational;
  int z = -1;  // meaningful for DoZ / DoS1Z

  bool operator==(const RegimeSpec&) const = default;
};

std::string regime_display(const RegimeSpec& r);  // "observational", "do(Z=1)", "do(S=1,Z=0)"
std::string regime_tag(const RegimeSpec& r);      // filename-safe: "obs", "do_z1", "do_s1_z0"
RegimeSpec regime_from_tag(std::string_view tag);  // accepts both spellings

struct Provenance {
  ScenarioId scenario = ScenarioId::Fig1PerfectAdherence;
  RegimeSpec regime;
  bool non_nested = false;
  bool masked = false;
  std::uint64_t seed = 0;
};

/// Rectangular sample. Column-major; -1 encodes a masked (NA) cell.
struct Dataset {
  std::vector<std::int8_t> x, s, z, a, y;
  Provenance provenance;

  std::size_t size() const { return x.size(); }
  void resize(std::size_t n) {
    x.resize(n);
    s.resize(n);
    z.resize(n);
    a.resize(n);
    y.resize(n);
  }
};

inline constexpr std::int8_t kNA = -1;

/// CSV with header "x,s,z,a,y"; masked cells rendered "NA".
std::string dataset_to_csv(const Dataset& d);
/// Parses the same format. Provenance is not carried by CSV: the result is
/// tagged observational with masked = (any NA seen).
Dataset dataset_from_csv(std::string_view text);

void save_dataset_csv(const Dataset& d, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

}  // namespace transportlab
