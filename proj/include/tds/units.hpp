#pragma once

#include "tds/core.hpp"

#include <string>
#include <string_view>

namespace tds {

enum class UnitFamily { flux, content, rate, temperature, time };

enum class Unit {
    // flux
    mol_per_m2_s,
    mol_per_cm2_s,
    wppm_m_per_s,
    // content
    mol_per_m3,
    mol_per_cm3,
    wppm,
    // desorption rate
    mol_per_m3_s,
    mol_per_cm3_s,
    wppm_per_s,
    // temperature
    kelvin,
    celsius,
    // time
    second,
};

UnitFamily family_of(Unit u);

/// Short token used on the command line and in project files, e.g. "wppm_s".
std::string_view token(Unit u);
/// Human-readable label, e.g. "mol/(m^3*s)".
std::string_view label(Unit u);
/// Parses a token or label; throws UnitError for unknown names.
Unit parse_unit(std::string_view name);

/// Output unit selections of a project.
struct UnitSystem {
    Unit flux = Unit::mol_per_m2_s;
    Unit content = Unit::mol_per_m3;
    Unit rate = Unit::mol_per_m3_s;
    Unit temperature = Unit::kelvin;
    Unit time = Unit::second;

    friend bool operator==(const UnitSystem&, const UnitSystem&) = default;
};

/// Converts value between units of the same family. wt-ppm conversions use
/// the mass density of mat. Throws UnitError across families.
double convert(double value, Unit from, Unit to, const MaterialParams& mat);

}  // namespace tds
