#include "tds/units.hpp"

#include "tds/errors.hpp"

#include <array>
#include <string>

namespace tds {

namespace {

struct UnitInfo {
    Unit unit;
    UnitFamily family;
    std::string_view token;
    std::string_view label;
};

constexpr std::array<UnitInfo, 12> kUnits{{
    {Unit::mol_per_m2_s, UnitFamily::flux, "mol_m2_s", "mol/(m^2*s)"},
    {Unit::mol_per_cm2_s, UnitFamily::flux, "mol_cm2_s", "mol/(cm^2*s)"},
    {Unit::wppm_m_per_s, UnitFamily::flux, "wppm_m_s", "wppm*m/s"},
    {Unit::mol_per_m3, UnitFamily::content, "mol_m3", "mol/m^3"},
    {Unit::mol_per_cm3, UnitFamily::content, "mol_cm3", "mol/cm^3"},
    {Unit::wppm, UnitFamily::content, "wppm", "wppm"},
    {Unit::mol_per_m3_s, UnitFamily::rate, "mol_m3_s", "mol/(m^3*s)"},
    {Unit::mol_per_cm3_s, UnitFamily::rate, "mol_cm3_s", "mol/(cm^3*s)"},
    {Unit::wppm_per_s, UnitFamily::rate, "wppm_s", "wppm/s"},
    {Unit::kelvin, UnitFamily::temperature, "K", "K"},
    {Unit::celsius, UnitFamily::temperature, "C", "degC"},
    {Unit::second, UnitFamily::time, "s", "s"},
}};

const UnitInfo& info(Unit u) {
    for (const auto& i : kUnits) {
        if (i.unit == u) {
            return i;
        }
    }
    throw UnitError("unknown unit");
}

// Factor taking a value in u to the SI base unit of its family
// (mol/(m^2 s), mol/m^3, mol/(m^3 s)). wppm is a mass fraction of 1e-6:
// C[mol/m^3] * M_H[g/mol] / (rho[g/cm^3] * 1e6 [g/m^3 per g/cm^3]) * 1e6.
double to_base_factor(Unit u, const MaterialParams& mat) {
    const double wppm_to_molar = mat.rho_M / constants::hydrogen_molar_mass;
    switch (u) {
        case Unit::mol_per_m2_s:
        case Unit::mol_per_m3:
        case Unit::mol_per_m3_s:
            return 1.0;
        case Unit::mol_per_cm2_s:
            return 1e4;
        case Unit::mol_per_cm3:
        case Unit::mol_per_cm3_s:
            return 1e6;
        case Unit::wppm_m_per_s:
        case Unit::wppm:
        case Unit::wppm_per_s:
            return wppm_to_molar;
        default:
            return 1.0;
    }
}

}  // namespace

UnitFamily family_of(Unit u) { return info(u).family; }

std::string_view token(Unit u) { return info(u).token; }

std::string_view label(Unit u) { return info(u).label; }

Unit parse_unit(std::string_view name) {
    for (const auto& i : kUnits) {
        if (name == i.token || name == i.label) {
            return i.unit;
        }
    }
    if (name == "degC" || name == "°C") {
        return Unit::celsius;
    }
    throw UnitError("unknown unit '" + std::string(name) + "'");
}

double convert(double value, Unit from, Unit to, const MaterialParams& mat) {
    if (from == to) {
        return value;
    }
    const UnitFamily fam = family_of(from);
    if (fam != family_of(to)) {
        throw UnitError("cannot convert " + std::string(token(from)) + " to " +
                        std::string(token(to)) + ": different unit families");
    }
    if (fam == UnitFamily::temperature) {
        return from == Unit::celsius ? value + constants::celsius_offset
                                     : value - constants::celsius_offset;
    }
    if (from == Unit::wppm || from == Unit::wppm_per_s || from == Unit::wppm_m_per_s ||
        to == Unit::wppm || to == Unit::wppm_per_s || to == Unit::wppm_m_per_s) {
        if (!(mat.rho_M > 0.0)) {
            throw UnitError("wppm conversion needs a positive mass density");
        }
    }
    return value * to_base_factor(from, mat) / to_base_factor(to, mat);
}

}  // namespace tds
