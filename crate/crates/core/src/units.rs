//! Practical units: energies in meV, masses in daltons, lengths in Å.

/// ħc in eV·Å.
pub const HBAR_C_EV_ANGSTROM: f64 = 1973.269804;

/// Dalton rest energy in eV.
pub const DALTON_EV: f64 = 931.49410242e6;

/// ħ²/(2·1 Da) in meV·Å², so that k² = μ E / HBAR2_OVER_2U with μ in
/// daltons, E in meV and k in Å⁻¹.
pub const HBAR2_OVER_2U: f64 = HBAR_C_EV_ANGSTROM * HBAR_C_EV_ANGSTROM / (2.0 * DALTON_EV) * 1e3;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_value() {
        assert!((HBAR2_OVER_2U - 2.09008).abs() < 1e-5, "{HBAR2_OVER_2U}");
    }
}
