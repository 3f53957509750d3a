//! Atomic-unit conversion helpers.

/// Laser intensity in W/cm² per squared field amplitude in atomic units.
pub const INTENSITY_W_CM2_PER_AU: f64 = 3.50945e16;

/// One hartree in electron-volts.
pub const HARTREE_EV: f64 = 27.211386245988;

/// Atomic unit of time in picoseconds.
pub const AU_TIME_PS: f64 = 2.4188843265857e-5;

/// Peak intensity (W/cm²) of a field with amplitude `e0` (a.u.).
pub fn intensity_w_cm2(e0: f64) -> f64 {
    INTENSITY_W_CM2_PER_AU * e0 * e0
}

/// Field amplitude (a.u.) that produces `intensity` W/cm².
pub fn field_from_intensity(intensity: f64) -> f64 {
    (intensity / INTENSITY_W_CM2_PER_AU).sqrt()
}

pub fn photon_energy_ev(omega: f64) -> f64 {
    omega * HARTREE_EV
}

pub fn time_ps(t_au: f64) -> f64 {
    t_au * AU_TIME_PS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intensity_round_trip() {
        let e0 = 0.0377;
        let i = intensity_w_cm2(e0);
        assert!((i / 4.988e13 - 1.0).abs() < 1e-3);
        assert!((field_from_intensity(i) - e0).abs() < 1e-15);
    }

    #[test]
    fn carrier_photon_energy() {
        // 0.0754 a.u. is the 2.05 eV carrier used for both presets
        assert!((photon_energy_ev(0.0754) - 2.05).abs() < 0.01);
    }
}
