//! Unit conventions and conversions.
//!
//! Configuration values are linear frequencies (GHz or MHz) and times in ns
//! or µs. Everything handed to the propagators and eigensolvers is angular
//! frequency in rad/ns, with ℏ = 1, so 1 GHz of linear frequency is 2π
//! rad/ns.

use std::f64::consts::TAU;

/// Linear frequency in GHz to angular frequency in rad/ns.
pub fn ghz(f: f64) -> f64 {
    TAU * f
}

/// Linear frequency in MHz to angular frequency in rad/ns.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Angular frequency in rad/ns to linear frequency in GHz.
pub fn to_ghz(w: f64) -> f64 {
    w / TAU
}

/// Angular frequency in rad/ns to linear frequency in kHz.
pub fn to_khz(w: f64) -> f64 {
    w / TAU * 1e6
}

/// Angular frequency in rad/ns to linear frequency in MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TAU * 1e3
}

/// Time in µs to ns.
pub fn us_to_ns(t: f64) -> f64 {
    t * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((to_ghz(ghz(5.9)) - 5.9).abs() < 1e-15);
        assert!((to_khz(ghz(1e-6)) - 1.0).abs() < 1e-12);
        assert!((mhz(160.0) - ghz(0.16)).abs() < 1e-15);
    }
}
