// Copyright 2026 The noon-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Conversions between the units used in configuration files (MHz, µs, ns)
//! and the SI angular units used internally (rad/s, s).

use std::f64::consts::PI;

/// ν in MHz → ω = 2πν in rad/s.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    2.0 * PI * mhz * 1e6
}

/// ω in rad/s → ν in MHz.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

/// A lifetime in µs → rate in 1/s.
pub fn lifetime_us_to_rate(lifetime_us: f64) -> f64 {
    1.0 / (lifetime_us * 1e-6)
}

pub fn seconds_to_ns(t: f64) -> f64 {
    t * 1e9
}
