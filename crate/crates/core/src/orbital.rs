//! J2 nodal precession and low-thrust coplanar transfers between circular
//! orbits.
//!
//! Angles are radians internally; inclinations are accepted in degrees at
//! the type boundary. Durations leave this module in the scenario time unit
//! (`TimeBase`).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// km^3/s^2
    pub mu_earth: f64,
    /// km
    pub r_earth: f64,
    pub j2: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            mu_earth: 398_600.4418,
            r_earth: 6_378.137,
            j2: 1.08263e-3,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_earth > 0.0 && self.r_earth > 0.0 && self.j2 > 0.0) {
            return Err(invalid("physical constants must be strictly positive"));
        }
        Ok(())
    }
}

/// Discretized time unit: `n_t` units per (Julian) year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBase {
    pub units_per_year: u32,
}

impl Default for TimeBase {
    fn default() -> Self {
        TimeBase { units_per_year: 52 }
    }
}

impl TimeBase {
    pub fn new(units_per_year: u32) -> Result<Self> {
        if units_per_year == 0 {
            return Err(invalid("N_t must be at least 1"));
        }
        Ok(TimeBase { units_per_year })
    }

    pub fn n_t(&self) -> f64 {
        self.units_per_year as f64
    }

    pub fn seconds_per_unit(&self) -> f64 {
        SECONDS_PER_YEAR / self.n_t()
    }

    pub fn from_seconds(&self, seconds: f64) -> f64 {
        seconds / self.seconds_per_unit()
    }

    pub fn years_to_units(&self, years: f64) -> f64 {
        years * self.n_t()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularOrbit {
    altitude_km: f64,
    inclination_deg: f64,
}

impl CircularOrbit {
    pub fn new(altitude_km: f64, inclination_deg: f64) -> Result<Self> {
        if !(altitude_km > 0.0 && altitude_km.is_finite()) {
            return Err(invalid(format!("orbit altitude must be > 0 km, got {altitude_km}")));
        }
        if !(0.0..=180.0).contains(&inclination_deg) {
            return Err(invalid(format!(
                "inclination must lie in [0, 180] deg, got {inclination_deg}"
            )));
        }
        Ok(CircularOrbit {
            altitude_km,
            inclination_deg,
        })
    }

    pub fn altitude_km(&self) -> f64 {
        self.altitude_km
    }

    pub fn inclination_deg(&self) -> f64 {
        self.inclination_deg
    }

    pub fn radius_km(&self, consts: &PhysicalConstants) -> f64 {
        consts.r_earth + self.altitude_km
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropulsionSpec {
    pub dry_mass_kg: f64,
    pub exhaust_velocity_km_s: f64,
    pub mass_flow_rate_kg_s: f64,
}

impl PropulsionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dry_mass_kg > 0.0 && self.exhaust_velocity_km_s > 0.0) {
            return Err(invalid("dry mass and exhaust velocity must be > 0"));
        }
        if !(self.mass_flow_rate_kg_s > 0.0) {
            return Err(invalid("mass flow rate must be > 0"));
        }
        Ok(())
    }
}

/// Secular J2 drift of the ascending node for a circular orbit, rad/s.
pub fn nodal_precession_rate(orbit: &CircularOrbit, consts: &PhysicalConstants) -> f64 {
    let a = orbit.radius_km(consts);
    let mean_motion = (consts.mu_earth / (a * a * a)).sqrt();
    let ratio = consts.r_earth / a;
    -1.5 * mean_motion * ratio * ratio * consts.j2 * orbit.inclination_deg.to_radians().cos()
}

/// Drift of a parking orbit's node relative to a plane, in rad per time unit.
///
/// Both orbits must share the inclination and the parking orbit must sit
/// strictly lower; equal altitudes are let through and return 0.
pub fn relative_raan_drift(
    parking: &CircularOrbit,
    plane: &CircularOrbit,
    consts: &PhysicalConstants,
    time: &TimeBase,
) -> Result<f64> {
    if (parking.inclination_deg - plane.inclination_deg).abs() > 1e-9 {
        return Err(invalid("parking orbit and plane must share the inclination"));
    }
    if parking.altitude_km > plane.altitude_km {
        return Err(Error::ParkingNotBelowPlane {
            parking_km: parking.altitude_km,
            plane_km: plane.altitude_km,
        });
    }
    let per_second = nodal_precession_rate(parking, consts) - nodal_precession_rate(plane, consts);
    Ok(per_second * time.seconds_per_unit())
}

/// Velocity increment for a continuous low-thrust raise between circular
/// orbits, km/s.
pub fn transfer_delta_v(r_initial_km: f64, r_final_km: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(r_initial_km > 0.0) {
        return Err(invalid("initial radius must be > 0"));
    }
    if r_initial_km > r_final_km {
        return Err(invalid(format!(
            "only raising transfers are modelled (r_i = {r_initial_km} > r_f = {r_final_km})"
        )));
    }
    Ok((consts.mu_earth / r_initial_km).sqrt() - (consts.mu_earth / r_final_km).sqrt())
}

/// Rocket equation: propellant needed for `delta_v`, kg.
pub fn fuel_mass(delta_v_km_s: f64, prop: &PropulsionSpec) -> Result<f64> {
    if !(delta_v_km_s >= 0.0) {
        return Err(invalid("delta-V must be >= 0"));
    }
    Ok(prop.dry_mass_kg * (delta_v_km_s / prop.exhaust_velocity_km_s).exp_m1())
}

/// Burn duration for `fuel_kg` at the thruster's mass flow rate, in time units.
pub fn time_of_flight(fuel_kg: f64, prop: &PropulsionSpec, time: &TimeBase) -> Result<f64> {
    if !(fuel_kg >= 0.0) {
        return Err(invalid("fuel mass must be >= 0"));
    }
    if !(prop.mass_flow_rate_kg_s > 0.0) {
        return Err(invalid("mass flow rate must be > 0"));
    }
    Ok(time.from_seconds(fuel_kg / prop.mass_flow_rate_kg_s))
}

/// Everything a constellation needs from a parking → plane transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferProfile {
    pub delta_v_km_s: f64,
    pub fuel_kg: f64,
    /// time units
    pub transfer_time: f64,
    /// rad per time unit, signed
    pub relative_drift: f64,
}

pub fn transfer_profile(
    parking: &CircularOrbit,
    plane: &CircularOrbit,
    prop: &PropulsionSpec,
    consts: &PhysicalConstants,
    time: &TimeBase,
) -> Result<TransferProfile> {
    let relative_drift = relative_raan_drift(parking, plane, consts, time)?;
    let delta_v = transfer_delta_v(parking.radius_km(consts), plane.radius_km(consts), consts)?;
    let fuel = fuel_mass(delta_v, prop)?;
    let transfer_time = time_of_flight(fuel, prop, time)?;
    Ok(TransferProfile {
        delta_v_km_s: delta_v,
        fuel_kg: fuel,
        transfer_time,
        relative_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn orbit(h: f64, i: f64) -> CircularOrbit {
        CircularOrbit::new(h, i).unwrap()
    }

    #[test]
    fn polar_orbit_does_not_precess() {
        let c = PhysicalConstants::default();
        assert!(nodal_precession_rate(&orbit(500.0, 90.0), &c).abs() < 1e-22);
    }

    #[test]
    fn precession_rate_hand_evaluation() {
        // a = 6878.137 km; sqrt(mu/a^3) = 1.106779e-3 rad/s; (R/a)^2 = 0.859896
        let c = PhysicalConstants::default();
        let v = nodal_precession_rate(&orbit(500.0, 60.0), &c);
        assert_relative_eq!(v, -7.727695818684372e-7, max_relative = 1e-12);
        assert!(nodal_precession_rate(&orbit(7000.0, 45.0), &c) < 0.0);
    }

    #[test]
    fn relative_drift_composes_single_orbit_rates() {
        let c = PhysicalConstants::default();
        let t = TimeBase::default();
        let d = relative_raan_drift(&orbit(500.0, 60.0), &orbit(1200.0, 60.0), &c, &t).unwrap();
        let expected = (-7.727695818684372e-7 - -5.504644953334638e-7) * SECONDS_PER_YEAR / 52.0;
        assert_relative_eq!(d, expected, max_relative = 1e-12);
        assert!(d.abs() > 0.13);
        let same = relative_raan_drift(&orbit(700.0, 60.0), &orbit(700.0, 60.0), &c, &t).unwrap();
        assert_eq!(same, 0.0);
        let polar = relative_raan_drift(&orbit(500.0, 90.0), &orbit(1200.0, 90.0), &c, &t).unwrap();
        assert!(polar.abs() < 1e-15);
    }

    #[test]
    fn parking_above_plane_is_rejected() {
        let c = PhysicalConstants::default();
        let t = TimeBase::default();
        let err = relative_raan_drift(&orbit(1300.0, 60.0), &orbit(1200.0, 60.0), &c, &t);
        assert!(matches!(err, Err(Error::ParkingNotBelowPlane { .. })));
    }

    #[test]
    fn delta_v_examples() {
        let c = PhysicalConstants::default();
        assert_eq!(transfer_delta_v(7000.0, 7000.0, &c).unwrap(), 0.0);
        let dv = transfer_delta_v(6878.137, 7578.137, &c).unwrap();
        assert_relative_eq!(dv, 0.3601094386078607, max_relative = 1e-12);
        let chained = transfer_delta_v(6878.137, 7228.137, &c).unwrap()
            + transfer_delta_v(7228.137, 7578.137, &c).unwrap();
        assert_relative_eq!(dv, chained, max_relative = 1e-13);
        assert!(transfer_delta_v(7578.137, 6878.137, &c).is_err());
    }

    #[test]
    fn rocket_equation_and_burn_time() {
        let prop = PropulsionSpec {
            dry_mass_kg: 150.0,
            exhaust_velocity_km_s: 11.77,
            mass_flow_rate_kg_s: 1.3e-3,
        };
        assert_eq!(fuel_mass(0.0, &prop).unwrap(), 0.0);
        let fuel = fuel_mass(0.3601094386078607, &prop).unwrap();
        assert_relative_eq!(fuel, 4.660258159708763, max_relative = 1e-12);
        let faster = PropulsionSpec {
            exhaust_velocity_km_s: 23.54,
            ..prop
        };
        assert!(fuel_mass(0.36, &faster).unwrap() < fuel_mass(0.36, &prop).unwrap());

        let t = TimeBase::default();
        let tof = time_of_flight(fuel, &prop, &t).unwrap();
        assert_relative_eq!(tof * t.seconds_per_unit(), 3584.813969006741, max_relative = 1e-12);
        assert_eq!(time_of_flight(0.0, &prop, &t).unwrap(), 0.0);
        assert_relative_eq!(time_of_flight(2.0 * fuel, &prop, &t).unwrap(), 2.0 * tof, max_relative = 1e-14);
        let stalled = PropulsionSpec {
            mass_flow_rate_kg_s: 0.0,
            ..prop
        };
        assert!(time_of_flight(1.0, &stalled, &t).is_err());
    }

    proptest! {
        #[test]
        fn precession_is_odd_about_polar(h in 200.0f64..20000.0, i in 0.0f64..90.0) {
            let c = PhysicalConstants::default();
            let pro = nodal_precession_rate(&orbit(h, i), &c);
            let retro = nodal_precession_rate(&orbit(h, 180.0 - i), &c);
            let equatorial = nodal_precession_rate(&orbit(h, 0.0), &c).abs();
            prop_assert!((pro + retro).abs() <= 1e-12 * equatorial);
        }

        #[test]
        fn delta_v_telescopes(r0 in 6500.0f64..9000.0, d1 in 0.0f64..2000.0, d2 in 0.0f64..2000.0) {
            let c = PhysicalConstants::default();
            let whole = transfer_delta_v(r0, r0 + d1 + d2, &c).unwrap();
            let parts = transfer_delta_v(r0, r0 + d1, &c).unwrap() + transfer_delta_v(r0 + d1, r0 + d1 + d2, &c).unwrap();
            prop_assert!((whole - parts).abs() < 1e-12);
        }

        #[test]
        fn fuel_monotone(dv1 in 0.0f64..2.0, extra in 1e-6f64..1.0) {
            let prop = PropulsionSpec { dry_mass_kg: 200.0, exhaust_velocity_km_s: 11.77, mass_flow_rate_kg_s: 1e-5 };
            prop_assert!(fuel_mass(dv1 + extra, &prop).unwrap() > fuel_mass(dv1, &prop).unwrap());
        }
    }
}
