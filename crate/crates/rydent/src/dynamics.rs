//! Piecewise-linear drive schedules and time-dependent Schrodinger evolution
//! for adiabatic state preparation.
//!
//! The integrator is classic RK4 with the Hamiltonian evaluated at stage
//! times. The drive (omega, delta, phi) varies with time; the van der Waals
//! interactions are set by the geometry and the nominal C6 = Omega R_b^6 and
//! stay constant, so the diagonal and off-diagonal parts are cached once and
//! scaled per step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{interaction, BasisConvention, DriveParams, SPARSE_ATOM_CAP};
use crate::lattice::Geometry;
use crate::spectra::StateVector;

/// A piecewise-linear waveform: linear interpolation between knots, constant
/// extrapolation outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Waveform {
    knots: Vec<(f64, f64)>,
}

impl Waveform {
    /// Knot times must be strictly increasing; at least one knot.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("waveform needs at least one knot"));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid(format!(
                    "waveform knot times must be strictly increasing: {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(Self { knots })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            knots: vec![(0.0, value)],
        }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn last_time(&self) -> f64 {
        self.knots.last().unwrap().0
    }

    /// Largest absolute value attained (at a knot, by linearity).
    pub fn max_abs(&self) -> f64 {
        self.knots.iter().map(|k| k.1.abs()).fold(0.0, f64::max)
    }

    /// Value at time `t`.
    pub fn value(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|p| p.0 <= t);
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

impl TryFrom<Vec<(f64, f64)>> for Waveform {
    type Error = Error;
    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        Waveform::new(knots)
    }
}

impl From<Waveform> for Vec<(f64, f64)> {
    fn from(w: Waveform) -> Self {
        w.knots
    }
}

/// Drive waveforms for one preparation run. Times in us, omega/delta in
/// rad/us, phi in rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRaw")]
pub struct Schedule {
    pub omega: Waveform,
    pub delta: Waveform,
    pub phi: Waveform,
    pub duration: f64,
}

#[derive(Deserialize)]
struct ScheduleRaw {
    omega: Waveform,
    delta: Waveform,
    phi: Waveform,
    duration: f64,
}

impl TryFrom<ScheduleRaw> for Schedule {
    type Error = Error;
    fn try_from(raw: ScheduleRaw) -> Result<Self> {
        Schedule::new(raw.omega, raw.delta, raw.phi, raw.duration)
    }
}

impl Schedule {
    pub fn new(omega: Waveform, delta: Waveform, phi: Waveform, duration: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::invalid(format!("duration must be positive, got {duration}")));
        }
        for (name, w) in [("omega", &omega), ("delta", &delta), ("phi", &phi)] {
            if w.last_time() > duration {
                return Err(Error::invalid(format!(
                    "{name} waveform extends to {} us beyond duration {duration} us",
                    w.last_time()
                )));
            }
        }
        Ok(Self {
            omega,
            delta,
            phi,
            duration,
        })
    }
}

/// End-of-ramp variants for the standard preparation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ScheduleVariant {
    /// Standard ramp-down: omega returns to zero over the last 0.5 us.
    Lsst,
    /// No ramp-down: omega stays at its plateau through the end.
    Lsnrd,
}

/// The standard adiabatic preparation schedule.
///
/// Omega ramps 0 -> omega_max over the first 0.5 us, holds, and (LSST only)
/// ramps back to 0 over the last 0.5 us. Delta ramps linearly from
/// -delta_final to +delta_final between 0.5 us and duration - 0.5 us, then
/// holds. Phi is identically zero.
pub fn standard_schedule(
    params: &DriveParams,
    variant: ScheduleVariant,
    duration: f64,
) -> Result<Schedule> {
    if !(duration > 1.0) {
        return Err(Error::invalid(format!(
            "schedule duration must exceed 1 us, got {duration}"
        )));
    }
    let omega = match variant {
        ScheduleVariant::Lsst => Waveform::new(vec![
            (0.0, 0.0),
            (0.5, params.omega),
            (duration - 0.5, params.omega),
            (duration, 0.0),
        ])?,
        ScheduleVariant::Lsnrd => {
            Waveform::new(vec![(0.0, 0.0), (0.5, params.omega)])?
        }
    };
    let delta = Waveform::new(vec![
        (0.0, -params.delta),
        (0.5, -params.delta),
        (duration - 0.5, params.delta),
    ])?;
    Schedule::new(omega, delta, Waveform::constant(0.0), duration)
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// RK4 step, us.
    pub dt: f64,
    /// Renormalize the state instead of failing on norm drift.
    pub renormalize: bool,
    /// Allowed |norm - 1| when not renormalizing.
    pub norm_drift_tol: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            renormalize: false,
            norm_drift_tol: 1e-6,
        }
    }
}

impl EvolutionConfig {
    pub fn new(dt: f64, renormalize: bool, norm_drift_tol: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            dt,
            renormalize,
            norm_drift_tol,
        })
    }
}

/// Cached time-dependent Hamiltonian action: constant interaction diagonal,
/// occupation counts for the detuning term, bit-flip drive scaled per call.
pub struct TimeDependentHamiltonian {
    basis: BasisConvention,
    /// Sum over occupied pairs of V_ij (constant in time), rad/us.
    pair_diag: Vec<f64>,
    /// Total Rydberg occupation per basis state.
    occupation: Vec<f64>,
    schedule: Schedule,
}

impl TimeDependentHamiltonian {
    pub fn new(geometry: &Geometry, params: &DriveParams, schedule: Schedule) -> Result<Self> {
        let n = geometry.n_atoms();
        if n > SPARSE_ATOM_CAP {
            return Err(Error::ResourceLimit {
                what: "atom count",
                requested: n,
                cap: SPARSE_ATOM_CAP,
            });
        }
        let basis = BasisConvention::new(n);
        let dim = basis.dim();
        let mut v = vec![0.0f64; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                v[i * n + j] = interaction(geometry.distance(i, j), params)?;
            }
        }
        let mut pair_diag = vec![0.0f64; dim];
        let mut occupation = vec![0.0f64; dim];
        for idx in 0..dim {
            occupation[idx] = basis.total_occupation(idx) as f64;
            let mut e = 0.0;
            for i in 0..n {
                if basis.occupation(idx, i) {
                    for j in (i + 1)..n {
                        if basis.occupation(idx, j) {
                            e += v[i * n + j];
                        }
                    }
                }
            }
            pair_diag[idx] = e;
        }
        Ok(Self {
            basis,
            pair_diag,
            occupation,
            schedule,
        })
    }

    pub fn basis(&self) -> BasisConvention {
        self.basis
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// y = H(t) x.
    pub fn apply(&self, t: f64, x: &[Complex64], y: &mut [Complex64]) {
        let omega = self.schedule.omega.value(t);
        let delta = self.schedule.delta.value(t);
        let phi = self.schedule.phi.value(t);
        let dim = x.len();
        for idx in 0..dim {
            y[idx] = x[idx] * (self.pair_diag[idx] - delta * self.occupation[idx]);
        }
        if omega == 0.0 {
            return;
        }
        let n = self.basis.n_atoms();
        let up = Complex64::from_polar(0.5 * omega, phi); // <g|H|r>
        let down = up.conj();
        for idx in 0..dim {
            let xi = x[idx];
            for k in 0..n {
                let bit = 1usize << (n - 1 - k);
                y[idx ^ bit] += if idx & bit != 0 { up * xi } else { down * xi };
            }
        }
    }

    /// Spectral-radius upper bound over the whole schedule, for choosing a
    /// stable RK4 step.
    pub fn norm_bound(&self) -> f64 {
        let dmax = self
            .pair_diag
            .iter()
            .zip(&self.occupation)
            .map(|(&p, &o)| (p + self.schedule.delta.max_abs() * o).abs().max(p.abs()))
            .fold(0.0, f64::max);
        dmax + self.basis.n_atoms() as f64 * self.schedule.omega.max_abs() * 0.5
    }

    /// Largest RK4 step that stays well inside the stability region, capped
    /// at `default_dt`.
    pub fn stable_dt(&self, default_dt: f64) -> f64 {
        default_dt.min(1.5 / self.norm_bound())
    }
}

/// Integrate i d|psi>/dt = H(t)|psi> from t = 0 to t = schedule.duration.
pub fn evolve(
    initial: &StateVector,
    geometry: &Geometry,
    params: &DriveParams,
    schedule: &Schedule,
    config: &EvolutionConfig,
) -> Result<StateVector> {
    let h = TimeDependentHamiltonian::new(geometry, params, schedule.clone())?;
    if h.basis().dim() != initial.amplitudes().len() {
        return Err(Error::invalid(format!(
            "initial state dimension {} does not match geometry dimension {}",
            initial.amplitudes().len(),
            h.basis().dim()
        )));
    }
    let duration = schedule.duration;
    let steps = (duration / config.dt).ceil().max(1.0) as usize;
    let dt = duration / steps as f64;

    let dim = initial.amplitudes().len();
    let mut psi = initial.amplitudes().to_vec();
    let mut k1 = vec![Complex64::default(); dim];
    let mut k2 = vec![Complex64::default(); dim];
    let mut k3 = vec![Complex64::default(); dim];
    let mut k4 = vec![Complex64::default(); dim];
    let mut stage = vec![Complex64::default(); dim];

    let minus_i = Complex64::new(0.0, -1.0);
    for step in 0..steps {
        let t = step as f64 * dt;

        h.apply(t, &psi, &mut k1);
        for i in 0..dim {
            k1[i] *= minus_i;
            stage[i] = psi[i] + 0.5 * dt * k1[i];
        }
        h.apply(t + 0.5 * dt, &stage, &mut k2);
        for i in 0..dim {
            k2[i] *= minus_i;
            stage[i] = psi[i] + 0.5 * dt * k2[i];
        }
        h.apply(t + 0.5 * dt, &stage, &mut k3);
        for i in 0..dim {
            k3[i] *= minus_i;
            stage[i] = psi[i] + dt * k3[i];
        }
        h.apply(t + dt, &stage, &mut k4);
        for i in 0..dim {
            k4[i] *= minus_i;
            psi[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        // drift monitor: catches an unstable step size long before the end
        if step % 128 == 127 || step + 1 == steps {
            let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
            let drift = (norm2.sqrt() - 1.0).abs();
            // NaN drift (blown-up state) must also land here
            if !(drift <= config.norm_drift_tol) {
                if config.renormalize && drift.is_finite() {
                    let n = norm2.sqrt();
                    for c in &mut psi {
                        *c /= n;
                    }
                } else {
                    return Err(Error::Integration {
                        drift,
                        tol: config.norm_drift_tol,
                        time: t + dt,
                    });
                }
            }
        }
    }

    StateVector::normalized(psi, h.basis())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn waveform_interpolation_and_extrapolation() {
        let w = Waveform::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)]).unwrap();
        assert_relative_eq!(w.value(-1.0), 0.0);
        assert_relative_eq!(w.value(0.5), 1.0);
        assert_relative_eq!(w.value(2.0), 2.0);
        assert_relative_eq!(w.value(10.0), 2.0);
    }

    #[test]
    fn waveform_rejects_nonincreasing_times() {
        assert!(Waveform::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(Waveform::new(vec![]).is_err());
    }

    #[test]
    fn standard_schedule_endpoints() {
        let p = DriveParams::working_point();
        let lsst = standard_schedule(&p, ScheduleVariant::Lsst, 4.0).unwrap();
        let lsnrd = standard_schedule(&p, ScheduleVariant::Lsnrd, 4.0).unwrap();
        assert_relative_eq!(lsst.omega.value(4.0), 0.0);
        assert_relative_eq!(lsnrd.omega.value(4.0), 5.0 * PI);
        // plateau and detuning ends for both variants
        for s in [&lsst, &lsnrd] {
            assert_relative_eq!(s.omega.value(2.0), p.omega);
            assert_relative_eq!(s.delta.value(4.0), p.delta);
            assert_relative_eq!(s.delta.value(0.0), -p.delta);
            assert_relative_eq!(s.delta.value(2.0), 0.0, epsilon = 1e-12);
            assert_relative_eq!(s.phi.value(1.0), 0.0);
        }
        assert!(standard_schedule(&p, ScheduleVariant::Lsst, 0.9).is_err());
    }

    #[test]
    fn schedule_json_roundtrip() {
        let p = DriveParams::working_point();
        let s = standard_schedule(&p, ScheduleVariant::Lsst, 4.0).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: Schedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        // the documented shape
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["duration"].is_number());
        assert!(v["omega"][0].is_array());
    }

    #[test]
    fn diagonal_hamiltonian_preserves_occupation() {
        // Omega = 0, constant Delta, single atom in |r>
        let g = Geometry::chain(1, 1.0).unwrap();
        let p = DriveParams::working_point();
        let schedule = Schedule::new(
            Waveform::constant(0.0),
            Waveform::constant(p.delta),
            Waveform::constant(0.0),
            1.0,
        )
        .unwrap();
        let basis = BasisConvention::new(1);
        let initial = StateVector::new(
            vec![Complex64::default(), Complex64::new(1.0, 0.0)],
            basis,
        )
        .unwrap();
        let out = evolve(&initial, &g, &p, &schedule, &EvolutionConfig::default()).unwrap();
        assert_relative_eq!(out.amplitudes()[1].norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rabi_oscillation_oracle() {
        // Delta = 0, constant Omega from |g>: p_r(t) = sin^2(Omega t / 2)
        let g = Geometry::chain(1, 1.0).unwrap();
        let p = DriveParams::new(2.0 * PI, 0.0, 0.0, 8.375).unwrap();
        for t_final in [0.3, 0.7, 1.3] {
            let schedule = Schedule::new(
                Waveform::constant(p.omega),
                Waveform::constant(0.0),
                Waveform::constant(0.0),
                t_final,
            )
            .unwrap();
            let initial = StateVector::all_ground(BasisConvention::new(1));
            let out = evolve(&initial, &g, &p, &schedule, &EvolutionConfig::default()).unwrap();
            let p_r = out.amplitudes()[1].norm_sqr();
            assert_relative_eq!(
                p_r,
                (p.omega * t_final / 2.0).sin().powi(2),
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn norm_conserved_without_renormalization() {
        // moderate ||H||: the default step resolves the dynamics to well below
        // the drift budget; strong drives need renormalization or smaller dt
        let g = Geometry::chain(6, 8.375).unwrap();
        let p = DriveParams::new(2.0 * PI, 2.0 * PI, 0.0, 8.375).unwrap();
        let schedule = standard_schedule(&p, ScheduleVariant::Lsnrd, 2.0).unwrap();
        let initial = StateVector::all_ground(BasisConvention::new(6));
        let config = EvolutionConfig {
            dt: 1e-3,
            renormalize: false,
            norm_drift_tol: 2.0 * 1e-8, // 1e-8 per us over 2 us
        };
        // success implies the drift stayed below tolerance throughout
        evolve(&initial, &g, &p, &schedule, &config).unwrap();
    }

    #[test]
    fn step_halving_changes_little() {
        let g = Geometry::chain(4, 8.375 / 1.2).unwrap();
        let p = DriveParams::new(2.0 * PI, 2.0 * PI, 0.0, 8.375).unwrap();
        let schedule = standard_schedule(&p, ScheduleVariant::Lsst, 2.0).unwrap();
        let initial = StateVector::all_ground(BasisConvention::new(4));
        let coarse = evolve(
            &initial,
            &g,
            &p,
            &schedule,
            &EvolutionConfig::default(),
        )
        .unwrap();
        let fine = evolve(
            &initial,
            &g,
            &p,
            &schedule,
            &EvolutionConfig {
                dt: 0.5e-3,
                ..EvolutionConfig::default()
            },
        )
        .unwrap();
        for (a, b) in coarse.amplitudes().iter().zip(fine.amplitudes()) {
            assert!((a.norm_sqr() - b.norm_sqr()).abs() <= 1e-6);
        }
    }

    #[test]
    fn energy_conserved_for_constant_waveforms() {
        // moderate couplings: a random state spreads over the full spectrum,
        // so keep ||H|| small enough for 1e-8/us accuracy at the default dt
        let g = Geometry::chain(4, 8.375).unwrap();
        let p = DriveParams::new(PI, PI, 0.0, 8.375).unwrap();
        let schedule = Schedule::new(
            Waveform::constant(p.omega),
            Waveform::constant(p.delta),
            Waveform::constant(0.0),
            1.0,
        )
        .unwrap();
        let h = TimeDependentHamiltonian::new(&g, &p, schedule.clone()).unwrap();
        let dim = h.basis().dim();
        let amps: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new((i as f64 * 0.3).sin() + 0.4, (i as f64 * 0.7).cos()))
            .collect();
        let initial = StateVector::normalized(amps, h.basis()).unwrap();
        let energy = |s: &StateVector| {
            let mut y = vec![Complex64::default(); dim];
            h.apply(0.0, s.amplitudes(), &mut y);
            s.amplitudes()
                .iter()
                .zip(&y)
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<f64>()
        };
        let e0 = energy(&initial);
        let out = evolve(&initial, &g, &p, &schedule, &EvolutionConfig::default()).unwrap();
        let e1 = energy(&out);
        assert!((e1 - e0).abs() <= 1e-8 * 1.0_f64.max(e0.abs()));
    }

    #[test]
    fn unstable_step_reports_integration_error() {
        // dt far beyond the stability limit at strong interactions
        let g = Geometry::chain(6, 4.2).unwrap();
        let p = DriveParams::working_point();
        let schedule = standard_schedule(&p, ScheduleVariant::Lsnrd, 4.0).unwrap();
        let initial = StateVector::all_ground(BasisConvention::new(6));
        let config = EvolutionConfig {
            dt: 0.05,
            renormalize: false,
            norm_drift_tol: 1e-6,
        };
        match evolve(&initial, &g, &p, &schedule, &config) {
            // a blown-up state may report a non-finite drift
            Err(Error::Integration { drift, .. }) => assert!(!(drift <= 1e-6)),
            other => panic!("expected integration error, got {other:?}"),
        }
    }

    #[test]
    fn stable_dt_shrinks_with_interaction_strength() {
        let p = DriveParams::working_point();
        let schedule = standard_schedule(&p, ScheduleVariant::Lsnrd, 4.0).unwrap();
        let weak = TimeDependentHamiltonian::new(
            &Geometry::chain(10, 8.375 / 1.0).unwrap(),
            &p,
            schedule.clone(),
        )
        .unwrap();
        let strong = TimeDependentHamiltonian::new(
            &Geometry::chain(10, 8.375 / 2.0).unwrap(),
            &p,
            schedule,
        )
        .unwrap();
        assert_eq!(weak.stable_dt(1e-3), 1e-3);
        assert!(strong.stable_dt(1e-3) < 1e-3);
    }
}
