//! Schrödinger-picture evolution `∂t|0(t)⟩ = −iĤ|0(t)⟩`, closed forms for
//! the occupation, the pair-condensate form of the evolved vacuum, and the
//! entropy balance of the relaxing oscillator.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sprs::CsMat;

use crate::error::{Error, Result};
use crate::generators::{gamma_set, phase_space_ops, HatHamiltonian};
use crate::linalg::{csr_mul_vec, expm_multiply};
use crate::thermal::{thermal_bra, ThermalBra, ThermalKet, ThermalOperator, TruncatedFockSpace, I};
use crate::C64;

/// RK4 is stable for `|λ| dt` below about 2.8 on both axes; keep a margin.
pub const RK4_STEP_LIMIT: f64 = 2.5;
/// Largest tolerated weight `Σ|ψ_i|` in the top `G` levels.
pub const OVERFLOW_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Record observables every `record_every` steps (the final time is
    /// always recorded).
    pub record_every: usize,
    /// Keep the state at every recorded time.
    pub keep_states: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            keep_states: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MasterTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ThermalKet>,
    pub n_values: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_p: Vec<f64>,
    pub norm_drift: Vec<f64>,
    pub guard_weight: Vec<f64>,
    pub final_state: ThermalKet,
}

/// Left vectors `⟨1|O` for the recorded observables.
struct Observables {
    norm: ThermalBra,
    n: ThermalBra,
    x: ThermalBra,
    p: ThermalBra,
    x2: ThermalBra,
    p2: ThermalBra,
}

impl Observables {
    fn new(space: TruncatedFockSpace, mass: f64, omega: f64) -> Self {
        let l = space.ladder();
        let ps = phase_space_ops(&l, mass, omega);
        let bra = thermal_bra(space);
        let left = |op: &ThermalOperator| op.apply_left(&bra).expect("same space");
        Self {
            n: left(&(&l.a_dag * &l.a)),
            x: left(&ps.x),
            p: left(&ps.p),
            x2: left(&(&ps.x * &ps.x)),
            p2: left(&(&ps.p * &ps.p)),
            norm: bra,
        }
    }
}

fn contract(b: &ThermalBra, k: &ThermalKet) -> C64 {
    b.contract(k).expect("same space")
}

/// Spectral bound `‖Ĥ‖_∞ dt`, checked against [`RK4_STEP_LIMIT`].
pub fn step_bound(h: &ThermalOperator, dt: f64) -> f64 {
    h.norm_inf() * dt
}

fn rk4_step(m: &CsMat<C64>, psi: &ndarray::Array1<C64>, dt: f64) -> ndarray::Array1<C64> {
    let k1 = csr_mul_vec(m, psi);
    let k2 = csr_mul_vec(m, &(psi + &k1.mapv(|v| v * (0.5 * dt))));
    let k3 = csr_mul_vec(m, &(psi + &k2.mapv(|v| v * (0.5 * dt))));
    let k4 = csr_mul_vec(m, &(psi + &k3.mapv(|v| v * dt)));
    let mut out = psi.clone();
    let c = dt / 6.0;
    ndarray::Zip::from(&mut out)
        .and(&k1)
        .and(&k2)
        .and(&k3)
        .and(&k4)
        .for_each(|o, a, b, cc, d| *o += (a + 2.0 * b + 2.0 * cc + d) * c);
    out
}

/// Number of steps of size `dt` needed to reach `t_end`; `t_end` must be a
/// multiple of `dt` up to rounding.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be finite and > 0".into(),
        });
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: "must be finite and >= 0".into(),
        });
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::OffGrid(t_end));
    }
    Ok(steps as usize)
}

/// Evolve with the generator `op` (any thermal operator) by fixed-step RK4.
pub fn evolve_generator(
    op: &ThermalOperator,
    mass: f64,
    omega: f64,
    ket0: &ThermalKet,
    t_end: f64,
    dt: f64,
    opts: EvolveOptions,
) -> Result<MasterTrajectory> {
    let space = op.space();
    if ket0.space() != space {
        return Err(Error::ShapeMismatch("generator/ket space".into()));
    }
    let bound = step_bound(op, dt);
    if bound > RK4_STEP_LIMIT {
        return Err(Error::StepTooLarge(bound));
    }
    let steps = step_count(t_end, dt)?;
    let every = opts.record_every.max(1);
    let m = op.scale(-I);
    let obs = Observables::new(space, mass, omega);

    let mut traj = MasterTrajectory {
        times: Vec::new(),
        states: Vec::new(),
        n_values: Vec::new(),
        mean_x: Vec::new(),
        mean_p: Vec::new(),
        var_x: Vec::new(),
        var_p: Vec::new(),
        norm_drift: Vec::new(),
        guard_weight: Vec::new(),
        final_state: ket0.clone(),
    };
    let mut psi = ket0.data().clone();
    let mut record = |k: usize, psi: &ndarray::Array1<C64>| -> Result<()> {
        let ket = ThermalKet::from_vec(space, psi.clone())?;
        let w = ket.guard_band_weight();
        if w > OVERFLOW_TOLERANCE {
            return Err(Error::TruncationOverflow {
                weight: w,
                guard: space.guard(),
            });
        }
        let x = contract(&obs.x, &ket).re;
        let p = contract(&obs.p, &ket).re;
        traj.times.push(k as f64 * dt);
        traj.n_values.push(contract(&obs.n, &ket).re);
        traj.mean_x.push(x);
        traj.mean_p.push(p);
        traj.var_x.push(contract(&obs.x2, &ket).re - x * x);
        traj.var_p.push(contract(&obs.p2, &ket).re - p * p);
        traj.norm_drift
            .push((contract(&obs.norm, &ket) - 1.0).norm());
        traj.guard_weight.push(w);
        if opts.keep_states {
            traj.states.push(ket);
        }
        Ok(())
    };
    record(0, &psi)?;
    for k in 1..=steps {
        psi = rk4_step(m.csr(), &psi, dt);
        if k % every == 0 || k == steps {
            record(k, &psi)?;
        }
    }
    traj.final_state = ThermalKet::from_vec(space, psi)?;
    Ok(traj)
}

/// Integrate the master equation generated by `h` from `ket0`.
pub fn evolve_master(
    h: &HatHamiltonian,
    ket0: &ThermalKet,
    t_end: f64,
    dt: f64,
    opts: EvolveOptions,
) -> Result<MasterTrajectory> {
    evolve_generator(
        &h.full(),
        h.params.mass,
        h.params.omega,
        ket0,
        t_end,
        dt,
        opts,
    )
}

/// `n̄ + (n0 − n̄) e^{−2κt}`.
pub fn boltzmann_closed_form(n0: f64, nbar: f64, kappa: f64, t: f64) -> f64 {
    let decay = (-2.0 * kappa * t).exp();
    n0 * decay - nbar * (-2.0 * kappa * t).exp_m1()
}

/// `dn/dt = −2κ(n − n̄)`.
pub fn boltzmann_rate(n: f64, nbar: f64, kappa: f64) -> f64 {
    -2.0 * kappa * (n - nbar)
}

/// Planck occupation `1/(e^{ω/T} − 1)`.
pub fn planck_nbar(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: "must be > 0".into(),
        });
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            reason: "must be > 0".into(),
        });
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// Temperature with Planck occupation `n̄` at frequency `ω`.
pub fn planck_temperature(omega: f64, nbar: f64) -> Result<f64> {
    if !(nbar > 0.0) {
        return Err(Error::InvalidParameter {
            name: "nbar",
            reason: "temperature needs n̄ > 0".into(),
        });
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: "must be > 0".into(),
        });
    }
    Ok(omega / (1.0 / nbar).ln_1p())
}

/// `exp[(n_t − n_0) γ⁺° γ̃⁺°] |ket0⟩` with `γ⁺° = a† − ã`.
///
/// Only pair creation (`n_t ≥ n_0`) is well conditioned on a truncated
/// space; the reverse direction is backward diffusion and is reported as a
/// truncation overflow once roundoff takes over.
pub fn condensation_state(
    n_t: f64,
    n_0: f64,
    gamma_plus: &ThermalOperator,
    tilde_gamma_plus: &ThermalOperator,
    ket0: &ThermalKet,
) -> Result<ThermalKet> {
    if !(n_t >= 0.0) {
        return Err(Error::NegativeOccupation(n_t));
    }
    if !(n_0 >= 0.0) {
        return Err(Error::NegativeOccupation(n_0));
    }
    let g = gamma_plus.try_mul(tilde_gamma_plus)?;
    let data = expm_multiply(g.csr(), C64::new(n_t - n_0, 0.0), ket0.data());
    let out = ThermalKet::from_vec(ket0.space(), data)?;
    let w = out.guard_band_weight();
    if !(w <= OVERFLOW_TOLERANCE) {
        return Err(Error::TruncationOverflow {
            weight: w,
            guard: out.space().guard(),
        });
    }
    Ok(out)
}

/// Condensate for a thermal start, built with the static γ-operators.
///
/// `|0(n_0)⟩ = exp[n_0 γ⁺°γ̃⁺°]|0,0̃⟩`, so for `n_t < n_0` the same state is
/// `exp[n_t γ⁺°γ̃⁺°]|0,0̃⟩`, which avoids running the exponential backwards.
pub fn condensation_from_thermal(
    space: TruncatedFockSpace,
    n_0: f64,
    n_t: f64,
) -> Result<ThermalKet> {
    let g = gamma_set(&space.ladder(), 0.5)?;
    let (from, ket0) = if n_t >= n_0 {
        (n_0, crate::thermal::initial_vacuum(space, n_0)?)
    } else {
        (0.0, crate::thermal::initial_vacuum(space, 0.0)?)
    };
    condensation_state(n_t, from, &g.gamma_plus, &g.tilde_gamma_plus, &ket0)
}

/// `n(0) − n(t)`.
pub fn order_parameter(n_t: f64, n_0: f64) -> f64 {
    n_0 - n_t
}

/// `⟨1|γ_t γ̃_t|ket⟩` with the instantaneous frame
/// `γ_t = (1+n_t)a − n_t ã†`.
pub fn order_parameter_numeric(n_t: f64, ket: &ThermalKet) -> Result<f64> {
    let s = ket.space();
    let l = s.ladder();
    let g = &l.a.scale_re(1.0 + n_t) - &l.at_dag.scale_re(n_t);
    let gt = g.tilde();
    Ok(crate::thermal::expectation(&thermal_bra(s), &(&g * &gt), ket)?.re)
}

/// Guarded max-abs of `−iĤ Φ(n) − ṅ dΦ/dn` with `Φ(n)` the condensate and
/// `dΦ/dn` taken by a central difference of width `eps`.
pub fn migration_residual(h: &HatHamiltonian, n_0: f64, n_t: f64, eps: f64) -> Result<f64> {
    let s = h.space();
    let phi = condensation_from_thermal(s, n_0, n_t)?;
    let plus = condensation_from_thermal(s, n_0, n_t + eps)?;
    let minus = condensation_from_thermal(s, n_0, (n_t - eps).max(0.0))?;
    let width = n_t + eps - (n_t - eps).max(0.0);
    let dphi = plus.sub(&minus).scale(C64::new(1.0 / width, 0.0));
    let ndot = boltzmann_rate(n_t, h.params.nbar, h.params.kappa);
    let lhs = h.full().scale(-I).apply(&phi)?;
    Ok(lhs.sub(&dphi.scale(C64::new(ndot, 0.0))).guarded_max_abs())
}

/// `S(n) = (1+n)ln(1+n) − n ln n`, with `S(0) = 0`.
pub fn entropy(n: f64) -> f64 {
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    xlnx(1.0 + n) - xlnx(n)
}

/// `2κ(n − n̄) ln[n(1+n̄) / (n̄(1+n))]`.
pub fn entropy_production_rate(n: f64, nbar: f64, kappa: f64) -> f64 {
    if kappa == 0.0 || n == nbar {
        return 0.0;
    }
    if n <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * kappa * (n - nbar) * ((n * (1.0 + nbar)) / (nbar * (1.0 + n))).ln()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThermoReport {
    pub nbar: f64,
    pub temperature: f64,
    pub times: Vec<f64>,
    pub n: Vec<f64>,
    pub entropy: Vec<f64>,
    /// `d′Q/dt = ω dn/dt`.
    pub heat_rate: Vec<f64>,
    pub ds_e_dt: Vec<f64>,
    pub ds_i_dt: Vec<f64>,
    /// `max |dS/dt − dS_e/dt − dS_i/dt|` over points with `n > 0`.
    pub chain_residual: f64,
    pub min_ds_i_dt: f64,
    /// Points where production vanishes identically (`n = n̄` or `κ = 0`).
    pub equality_points: usize,
}

/// Entropy balance along an occupation path; rates use the Boltzmann
/// equation for `dn/dt`.
pub fn thermo_report(
    times: &[f64],
    n_path: &[f64],
    omega: f64,
    nbar: f64,
    kappa: f64,
) -> Result<ThermoReport> {
    if times.len() != n_path.len() {
        return Err(Error::GridMismatch);
    }
    let temperature = planck_temperature(omega, nbar)?;
    let mut rep = ThermoReport {
        nbar,
        temperature,
        times: times.to_vec(),
        n: n_path.to_vec(),
        entropy: Vec::with_capacity(n_path.len()),
        heat_rate: Vec::new(),
        ds_e_dt: Vec::new(),
        ds_i_dt: Vec::new(),
        chain_residual: 0.0,
        min_ds_i_dt: f64::INFINITY,
        equality_points: 0,
    };
    for &n in n_path {
        if n < -1e-12 {
            return Err(Error::NegativeOccupation(n));
        }
        let n = n.max(0.0);
        let ndot = boltzmann_rate(n, nbar, kappa);
        let heat = omega * ndot;
        let dse = heat / temperature;
        let dsi = entropy_production_rate(n, nbar, kappa);
        if kappa == 0.0 || n == nbar {
            rep.equality_points += 1;
        }
        if n > 0.0 {
            let ds = ndot * ((1.0 + n) / n).ln();
            rep.chain_residual = rep.chain_residual.max((ds - dse - dsi).abs());
        }
        rep.min_ds_i_dt = rep.min_ds_i_dt.min(dsi);
        rep.entropy.push(entropy(n));
        rep.heat_rate.push(heat);
        rep.ds_e_dt.push(dse);
        rep.ds_i_dt.push(dsi);
    }
    Ok(rep)
}

/// `t,n,S,dSi_dt,norm_drift` rows.
pub fn oscillator_csv(traj: &MasterTrajectory, nbar: f64, kappa: f64) -> String {
    let mut out = String::from("t,n,S,dSi_dt,norm_drift\n");
    for i in 0..traj.times.len() {
        let n = traj.n_values[i];
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            traj.times[i],
            n,
            entropy(n.max(0.0)),
            entropy_production_rate(n.max(0.0), nbar, kappa),
            traj.norm_drift[i]
        );
    }
    out
}

/// `t,mean_x,mean_p,var_x,var_p,norm_drift` rows.
pub fn kramers_csv(traj: &MasterTrajectory) -> String {
    let mut out = String::from("t,mean_x,mean_p,var_x,var_p,norm_drift\n");
    for i in 0..traj.times.len() {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            traj.times[i],
            traj.mean_x[i],
            traj.mean_p[i],
            traj.var_x[i],
            traj.var_p[i],
            traj.norm_drift[i]
        );
    }
    out
}

/// Cutoff so the thermal tail `f^{N−G−1}` of occupations up to `n_max` stays
/// below `tail`, never below `min_cutoff`.
pub fn adaptive_cutoff(n_max: f64, guard: usize, tail: f64, min_cutoff: usize) -> usize {
    if n_max <= 0.0 {
        return min_cutoff.max(guard + 2);
    }
    let f = n_max / (1.0 + n_max);
    let levels = (tail.ln() / f.ln()).ceil() as usize;
    (levels + guard + 1).max(min_cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::oscillator_hamiltonian;
    use crate::thermal::initial_vacuum;

    #[test]
    fn closed_forms() {
        assert_eq!(boltzmann_closed_form(0.3, 1.0, 0.5, 0.0), 0.3);
        assert_eq!(boltzmann_closed_form(1.0, 1.0, 0.5, 3.0), 1.0);
        assert!(
            (boltzmann_closed_form(0.0, 1.0, 0.5, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15
        );
        assert!((planck_nbar(1.0, 1.0).unwrap() - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert!((planck_nbar(2f64.ln(), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(planck_nbar(1.0, 1e-3).unwrap() < 1e-300);
        assert!(planck_nbar(0.0, 1.0).is_err());
        assert!(planck_nbar(1.0, -1.0).is_err());
        assert!((planck_temperature(1.0, 1.0).unwrap() - 1.0 / 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(0.0), 0.0);
        assert_eq!(entropy_production_rate(1.0, 1.0, 0.5), 0.0);
        assert_eq!(entropy_production_rate(2.0, 1.0, 0.0), 0.0);
        assert!((entropy_production_rate(2.0, 1.0, 0.5) - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!(thermo_report(&[0.0], &[1.0], 1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn zero_damping_keeps_occupation() {
        let s = TruncatedFockSpace::new(30, 3).unwrap();
        let h = oscillator_hamiltonian(s, 1.0, 0.0, 1.0, 0.5).unwrap();
        let k = initial_vacuum(s, 0.5).unwrap();
        let tr = evolve_master(
            &h,
            &k,
            1.0,
            1e-3,
            EvolveOptions {
                record_every: 100,
                keep_states: false,
            },
        )
        .unwrap();
        for n in &tr.n_values {
            assert!((n - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn relaxation_matches_boltzmann() {
        let s = TruncatedFockSpace::new(30, 3).unwrap();
        let h = oscillator_hamiltonian(s, 1.0, 0.5, 1.0, 0.5).unwrap();
        let k = initial_vacuum(s, 0.0).unwrap();
        let tr = evolve_master(
            &h,
            &k,
            1.0,
            1e-3,
            EvolveOptions {
                record_every: 1000,
                keep_states: false,
            },
        )
        .unwrap();
        let n1 = *tr.n_values.last().unwrap();
        assert!((n1 - 0.6321206).abs() < 1e-6);
        assert!(tr.norm_drift.iter().all(|d| *d < 1e-9));
    }

    #[test]
    fn guards() {
        let s = TruncatedFockSpace::new(30, 3).unwrap();
        let h = oscillator_hamiltonian(s, 1.0, 0.5, 1.0, 0.5).unwrap();
        let k = initial_vacuum(s, 0.0).unwrap();
        assert!(matches!(
            evolve_master(&h, &k, 1.0, 0.1, EvolveOptions::default()),
            Err(Error::StepTooLarge(_))
        ));
        let small = TruncatedFockSpace::new(8, 2).unwrap();
        let hs = oscillator_hamiltonian(small, 1.0, 0.5, 3.0, 0.5).unwrap();
        let ks = initial_vacuum(small, 0.0).unwrap();
        assert!(matches!(
            evolve_master(&hs, &ks, 2.0, 1e-2, EvolveOptions::default()),
            Err(Error::TruncationOverflow { .. })
        ));
    }

    #[test]
    fn condensate_identities() {
        let s = TruncatedFockSpace::new(30, 3).unwrap();
        let k = initial_vacuum(s, 0.4).unwrap();
        let same = condensation_from_thermal(s, 0.4, 0.4).unwrap();
        assert_eq!(same, k);
        let phi = condensation_from_thermal(s, 0.0, 0.6).unwrap();
        let want = initial_vacuum(s, 0.6).unwrap();
        assert!(phi.sub(&want).max_abs() < 1e-10);
        assert!(
            (order_parameter_numeric(0.6, &k).unwrap() - order_parameter(0.6, 0.4)).abs() < 1e-10
        );
    }

    #[test]
    fn condensation_cools_through_the_vacuum() {
        let s = TruncatedFockSpace::new(70, 3).unwrap();
        let g = gamma_set(&s.ladder(), 0.5).unwrap();
        let vac = crate::thermal::initial_vacuum(s, 0.0).unwrap();
        let built = condensation_state(2.0, 0.0, &g.gamma_plus, &g.tilde_gamma_plus, &vac).unwrap();
        let thermal = crate::thermal::initial_vacuum(s, 2.0).unwrap();
        assert!(built.sub(&thermal).max_abs() < 1e-10);
        let cooled = condensation_from_thermal(s, 2.0, 0.05).unwrap();
        let want = crate::thermal::initial_vacuum(s, 0.05).unwrap();
        assert!(cooled.sub(&want).max_abs() < 1e-10);
        let hot = crate::thermal::initial_vacuum(s, 1.0).unwrap();
        assert!(matches!(
            condensation_state(0.2, 1.0, &g.gamma_plus, &g.tilde_gamma_plus, &hot),
            Err(Error::TruncationOverflow { .. })
        ));
    }
}
