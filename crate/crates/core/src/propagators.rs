//! Two-point functions of the damped oscillator.
//!
//! Doublets are `a¹ = a, a² = ã†` and `ā¹ = a†, ā² = −ã`. The time-ordered
//! function `G^{μν}(t,t′) = −i⟨1|T[a^μ(t) ā^ν(t′)]|0⟩` is computed by
//! Schrödinger evolution and compared with `B⁻¹(n(t)) 𝒢(t,t′) B(n(t′))`.
//! Equal times go to the retarded branch.

use std::fmt::Write as _;

use serde::Serialize;

use crate::dynamics::{boltzmann_closed_form, evolve_master, step_count, EvolveOptions};
use crate::error::{Error, Result};
use crate::generators::{bogoliubov, HatHamiltonian};
use crate::thermal::{initial_vacuum, thermal_bra, ThermalKet, ThermalOperator, I, ZERO};
use crate::C64;

pub type Mat2 = [[C64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PropagatorPair {
    pub omega: f64,
    pub kappa: f64,
}

pub fn closed_form_propagators(omega: f64, kappa: f64) -> Result<PropagatorPair> {
    if !(kappa >= 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: format!("need kappa >= 0, got {kappa}"),
        });
    }
    Ok(PropagatorPair { omega, kappa })
}

impl PropagatorPair {
    /// `−iθ(t−t′) e^{−i(ω−iκ)(t−t′)}` with `θ(0) = 1`.
    pub fn retarded(&self, t: f64, tp: f64) -> C64 {
        if t < tp {
            return ZERO;
        }
        -I * (C64::new(-self.kappa, -self.omega) * (t - tp)).exp()
    }

    /// `iθ(t′−t) e^{−i(ω+iκ)(t−t′)}`, zero at equal times.
    pub fn advanced(&self, t: f64, tp: f64) -> C64 {
        if tp <= t {
            return ZERO;
        }
        I * (C64::new(self.kappa, -self.omega) * (t - tp)).exp()
    }

    /// `𝒢 = diag(G^R, G^A)`.
    pub fn matrix(&self, t: f64, tp: f64) -> Mat2 {
        [[self.retarded(t, tp), ZERO], [ZERO, self.advanced(t, tp)]]
    }
}

fn real2(m: [[f64; 2]; 2]) -> Mat2 {
    m.map(|r| r.map(|x| C64::new(x, 0.0)))
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `B⁻¹(n_t) 𝒢(t,t′) B(n_t′)`.
pub fn sandwich(pair: &PropagatorPair, t: f64, tp: f64, n_t: f64, n_tp: f64) -> Result<Mat2> {
    let left = real2(bogoliubov(n_t)?.inverse());
    let right = real2(bogoliubov(n_tp)?.m);
    Ok(mat2_mul(&mat2_mul(&left, &pair.matrix(t, tp)), &right))
}

/// `B(n_t) G B⁻¹(n_t′)`, which should be diagonal.
pub fn gamma_frame(g: &Mat2, n_t: f64, n_tp: f64) -> Result<Mat2> {
    let left = real2(bogoliubov(n_t)?.m);
    let right = real2(bogoliubov(n_tp)?.inverse());
    Ok(mat2_mul(&mat2_mul(&left, g), &right))
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoPointGrid {
    pub times: Vec<f64>,
    /// `values[i][j] = G(times[i], times[j])`.
    pub values: Vec<Vec<Mat2>>,
}

impl TwoPointGrid {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tp,mu,nu,re_g,im_g\n");
        for (i, t) in self.times.iter().enumerate() {
            for (j, tp) in self.times.iter().enumerate() {
                for mu in 0..2 {
                    for nu in 0..2 {
                        let g = self.values[i][j][mu][nu];
                        let _ = writeln!(
                            out,
                            "{t:.16e},{tp:.16e},{},{},{:.16e},{:.16e}",
                            mu + 1,
                            nu + 1,
                            g.re,
                            g.im
                        );
                    }
                }
            }
        }
        out
    }
}

struct Doublets {
    a: [ThermalOperator; 2],
    abar: [ThermalOperator; 2],
}

fn doublets(h: &HatHamiltonian) -> Doublets {
    let l = h.space().ladder();
    Doublets {
        a: [l.a.clone(), l.at_dag.clone()],
        abar: [l.a_dag.clone(), l.at.scale_re(-1.0)],
    }
}

fn advance(h: &HatHamiltonian, ket: &ThermalKet, t: f64, dt: f64) -> Result<ThermalKet> {
    if t == 0.0 {
        return Ok(ket.clone());
    }
    Ok(evolve_master(
        h,
        ket,
        t,
        dt,
        EvolveOptions {
            record_every: usize::MAX,
            keep_states: false,
        },
    )?
    .final_state)
}

fn check_grid(times: &[f64], dt: f64) -> Result<()> {
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: "must be strictly increasing".into(),
            });
        }
    }
    for &t in times {
        step_count(t, dt).map_err(|_| Error::OffGrid(t))?;
    }
    Ok(())
}

/// Evolve `x|0(t_i)⟩` through the later grid times and contract each with
/// `⟨1|y`.
fn chain(
    h: &HatHamiltonian,
    start: &ThermalKet,
    times: &[f64],
    i: usize,
    dt: f64,
    mut visit: impl FnMut(usize, &ThermalKet) -> Result<()>,
) -> Result<()> {
    let mut ket = start.clone();
    visit(i, &ket)?;
    for j in i + 1..times.len() {
        ket = advance(h, &ket, times[j] - times[j - 1], dt)?;
        visit(j, &ket)?;
    }
    Ok(())
}

/// `G^{μν}(t_i, t_j)` for every pair of grid times, by Schrödinger evolution
/// of `ā^ν|0(t′)⟩` (or `a^μ|0(t)⟩` when `t < t′`).
pub fn numeric_two_point_grid(
    h: &HatHamiltonian,
    times: &[f64],
    n0: f64,
    dt: f64,
) -> Result<TwoPointGrid> {
    check_grid(times, dt)?;
    let space = h.space();
    let bra = thermal_bra(space);
    let ops = doublets(h);
    let nt = times.len();
    let mut values = vec![vec![[[ZERO; 2]; 2]; nt]; nt];

    let mut state = advance(
        h,
        &initial_vacuum(space, n0)?,
        times.first().copied().unwrap_or(0.0),
        dt,
    )?;
    for i in 0..nt {
        if i > 0 {
            state = advance(h, &state, times[i] - times[i - 1], dt)?;
        }
        for nu in 0..2 {
            let src = ops.abar[nu].apply(&state)?;
            chain(h, &src, times, i, dt, |j, ket| {
                for mu in 0..2 {
                    values[j][i][mu][nu] = -I * ops.a[mu].apply_left(&bra)?.contract(ket)?;
                }
                Ok(())
            })?;
        }
        for mu in 0..2 {
            let src = ops.a[mu].apply(&state)?;
            chain(h, &src, times, i, dt, |j, ket| {
                if j > i {
                    for nu in 0..2 {
                        values[i][j][mu][nu] = -I * ops.abar[nu].apply_left(&bra)?.contract(ket)?;
                    }
                }
                Ok(())
            })?;
        }
    }
    Ok(TwoPointGrid {
        times: times.to_vec(),
        values,
    })
}

/// A single entry `G^{μν}(t, t′)`, with `μ, ν ∈ {1, 2}`.
pub fn numeric_two_point(
    h: &HatHamiltonian,
    mu: usize,
    nu: usize,
    t: f64,
    tp: f64,
    n0: f64,
    dt: f64,
) -> Result<C64> {
    if !(1..=2).contains(&mu) || !(1..=2).contains(&nu) {
        return Err(Error::InvalidParameter {
            name: "mu/nu",
            reason: "doublet indices are 1 or 2".into(),
        });
    }
    let times: Vec<f64> = if t == tp {
        vec![t]
    } else if t < tp {
        vec![t, tp]
    } else {
        vec![tp, t]
    };
    let g = numeric_two_point_grid(h, &times, n0, dt)?;
    let (i, j) = if t <= tp {
        (0, times.len() - 1)
    } else {
        (1, 0)
    };
    Ok(g.values[i][j][mu - 1][nu - 1])
}

/// Closed form on the same grid, with `n(t)` from the Boltzmann solution.
pub fn closed_form_grid(h: &HatHamiltonian, times: &[f64], n0: f64) -> Result<TwoPointGrid> {
    let p = h.params;
    let pair = closed_form_propagators(p.omega, p.kappa)?;
    let n = |t: f64| boltzmann_closed_form(n0, p.nbar, p.kappa, t);
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let mut row = Vec::with_capacity(times.len());
        for &tp in times {
            row.push(sandwich(&pair, t, tp, n(t), n(tp))?);
        }
        values.push(row);
    }
    Ok(TwoPointGrid {
        times: times.to_vec(),
        values,
    })
}

/// `⟨1|γ(t) V(t←t′) γ⁺°|0(t′)⟩` for `t ≥ t′`, with `γ_t = (1+n(t))a − n(t)ã†`;
/// `tilde` switches to `γ̃_t` and `γ̃⁺° = ã† − a`.
pub fn gamma_correlator(
    h: &HatHamiltonian,
    t: f64,
    tp: f64,
    n0: f64,
    dt: f64,
    tilde: bool,
) -> Result<C64> {
    if t < tp {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: "gamma correlator needs t >= t'".into(),
        });
    }
    step_count(t, dt).map_err(|_| Error::OffGrid(t))?;
    step_count(tp, dt).map_err(|_| Error::OffGrid(tp))?;
    let p = h.params;
    let space = h.space();
    let l = space.ladder();
    let nt = boltzmann_closed_form(n0, p.nbar, p.kappa, t);
    let (gamma, plus) = if tilde {
        (
            &l.at.scale_re(1.0 + nt) - &l.a_dag.scale_re(nt),
            &l.at_dag - &l.a,
        )
    } else {
        (
            &l.a.scale_re(1.0 + nt) - &l.at_dag.scale_re(nt),
            &l.a_dag - &l.at,
        )
    };
    let state = advance(h, &initial_vacuum(space, n0)?, tp, dt)?;
    let ket = advance(h, &plus.apply(&state)?, t - tp, dt)?;
    gamma.apply_left(&thermal_bra(space))?.contract(&ket)
}

pub fn max_abs_diff(a: &TwoPointGrid, b: &TwoPointGrid) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.values.iter().zip(&b.values) {
        for (ma, mb) in ra.iter().zip(rb) {
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((ma[i][j] - mb[i][j]).norm());
                }
            }
        }
    }
    worst
}

/// Largest off-diagonal modulus of the numeric grid rotated to the γ-frame.
pub fn gamma_frame_offdiag(g: &TwoPointGrid, n: impl Fn(f64) -> f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, &t) in g.times.iter().enumerate() {
        for (j, &tp) in g.times.iter().enumerate() {
            let r = gamma_frame(&g.values[i][j], n(t), n(tp))?;
            worst = worst.max(r[0][1].norm()).max(r[1][0].norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::oscillator_hamiltonian;
    use crate::thermal::TruncatedFockSpace;

    fn h(kappa: f64) -> HatHamiltonian {
        oscillator_hamiltonian(
            TruncatedFockSpace::new(30, 3).unwrap(),
            1.0,
            kappa,
            1.0,
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn closed_form_values() {
        let p = closed_form_propagators(1.0, 0.25).unwrap();
        assert_eq!(p.retarded(1.0, 1.0), -I);
        assert_eq!(p.advanced(1.0, 1.0), ZERO);
        assert!((p.retarded(3.0, 1.0).norm() - (-0.5f64).exp()).abs() < 1e-15);
        assert!((p.advanced(1.0, 3.0).norm() - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(p.retarded(1.0, 3.0), ZERO);
        let free = closed_form_propagators(1.0, 0.0).unwrap();
        assert!((free.retarded(7.3, 0.0).norm() - 1.0).abs() < 1e-15);
        assert!(closed_form_propagators(1.0, -1.0).is_err());
    }

    #[test]
    fn equal_time_entry() {
        let h = h(0.5);
        let g = numeric_two_point(&h, 1, 1, 0.5, 0.5, 0.0, 1e-3).unwrap();
        let n = boltzmann_closed_form(0.0, 1.0, 0.5, 0.5);
        assert!((g - C64::new(0.0, -(1.0 + n))).norm() < 1e-9);
    }

    #[test]
    fn sandwich_identity_small_grid() {
        let h = h(0.5);
        let times = [0.0, 0.5, 1.0];
        let num = numeric_two_point_grid(&h, &times, 0.0, 1e-3).unwrap();
        let cf = closed_form_grid(&h, &times, 0.0).unwrap();
        assert!(max_abs_diff(&num, &cf) < 1e-5);
        let n = |t| boltzmann_closed_form(0.0, 1.0, 0.5, t);
        assert!(gamma_frame_offdiag(&num, n).unwrap() < 1e-5);
        assert!(num.to_csv().lines().count() == 1 + 9 * 4);
    }

    #[test]
    fn gamma_pair_and_tilde() {
        let h = h(0.5);
        let g = gamma_correlator(&h, 1.5, 0.5, 0.0, 1e-3, false).unwrap();
        let want = (C64::new(-0.5, -1.0)).exp();
        assert!((g - want).norm() < 1e-6, "{g}");
        let gt = gamma_correlator(&h, 1.5, 0.5, 0.0, 1e-3, true).unwrap();
        assert!((gt - g.conj()).norm() < 1e-10);
    }

    #[test]
    fn off_grid_rejected() {
        let h = h(0.5);
        assert!(matches!(
            numeric_two_point(&h, 1, 1, 0.5, 0.0005, 0.0, 1e-2),
            Err(Error::OffGrid(_))
        ));
    }
}
