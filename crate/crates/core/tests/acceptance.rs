//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed. Pass criterion
//! numbers to run a subset (`cargo test --test acceptance -- 3 8`). Criterion
//! 4 contains a clause that cannot hold (`⟨1|Ĥ^U` vanishes identically, see
//! README); its failure is reported and tolerated unless
//! `NTFD_ACCEPTANCE_STRICT=1`. Any other failure, or 4 unexpectedly passing,
//! makes the target fail.

#![allow(clippy::needless_range_loop)]

use std::time::Instant;

use ndarray::{Array1, Array2};
use ntfd::dynamics::{
    adaptive_cutoff, condensation_from_thermal, entropy_production_rate, evolve_master,
    thermo_report, EvolveOptions,
};
use ntfd::generators::{
    gamma_set, kramers_hamiltonian, left_zero_residual, oscillator_hamiltonian, phase_space_ops,
    tildian_residual, unitary_kramers_generator,
};
use ntfd::heisenberg::{
    equal_time_commutator, evolve_process, seed_vector, BasisMoments, LinearProcess, SystemKind,
    SystemSpec,
};
use ntfd::ito::{
    fdt_residual, ito_to_strat, kramers_martingale, kramers_unitary_martingale,
    oscillator_martingale, oscillator_unitary_martingale, strat_to_ito, CommutatorTable,
    IncrementSymbol, ItoTable, Martingale, NoiseParams,
};
use ntfd::propagators::{gamma_frame_offdiag, numeric_two_point_grid};
use ntfd::scenarios::{generator_means, overlap_deficit, ScenarioParams};
use ntfd::sde::simulate_vector_sde;
use ntfd::thermal::{displaced_vacuum, initial_vacuum, thermal_bra, TruncatedFockSpace};
use ntfd::C64;

type Outcome = ntfd::Result<(bool, String)>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn boltzmann(n0: f64, nbar: f64, kappa: f64, t: f64) -> f64 {
    nbar + (n0 - nbar) * (-2.0 * kappa * t).exp()
}

fn space(p: &ScenarioParams) -> TruncatedFockSpace {
    TruncatedFockSpace::new(p.cutoff, p.guard).unwrap()
}

fn spec(kind: SystemKind, p: &ScenarioParams) -> SystemSpec {
    SystemSpec::new(kind, p.model()).unwrap()
}

fn process(spec: &SystemSpec, seed: &str, t_end: f64, dt: f64) -> LinearProcess {
    evolve_process(
        spec,
        &seed_vector(spec.kind, seed, spec.params.nbar).unwrap(),
        t_end,
        dt,
    )
    .unwrap()
}

// 36-point parameter grid shared by criteria 1, 6 and 7.
const KAPPAS: [f64; 3] = [0.1, 0.5, 1.0];
const NBARS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
const N0S: [f64; 3] = [0.0, 1.0, 2.0];
const GRID_T_END: f64 = 2.0;
const GRID_DT: f64 = 1e-3;
const SEGMENTS: usize = 10;

struct GridRun {
    boltzmann_err: f64,
    condensation_deficit: f64,
    min_entropy_production: f64,
    cutoff: usize,
}

fn grid_run(kappa: f64, nbar: f64, n0: f64) -> ntfd::Result<GridRun> {
    let cutoff = adaptive_cutoff(n0.max(nbar), 3, 1e-10, 30);
    let s = TruncatedFockSpace::new(cutoff, 3)?;
    let h = oscillator_hamiltonian(s, 1.0, kappa, nbar, 0.5)?;
    let mut ket = initial_vacuum(s, n0)?;
    let seg = GRID_T_END / SEGMENTS as f64;
    let mut times = vec![0.0];
    let mut ns = vec![n0];
    let mut deficit: f64 = 0.0;
    for k in 0..SEGMENTS {
        let t0 = k as f64 * seg;
        let traj = evolve_master(&h, &ket, seg, GRID_DT, EvolveOptions::default())?;
        for (t, n) in traj.times.iter().zip(&traj.n_values).skip(1) {
            times.push(t0 + t);
            ns.push(*n);
        }
        ket = traj.final_state;
        let t = t0 + seg;
        let exact = condensation_from_thermal(s, n0, boltzmann(n0, nbar, kappa, t))?;
        deficit = deficit.max(overlap_deficit(&exact, &ket));
    }
    let err = times
        .iter()
        .zip(&ns)
        .map(|(&t, &n)| (n - boltzmann(n0, nbar, kappa, t)).abs())
        .fold(0.0, f64::max);
    let min_prod = if nbar > 0.0 {
        let clipped: Vec<f64> = ns.iter().map(|n| n.max(0.0)).collect();
        thermo_report(&times, &clipped, 1.0, nbar, kappa)?.min_ds_i_dt
    } else {
        f64::INFINITY
    };
    Ok(GridRun {
        boltzmann_err: err,
        condensation_deficit: deficit,
        min_entropy_production: min_prod,
        cutoff,
    })
}

fn grid() -> ntfd::Result<Vec<GridRun>> {
    let mut out = Vec::new();
    for &k in &KAPPAS {
        for &nb in &NBARS {
            for &n0 in &N0S {
                out.push(grid_run(k, nb, n0)?);
            }
        }
    }
    Ok(out)
}

fn criterion_1(g: &[GridRun]) -> Outcome {
    let err = g.iter().map(|r| r.boltzmann_err).fold(0.0, f64::max);
    let nmax = g.iter().map(|r| r.cutoff).max().unwrap();
    Ok((
        err < 1e-6,
        format!(
            "max |n - closed form| = {err:.3e} < 1e-6 over {} runs (N = 30..{nmax}, dt = 1e-3)",
            g.len()
        ),
    ))
}

fn criterion_2() -> Outcome {
    let p = ScenarioParams::oscillator_default();
    let horizon = 5.0 / p.kappa;
    let dt = horizon / 1000.0;
    let times: Vec<f64> = (0..=100).map(|i| (i * 10) as f64 * dt).collect();
    let mut stochastic: f64 = 0.0;
    for kind in [
        SystemKind::OscillatorNonunitary,
        SystemKind::OscillatorUnitary,
    ] {
        let sp = spec(kind, &p);
        let a = process(&sp, "a", horizon, dt);
        let ad = process(&sp, "a†", horizon, dt);
        for &t in &times {
            stochastic = stochastic.max((equal_time_commutator(&a, &ad, t)? - ONE).norm());
        }
    }
    let sp = spec(SystemKind::AveragedReference, &p);
    let a = process(&sp, "a", horizon, dt);
    let ad = process(&sp, "a†", horizon, dt);
    let mut averaged: f64 = 0.0;
    for &t in &times {
        let want = c((-2.0 * p.kappa * t).exp());
        averaged = averaged.max((equal_time_commutator(&a, &ad, t)? - want).norm());
    }
    Ok((
        stochastic < 1e-10 && averaged < 1e-10,
        format!("|[a,a†] - 1| = {stochastic:.3e}, |averaged - e^(-2κt)| = {averaged:.3e} (< 1e-10 on [0, 5/κ])"),
    ))
}

fn criterion_3() -> Outcome {
    let s = TruncatedFockSpace::new(20, 3)?;
    let l = s.ladder();
    let mut worst = [0.0f64; 4];
    for nbar in [0.0, 0.5, 1.0, 2.0] {
        for nu in [0.0, 0.5, 1.0] {
            let (kappa, mass, omega) = (0.5, 1.3, 0.9);
            let table = ItoTable::new(nbar)?;
            let noise = NoiseParams::new(nbar, kappa, nu, mass * omega)?;
            let h = oscillator_hamiltonian(s, omega, kappa, nbar, nu)?;
            let g = gamma_set(&l, nu)?;
            worst[0] = worst[0].max(fdt_residual(
                &oscillator_martingale(&g, &noise),
                &table,
                &h.pi_d,
            )?);
            worst[1] = worst[1].max(fdt_residual(
                &oscillator_unitary_martingale(&g, &noise),
                &table,
                &h.pi(),
            )?);
            let ps = phase_space_ops(&l, mass, omega);
            let hk = kramers_hamiltonian(s, mass, omega, kappa, nbar)?;
            worst[2] = worst[2].max(fdt_residual(
                &kramers_martingale(&ps, &noise),
                &table,
                &hk.pi_d,
            )?);
            let (hu, _) = unitary_kramers_generator(s, mass, omega, kappa, nbar)?;
            worst[3] = worst[3].max(fdt_residual(
                &kramers_unitary_martingale(&ps, &noise),
                &table,
                &hu.pi(),
            )?);
        }
    }
    Ok((
        worst.iter().all(|&w| w < 1e-12),
        format!(
            "FDT residuals osc {:.2e}, osc-U {:.2e}, kramers {:.2e}, kramers-U {:.2e} (< 1e-12, N = 20)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

struct Criterion4 {
    left_zero: f64,
    tildian: f64,
    unitary_norm: f64,
    unitary_norm_unguarded: f64,
    bound: f64,
}

fn criterion_4_values() -> ntfd::Result<Criterion4> {
    let p = ScenarioParams::oscillator_default();
    let s = space(&p);
    let mut left_zero: f64 = 0.0;
    let mut tildian: f64 = 0.0;
    for nbar in [0.0, 1.0, 2.0] {
        let h = oscillator_hamiltonian(s, p.omega, p.kappa, nbar, p.nu)?.full();
        let hk = kramers_hamiltonian(s, 1.0, 1.0, 0.2, nbar)?.full();
        left_zero = left_zero
            .max(left_zero_residual(&h))
            .max(left_zero_residual(&hk));
        tildian = tildian.max(tildian_residual(&h)).max(tildian_residual(&hk));
    }
    let kappa = 0.2;
    let (hu, rep) = unitary_kramers_generator(s, 1.0, 1.0, kappa, 1.0)?;
    let bra = hu.full().apply_left(&thermal_bra(s))?;
    Ok(Criterion4 {
        left_zero,
        tildian,
        unitary_norm: rep.left_zero_residual,
        unitary_norm_unguarded: bra.max_abs(),
        bound: 0.01 * kappa,
    })
}

fn criterion_4() -> Outcome {
    let v = criterion_4_values()?;
    let axioms = v.left_zero < 1e-12 && v.tildian < 1e-13;
    let inconsistency = v.unitary_norm > v.bound;
    Ok((
        axioms && inconsistency,
        format!(
            "<1|H> = {:.2e} (< 1e-12), tildian {:.2e} (< 1e-13); <1|H^U> = {:.2e} (guarded), {:.2e} (incl. guard band), needs > {:.1e}",
            v.left_zero, v.tildian, v.unitary_norm, v.unitary_norm_unguarded, v.bound
        ),
    ))
}

fn criterion_4_axioms_hold() -> bool {
    criterion_4_values()
        .map(|v| v.left_zero < 1e-12 && v.tildian < 1e-13)
        .unwrap_or(false)
}

fn envelope(x: f64, p: f64) -> f64 {
    (p * p + x * x).sqrt()
}

fn criterion_5() -> Outcome {
    // Oscillator occupation.
    let p = ScenarioParams::oscillator_default().resolved();
    let s = space(&p);
    let h = oscillator_hamiltonian(s, p.omega, p.kappa, p.nbar, p.nu)?;
    let ket0 = initial_vacuum(s, p.n0)?;
    let traj = evolve_master(&h, &ket0, p.t_end, p.dt, EvolveOptions::default())?;
    let steps = traj.times.len() - 1;
    let idx: Vec<usize> = (1..=10).map(|i| i * steps / 10).collect();
    let bra = thermal_bra(s);
    let mut occ: f64 = 0.0;
    for kind in [
        SystemKind::OscillatorNonunitary,
        SystemKind::OscillatorUnitary,
    ] {
        let sp = spec(kind, &p);
        let a = process(&sp, "a", p.t_end, p.dt);
        let ad = process(&sp, "a†", p.t_end, p.dt);
        let bm = BasisMoments::new(&sp, &bra, &ket0)?;
        for &k in &idx {
            let n = bm.weak_moment(&[&ad, &a], traj.times[k])?.re;
            occ = occ.max((n - traj.n_values[k]).abs());
        }
    }

    // Kramers means (mass = ω = 1, so the envelope is sqrt(x² + p²)).
    let q = ScenarioParams::kramers_default().resolved();
    let s = space(&q);
    let ket0 = displaced_vacuum(s, q.n0, c(q.alpha))?;
    let bra = thermal_bra(s);
    let h = kramers_hamiltonian(s, q.mass, q.omega, q.kappa, q.nbar)?;
    let (hu, _) = unitary_kramers_generator(s, q.mass, q.omega, q.kappa, q.nbar)?;
    let q = ScenarioParams {
        t_end: 2.0 / q.kappa,
        ..q
    };
    let master = generator_means(&h.full(), &q, &ket0)?;
    let master_u = generator_means(&hu.full(), &q, &ket0)?;
    let steps = master.times.len() - 1;
    let idx: Vec<usize> = (1..=10).map(|i| i * steps / 10).collect();
    let mut means = [0.0f64; 2];
    for (slot, kind, reference) in [
        (0, SystemKind::KramersNonunitary, &master),
        (1, SystemKind::KramersUnitary, &master_u),
    ] {
        let sp = spec(kind, &q);
        let x = process(&sp, "x", q.t_end, q.dt);
        let pp = process(&sp, "p", q.t_end, q.dt);
        let bm = BasisMoments::new(&sp, &bra, &ket0)?;
        for &k in &idx {
            let t = reference.times[k];
            means[slot] = means[slot]
                .max((bm.weak_moment(&[&x], t)?.re - reference.mean_x[k]).abs())
                .max((bm.weak_moment(&[&pp], t)?.re - reference.mean_p[k]).abs());
        }
    }
    let env_h = envelope(master.mean_x[steps], master.mean_p[steps]);
    let env_u = envelope(master_u.mean_x[steps], master_u.mean_p[steps]);
    let gap = (env_u - env_h).abs() / env_u;
    Ok((
        occ < 1e-4 && means[0] < 1e-5 && means[1] < 1e-5 && gap > 0.1,
        format!(
            "occupation {occ:.2e} (< 1e-4), kramers {:.2e}, kramers-U vs H^U {:.2e} (< 1e-5), envelope gap vs H at 2/κ {:.1}% (> 10%)",
            means[0],
            means[1],
            100.0 * gap
        ),
    ))
}

fn criterion_6(g: &[GridRun]) -> Outcome {
    let d = g.iter().map(|r| r.condensation_deficit).fold(0.0, f64::max);
    Ok((
        d < 1e-7,
        format!("max overlap deficit {d:.3e} < 1e-7 over {} runs", g.len()),
    ))
}

fn criterion_7(g: &[GridRun]) -> Outcome {
    let min = g
        .iter()
        .map(|r| r.min_entropy_production)
        .fold(f64::INFINITY, f64::min);
    let at = entropy_production_rate(2.0, 1.0, 0.5);
    let want = (4.0f64 / 3.0).ln();
    let mut eq: f64 = 0.0;
    for &k in &KAPPAS {
        for &nb in &NBARS[1..] {
            eq = eq.max(entropy_production_rate(nb, nb, k).abs());
        }
    }
    Ok((
        min >= -1e-12 && (at - want).abs() < 1e-9 && eq == 0.0,
        format!(
            "min dS_i/dt = {min:.3e} (>= -1e-12); rate(2,1,0.5) - ln(4/3) = {:.1e}; max |rate| at n = n̄: {eq:.1e}",
            at - want
        ),
    ))
}

/// `G(t,t′)` from `B⁻¹(n_t) diag(G^R, G^A) B(n_t′)` written out by hand.
fn two_point_oracle(omega: f64, kappa: f64, n_t: f64, n_tp: f64, t: f64, tp: f64) -> [[C64; 2]; 2] {
    let i = C64::new(0.0, 1.0);
    let r = if t >= tp {
        -i * (C64::new(-kappa, -omega) * (t - tp)).exp()
    } else {
        ZERO
    };
    let a = if tp > t {
        i * (C64::new(kappa, -omega) * (t - tp)).exp()
    } else {
        ZERO
    };
    [
        [r * (1.0 + n_tp) - a * n_t, -r * n_tp + a * n_t],
        [
            r * (1.0 + n_tp) - a * (1.0 + n_t),
            -r * n_tp + a * (1.0 + n_t),
        ],
    ]
}

fn criterion_8() -> Outcome {
    let p = ScenarioParams::oscillator_default().resolved();
    let s = space(&p);
    let h = oscillator_hamiltonian(s, p.omega, p.kappa, p.nbar, p.nu)?;
    let times = [0.0, 0.5, 1.0, 1.5, 2.0];
    let num = numeric_two_point_grid(&h, &times, p.n0, p.dt)?;
    let n = |t: f64| boltzmann(p.n0, p.nbar, p.kappa, t);
    let mut err: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        for (j, &tp) in times.iter().enumerate() {
            let want = two_point_oracle(p.omega, p.kappa, n(t), n(tp), t, tp);
            for mu in 0..2 {
                for nu in 0..2 {
                    err = err.max((num.values[i][j][mu][nu] - want[mu][nu]).norm());
                }
            }
        }
    }
    let off = gamma_frame_offdiag(&num, n)?;
    Ok((
        err < 1e-5 && off < 1e-5,
        format!("|numeric - B^-1 G B| = {err:.3e}, gamma-frame off-diagonal {off:.3e} (< 1e-5, 5x5 grid)"),
    ))
}

/// Thermal noise mode as superoperators on a truncated density matrix:
/// `dB → aρ`, `dB† → a†ρ`, `dB̃ → ρa†`, `dB̃† → ρa`.
struct NoiseOracle {
    rho: Array2<C64>,
    a: Array2<C64>,
    ad: Array2<C64>,
}

impl NoiseOracle {
    fn new(nbar: f64) -> Self {
        let levels = 110;
        let f = nbar / (1.0 + nbar);
        let mut rho = Array2::zeros((levels, levels));
        let mut a = Array2::zeros((levels, levels));
        for n in 0..levels {
            rho[[n, n]] = c(f.powi(n as i32) / (1.0 + nbar));
            if n > 0 {
                a[[n - 1, n]] = c((n as f64).sqrt());
            }
        }
        let ad = a.t().to_owned();
        Self { rho, a, ad }
    }

    fn apply(&self, coeffs: &[C64; 4], x: &Array2<C64>) -> Array2<C64> {
        let left = &self.a * coeffs[0] + &self.ad * coeffs[1];
        let right = &self.ad * coeffs[2] + &self.a * coeffs[3];
        left.dot(x) + x.dot(&right)
    }

    fn trace(m: &Array2<C64>) -> C64 {
        m.diag().sum()
    }

    fn product(&self, x: &[C64; 4], y: &[C64; 4]) -> C64 {
        Self::trace(&self.apply(x, &self.apply(y, &self.rho)))
    }
}

fn round_trip(
    drift: &ntfd::thermal::ThermalOperator,
    m: &Martingale,
    table: &ItoTable,
) -> ntfd::Result<f64> {
    let back = ito_to_strat(&strat_to_ito(drift, m, table)?, m, table)?;
    Ok((&back - drift).max_abs())
}

fn criterion_9() -> Outcome {
    let comm = CommutatorTable::new();
    let mut table_err: f64 = 0.0;
    let mut trip: f64 = 0.0;
    let s = TruncatedFockSpace::new(12, 3)?;
    let l = s.ladder();
    for nbar in [0.0, 0.3, 1.0, 2.0] {
        let oracle = NoiseOracle::new(nbar);
        let table = ItoTable::new(nbar)?;
        for nu in [0.0, 0.5, 1.0] {
            let np = NoiseParams::new(nbar, 0.7, nu, 1.1)?;
            for x in IncrementSymbol::ALL {
                for y in IncrementSymbol::ALL {
                    let (ix, iy) = (x.expand(&np), y.expand(&np));
                    let want = oracle.product(&ix.coeffs, &iy.coeffs);
                    table_err = table_err.max((table.product(&ix, &iy) - want).norm());
                    let want_c = want - oracle.product(&iy.coeffs, &ix.coeffs);
                    table_err = table_err.max((comm.commutator(&ix, &iy) - want_c).norm());
                }
            }
            let h = oscillator_hamiltonian(s, 1.0, 0.7, nbar, nu)?;
            let g = gamma_set(&l, nu)?;
            let ps = phase_space_ops(&l, 1.0, 1.1);
            let hk = kramers_hamiltonian(s, 1.0, 1.1, 0.7, nbar)?;
            trip = trip
                .max(round_trip(
                    &h.full(),
                    &oscillator_martingale(&g, &np),
                    &table,
                )?)
                .max(round_trip(
                    &h.full(),
                    &oscillator_unitary_martingale(&g, &np),
                    &table,
                )?)
                .max(round_trip(
                    &hk.full(),
                    &kramers_martingale(&ps, &np),
                    &table,
                )?)
                .max(round_trip(
                    &hk.full(),
                    &kramers_unitary_martingale(&ps, &np),
                    &table,
                )?);
        }
    }
    Ok((
        table_err < 1e-12 && trip < 1e-12,
        format!("table vs explicit noise mode {table_err:.2e}, Ito/Stratonovich round trip {trip:.2e} (< 1e-12)"),
    ))
}

/// RK4 for `(x, p)' = (p/m, −mω²x − κp)` with a fine step.
fn kramers_mean(x0: f64, p0: f64, mass: f64, omega: f64, kappa: f64, t: f64) -> [f64; 2] {
    let n = ((t / 1e-4).round() as usize).max(1);
    let h = t / n as f64;
    let f = |y: [f64; 2]| [y[1] / mass, -mass * omega * omega * y[0] - kappa * y[1]];
    let mut y = [x0, p0];
    for _ in 0..n {
        let k1 = f(y);
        let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let mut z = Vec::new();
    let p = ScenarioParams::oscillator_default();
    for kind in [
        SystemKind::OscillatorNonunitary,
        SystemKind::OscillatorUnitary,
    ] {
        let sp = spec(kind, &p);
        let y0 = Array1::from(vec![ONE]);
        let stats = simulate_vector_sde(&sp, &y0, 10_000, p.seed, p.t_end, p.dt, 200, 0)?;
        z.push(stats.max_z_score(|t| {
            let m = (C64::new(-p.kappa, -p.omega) * t).exp();
            [m.re, m.im]
        }));
    }
    let q = ScenarioParams::kramers_default();
    let (x0, p0) = (1.2, -0.4);
    for (kind, kappa) in [
        (SystemKind::KramersNonunitary, q.kappa),
        (SystemKind::KramersUnitary, 0.0),
    ] {
        let sp = spec(kind, &q);
        let y0 = Array1::from(vec![c(x0), c(p0)]);
        let stats = simulate_vector_sde(&sp, &y0, 10_000, q.seed, q.t_end, q.dt, 1000, 0)?;
        z.push(stats.max_z_score(|t| kramers_mean(x0, p0, q.mass, q.omega, kappa, t)));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        z.iter().all(|&v| v <= 3.0) && secs < 300.0,
        format!(
            "max z-score osc {:.2}, osc-U {:.2}, kramers {:.2}, kramers-U {:.2} (<= 3, 1e4 trajectories); {secs:.1}s (< 300s)",
            z[0], z[1], z[2], z[3]
        ),
    ))
}

/// Criteria whose literal statement is unattainable.
const EXPECTED_FAILURES: [u32; 1] = [4];

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let strict = std::env::var("NTFD_ACCEPTANCE_STRICT")
        .map(|v| v == "1")
        .unwrap_or(false);
    let run = |n: u32| wanted.is_empty() || wanted.contains(&n);

    let grid_start = Instant::now();
    let shared = [1, 6, 7].into_iter().any(run).then(grid);
    if shared.is_some() {
        println!(
            "parameter grid for 1, 6, 7: 36 master runs [{:.1}s]",
            grid_start.elapsed().as_secs_f64()
        );
    }

    let names = [
        "boltzmann regression",
        "commutator dichotomy",
        "fluctuation-dissipation",
        "generator axioms",
        "cross-picture equivalence",
        "condensation solution",
        "entropy production",
        "propagators",
        "ito table oracle",
        "monte-carlo vector sdes",
    ];
    let mut unexpected = Vec::new();
    for n in 1..=10u32 {
        if !run(n) {
            continue;
        }
        let start = Instant::now();
        let outcome = match n {
            1 | 6 | 7 => match shared.as_ref().unwrap() {
                Ok(g) => match n {
                    1 => criterion_1(g),
                    6 => criterion_6(g),
                    _ => criterion_7(g),
                },
                Err(e) => Err(e.clone()),
            },
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let expected_fail = EXPECTED_FAILURES.contains(&n);
        let tag = match (pass, expected_fail) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {n:>2} {:<26} {tag}: {detail} [{secs:.1}s]",
            names[n as usize - 1]
        );
        let bad = if expected_fail {
            pass || strict || (n == 4 && !criterion_4_axioms_hold())
        } else {
            !pass
        };
        if bad {
            unexpected.push(n);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: ok");
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
