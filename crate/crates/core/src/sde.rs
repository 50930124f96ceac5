//! Monte-Carlo integration of the c-number vector-state equations.
//!
//! Projecting a stochastic Liouville equation onto `⟨1|` leaves linear SDEs
//! for the expectation vector, driven by the classical shadows of the
//! bra-side increments. Those commute pairwise, so they can be sampled as
//! correlated Gaussians.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::step_count;
use crate::error::{Error, Result};
use crate::heisenberg::{SystemKind, SystemSpec};
use crate::ito::{draw, sampling_factor, IncrementSymbol};
use crate::linalg::expm;
use crate::thermal::{I, ZERO};
use crate::C64;

/// Trajectories summed per work unit; fixed so that sums do not depend on
/// the thread count.
const CHUNK: usize = 64;

/// `dy = A y dt + Σ_j b_j dξ_j`.
#[derive(Clone, Debug)]
pub struct VectorSde {
    pub kind: SystemKind,
    pub names: Vec<&'static str>,
    pub drift: Array2<C64>,
    /// Column `j` multiplies increment `symbols[j]`.
    pub noise: Array2<C64>,
    pub symbols: Vec<IncrementSymbol>,
}

pub fn vector_sde(spec: &SystemSpec) -> VectorSde {
    let p = spec.params;
    let (w, k, m) = (p.omega, p.kappa, p.mass);
    let c = |re: f64, im: f64| C64::new(re, im);
    match spec.kind {
        SystemKind::OscillatorNonunitary
        | SystemKind::OscillatorUnitary
        | SystemKind::AveragedReference => {
            let s = (2.0 * k).sqrt();
            let b = match spec.kind {
                SystemKind::OscillatorNonunitary => I * s,
                SystemKind::OscillatorUnitary => c(s, 0.0),
                _ => ZERO,
            };
            let symbols = if b == ZERO {
                vec![]
            } else {
                vec![IncrementSymbol::DB]
            };
            let noise = Array2::from_shape_vec(
                (1, symbols.len()),
                if b == ZERO { vec![] } else { vec![b] },
            )
            .unwrap();
            VectorSde {
                kind: spec.kind,
                names: vec!["a"],
                drift: Array2::from_elem((1, 1), c(-k, -w)),
                noise,
                symbols,
            }
        }
        SystemKind::KramersNonunitary | SystemKind::KramersUnitary => {
            let unitary = spec.kind == SystemKind::KramersUnitary;
            let mut drift = Array2::<C64>::zeros((2, 2));
            drift[[0, 1]] = c(1.0 / m, 0.0);
            drift[[1, 0]] = c(-m * w * w, 0.0);
            if !unitary {
                drift[[1, 1]] = c(-k, 0.0);
            }
            let mut noise = Array2::<C64>::zeros((2, 1));
            noise[[1, 0]] = c(if unitary { -1.0 } else { -2.0 }, 0.0);
            VectorSde {
                kind: spec.kind,
                names: vec!["x", "p"],
                drift,
                noise,
                symbols: vec![IncrementSymbol::DX],
            }
        }
    }
}

impl VectorSde {
    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    /// Real observables recorded per trajectory.
    pub fn observable_names(&self) -> Vec<String> {
        if self.kind.is_kramers() {
            vec!["x".into(), "p".into()]
        } else {
            vec!["re_a".into(), "im_a".into()]
        }
    }

    fn observables(&self, y: &[C64]) -> [f64; 2] {
        if self.kind.is_kramers() {
            [y[0].re, y[1].re]
        } else {
            [y[0].re, y[0].im]
        }
    }

    /// Solution `e^{At} y0` of the mean equation.
    pub fn mean_ode(&self, y0: &Array1<C64>, t: f64) -> Array1<C64> {
        expm(&self.drift.mapv(|z| z * t)).dot(y0)
    }

    pub fn mean_observables(&self, y0: &Array1<C64>, t: f64) -> [f64; 2] {
        self.observables(self.mean_ode(y0, t).as_slice().unwrap())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleStats {
    pub kind: SystemKind,
    pub ensemble: usize,
    pub seed: u64,
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `mean[k][j]`: observable `j` at `times[k]`.
    pub mean: Vec<[f64; 2]>,
    pub stderr: Vec<[f64; 2]>,
    /// A few complete trajectories, for plotting.
    pub samples: Vec<Vec<[f64; 2]>>,
}

impl EnsembleStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.names {
            let _ = write!(out, ",mean_{n},stderr_{n}");
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:.16e}");
            for j in 0..2 {
                let _ = write!(out, ",{:.16e},{:.16e}", self.mean[k][j], self.stderr[k][j]);
            }
            out.push('\n');
        }
        out
    }

    /// Largest `|mean − oracle| / stderr` over the recorded times, with the
    /// absolute deviation used where the ensemble has no spread.
    pub fn max_z_score(&self, oracle: impl Fn(f64) -> [f64; 2]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &t) in self.times.iter().enumerate() {
            let want = oracle(t);
            for j in 0..2 {
                let dev = (self.mean[k][j] - want[j]).abs();
                let se = self.stderr[k][j];
                let z = if se > 0.0 {
                    dev / se
                } else if dev < 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

struct Partial {
    sum: Vec<[f64; 2]>,
    sum_sq: Vec<[f64; 2]>,
    samples: Vec<Vec<[f64; 2]>>,
}

/// Euler–Maruyama ensemble. Trajectory `i` draws from stream `i` of a
/// ChaCha8 generator seeded with `seed`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_vector_sde(
    spec: &SystemSpec,
    y0: &Array1<C64>,
    ensemble: usize,
    seed: u64,
    t_end: f64,
    dt: f64,
    record_every: usize,
    keep_samples: usize,
) -> Result<EnsembleStats> {
    let sde = vector_sde(spec);
    if y0.len() != sde.dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial vector of length {} for dimension {}",
            y0.len(),
            sde.dim()
        )));
    }
    if ensemble == 0 {
        return Err(Error::InvalidParameter {
            name: "ensemble",
            reason: "must be positive".into(),
        });
    }
    let steps = step_count(t_end, dt)?;
    let every = record_every.max(1);
    let records: Vec<usize> = (0..=steps)
        .filter(|k| k % every == 0 || *k == steps)
        .collect();
    let factor = if sde.symbols.is_empty() {
        None
    } else {
        Some(sampling_factor(&sde.symbols, &spec.noise_params())?)
    };
    let d = sde.dim();
    let nrec = records.len();

    let run = |traj: usize| -> Vec<[f64; 2]> {
        let incs = factor.as_ref().map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(traj as u64);
            draw(f, dt, steps, &mut rng)
        });
        let mut y: Vec<C64> = y0.to_vec();
        let mut next = vec![ZERO; d];
        let mut out = Vec::with_capacity(nrec);
        let mut r = 0;
        for k in 0..=steps {
            if r < nrec && records[r] == k {
                out.push(sde.observables(&y));
                r += 1;
            }
            if k == steps {
                break;
            }
            for i in 0..d {
                let mut acc = ZERO;
                for j in 0..d {
                    acc += sde.drift[[i, j]] * y[j];
                }
                let mut dz = acc * dt;
                if let Some(inc) = &incs {
                    for s in 0..sde.symbols.len() {
                        dz += sde.noise[[i, s]] * inc[[k, s]];
                    }
                }
                next[i] = y[i] + dz;
            }
            y.copy_from_slice(&next);
        }
        out
    };

    let chunks: Vec<usize> = (0..ensemble).step_by(CHUNK).collect();
    let partials: Vec<Partial> = chunks
        .par_iter()
        .map(|&start| {
            let mut p = Partial {
                sum: vec![[0.0; 2]; nrec],
                sum_sq: vec![[0.0; 2]; nrec],
                samples: Vec::new(),
            };
            for traj in start..(start + CHUNK).min(ensemble) {
                let path = run(traj);
                for (k, v) in path.iter().enumerate() {
                    for j in 0..2 {
                        p.sum[k][j] += v[j];
                        p.sum_sq[k][j] += v[j] * v[j];
                    }
                }
                if traj < keep_samples {
                    p.samples.push(path);
                }
            }
            p
        })
        .collect();

    let mut sum = vec![[0.0; 2]; nrec];
    let mut sum_sq = vec![[0.0; 2]; nrec];
    let mut samples = Vec::new();
    for p in partials {
        for k in 0..nrec {
            for j in 0..2 {
                sum[k][j] += p.sum[k][j];
                sum_sq[k][j] += p.sum_sq[k][j];
            }
        }
        samples.extend(p.samples);
    }
    let n = ensemble as f64;
    let mut mean = Vec::with_capacity(nrec);
    let mut stderr = Vec::with_capacity(nrec);
    for k in 0..nrec {
        let mut m = [0.0; 2];
        let mut se = [0.0; 2];
        for j in 0..2 {
            m[j] = sum[k][j] / n;
            let var = if ensemble > 1 {
                ((sum_sq[k][j] - n * m[j] * m[j]) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            se[j] = (var / n).sqrt();
        }
        mean.push(m);
        stderr.push(se);
    }
    Ok(EnsembleStats {
        kind: spec.kind,
        ensemble,
        seed,
        names: sde.observable_names(),
        times: records.iter().map(|&k| k as f64 * dt).collect(),
        mean,
        stderr,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::ModelParams;

    fn spec(kind: SystemKind, kappa: f64) -> SystemSpec {
        SystemSpec::new(
            kind,
            ModelParams {
                omega: 1.0,
                kappa,
                nbar: 1.0,
                nu: 0.5,
                mass: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn no_dissipation_is_deterministic() {
        let sp = spec(SystemKind::OscillatorNonunitary, 0.0);
        let y0 = Array1::from(vec![C64::new(1.0, 0.0)]);
        let st = simulate_vector_sde(&sp, &y0, 8, 1, 1.0, 1e-3, 100, 8).unwrap();
        for path in &st.samples {
            let (a, b) = (path.last().unwrap(), st.mean.last().unwrap());
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
        }
        assert!(st.stderr.iter().all(|s| s[0] < 1e-7 && s[1] < 1e-7));
        let want = vector_sde(&sp).mean_observables(&y0, 1.0);
        // Euler drift error only
        assert!((st.mean.last().unwrap()[0] - want[0]).abs() < 1e-3);
    }

    #[test]
    fn oscillator_mean_decay() {
        let sp = spec(SystemKind::OscillatorNonunitary, 0.5);
        let y0 = Array1::from(vec![C64::new(1.0, 0.0)]);
        let st = simulate_vector_sde(&sp, &y0, 10_000, 7, 2.0, 1e-3, 1000, 0).unwrap();
        let m = st.mean.last().unwrap();
        let got = (m[0] * m[0] + m[1] * m[1]).sqrt();
        let want = (-1.0f64).exp();
        assert!((got - want).abs() / want < 5e-2, "{got} vs {want}");
    }

    #[test]
    fn thread_count_independent() {
        let sp = spec(SystemKind::KramersNonunitary, 0.2);
        let y0 = Array1::from(vec![C64::new(1.0, 0.0), ZERO]);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| simulate_vector_sde(&sp, &y0, 300, 3, 1.0, 1e-2, 10, 0).unwrap());
        let b = four.install(|| simulate_vector_sde(&sp, &y0, 300, 3, 1.0, 1e-2, 10, 0).unwrap());
        assert_eq!(a.to_csv(), b.to_csv());
    }
}
