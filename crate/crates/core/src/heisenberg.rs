//! Heisenberg-picture solutions of the linear Langevin systems.
//!
//! Each model is a linear operator SDE `dX = D X dt + N dF` for a fixed
//! five-element operator basis `X` (the last element is the identity) driven
//! by the base increments `dF = (dB, dB†, dB̃, dB̃†)`. A process seeded by
//! `vᵀX(0)` is
//!
//! ```text
//! P(t) = c(t)ᵀ X(0) + ∫₀ᵗ g(t − s)ᵀ dF_s,   c(t)ᵀ = vᵀ e^{Dt},  g(τ)ᵀ = c(τ)ᵀ N
//! ```
//!
//! so a process is a coefficient history plus a kernel ledger that depends
//! only on the lag. Integrals `∫₀ᵗ c_P(τ)ᵀ K c_Q(τ) dτ` are evaluated
//! exactly from one block exponential.

use std::fmt::Write as _;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dynamics::{step_count, RK4_STEP_LIMIT};
use crate::error::{Error, Result};
use crate::generators::{phase_space_ops, ModelParams};
use crate::ito::{CommutatorTable, IncrementSymbol, ItoTable};
use crate::linalg::{expm, norm1};
use crate::thermal::{ThermalBra, ThermalKet, ThermalOperator, TruncatedFockSpace, I, ONE, ZERO};
use crate::C64;

pub const BASIS: usize = 5;
pub const NOISE: usize = 4;

pub const NOISE_SYMBOLS: [IncrementSymbol; NOISE] = [
    IncrementSymbol::DB,
    IncrementSymbol::DBDag,
    IncrementSymbol::DBTilde,
    IncrementSymbol::DBTildeDag,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    OscillatorNonunitary,
    OscillatorUnitary,
    KramersNonunitary,
    KramersUnitary,
    AveragedReference,
}

impl SystemKind {
    pub fn is_kramers(&self) -> bool {
        matches!(self, Self::KramersNonunitary | Self::KramersUnitary)
    }

    pub fn basis_names(&self) -> [&'static str; BASIS] {
        if self.is_kramers() {
            ["x", "p", "x~", "p~", "1"]
        } else {
            ["a", "a~†", "a†", "a~", "1"]
        }
    }
}

impl std::str::FromStr for SystemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "oscillator-nonunitary" => Self::OscillatorNonunitary,
            "oscillator-unitary" => Self::OscillatorUnitary,
            "kramers-nonunitary" => Self::KramersNonunitary,
            "kramers-unitary" => Self::KramersUnitary,
            "averaged-reference" => Self::AveragedReference,
            other => {
                return Err(Error::InvalidParameter {
                    name: "kind",
                    reason: format!("unknown system kind `{other}`"),
                })
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub params: ModelParams,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl SystemSpec {
    pub fn new(kind: SystemKind, params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { kind, params })
    }

    /// Drift matrix `D` of `dX = D X dt + N dF`.
    pub fn drift(&self) -> Array2<C64> {
        let ModelParams {
            omega: w,
            kappa: k,
            nu,
            mass: m,
            ..
        } = self.params;
        let mu = 1.0 - nu;
        let mut d = Array2::<C64>::zeros((BASIS, BASIS));
        match self.kind {
            SystemKind::OscillatorNonunitary => {
                let lam = k * (mu - nu);
                d[[0, 0]] = c(-lam, -w);
                d[[0, 1]] = c(-2.0 * k * nu, 0.0);
                d[[1, 0]] = c(-2.0 * k * mu, 0.0);
                d[[1, 1]] = c(lam, -w);
                d[[2, 2]] = c(lam, w);
                d[[2, 3]] = c(-2.0 * k * mu, 0.0);
                d[[3, 2]] = c(-2.0 * k * nu, 0.0);
                d[[3, 3]] = c(-lam, w);
            }
            SystemKind::OscillatorUnitary | SystemKind::AveragedReference => {
                d[[0, 0]] = c(-k, -w);
                d[[1, 1]] = c(-k, -w);
                d[[2, 2]] = c(-k, w);
                d[[3, 3]] = c(-k, w);
            }
            SystemKind::KramersNonunitary => {
                let h = 0.5 * k;
                d[[0, 0]] = c(h, 0.0);
                d[[0, 1]] = c(1.0 / m, 0.0);
                d[[0, 2]] = c(-h, 0.0);
                d[[1, 0]] = c(-m * w * w, 0.0);
                d[[1, 1]] = c(-h, 0.0);
                d[[1, 3]] = c(-h, 0.0);
                d[[2, 0]] = c(-h, 0.0);
                d[[2, 2]] = c(h, 0.0);
                d[[2, 3]] = c(1.0 / m, 0.0);
                d[[3, 1]] = c(-h, 0.0);
                d[[3, 2]] = c(-m * w * w, 0.0);
                d[[3, 3]] = c(-h, 0.0);
            }
            SystemKind::KramersUnitary => {
                d[[0, 1]] = c(1.0 / m, 0.0);
                d[[1, 0]] = c(-m * w * w, 0.0);
                d[[2, 3]] = c(1.0 / m, 0.0);
                d[[3, 2]] = c(-m * w * w, 0.0);
            }
        }
        d
    }

    /// Noise injection `N` (rows: basis, columns: `dB, dB†, dB̃, dB̃†`).
    pub fn noise(&self) -> Array2<C64> {
        let ModelParams {
            omega: w,
            kappa: k,
            nu,
            mass: m,
            ..
        } = self.params;
        let mu = 1.0 - nu;
        let s = (2.0 * k).sqrt();
        let x = (k * m * w).sqrt() / 2.0;
        let mut n = Array2::<C64>::zeros((BASIS, NOISE));
        match self.kind {
            SystemKind::OscillatorNonunitary => {
                // dW on a and ã†, dW̃ on a† and ã
                for r in [0, 1] {
                    n[[r, 0]] = c(s * mu, 0.0);
                    n[[r, 3]] = c(s * nu, 0.0);
                }
                for r in [2, 3] {
                    n[[r, 1]] = c(s * nu, 0.0);
                    n[[r, 2]] = c(s * mu, 0.0);
                }
            }
            SystemKind::OscillatorUnitary => {
                n[[0, 0]] = c(s, 0.0);
                n[[1, 3]] = c(s, 0.0);
                n[[2, 1]] = c(s, 0.0);
                n[[3, 2]] = c(s, 0.0);
            }
            SystemKind::KramersNonunitary => {
                // −(dX + dX̃) on both momenta
                for r in [1, 3] {
                    for col in 0..NOISE {
                        n[[r, col]] = c(-x, 0.0);
                    }
                }
            }
            SystemKind::KramersUnitary => {
                n[[1, 0]] = c(-x, 0.0);
                n[[1, 1]] = c(-x, 0.0);
                n[[3, 2]] = c(-x, 0.0);
                n[[3, 3]] = c(-x, 0.0);
            }
            SystemKind::AveragedReference => {}
        }
        n
    }

    /// Equal-time c-number commutators `[X_i, X_j]` of the basis.
    pub fn basis_commutators(&self) -> Array2<C64> {
        let mut o = Array2::<C64>::zeros((BASIS, BASIS));
        if self.kind.is_kramers() {
            o[[0, 1]] = I;
            o[[1, 0]] = -I;
            o[[2, 3]] = -I;
            o[[3, 2]] = I;
        } else {
            o[[0, 2]] = ONE;
            o[[2, 0]] = -ONE;
            o[[1, 3]] = -ONE;
            o[[3, 1]] = ONE;
        }
        o
    }

    /// Basis operators on a truncated thermal space.
    pub fn basis_operators(&self, space: TruncatedFockSpace) -> Vec<ThermalOperator> {
        let l = space.ladder();
        if self.kind.is_kramers() {
            let ps = phase_space_ops(&l, self.params.mass, self.params.omega);
            vec![ps.x, ps.p, ps.xt, ps.pt, space.identity()]
        } else {
            vec![l.a, l.at_dag, l.a_dag, l.at, space.identity()]
        }
    }

    pub fn noise_params(&self) -> crate::ito::NoiseParams {
        crate::ito::NoiseParams {
            nbar: self.params.nbar,
            kappa: self.params.kappa,
            nu: self.params.nu,
            m_omega: self.params.mass * self.params.omega,
        }
    }
}

/// Seed operators, expressed in the basis of the chosen kind.
pub fn seed_vector(kind: SystemKind, name: &str, nbar: f64) -> Result<Array1<C64>> {
    let idx = kind.basis_names().iter().position(|b| *b == name);
    let mut v = Array1::<C64>::zeros(BASIS);
    match (idx, name) {
        (Some(i), _) => v[i] = ONE,
        // diagonal doublet d = (1+n̄)a − n̄ã†
        (None, "d") if !kind.is_kramers() => {
            v[0] = c(1.0 + nbar, 0.0);
            v[1] = c(-nbar, 0.0);
        }
        _ => {
            return Err(Error::InvalidParameter {
                name: "seed",
                reason: format!("`{name}` is not a basis operator of {kind:?}"),
            })
        }
    }
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct LinearProcess {
    pub spec: SystemSpec,
    pub seed: Array1<C64>,
    pub dt: f64,
    pub times: Vec<f64>,
    /// Row `k` holds `c(t_k)`.
    pub coeffs: Array2<C64>,
    /// Row `k` holds the kernels `g(t_k)` on `dB, dB†, dB̃, dB̃†`.
    pub kernels: Array2<C64>,
}

impl LinearProcess {
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if k < 0.0
            || (k * self.dt - t).abs() > 1e-9 * t.abs().max(1.0)
            || k as usize >= self.times.len()
        {
            return Err(Error::OffGrid(t));
        }
        Ok(k as usize)
    }

    pub fn coeff_at(&self, t: f64) -> Result<Array1<C64>> {
        Ok(self.coeffs.row(self.grid_index(t)?).to_owned())
    }

    /// Kernel ledger as `(symbol, values on the lag grid)`.
    pub fn ledger(&self) -> Vec<(IncrementSymbol, Vec<C64>)> {
        NOISE_SYMBOLS
            .iter()
            .enumerate()
            .map(|(k, s)| (*s, self.kernels.column(k).to_vec()))
            .filter(|(_, v)| v.iter().any(|z| *z != ZERO))
            .collect()
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec || self.dt != other.dt || self.times.len() != other.times.len() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Solve the drift for `seed` on the grid `0, dt, …, t_end`.
pub fn evolve_process(
    spec: &SystemSpec,
    seed: &Array1<C64>,
    t_end: f64,
    dt: f64,
) -> Result<LinearProcess> {
    if seed.len() != BASIS {
        return Err(Error::ShapeMismatch(format!(
            "seed of length {}",
            seed.len()
        )));
    }
    let steps = step_count(t_end, dt)?;
    let d = spec.drift();
    let bound = norm1(&d) * dt;
    if bound > RK4_STEP_LIMIT {
        return Err(Error::StepTooLarge(bound));
    }
    let n = spec.noise();
    let mut coeffs = Array2::<C64>::zeros((steps + 1, BASIS));
    let mut kernels = Array2::<C64>::zeros((steps + 1, NOISE));
    let mut times = Vec::with_capacity(steps + 1);
    let dtrans = d.t().to_owned();
    for k in 0..=steps {
        let t = k as f64 * dt;
        // c(t) = e^{Dᵀt} v
        let ct = expm(&dtrans.mapv(|z| z * t)).dot(seed);
        let g = n.t().dot(&ct);
        coeffs.row_mut(k).assign(&ct);
        kernels.row_mut(k).assign(&g);
        times.push(t);
    }
    Ok(LinearProcess {
        spec: *spec,
        seed: seed.clone(),
        dt,
        times,
        coeffs,
        kernels,
    })
}

/// `∫₀ᵗ e^{Dτ} K e^{Dᵀτ} dτ` from the block exponential of
/// `[[D, K], [0, −Dᵀ]]`.
pub fn gramian(d: &Array2<C64>, k: &Array2<C64>, t: f64) -> Array2<C64> {
    let n = d.nrows();
    let mut big = Array2::<C64>::zeros((2 * n, 2 * n));
    big.slice_mut(s![..n, ..n]).assign(d);
    big.slice_mut(s![..n, n..]).assign(k);
    big.slice_mut(s![n.., n..]).assign(&d.t().mapv(|z| -z));
    let e = expm(&big.mapv(|z| z * t));
    let f = e.slice(s![..n, n..]).to_owned();
    let edt = expm(&d.t().mapv(|z| z * t));
    f.dot(&edt)
}

fn base_matrix(t: &[[C64; 4]; 4]) -> Array2<C64> {
    Array2::from_shape_fn((NOISE, NOISE), |(i, j)| t[i][j])
}

/// Exact `∫₀ᵗ g_P(τ)ᵀ X g_Q(τ) dτ` with `X` the base increment table.
fn kernel_integral(p: &LinearProcess, q: &LinearProcess, table: &Array2<C64>, t: f64) -> C64 {
    let d = p.spec.drift();
    let n = p.spec.noise();
    let k = n.dot(table).dot(&n.t());
    let w = gramian(&d, &k, t);
    p.seed.dot(&w.dot(&q.seed))
}

/// Trapezoidal `∫₀ᵗ g_P(τ)ᵀ X g_Q(τ) dτ` from the stored kernel ledgers.
pub fn kernel_integral_trapezoid(
    p: &LinearProcess,
    q: &LinearProcess,
    table: &Array2<C64>,
    t: f64,
) -> Result<C64> {
    p.same_grid(q)?;
    let kt = p.grid_index(t)?;
    let f = |k: usize| p.kernels.row(k).dot(&table.dot(&q.kernels.row(k)));
    let mut acc = ZERO;
    for k in 0..kt {
        acc += 0.5 * (f(k) + f(k + 1)) * p.dt;
    }
    Ok(acc)
}

/// Base commutator table as a matrix.
pub fn commutator_matrix() -> Array2<C64> {
    base_matrix(&CommutatorTable::new().base)
}

/// Base weak-product table as a matrix.
pub fn ito_matrix(nbar: f64) -> Result<Array2<C64>> {
    Ok(base_matrix(&ItoTable::new(nbar)?.base))
}

/// Noise part `∫₀ᵗ g_P(τ)ᵀ Ξ g_Q(τ) dτ` of the equal-time commutator.
pub fn noise_commutator(p: &LinearProcess, q: &LinearProcess, t: f64) -> Result<C64> {
    p.same_grid(q)?;
    p.grid_index(t)?;
    Ok(kernel_integral(p, q, &commutator_matrix(), t))
}

/// `[P(t), Q(t)]`: drift part from the basis commutators plus the noise
/// part from the increment commutators.
pub fn equal_time_commutator(p: &LinearProcess, q: &LinearProcess, t: f64) -> Result<C64> {
    p.same_grid(q)?;
    let k = p.grid_index(t)?;
    let cp = p.coeffs.row(k);
    let cq = q.coeffs.row(k);
    let drift = cp.dot(&p.spec.basis_commutators().dot(&cq));
    Ok(drift + kernel_integral(p, q, &commutator_matrix(), t))
}

/// Expectations `⟨bra|X_i X_j|ket⟩` and `⟨bra|X_i|ket⟩` of the basis.
#[derive(Clone, Debug)]
pub struct BasisMoments {
    pub spec: SystemSpec,
    pub first: Array1<C64>,
    pub second: Array2<C64>,
    ito: Array2<C64>,
}

impl BasisMoments {
    pub fn new(spec: &SystemSpec, bra: &ThermalBra, ket: &ThermalKet) -> Result<Self> {
        let ops = spec.basis_operators(ket.space());
        let mut first = Array1::<C64>::zeros(BASIS);
        let mut second = Array2::<C64>::zeros((BASIS, BASIS));
        for i in 0..BASIS {
            let oi_ket = ops[i].apply(ket)?;
            first[i] = bra.contract(&oi_ket)?;
            for j in 0..BASIS {
                let left = ops[i].apply_left(bra)?;
                second[[i, j]] = left.contract(&ops[j].apply(ket)?)?;
            }
        }
        Ok(Self {
            spec: *spec,
            first,
            second,
            ito: ito_matrix(spec.params.nbar)?,
        })
    }

    /// `⟨⟨P(t)⟩⟩` or `⟨⟨P(t) Q(t)⟩⟩`. Mixed basis–noise terms vanish because
    /// increments have zero vacuum mean.
    pub fn weak_moment(&self, products: &[&LinearProcess], t: f64) -> Result<C64> {
        for p in products {
            if p.spec != self.spec {
                return Err(Error::ParameterMismatch("process/moment spec".into()));
            }
        }
        match products {
            [p] => Ok(p.coeff_at(t)?.dot(&self.first)),
            [p, q] => {
                p.same_grid(q)?;
                let cp = p.coeff_at(t)?;
                let cq = q.coeff_at(t)?;
                Ok(cp.dot(&self.second.dot(&cq)) + kernel_integral(p, q, &self.ito, t))
            }
            _ => Err(Error::UnsupportedProduct(format!(
                "{} factors; only first and second moments are supported",
                products.len()
            ))),
        }
    }
}

/// One-shot weak moment with thermal bra `bra` and state `ket`.
pub fn weak_moment(
    products: &[&LinearProcess],
    t: f64,
    bra: &ThermalBra,
    ket: &ThermalKet,
) -> Result<C64> {
    let spec = products
        .first()
        .ok_or_else(|| Error::UnsupportedProduct("empty product".into()))?
        .spec;
    BasisMoments::new(&spec, bra, ket)?.weak_moment(products, t)
}

/// `t, Re/Im c_i, commutator` rows for a process and its partner.
pub fn process_csv(p: &LinearProcess, partner: &LinearProcess) -> Result<String> {
    let names = p.spec.kind.basis_names();
    let mut out = String::from("t");
    for n in names {
        let n = n.replace('†', "dag").replace('~', "t");
        let _ = write!(out, ",re_{n},im_{n}");
    }
    out.push_str(",re_comm,im_comm\n");
    for (k, &t) in p.times.iter().enumerate() {
        let _ = write!(out, "{t:.16e}");
        for z in p.coeffs.row(k) {
            let _ = write!(out, ",{:.16e},{:.16e}", z.re, z.im);
        }
        let cm = equal_time_commutator(p, partner, t)?;
        let _ = writeln!(out, ",{:.16e},{:.16e}", cm.re, cm.im);
    }
    Ok(out)
}
