//! Quantum stochastic calculus for thermal Brownian increments.
//!
//! Every increment is a linear combination of the four base increments
//! `dB, dB†, dB̃, dB̃†`. Products are weak relations: their values inside the
//! noise-vacuum expectation, in units of `dt`. They follow from writing the
//! base increments through the thermal partners
//!
//! ```text
//! dB  = C + n̄ C̃⁺        dB† = (1+n̄) C⁺ + C̃
//! dB̃  = n̄ C⁺ + C̃        dB̃† = C + (1+n̄) C̃⁺
//! ```
//!
//! where `C, C̃` annihilate the ket vacuum, `C⁺, C̃⁺` annihilate the bra
//! vacuum and the only non-zero contractions are `⟨C C⁺⟩ = ⟨C̃ C̃⁺⟩ = 1`.
//! Products of three or more increments are `o(dt)` and vanish.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::psd_cholesky;
use crate::thermal::{ThermalOperator, I, ZERO};
use crate::C64;

/// Parameters fixing the composite increments and the noise temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub nbar: f64,
    pub kappa: f64,
    pub nu: f64,
    /// Product `m ω` entering `dX`.
    pub m_omega: f64,
}

impl NoiseParams {
    pub fn new(nbar: f64, kappa: f64, nu: f64, m_omega: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::NegativeOccupation(nbar));
        }
        if !(kappa >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: "must be >= 0".into(),
            });
        }
        crate::generators::check_nu(nu)?;
        Ok(Self {
            nbar,
            kappa,
            nu,
            m_omega,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IncrementSymbol {
    DB,
    DBDag,
    DBTilde,
    DBTildeDag,
    DW,
    DWTilde,
    DWPlus,
    DWTildePlus,
    DX,
    DXTilde,
}

impl IncrementSymbol {
    pub const ALL: [IncrementSymbol; 10] = [
        Self::DB,
        Self::DBDag,
        Self::DBTilde,
        Self::DBTildeDag,
        Self::DW,
        Self::DWTilde,
        Self::DWPlus,
        Self::DWTildePlus,
        Self::DX,
        Self::DXTilde,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::DB => "dB",
            Self::DBDag => "dB†",
            Self::DBTilde => "dB~",
            Self::DBTildeDag => "dB~†",
            Self::DW => "dW",
            Self::DWTilde => "dW~",
            Self::DWPlus => "dW+",
            Self::DWTildePlus => "dW~+",
            Self::DX => "dX",
            Self::DXTilde => "dX~",
        }
    }

    pub fn tilde(&self) -> Self {
        match self {
            Self::DB => Self::DBTilde,
            Self::DBTilde => Self::DB,
            Self::DBDag => Self::DBTildeDag,
            Self::DBTildeDag => Self::DBDag,
            Self::DW => Self::DWTilde,
            Self::DWTilde => Self::DW,
            Self::DWPlus => Self::DWTildePlus,
            Self::DWTildePlus => Self::DWPlus,
            Self::DX => Self::DXTilde,
            Self::DXTilde => Self::DX,
        }
    }

    /// Expansion over the base increments.
    pub fn expand(&self, p: &NoiseParams) -> Increment {
        let s = (2.0 * p.kappa).sqrt();
        let x = (p.kappa * p.m_omega).sqrt() / 2.0;
        let mu = 1.0 - p.nu;
        let r = |v: f64| C64::new(v, 0.0);
        let c = match self {
            Self::DB => [r(1.0), ZERO, ZERO, ZERO],
            Self::DBDag => [ZERO, r(1.0), ZERO, ZERO],
            Self::DBTilde => [ZERO, ZERO, r(1.0), ZERO],
            Self::DBTildeDag => [ZERO, ZERO, ZERO, r(1.0)],
            Self::DW => [r(s * mu), ZERO, ZERO, r(s * p.nu)],
            Self::DWTilde => [ZERO, r(s * p.nu), r(s * mu), ZERO],
            Self::DWPlus => [ZERO, r(s), r(-s), ZERO],
            Self::DWTildePlus => [r(-s), ZERO, ZERO, r(s)],
            Self::DX => [r(x), r(x), ZERO, ZERO],
            Self::DXTilde => [ZERO, ZERO, r(x), r(x)],
        };
        Increment { coeffs: c }
    }
}

impl fmt::Display for IncrementSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IncrementSymbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .replace('†', "dag")
            .replace('̃', "~")
            .replace("tilde", "~")
            .replace('°', "")
            .replace("plus", "+");
        Ok(match key.as_str() {
            "dB" => Self::DB,
            "dBdag" => Self::DBDag,
            "dB~" | "dBt" => Self::DBTilde,
            "dB~dag" | "dBtdag" => Self::DBTildeDag,
            "dW" => Self::DW,
            "dW~" | "dWt" => Self::DWTilde,
            "dW+" => Self::DWPlus,
            "dW~+" | "dWt+" => Self::DWTildePlus,
            "dX" => Self::DX,
            "dX~" | "dXt" => Self::DXTilde,
            _ => return Err(Error::UnknownSymbol(s.to_string())),
        })
    }
}

/// Linear combination of `dB, dB†, dB̃, dB̃†` (each of order `dt^{1/2}`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    pub coeffs: [C64; 4],
}

impl Increment {
    pub fn zero() -> Self {
        Self { coeffs: [ZERO; 4] }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            coeffs: self.coeffs.map(|v| v * c),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut c = self.coeffs;
        for (a, b) in c.iter_mut().zip(other.coeffs.iter()) {
            *a += b;
        }
        Self { coeffs: c }
    }

    /// Swap tilde and non-tilde, conjugating coefficients.
    pub fn tilde(&self) -> Self {
        let c = self.coeffs.map(|v| v.conj());
        Self {
            coeffs: [c[2], c[3], c[0], c[1]],
        }
    }

    /// Hermitian adjoint: `dB ↔ dB†`, `dB̃ ↔ dB̃†`, conjugating coefficients.
    pub fn adjoint(&self) -> Self {
        let c = self.coeffs.map(|v| v.conj());
        Self {
            coeffs: [c[1], c[0], c[3], c[2]],
        }
    }

    /// Components on the thermal partners: annihilation part `(C, C̃)` and
    /// creation part `(C⁺, C̃⁺)`.
    pub fn partners(&self, nbar: f64) -> ([C64; 2], [C64; 2]) {
        let [b, bd, bt, btd] = self.coeffs;
        let ann = [b + btd, bd + bt];
        let cre = [bd * (1.0 + nbar) + bt * nbar, b * nbar + btd * (1.0 + nbar)];
        (ann, cre)
    }
}

/// Weak products of the base increments, coefficient of `dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItoTable {
    pub nbar: f64,
    pub base: [[C64; 4]; 4],
}

fn contract(x: &Increment, y: &Increment, nbar: f64) -> C64 {
    let (ann, _) = x.partners(nbar);
    let (_, cre) = y.partners(nbar);
    ann[0] * cre[0] + ann[1] * cre[1]
}

fn unit(i: usize) -> Increment {
    let mut c = [ZERO; 4];
    c[i] = C64::new(1.0, 0.0);
    Increment { coeffs: c }
}

impl ItoTable {
    pub fn new(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::NegativeOccupation(nbar));
        }
        let mut base = [[ZERO; 4]; 4];
        for (i, row) in base.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = contract(&unit(i), &unit(j), nbar);
            }
        }
        Ok(Self { nbar, base })
    }

    /// `x·y / dt` by bilinear expansion.
    pub fn product(&self, x: &Increment, y: &Increment) -> C64 {
        let mut acc = ZERO;
        for i in 0..4 {
            for j in 0..4 {
                acc += x.coeffs[i] * y.coeffs[j] * self.base[i][j];
            }
        }
        acc
    }

    /// Product of an arbitrary number of increments: only pairs survive.
    pub fn product_n(&self, factors: &[Increment]) -> Option<C64> {
        match factors.len() {
            0 | 1 => None,
            2 => Some(self.product(&factors[0], &factors[1])),
            _ => Some(ZERO),
        }
    }
}

/// Commutators of the base increments, coefficient of `dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorTable {
    pub base: [[C64; 4]; 4],
}

impl CommutatorTable {
    pub fn new() -> Self {
        let t = ItoTable::new(0.0).expect("n̄ = 0 is valid");
        let mut base = [[ZERO; 4]; 4];
        for (i, row) in base.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = t.base[i][j] - t.base[j][i];
            }
        }
        Self { base }
    }

    pub fn commutator(&self, x: &Increment, y: &Increment) -> C64 {
        let mut acc = ZERO;
        for i in 0..4 {
            for j in 0..4 {
                acc += x.coeffs[i] * y.coeffs[j] * self.base[i][j];
            }
        }
        acc
    }
}

impl Default for CommutatorTable {
    fn default() -> Self {
        Self::new()
    }
}

/// `x·y / dt` for named increments.
pub fn ito_product(x: IncrementSymbol, y: IncrementSymbol, p: &NoiseParams) -> Result<C64> {
    Ok(ItoTable::new(p.nbar)?.product(&x.expand(p), &y.expand(p)))
}

/// Same as [`ito_product`] but from textual names.
pub fn ito_product_named(x: &str, y: &str, p: &NoiseParams) -> Result<C64> {
    ito_product(x.parse()?, y.parse()?, p)
}

/// `[x, y] / dt` for named increments.
pub fn increment_commutator(x: IncrementSymbol, y: IncrementSymbol, p: &NoiseParams) -> C64 {
    CommutatorTable::new().commutator(&x.expand(p), &y.expand(p))
}

/// One term `A · (Σ dF)` of a martingale; the term must be linear in the
/// increments.
#[derive(Clone, Debug)]
pub struct MartingaleTerm {
    pub op: ThermalOperator,
    pub increments: Vec<Increment>,
}

/// `dM = Σ_k A_k dF_k` with system operators `A_k` and increments `dF_k`.
/// System operators commute with the increments.
#[derive(Clone, Debug, Default)]
pub struct Martingale {
    pub terms: Vec<MartingaleTerm>,
}

impl Martingale {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, op: ThermalOperator, inc: Increment) -> &mut Self {
        self.terms.push(MartingaleTerm {
            op,
            increments: vec![inc],
        });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn linear_terms(&self) -> Result<Vec<(&ThermalOperator, &Increment)>> {
        self.terms
            .iter()
            .map(|t| match t.increments.as_slice() {
                [inc] => Ok((&t.op, inc)),
                _ => Err(Error::NonLinearMartingale),
            })
            .collect()
    }
}

/// Result of squaring a martingale: operator coefficient and the power of
/// `dt` it multiplies.
#[derive(Clone, Debug)]
pub struct MartingaleSquare {
    pub coefficient: Option<ThermalOperator>,
    pub dt_power: u32,
}

/// `dM dM / dt` as an operator on the thermal space.
pub fn martingale_square(m: &Martingale, table: &ItoTable) -> Result<MartingaleSquare> {
    let terms = m.linear_terms()?;
    let mut acc: Option<ThermalOperator> = None;
    for (a, x) in &terms {
        for (b, y) in &terms {
            let c = table
                .product_n(&[**x, **y])
                .ok_or_else(|| Error::UnsupportedProduct("fewer than two increments".into()))?;
            if c == ZERO {
                continue;
            }
            let term = (*a * *b).scale(c);
            acc = Some(match acc {
                Some(s) => &s + &term,
                None => term,
            });
        }
    }
    Ok(MartingaleSquare {
        coefficient: acc,
        dt_power: 1,
    })
}

/// `‖dM dM / dt + 2 Π̂‖_max`.
pub fn fdt_residual(m: &Martingale, table: &ItoTable, target_pi: &ThermalOperator) -> Result<f64> {
    let sq = martingale_square(m, table)?;
    let two_pi = target_pi.scale_re(2.0);
    Ok(match sq.coefficient {
        Some(s) => (&s + &two_pi).max_abs(),
        None => two_pi.max_abs(),
    })
}

/// Stratonovich drift to Ito drift for `d|ψ⟩ = −i(A dt + dM)∘|ψ⟩`:
/// `A_Ito = A − (i/2) dM dM / dt`.
pub fn strat_to_ito(
    drift: &ThermalOperator,
    m: &Martingale,
    table: &ItoTable,
) -> Result<ThermalOperator> {
    shift(drift, m, table, C64::new(0.0, -0.5))
}

/// Inverse of [`strat_to_ito`].
pub fn ito_to_strat(
    drift: &ThermalOperator,
    m: &Martingale,
    table: &ItoTable,
) -> Result<ThermalOperator> {
    shift(drift, m, table, C64::new(0.0, 0.5))
}

fn shift(
    drift: &ThermalOperator,
    m: &Martingale,
    table: &ItoTable,
    c: C64,
) -> Result<ThermalOperator> {
    let sq = martingale_square(m, table)?;
    Ok(match sq.coefficient {
        Some(s) => drift + &s.scale(c),
        None => drift.clone(),
    })
}

/// Martingale of the non-unitary oscillator, `i(γ⁺° dW + γ̃⁺° dW̃)`.
pub fn oscillator_martingale(g: &crate::generators::GammaSet, p: &NoiseParams) -> Martingale {
    let mut m = Martingale::new();
    m.push(g.gamma_plus.scale(I), IncrementSymbol::DW.expand(p));
    m.push(
        g.tilde_gamma_plus.scale(I),
        IncrementSymbol::DWTilde.expand(p),
    );
    m
}

/// Martingale of the unitary oscillator,
/// `i(γ⁺° dW + γ̃⁺° dW̃) − i(dW⁺° γ_ν + dW̃⁺° γ̃_ν)`.
pub fn oscillator_unitary_martingale(
    g: &crate::generators::GammaSet,
    p: &NoiseParams,
) -> Martingale {
    let mut m = oscillator_martingale(g, p);
    m.push(g.gamma_nu.scale(-I), IncrementSymbol::DWPlus.expand(p));
    m.push(
        g.tilde_gamma_nu.scale(-I),
        IncrementSymbol::DWTildePlus.expand(p),
    );
    m
}

/// Martingale of the non-unitary Kramers model, `(x − x̃)(dX + dX̃)`.
pub fn kramers_martingale(ps: &crate::generators::PhaseSpaceOps, p: &NoiseParams) -> Martingale {
    let dx = &ps.x - &ps.xt;
    let mut m = Martingale::new();
    m.push(dx.clone(), IncrementSymbol::DX.expand(p));
    m.push(dx, IncrementSymbol::DXTilde.expand(p));
    m
}

/// Martingale of the unitary Kramers model, `x dX − x̃ dX̃`.
pub fn kramers_unitary_martingale(
    ps: &crate::generators::PhaseSpaceOps,
    p: &NoiseParams,
) -> Martingale {
    let mut m = Martingale::new();
    m.push(ps.x.clone(), IncrementSymbol::DX.expand(p));
    m.push(ps.xt.scale_re(-1.0), IncrementSymbol::DXTilde.expand(p));
    m
}

/// Symmetrised complex second moments `(E[z zᴴ], E[z zᵀ]) / dt` of a set of
/// increments realised as classical complex Gaussians.
pub fn classical_moments(incs: &[Increment], table: &ItoTable) -> (Array2<C64>, Array2<C64>) {
    let k = incs.len();
    let mut cov = Array2::<C64>::zeros((k, k));
    let mut pseudo = Array2::<C64>::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            let yj = incs[j].adjoint();
            cov[[i, j]] = 0.5 * (table.product(&incs[i], &yj) + table.product(&yj, &incs[i]));
            pseudo[[i, j]] =
                0.5 * (table.product(&incs[i], &incs[j]) + table.product(&incs[j], &incs[i]));
        }
    }
    (cov, pseudo)
}

/// Real covariance of `(Re z, Im z)` for complex moments `(C, P)`.
pub fn real_covariance(cov: &Array2<C64>, pseudo: &Array2<C64>) -> Array2<f64> {
    let k = cov.nrows();
    let mut r = Array2::<f64>::zeros((2 * k, 2 * k));
    for i in 0..k {
        for j in 0..k {
            let c = cov[[i, j]];
            let p = pseudo[[i, j]];
            r[[i, j]] = 0.5 * (c + p).re;
            r[[k + i, k + j]] = 0.5 * (c - p).re;
            let uv = 0.5 * (p.im - c.im);
            r[[i, k + j]] = uv;
            r[[k + j, i]] = uv;
        }
    }
    r
}

/// Cholesky factor of the real covariance for a commutative increment set.
pub fn sampling_factor(symbols: &[IncrementSymbol], p: &NoiseParams) -> Result<Array2<f64>> {
    let comm = CommutatorTable::new();
    let incs: Vec<Increment> = symbols.iter().map(|s| s.expand(p)).collect();
    for (i, x) in incs.iter().enumerate() {
        for (j, y) in incs.iter().enumerate().skip(i + 1) {
            if comm.commutator(x, y).norm() > 1e-14 {
                return Err(Error::NonCommutativeSet(
                    symbols[i].to_string(),
                    symbols[j].to_string(),
                ));
            }
        }
    }
    let table = ItoTable::new(p.nbar)?;
    let (c, ps) = classical_moments(&incs, &table);
    let r = real_covariance(&c, &ps);
    psd_cholesky(&r, 1e-13).map_err(|min_eig| Error::NonRealizableMoments {
        min_eig,
        matrix: format!("{r:?}"),
    })
}

/// Draw `steps` joint samples of `symbols` with time step `dt`. Row `t`
/// holds one draw per symbol. Stream `stream` selects an independent
/// sequence for the same seed.
pub fn sample_increments(
    symbols: &[IncrementSymbol],
    p: &NoiseParams,
    dt: f64,
    steps: usize,
    seed: u64,
    stream: u64,
) -> Result<Array2<C64>> {
    let unique: HashSet<_> = symbols.iter().collect();
    if unique.len() != symbols.len() {
        return Err(Error::InvalidParameter {
            name: "symbols",
            reason: "duplicate symbol".into(),
        });
    }
    let factor = sampling_factor(symbols, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Ok(draw(&factor, dt, steps, &mut rng))
}

pub(crate) fn draw(
    factor: &Array2<f64>,
    dt: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Array2<C64> {
    let k2 = factor.nrows();
    let k = k2 / 2;
    let sd = dt.sqrt();
    let mut out = Array2::<C64>::zeros((steps, k));
    let mut xi = vec![0.0; k2];
    for t in 0..steps {
        for v in xi.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        for i in 0..k {
            let mut re = 0.0;
            let mut im = 0.0;
            for j in 0..k2 {
                re += factor[[i, j]] * xi[j];
                im += factor[[k + i, j]] * xi[j];
            }
            out[[t, i]] = C64::new(re * sd, im * sd);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{
        gamma_set, kramers_hamiltonian, oscillator_hamiltonian, phase_space_ops,
        unitary_kramers_generator,
    };
    use crate::noise_space::NoiseModeSpace;
    use crate::thermal::TruncatedFockSpace;
    use IncrementSymbol::*;

    fn params() -> NoiseParams {
        NoiseParams::new(1.0, 0.5, 0.5, 1.0).unwrap()
    }

    #[test]
    fn base_table_entries() {
        let p = params();
        assert_eq!(ito_product(DB, DBDag, &p).unwrap().re, 2.0);
        assert_eq!(ito_product(DBDag, DB, &p).unwrap().re, 1.0);
        assert_eq!(ito_product(DB, DBTilde, &p).unwrap().re, 1.0);
        assert_eq!(ito_product(DBDag, DBTildeDag, &p).unwrap().re, 2.0);
        assert_eq!(ito_product(DB, DB, &p).unwrap(), ZERO);
        assert!((ito_product(DW, DWTilde, &p).unwrap().re - 1.5).abs() < 1e-15);
        assert!(matches!(
            ito_product_named("dQ", "dB", &p),
            Err(Error::UnknownSymbol(_))
        ));
        assert_eq!("dB̃†".parse::<IncrementSymbol>().unwrap(), DBTildeDag);
        assert_eq!("dW~+".parse::<IncrementSymbol>().unwrap(), DWTildePlus);
    }

    #[test]
    fn commutators() {
        let p = params();
        assert_eq!(increment_commutator(DB, DBDag, &p).re, 1.0);
        assert_eq!(increment_commutator(DW, DWTilde, &p), ZERO);
        for nu in [0.0, 0.3, 1.0] {
            let q = NoiseParams::new(1.0, 0.5, nu, 1.0).unwrap();
            assert!((increment_commutator(DW, DWPlus, &q).re - 1.0).abs() < 1e-15);
        }
        assert_eq!(increment_commutator(DX, DX, &p), ZERO);
        assert_eq!(increment_commutator(DX, DXTilde, &p), ZERO);
    }

    #[test]
    fn table_matches_explicit_noise_mode() {
        for nbar in [0.0, 0.5, 1.0, 2.3] {
            let p = NoiseParams::new(nbar, 0.7, 0.3, 1.4).unwrap();
            let t = ItoTable::new(nbar).unwrap();
            let c = CommutatorTable::new();
            let oracle = NoiseModeSpace::new(nbar).unwrap();
            for x in IncrementSymbol::ALL {
                for y in IncrementSymbol::ALL {
                    let (ex, ey) = (x.expand(&p), y.expand(&p));
                    let want = oracle.vacuum_product(&ex.coeffs, &ey.coeffs);
                    assert!((t.product(&ex, &ey) - want).norm() < 1e-12, "{x} {y}");
                    let wc = oracle.vacuum_commutator(&ex.coeffs, &ey.coeffs);
                    assert!((c.commutator(&ex, &ey) - wc).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symbol_tilde_matches_expansion_tilde() {
        let p = params();
        for s in IncrementSymbol::ALL {
            assert_eq!(s.tilde().expand(&p), s.expand(&p).tilde(), "{s}");
        }
    }

    #[test]
    fn products_of_three_vanish() {
        let t = ItoTable::new(1.0).unwrap();
        let x = DB.expand(&params());
        assert_eq!(t.product_n(&[x, x, x]), Some(ZERO));
        assert_eq!(t.product_n(&[x]), None);
    }

    #[test]
    fn oscillator_fdt() {
        let s = TruncatedFockSpace::new(20, 3).unwrap();
        let p = params();
        let t = ItoTable::new(p.nbar).unwrap();
        let h = oscillator_hamiltonian(s, 1.0, p.kappa, p.nbar, p.nu).unwrap();
        let g = gamma_set(&s.ladder(), p.nu).unwrap();
        let m = oscillator_martingale(&g, &p);
        assert!(fdt_residual(&m, &t, &h.pi_d).unwrap() < 1e-12);
        let mu = oscillator_unitary_martingale(&g, &p);
        assert!(fdt_residual(&mu, &t, &h.pi()).unwrap() < 1e-12);

        let z = NoiseParams::new(1.0, 0.0, 0.5, 1.0).unwrap();
        let sq = martingale_square(&oscillator_martingale(&g, &z), &t).unwrap();
        assert!(sq.coefficient.is_none());
    }

    #[test]
    fn kramers_fdt() {
        let s = TruncatedFockSpace::new(20, 3).unwrap();
        let (m, w, k, nb) = (1.0, 1.0, 0.2, 0.5);
        let p = NoiseParams::new(nb, k, 0.5, m * w).unwrap();
        let t = ItoTable::new(nb).unwrap();
        let ps = phase_space_ops(&s.ladder(), m, w);
        let h = kramers_hamiltonian(s, m, w, k, nb).unwrap();
        assert!(fdt_residual(&kramers_martingale(&ps, &p), &t, &h.pi_d).unwrap() < 1e-12);
        let (hu, _) = unitary_kramers_generator(s, m, w, k, nb).unwrap();
        assert!(fdt_residual(&kramers_unitary_martingale(&ps, &p), &t, &hu.pi_d).unwrap() < 1e-12);
    }

    #[test]
    fn conversions() {
        let s = TruncatedFockSpace::new(12, 3).unwrap();
        let p = params();
        let t = ItoTable::new(p.nbar).unwrap();
        let h = oscillator_hamiltonian(s, 1.0, p.kappa, p.nbar, p.nu).unwrap();
        let g = gamma_set(&s.ladder(), p.nu).unwrap();

        let empty = Martingale::new();
        assert_eq!(
            (&strat_to_ito(&h.h_s, &empty, &t).unwrap() - &h.h_s).max_abs(),
            0.0
        );

        let mu = oscillator_unitary_martingale(&g, &p);
        let ito = strat_to_ito(&h.h_s, &mu, &t).unwrap();
        assert!((&ito - &h.full()).max_abs() < 1e-12);
        let back = ito_to_strat(&ito, &mu, &t).unwrap();
        assert!((&back - &h.h_s).max_abs() < 1e-12);

        let m = oscillator_martingale(&g, &p);
        let strat = ito_to_strat(&h.full(), &m, &t).unwrap();
        let want = &h.h_s + &h.pi_r.scale(I);
        assert!((&strat - &want).max_abs() < 1e-12);
    }

    #[test]
    fn nonlinear_martingale_rejected() {
        let s = TruncatedFockSpace::new(4, 1).unwrap();
        let p = params();
        let m = Martingale {
            terms: vec![MartingaleTerm {
                op: s.identity(),
                increments: vec![DB.expand(&p), DB.expand(&p)],
            }],
        };
        let t = ItoTable::new(1.0).unwrap();
        assert!(matches!(
            martingale_square(&m, &t),
            Err(Error::NonLinearMartingale)
        ));
    }

    #[test]
    fn sampling_rules() {
        let p = params();
        assert!(matches!(
            sample_increments(&[DB, DBDag], &p, 1e-3, 4, 1, 0),
            Err(Error::NonCommutativeSet(_, _))
        ));
        let a = sample_increments(&[DX, DXTilde], &p, 1e-3, 16, 9, 0).unwrap();
        let b = sample_increments(&[DX, DXTilde], &p, 1e-3, 16, 9, 0).unwrap();
        assert_eq!(a, b);
        // dX is Hermitian: real draws
        assert!(a.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn sampled_dx_variance() {
        let p = NoiseParams::new(1.0, 0.5, 0.5, 1.0).unwrap();
        let dt = 1e-3;
        let n = 1_000_000;
        let s = sample_increments(&[DX], &p, dt, n, 42, 0).unwrap();
        let m2: f64 = s.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64 / dt;
        let want = (p.kappa * p.m_omega / 4.0) * (1.0 + 2.0 * p.nbar);
        assert!(((m2 - want) / want).abs() < 5e-3);
        let mean: f64 = s.iter().map(|z| z.re).sum::<f64>() / n as f64;
        let sigma = (want * dt / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma);
    }
}
