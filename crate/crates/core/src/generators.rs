//! Time-evolution generators on the doubled space: the damped oscillator,
//! the quantum Kramers model and its "unitary" variant, plus the γ-operator
//! and Bogoliubov (doublet) machinery.
//!
//! A generator is stored as `Ĥ = Ĥ_S + i(Π̂_R + Π̂_D)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::{thermal_bra, Ladder, ThermalOperator, TruncatedFockSpace, I};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Oscillator,
    Kramers,
    KramersUnitary,
}

/// Physical parameters shared by all models. `mass` only matters for the
/// position/momentum models; `nu` only for the γ-split of the oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub kappa: f64,
    pub nbar: f64,
    pub nu: f64,
    pub mass: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            kappa: 0.5,
            nbar: 1.0,
            nu: 0.5,
            mass: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !self.omega.is_finite() || self.omega <= 0.0 {
            return bad("omega", "must be finite and > 0");
        }
        if !self.kappa.is_finite() || self.kappa < 0.0 {
            return bad("kappa", "must be finite and >= 0");
        }
        if !self.nbar.is_finite() || self.nbar < 0.0 {
            return Err(Error::NegativeOccupation(self.nbar));
        }
        if !self.mass.is_finite() || self.mass <= 0.0 {
            return bad("mass", "must be finite and > 0");
        }
        check_nu(self.nu)
    }

    pub fn mu(&self) -> f64 {
        1.0 - self.nu
    }
}

pub(crate) fn check_nu(nu: f64) -> Result<()> {
    if (0.0..=1.0).contains(&nu) {
        Ok(())
    } else {
        Err(Error::NuOutOfRange(nu))
    }
}

#[derive(Clone, Debug)]
pub struct HatHamiltonian {
    pub kind: GeneratorKind,
    pub params: ModelParams,
    pub h_s: ThermalOperator,
    pub pi_r: ThermalOperator,
    pub pi_d: ThermalOperator,
}

impl HatHamiltonian {
    pub fn space(&self) -> TruncatedFockSpace {
        self.h_s.space()
    }

    /// `Π̂ = Π̂_R + Π̂_D`.
    pub fn pi(&self) -> ThermalOperator {
        &self.pi_r + &self.pi_d
    }

    /// `Ĥ = Ĥ_S + iΠ̂`.
    pub fn full(&self) -> ThermalOperator {
        &self.h_s + &self.pi().scale(I)
    }

    /// Guarded-subspace max-abs of `⟨1|Ĥ`.
    pub fn left_zero_residual(&self) -> f64 {
        left_zero_residual(&self.full())
    }

    /// `‖(iĤ)~ − iĤ‖_max`.
    pub fn tildian_residual(&self) -> f64 {
        tildian_residual(&self.full())
    }
}

/// Guarded-subspace max-abs of `⟨1|A`.
pub fn left_zero_residual(op: &ThermalOperator) -> f64 {
    let bra = thermal_bra(op.space());
    op.apply_left(&bra).expect("same space").guarded_max_abs()
}

pub fn tildian_residual(op: &ThermalOperator) -> f64 {
    let ih = op.scale(I);
    (&ih.tilde() - &ih).max_abs()
}

/// `Π̂ = c1(a†a + ã†ã) + c2 aã + c3 a†ã† + c4` for a phase-invariant
/// bilinear generator. `⟨1|Π̂ = 0` forces `2c1 + c2 + c3 = 0` and
/// `c3 + c4 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiFreeCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub omega: f64,
}

impl SemiFreeCoefficients {
    /// Complete `(c1, c2)` with the two left-zero constraints.
    pub fn from_free(omega: f64, c1: f64, c2: f64) -> Self {
        let c3 = -(2.0 * c1 + c2);
        Self {
            c1,
            c2,
            c3,
            c4: -c3,
            omega,
        }
    }

    /// The stationary-process choice `c1 = −κ(1+2n̄)`, `c2 = 2κ(1+n̄)`.
    pub fn stationary(omega: f64, kappa: f64, nbar: f64) -> Self {
        Self::from_free(
            omega,
            -kappa * (1.0 + 2.0 * nbar),
            2.0 * kappa * (1.0 + nbar),
        )
    }

    pub fn constraint_residual(&self) -> f64 {
        (2.0 * self.c1 + self.c2 + self.c3)
            .abs()
            .max((self.c3 + self.c4).abs())
    }

    pub fn kappa(&self) -> f64 {
        self.c1 + self.c2
    }

    /// `iΣ^< = −(2c1 + c2)`.
    pub fn i_sigma_less(&self) -> f64 {
        -(2.0 * self.c1 + self.c2)
    }

    /// Stationary occupation from `iΣ^< = 2κn̄`.
    pub fn nbar(&self) -> f64 {
        self.i_sigma_less() / (2.0 * self.kappa())
    }

    pub fn pi_operator(&self, l: &Ladder) -> ThermalOperator {
        let s = l.a.space();
        let num = &(&l.a_dag * &l.a) + &(&l.at_dag * &l.at);
        let mut out = num.scale_re(self.c1);
        out = &out + &(&l.a * &l.at).scale_re(self.c2);
        out = &out + &(&l.a_dag * &l.at_dag).scale_re(self.c3);
        &out + &s.identity().scale_re(self.c4)
    }
}

/// `γ_ν = μa + νã†`, `γ⁺° = a† − ã` and their tilde partners.
#[derive(Clone, Debug)]
pub struct GammaSet {
    pub nu: f64,
    pub gamma_nu: ThermalOperator,
    pub gamma_plus: ThermalOperator,
    pub tilde_gamma_nu: ThermalOperator,
    pub tilde_gamma_plus: ThermalOperator,
}

pub fn gamma_set(l: &Ladder, nu: f64) -> Result<GammaSet> {
    check_nu(nu)?;
    let mu = 1.0 - nu;
    let gamma_nu = &l.a.scale_re(mu) + &l.at_dag.scale_re(nu);
    let gamma_plus = &l.a_dag - &l.at;
    Ok(GammaSet {
        nu,
        tilde_gamma_nu: gamma_nu.tilde(),
        tilde_gamma_plus: gamma_plus.tilde(),
        gamma_nu,
        gamma_plus,
    })
}

/// `Ĥ_S = ω(a†a − ã†ã)` with `Π̂_R = −κ(γ⁺°γ_ν + γ̃⁺°γ̃_ν)` and
/// `Π̂_D = 2κ(n̄+ν)γ⁺°γ̃⁺°`.
pub fn oscillator_hamiltonian(
    space: TruncatedFockSpace,
    omega: f64,
    kappa: f64,
    nbar: f64,
    nu: f64,
) -> Result<HatHamiltonian> {
    let params = ModelParams {
        omega,
        kappa,
        nbar,
        nu,
        mass: 1.0,
    };
    params.validate()?;
    let l = space.ladder();
    let g = gamma_set(&l, nu)?;
    let h_s = (&(&l.a_dag * &l.a) - &(&l.at_dag * &l.at)).scale_re(omega);
    let pi_r = (&(&g.gamma_plus * &g.gamma_nu) + &(&g.tilde_gamma_plus * &g.tilde_gamma_nu))
        .scale_re(-kappa);
    // γ⁺° and γ̃⁺° commute except on the top ladder level; the symmetric
    // product keeps Π̂_D exactly tilde-invariant on the truncated space
    let pd = &(&g.gamma_plus * &g.tilde_gamma_plus) + &(&g.tilde_gamma_plus * &g.gamma_plus);
    let pi_d = pd.scale_re(kappa * (nbar + nu));
    Ok(HatHamiltonian {
        kind: GeneratorKind::Oscillator,
        params,
        h_s,
        pi_r,
        pi_d,
    })
}

/// Ladder-operator form of the oscillator dissipator,
/// `−κ[(1+2n̄)(a†a+ã†ã) − 2(1+n̄)aã − 2n̄a†ã†] − 2κn̄`.
pub fn oscillator_pi_ladder(l: &Ladder, kappa: f64, nbar: f64) -> ThermalOperator {
    SemiFreeCoefficients::stationary(1.0, kappa, nbar).pi_operator(l)
}

/// Position and momentum in both factors,
/// `x = (a+a†)/√(2mω)`, `p = i√(mω/2)(a†−a)`.
#[derive(Clone, Debug)]
pub struct PhaseSpaceOps {
    pub x: ThermalOperator,
    pub p: ThermalOperator,
    pub xt: ThermalOperator,
    pub pt: ThermalOperator,
}

pub fn phase_space_ops(l: &Ladder, mass: f64, omega: f64) -> PhaseSpaceOps {
    let x = (&l.a + &l.a_dag).scale_re(1.0 / (2.0 * mass * omega).sqrt());
    let p = (&l.a_dag - &l.a).scale(I * (mass * omega / 2.0).sqrt());
    PhaseSpaceOps {
        xt: x.tilde(),
        pt: p.tilde(),
        x,
        p,
    }
}

fn kramers_system(
    space: TruncatedFockSpace,
    params: &ModelParams,
) -> (PhaseSpaceOps, ThermalOperator) {
    let l = space.ladder();
    let ps = phase_space_ops(&l, params.mass, params.omega);
    let h = &(&ps.p * &ps.p).scale_re(0.5 / params.mass)
        + &(&ps.x * &ps.x).scale_re(0.5 * params.mass * params.omega * params.omega);
    let h_s = &h - &h.tilde();
    (ps, h_s)
}

/// `Π̂_R = −(i/2)κ(x−x̃)(p+p̃)`, `Π̂_D = −(κmω/2)(1+2n̄)(x−x̃)²`.
pub fn kramers_hamiltonian(
    space: TruncatedFockSpace,
    mass: f64,
    omega: f64,
    kappa: f64,
    nbar: f64,
) -> Result<HatHamiltonian> {
    let params = ModelParams {
        omega,
        kappa,
        nbar,
        nu: 0.5,
        mass,
    };
    params.validate()?;
    let (ps, h_s) = kramers_system(space, &params);
    let dx = &ps.x - &ps.xt;
    let sp = &ps.p + &ps.pt;
    let pi_r = (&dx * &sp).scale(C64::new(0.0, -0.5 * kappa));
    let pi_d = (&dx * &dx).scale_re(-0.5 * kappa * mass * omega * (1.0 + 2.0 * nbar));
    Ok(HatHamiltonian {
        kind: GeneratorKind::Kramers,
        params,
        h_s,
        pi_r,
        pi_d,
    })
}

/// Comparison of the unitary-noise Kramers generator with the master
/// equation generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitaryKramersReport {
    /// `Π̂^U / Π̂_D` diffusion coefficient ratio.
    pub diffusion_ratio: f64,
    /// `‖Π̂_R‖_max`: the relaxational part absent from `Ĥ^U`.
    pub missing_relaxation_norm: f64,
    /// `‖Ĥ^U − Ĥ‖_max`.
    pub generator_gap: f64,
    /// `‖(Ĥ − Ĥ^U) − i(Π̂_R + ¾Π̂_D)‖_max`.
    pub gap_identity_residual: f64,
    /// Guarded max-abs of `⟨1|Ĥ^U`.
    pub left_zero_residual: f64,
}

/// `Ĥ^U = Ĥ_S + iΠ̂^U` with `Π̂^U = −(κmω/8)(1+2n̄)(x−x̃)²`, stored with
/// `Π̂_R = 0` and `Π̂_D = Π̂^U`.
pub fn unitary_kramers_generator(
    space: TruncatedFockSpace,
    mass: f64,
    omega: f64,
    kappa: f64,
    nbar: f64,
) -> Result<(HatHamiltonian, UnitaryKramersReport)> {
    let reference = kramers_hamiltonian(space, mass, omega, kappa, nbar)?;
    let (ps, h_s) = kramers_system(space, &reference.params);
    let dx = &ps.x - &ps.xt;
    let coeff = kappa * mass * omega * (1.0 + 2.0 * nbar);
    let pi_u = (&dx * &dx).scale_re(-coeff / 8.0);
    let hu = HatHamiltonian {
        kind: GeneratorKind::KramersUnitary,
        params: reference.params,
        h_s,
        pi_r: space.zero(),
        pi_d: pi_u,
    };
    let full_u = hu.full();
    let full = reference.full();
    let gap = &full - &full_u;
    let expected = (&reference.pi_r + &reference.pi_d.scale_re(0.75)).scale(I);
    let report = UnitaryKramersReport {
        diffusion_ratio: if coeff == 0.0 {
            0.25
        } else {
            (coeff / 8.0) / (coeff / 2.0)
        },
        missing_relaxation_norm: reference.pi_r.max_abs(),
        generator_gap: gap.max_abs(),
        gap_identity_residual: (&gap - &expected).max_abs(),
        left_zero_residual: left_zero_residual(&full_u),
    };
    Ok((hu, report))
}

/// Real 2×2 matrix acting on thermal doublets `(a, ã†)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovMatrix {
    pub m: [[f64; 2]; 2],
    pub n: f64,
}

pub const TAU3: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];
pub const TAU_PLUS: [[f64; 2]; 2] = [[0.0, 1.0], [0.0, 0.0]];

pub fn mat2_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat2_max_abs_diff(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// `B(n) = [[1+n, −n], [−1, 1]]`.
pub fn bogoliubov(n: f64) -> Result<BogoliubovMatrix> {
    if !(n >= 0.0) {
        return Err(Error::NegativeOccupation(n));
    }
    Ok(BogoliubovMatrix {
        m: [[1.0 + n, -n], [-1.0, 1.0]],
        n,
    })
}

impl BogoliubovMatrix {
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `B(n)⁻¹ = [[1, n], [1, 1+n]]`.
    pub fn inverse(&self) -> [[f64; 2]; 2] {
        [[1.0, self.n], [1.0, 1.0 + self.n]]
    }

    /// `dB/dn`.
    pub fn derivative(&self) -> [[f64; 2]; 2] {
        [[1.0, -1.0], [0.0, 0.0]]
    }
}

/// `A = B̄⁻¹ τ₃ B̄` for the reservoir occupation `n̄`.
pub fn a_matrix(nbar: f64) -> Result<[[f64; 2]; 2]> {
    let b = bogoliubov(nbar)?;
    Ok(mat2_mul(&mat2_mul(&b.inverse(), &TAU3), &b.m))
}

/// Residuals of `B A B⁻¹ = τ₃ + 2(n − n̄)τ₊` and
/// `(dB/dt) B⁻¹ = −(dn/dt) τ₊` at occupation `n` with rate `ndot`.
pub fn bogoliubov_identity_residuals(n: f64, nbar: f64, ndot: f64) -> Result<(f64, f64)> {
    let b = bogoliubov(n)?;
    let lhs = mat2_mul(&mat2_mul(&b.m, &a_matrix(nbar)?), &b.inverse());
    let mut rhs = TAU3;
    rhs[0][1] += 2.0 * (n - nbar);
    let r1 = mat2_max_abs_diff(&lhs, &rhs);
    let db = b.derivative().map(|r| r.map(|v| v * ndot));
    let lhs2 = mat2_mul(&db, &b.inverse());
    let rhs2 = TAU_PLUS.map(|r| r.map(|v| -v * ndot));
    Ok((r1, mat2_max_abs_diff(&lhs2, &rhs2)))
}

/// Apply `B` to a doublet `(a¹, a²)`: `out^μ = B^{μν} a^ν`.
pub fn doublet_transform(
    ops: (&ThermalOperator, &ThermalOperator),
    b: &[[f64; 2]; 2],
) -> (ThermalOperator, ThermalOperator) {
    let row = |r: &[f64; 2]| &ops.0.scale_re(r[0]) + &ops.1.scale_re(r[1]);
    (row(&b[0]), row(&b[1]))
}

/// Apply `B⁻¹` from the right to a bar doublet `(ā¹, ā²)`:
/// `out^μ = ā^ν (B⁻¹)^{νμ}`.
pub fn bar_doublet_transform(
    ops: (&ThermalOperator, &ThermalOperator),
    binv: &[[f64; 2]; 2],
) -> (ThermalOperator, ThermalOperator) {
    let col = |j: usize| &ops.0.scale_re(binv[0][j]) + &ops.1.scale_re(binv[1][j]);
    (col(0), col(1))
}

/// Operators that diagonalise the oscillator generator. `d†` and `d̃†` are
/// the doublet partners, not matrix adjoints.
#[derive(Clone, Debug)]
pub struct DiagonalOps {
    pub d: ThermalOperator,
    pub d_dag: ThermalOperator,
    pub dt: ThermalOperator,
    pub dt_dag: ThermalOperator,
}

/// `(d, d̃†) = B̄(a, ã†)` and `(d†, −d̃) = (a†, −ã)B̄⁻¹`.
pub fn diagonal_d_operators(l: &Ladder, nbar: f64) -> Result<DiagonalOps> {
    let b = bogoliubov(nbar)?;
    let (d, dt_dag) = doublet_transform((&l.a, &l.at_dag), &b.m);
    let minus_at = -&l.at;
    let (d_dag, minus_dt) = bar_doublet_transform((&l.a_dag, &minus_at), &b.inverse());
    Ok(DiagonalOps {
        d,
        d_dag,
        dt: -&minus_dt,
        dt_dag,
    })
}

/// Rebuild `ω(d†d − d̃†d̃) − iκ(d†d + d̃†d̃)` and compare it with the
/// oscillator generator. Returns `(best-fit identity coefficient c,
/// ‖Ĥ_rec − Ĥ − c·I‖_max)`.
pub fn diagonal_reconstruction(h: &HatHamiltonian) -> Result<(C64, f64)> {
    if h.kind != GeneratorKind::Oscillator {
        return Err(Error::ParameterMismatch(
            "diagonal form exists for the oscillator only".into(),
        ));
    }
    let s = h.space();
    let l = s.ladder();
    let p = h.params;
    let d = diagonal_d_operators(&l, p.nbar)?;
    let nd = &d.d_dag * &d.d;
    let ndt = &d.dt_dag * &d.dt;
    let rec = &(&nd - &ndt).scale_re(p.omega) + &(&nd + &ndt).scale(C64::new(0.0, -p.kappa));
    let diff = &rec - &h.full();
    // least-squares identity component on the guarded diagonal
    let guarded: Vec<usize> = (0..s.dim()).filter(|&i| s.is_guarded(i)).collect();
    let c = guarded.iter().map(|&i| diff.get(i, i)).sum::<C64>() / guarded.len() as f64;
    let resid = (&diff - &s.identity().scale(c)).guarded_max_abs();
    Ok((c, resid))
}

/// Canonical commutator of the diagonal operators, `[d, d†]`.
pub fn diagonal_commutator(d: &DiagonalOps) -> ThermalOperator {
    crate::thermal::commutator(&d.d, &d.d_dag).expect("same space")
}
