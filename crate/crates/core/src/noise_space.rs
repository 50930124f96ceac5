//! Explicit matrix realisation of one thermal noise mode, used as a
//! brute-force check of the symbolic increment tables.
//!
//! The thermal Bogoliubov partners `dC, dC̃` (and their creation partners)
//! annihilate both noise vacua, so a two-mode Fock space with occupation
//! cutoff 2 represents every second-order product exactly at the vacuum.
//! The Brownian increments are recovered from the doublet relations
//! `(dB, dB̃†) = B̄⁻¹(dC, dC̃†)` and `(dB†, −dB̃) = (dC†, −dC̃)B̄`.

use ndarray::Array2;

use crate::generators::bogoliubov;
use crate::thermal::ZERO;
use crate::{Result, C64};

const LEVELS: usize = 3;
const DIM: usize = LEVELS * LEVELS;

/// Base increments as explicit 9×9 matrices, in the order
/// `dB, dB†, dB̃, dB̃†`.
#[derive(Clone, Debug)]
pub struct NoiseModeSpace {
    pub base: [Array2<C64>; 4],
}

fn ladder() -> Array2<C64> {
    let mut a = Array2::<C64>::zeros((LEVELS, LEVELS));
    for n in 1..LEVELS {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<C64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = a[[i, j]] * b[[k, l]];
                }
            }
        }
    }
    out
}

impl NoiseModeSpace {
    pub fn new(nbar: f64) -> Result<Self> {
        let eye = Array2::<C64>::eye(LEVELS);
        let c = kron(&ladder(), &eye);
        let ct = kron(&eye, &ladder());
        let c_dag = c.t().to_owned();
        let ct_dag = ct.t().to_owned();

        let b = bogoliubov(nbar)?;
        let binv = b.inverse();
        let r = |x: f64| C64::new(x, 0.0);
        let db = &c * r(binv[0][0]) + &ct_dag * r(binv[0][1]);
        let dbt_dag = &c * r(binv[1][0]) + &ct_dag * r(binv[1][1]);
        let db_dag = &c_dag * r(b.m[0][0]) - &ct * r(b.m[1][0]);
        let minus_dbt = &c_dag * r(b.m[0][1]) - &ct * r(b.m[1][1]);
        Ok(Self {
            base: [db, db_dag, minus_dbt.mapv(|v| -v), dbt_dag],
        })
    }

    /// Matrix of `Σ c_i base_i`.
    pub fn combine(&self, coeffs: &[C64; 4]) -> Array2<C64> {
        let mut out = Array2::<C64>::zeros((DIM, DIM));
        for (c, m) in coeffs.iter().zip(self.base.iter()) {
            if *c != ZERO {
                out = out + m * *c;
            }
        }
        out
    }

    /// `⟨|X Y|⟩` with both vacua equal to the Fock vacuum of the partners.
    pub fn vacuum_product(&self, x: &[C64; 4], y: &[C64; 4]) -> C64 {
        let xy = self.combine(x).dot(&self.combine(y));
        xy[[0, 0]]
    }

    /// `⟨|[X, Y]|⟩`.
    pub fn vacuum_commutator(&self, x: &[C64; 4], y: &[C64; 4]) -> C64 {
        self.vacuum_product(x, y) - self.vacuum_product(y, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::ONE;

    fn unit(i: usize) -> [C64; 4] {
        let mut c = [ZERO; 4];
        c[i] = ONE;
        c
    }

    #[test]
    fn thermal_brownian_moments() {
        let nbar = 1.0;
        let s = NoiseModeSpace::new(nbar).unwrap();
        // dB dB† = 1 + n̄, dB† dB = n̄, dB dB̃ = n̄, dB† dB̃† = 1 + n̄
        assert!((s.vacuum_product(&unit(0), &unit(1)).re - 2.0).abs() < 1e-14);
        assert!((s.vacuum_product(&unit(1), &unit(0)).re - 1.0).abs() < 1e-14);
        assert!((s.vacuum_product(&unit(0), &unit(2)).re - 1.0).abs() < 1e-14);
        assert!((s.vacuum_product(&unit(1), &unit(3)).re - 2.0).abs() < 1e-14);
        assert!(s.vacuum_product(&unit(0), &unit(0)).norm() < 1e-14);
        assert!((s.vacuum_commutator(&unit(0), &unit(1)).re - 1.0).abs() < 1e-14);
    }
}
