//! The four-observable feature map.
//!
//! Every observable is a tensor power (or, for `M_z`, a sum of two), so its
//! expectation on a product of seed blocks factorises into per-block traces.
//! The closed forms below cost `O(blocks)` and are checked against
//! [`features_dense`] in the tests for `n = 2..=8`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{dense_observables, expectation, DenseState};
use crate::seeds::SeedParams;
use crate::structure::Composition;

/// Measurement angle `φ_n` used by the `A_±` operators.
pub struct AngleTable;

impl AngleTable {
    /// `φ_2..φ_8` are tabulated; `φ_n = 2π/n` from `n = 9` on. The table has
    /// no entry for 9 itself, and the `2π/n` rule is extended to it.
    pub fn phi(n: usize) -> Result<f64> {
        Ok(match n {
            2 => FRAC_PI_2,
            3 => 1.231,
            4 => 1.0155,
            5 => 0.866,
            6 => 0.7559,
            7 => 0.6713,
            8 => 0.6,
            n if n >= 9 => 2.0 * PI / n as f64,
            _ => return Err(Error::Domain(format!("no measurement angle for n = {n}"))),
        })
    }
}

/// `(⟨M_z⟩, ⟨M_x⟩, ⟨A_z⟩, ⟨A_x⟩)`; this field order is also the file order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mz: f64,
    pub mx: f64,
    pub az: f64,
    pub ax: f64,
}

impl FeatureVector {
    pub const LEN: usize = 4;

    pub fn from_array([mz, mx, az, ax]: [f64; 4]) -> Self {
        Self { mz, mx, az, ax }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.mz, self.mx, self.az, self.ax]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Features of `⊗_ℓ ρ_ℓ(α_ℓ, β_ℓ)` for composition `c` of `n`.
///
/// With `w = 1-α-β`, `t = w/2 + α/2 + β/2^ℓ` and `ψ = (n+1)φ/(2n)`:
/// `mz = 2Πt`, `mx = Πw`, `az = Π w cos(ℓψ)`, `ax = Π w cos^ℓ(φ/2) cos(ℓφ/(2n))`.
pub fn features_composed(n: usize, c: &Composition, params: &[SeedParams]) -> Result<FeatureVector> {
    if c.n() != n {
        return Err(Error::Parameter(format!(
            "composition sums to {}, expected {n}",
            c.n()
        )));
    }
    if params.len() != c.blocks().len() {
        return Err(Error::Parameter(format!(
            "{} seed parameter pairs for {} blocks",
            params.len(),
            c.blocks().len()
        )));
    }
    let phi = AngleTable::phi(n)?;
    let nf = n as f64;
    let psi = (nf + 1.0) * phi / (2.0 * nf);
    let half_phi_cos = (phi / 2.0).cos();
    let twist = phi / (2.0 * nf);

    let (mut diag, mut mx, mut az, mut ax) = (1.0, 1.0, 1.0, 1.0);
    for (&block, p) in c.blocks().iter().zip(params) {
        let l = block as f64;
        let w = p.coherent_weight();
        diag *= 0.5 * w + 0.5 * p.alpha() + p.beta() * 0.5f64.powi(block as i32);
        mx *= w;
        az *= w * (l * psi).cos();
        ax *= w * half_phi_cos.powi(block as i32) * (l * twist).cos();
    }
    Ok(FeatureVector {
        mz: 2.0 * diag,
        mx,
        az,
        ax,
    })
}

/// Features of `p|GHZ><GHZ| + (1-p) I/2^n`.
pub fn features_noised_ghz(n: usize, p: f64) -> Result<FeatureVector> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} outside [0, 1]")));
    }
    let phi = AngleTable::phi(n)?;
    let nf = n as f64;
    Ok(FeatureVector {
        mz: p + (1.0 - p) * 0.5f64.powi(n as i32 - 1),
        mx: p,
        az: p * ((nf + 1.0) * phi / 2.0).cos(),
        ax: p * (phi / 2.0).cos().powi(n as i32 + 1),
    })
}

/// Features of `cos θ|0…0> + sin θ|1…1>`.
pub fn features_pure_gen_ghz(n: usize, theta: f64) -> Result<FeatureVector> {
    if !(0.0..=FRAC_PI_4).contains(&theta) {
        return Err(Error::Parameter(format!("θ = {theta} outside [0, π/4]")));
    }
    let phi = AngleTable::phi(n)?;
    let nf = n as f64;
    let coherence = (2.0 * theta).sin();
    Ok(FeatureVector {
        mz: 1.0,
        mx: coherence,
        az: coherence * ((nf + 1.0) * phi / 2.0).cos(),
        ax: coherence * (phi / 2.0).cos().powi(n as i32 + 1),
    })
}

/// Direct traces against the dense observables.
pub fn features_dense(state: &DenseState) -> Result<FeatureVector> {
    let obs = dense_observables(state.qubits())?;
    Ok(FeatureVector {
        mz: expectation(&obs.mz, state)?,
        mx: expectation(&obs.mx, state)?,
        az: expectation(&obs.az, state)?,
        ax: expectation(&obs.ax, state)?,
    })
}
