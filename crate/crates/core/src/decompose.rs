//! Lineage decomposition of coefficient vectors.
//!
//! A decomposition `(D, alpha)` assigns a nonnegative multiplier `d` to every
//! taxon of every grouping level and a real `alpha_j` to every covariate. It
//! composes to `beta_j = alpha_j * prod_t d_{tau^t(j)}`.
//!
//! Among all decompositions of a given `beta`, the one minimizing
//! `sum d^q + sum |alpha|^q` is characterized by mass equilibrium:
//! `d_tau^q = sum_{j in tau} |alpha_j|^q` for every taxon. [`partial_inverse`]
//! computes it by exact block-coordinate minimization of the (strictly convex)
//! log-space problem, one grouping level at a time.

use alloc::vec;
use alloc::vec::Vec;

use crate::num::{abs_pow, powf, root, sqrt};
use crate::taxonomy::Taxonomy;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Penalty exponent the decomposition was balanced for.
    pub q: f64,
    /// `d[level][taxon]` for the grouping levels.
    pub d: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
}

impl Decomposition {
    pub fn zeros(taxonomy: &Taxonomy, q: f64) -> Self {
        Decomposition {
            q,
            d: taxonomy
                .grouping_levels()
                .iter()
                .map(|l| vec![0.0; l.taxa.len()])
                .collect(),
            alpha: vec![0.0; taxonomy.p()],
        }
    }

    fn check(&self, taxonomy: &Taxonomy) -> Result<()> {
        let shape_ok = self.alpha.len() == taxonomy.p()
            && self.d.len() == taxonomy.depth()
            && self
                .d
                .iter()
                .zip(taxonomy.grouping_levels())
                .all(|(d, l)| d.len() == l.taxa.len());
        if shape_ok {
            Ok(())
        } else {
            Err(Error::dims("decomposition does not match taxonomy"))
        }
    }
}

/// `phi(D, 1)`: product of the lineage multipliers for every covariate.
pub fn lineage_products(decomp: &Decomposition, taxonomy: &Taxonomy) -> Result<Vec<f64>> {
    decomp.check(taxonomy)?;
    Ok(products(&decomp.d, taxonomy))
}

fn products(d: &[Vec<f64>], taxonomy: &Taxonomy) -> Vec<f64> {
    let mut out = vec![1.0; taxonomy.p()];
    for (t, dt) in d.iter().enumerate() {
        for (o, &k) in out.iter_mut().zip(taxonomy.level_membership(t)) {
            *o *= dt[k];
        }
    }
    out
}

/// `beta_j = alpha_j * prod_t d_{L^t(j)}`.
pub fn compose(decomp: &Decomposition, taxonomy: &Taxonomy) -> Result<Vec<f64>> {
    let prod = lineage_products(decomp, taxonomy)?;
    Ok(decomp.alpha.iter().zip(prod).map(|(a, w)| a * w).collect())
}

/// Largest violation of `d_tau^q = sum_{j in tau} |alpha_j|^q` over all taxa.
pub fn equilibrium_residual(decomp: &Decomposition, taxonomy: &Taxonomy) -> Result<f64> {
    decomp.check(taxonomy)?;
    let mut worst = 0.0f64;
    for (t, dt) in decomp.d.iter().enumerate() {
        let mass = level_mass(&decomp.alpha, taxonomy.level_membership(t), dt.len(), decomp.q);
        for (&dk, mk) in dt.iter().zip(mass) {
            worst = worst.max((abs_pow(dk, decomp.q) - mk).abs());
        }
    }
    Ok(worst)
}

fn level_mass(alpha: &[f64], membership: &[usize], ntaxa: usize, q: f64) -> Vec<f64> {
    let mut mass = vec![0.0; ntaxa];
    for (&a, &k) in alpha.iter().zip(membership) {
        mass[k] += abs_pow(a, q);
    }
    mass
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOptions {
    /// Stop once the equilibrium residual is below `tol * max(1, max d^q)`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            tol: 1e-10,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub decomposition: Decomposition,
    pub sweeps: usize,
    pub residual: f64,
}

/// Penalty-minimizing decomposition of `beta` (the partial inverse).
///
/// Signs are carried by `alpha`. Taxa whose covariates all have zero
/// coefficient get `d = 0` and are left out of the iteration.
pub fn partial_inverse(beta: &[f64], taxonomy: &Taxonomy, q: f64, tol: f64) -> Result<Decomposition> {
    let opts = EquilibriumOptions {
        tol,
        ..EquilibriumOptions::default()
    };
    partial_inverse_with(beta, taxonomy, q, &opts).map(|e| e.decomposition)
}

pub fn partial_inverse_with(
    beta: &[f64],
    taxonomy: &Taxonomy,
    q: f64,
    opts: &EquilibriumOptions,
) -> Result<Equilibrium> {
    let p = taxonomy.p();
    if beta.len() != p {
        return Err(Error::dims("beta length differs from taxonomy size"));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::arg("penalty exponent q must be positive"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    if let Some(j) = beta.iter().position(|b| !b.is_finite()) {
        return Err(Error::NonFinite(alloc::format!("beta[{j}]")));
    }
    let depth = taxonomy.depth();

    let mut d: Vec<Vec<f64>> = taxonomy
        .grouping_levels()
        .iter()
        .enumerate()
        .map(|(t, level)| {
            let mut dt = vec![0.0; level.taxa.len()];
            for (&b, &k) in beta.iter().zip(taxonomy.level_membership(t)) {
                if b != 0.0 {
                    dt[k] = 1.0;
                }
            }
            dt
        })
        .collect();
    let mut alpha = beta.to_vec();

    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for t in 0..depth {
            let membership = taxonomy.level_membership(t);
            let mass = level_mass(&alpha, membership, d[t].len(), q);
            // exact minimizer over this level's log-multipliers
            let mut ratio = vec![1.0; d[t].len()];
            for ((dk, &mk), rk) in d[t].iter_mut().zip(&mass).zip(ratio.iter_mut()) {
                if *dk > 0.0 {
                    let updated = sqrt(*dk * root(mk, q));
                    *rk = *dk / updated;
                    *dk = updated;
                }
            }
            for (a, &k) in alpha.iter_mut().zip(membership) {
                *a *= ratio[k];
            }
        }
        let prod = products(&d, taxonomy);
        for ((a, &b), w) in alpha.iter_mut().zip(beta).zip(prod) {
            *a = if b == 0.0 { 0.0 } else { b / w };
        }

        let mut worst = 0.0f64;
        let mut scale = 1.0f64;
        for (t, dt) in d.iter().enumerate() {
            let mass = level_mass(&alpha, taxonomy.level_membership(t), dt.len(), q);
            for (&dk, mk) in dt.iter().zip(mass) {
                let dq = abs_pow(dk, q);
                worst = worst.max((dq - mk).abs());
                scale = scale.max(dq);
            }
        }
        residual = worst;
        if !residual.is_finite() {
            return Err(Error::NonFinite("equilibrium iteration".into()));
        }
        if residual <= opts.tol * scale {
            return Ok(Equilibrium {
                decomposition: Decomposition { q, d, alpha },
                sweeps,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "mass equilibrium",
        iterations: sweeps,
        residual,
    })
}

/// Adaptive weights `w = phi(D(beta), 1)`, with 1 wherever the product is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Per-coefficient penalty multipliers `1 / w_j`.
    pub fn penalty_factors(&self) -> Vec<f64> {
        self.0.iter().map(|w| 1.0 / w).collect()
    }
}

pub fn weights(beta: &[f64], taxonomy: &Taxonomy) -> Result<WeightVector> {
    let decomp = partial_inverse(beta, taxonomy, 1.0, EquilibriumOptions::default().tol)?;
    weights_from(&decomp, taxonomy)
}

pub fn weights_from(decomp: &Decomposition, taxonomy: &Taxonomy) -> Result<WeightVector> {
    let prod = lineage_products(decomp, taxonomy)?;
    Ok(WeightVector(
        prod.into_iter().map(|w| if w == 0.0 { 1.0 } else { w }).collect(),
    ))
}

/// Penalty applied to `alpha` in [`penalty_decomposed_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaPenalty {
    /// `||alpha||_q^q` with the decomposition's exponent.
    #[default]
    Lasso,
    /// `||alpha||_{1/2}^{1/2}`.
    Bridge,
}

/// `sum_t sum_k (d_k^t)^q + lambda * ||alpha||_q^q`; for `q = 1` this is the
/// single-tuning-parameter penalty.
pub fn penalty_decomposed(decomp: &Decomposition, lambda: f64) -> f64 {
    penalty_decomposed_with(decomp, lambda, AlphaPenalty::Lasso)
}

pub fn penalty_decomposed_with(decomp: &Decomposition, lambda: f64, kind: AlphaPenalty) -> f64 {
    let q = decomp.q;
    let groups: f64 = decomp.d.iter().flatten().map(|&d| abs_pow(d, q)).sum();
    let alpha: f64 = match kind {
        AlphaPenalty::Lasso => decomp.alpha.iter().map(|&a| abs_pow(a, q)).sum(),
        AlphaPenalty::Bridge => decomp.alpha.iter().map(|&a| powf(a.abs(), 0.5)).sum(),
    };
    groups + lambda * alpha
}

/// `n * lambda * sum_L ||beta_L||_1 / w_L`, where `w_L` is the weight shared
/// by the indices of lineage `L`.
pub fn penalty_weighted(
    beta: &[f64],
    weights: &WeightVector,
    taxonomy: &Taxonomy,
    n: usize,
    lambda: f64,
) -> Result<f64> {
    let p = taxonomy.p();
    if beta.len() != p || weights.0.len() != p {
        return Err(Error::dims("beta/weights length differs from taxonomy size"));
    }
    let mut total = 0.0;
    for (k, lineage) in taxonomy.lineages().iter().enumerate() {
        let w = weights.0[lineage.indices[0]];
        if !(w > 0.0) {
            return Err(Error::arg("weights must be positive"));
        }
        let consistent = lineage
            .indices
            .iter()
            .all(|&j| (weights.0[j] - w).abs() <= 1e-12 * w.abs().max(1.0));
        if !consistent {
            return Err(Error::InconsistentWeights { lineage: k });
        }
        let l1: f64 = lineage.indices.iter().map(|&j| beta[j].abs()).sum();
        total += l1 / w;
    }
    Ok(n as f64 * lambda * total)
}
