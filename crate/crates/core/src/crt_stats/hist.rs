use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use super::qn::dirichlet_density;
use crate::rng::{replicate_rng, sub_seed};
use crate::stats::{chi_square, ks_critical, ks_on_grid, Estimate};
use crate::tree::{edge_mass_profile, uniform_cladogram, LabelledShape};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub name: String,
    pub estimate: Estimate,
    pub target: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassHistogram {
    pub n: usize,
    pub m: usize,
    pub replicates: usize,
    /// Every replicate's edge counts summed to N.
    pub masses_sum_exact: bool,
    /// `E[eta_1 eta_2]` over the external edges of labels 1 and 2.
    pub pair_moment: Estimate,
    pub pair_target: f64,
    pub moments: Vec<MomentRow>,
    /// KS distance of the `eta_1` marginal to `Beta(1/2, (K-1)/2)`, on the
    /// lattice `k/N`.
    pub ks_eta1: f64,
    pub ks_critical: f64,
    /// Binned test of `(eta_1, eta_2)` against the Dirichlet density; m = 3 only.
    pub chi_square: Option<ChiSquare>,
}

pub const KS_ALPHA: f64 = 0.001;
pub const CHI_GRID: usize = 20;
pub const CHI_MARGIN: f64 = 0.01;

/// Index of the external edge carrying `label` in a canonical shape.
fn label_edge(s: &LabelledShape, label: u32) -> usize {
    let v = s.node_of_label(label);
    // the label-1 node is the root; its edge is the root edge
    if v == 0 {
        0
    } else {
        v - 1
    }
}

/// Empirical law of the `2m - 3` subtree mass fractions spanned by the first
/// m leaves of uniform N-cladograms, against `Dir(1/2, ..., 1/2)`.
pub fn subtree_mass_histogram(
    n: usize,
    m: usize,
    replicates: usize,
    seed: u64,
) -> Result<MassHistogram> {
    if m < 3 || m > n {
        return Err(Error::InvalidArgument(format!(
            "need 3 <= m <= N, got m = {m}, N = {n}"
        )));
    }
    if replicates < 2 {
        return Err(Error::InvalidArgument(
            "need at least two replicates".into(),
        ));
    }
    let master = sub_seed(seed, 0x6d61_7373);
    let rows: Result<Vec<(Vec<u32>, Vec<bool>, [usize; 2])>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let t = uniform_cladogram(n, &mut replicate_rng(master, r as u64))?;
            let p = edge_mass_profile(&t, m)?;
            let ext = (0..p.counts.len())
                .map(|e| p.shape.edge_is_external(e))
                .collect();
            let labels = [label_edge(&p.shape, 1), label_edge(&p.shape, 2)];
            Ok((p.counts, ext, labels))
        })
        .collect();
    let rows = rows?;
    let k = 2 * m - 3;
    let kf = k as f64;
    let nf = n as f64;
    let masses_sum_exact = rows
        .iter()
        .all(|(c, _, _)| c.iter().map(|&x| x as usize).sum::<usize>() == n);
    let eta = |c: u32| c as f64 / nf;
    let e1: Vec<f64> = rows.iter().map(|(c, _, l)| eta(c[l[0]])).collect();
    let e2: Vec<f64> = rows.iter().map(|(c, _, l)| eta(c[l[1]])).collect();
    let pair: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| a * b).collect();
    let pair_target = 1.0 / (kf * (kf + 2.0));
    let mut moments = vec![
        MomentRow {
            name: "E[eta1]".into(),
            estimate: Estimate::from_samples(&e1),
            target: 1.0 / kf,
        },
        MomentRow {
            name: "E[eta1^2]".into(),
            estimate: Estimate::from_samples(&e1.iter().map(|x| x * x).collect::<Vec<_>>()),
            target: 3.0 / (kf * (kf + 2.0)),
        },
        MomentRow {
            name: "E[eta2]".into(),
            estimate: Estimate::from_samples(&e2),
            target: 1.0 / kf,
        },
        MomentRow {
            name: "E[eta1 eta2]".into(),
            estimate: Estimate::from_samples(&pair),
            target: pair_target,
        },
    ];
    if m >= 4 {
        let internal: Vec<f64> = rows
            .iter()
            .map(|(c, ext, _)| {
                let v: Vec<f64> = c
                    .iter()
                    .zip(ext)
                    .filter(|(_, &x)| !x)
                    .map(|(&c, _)| eta(c))
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect();
        moments.push(MomentRow {
            name: "E[eta internal]".into(),
            estimate: Estimate::from_samples(&internal),
            target: 1.0 / kf,
        });
    }
    let beta =
        Beta::new(0.5, (kf - 1.0) / 2.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 / nf).collect();
    let ks_eta1 = ks_on_grid(&e1, &grid, |x| beta.cdf(x));
    let chi = if m == 3 {
        Some(chi_square_tripod(n, &rows))
    } else {
        None
    };
    Ok(MassHistogram {
        n,
        m,
        replicates,
        masses_sum_exact,
        pair_moment: Estimate::from_samples(&pair),
        pair_target,
        moments,
        ks_eta1,
        ks_critical: ks_critical(KS_ALPHA, replicates),
        chi_square: chi,
    })
}

fn cell(x: f64) -> usize {
    ((x * CHI_GRID as f64).floor() as usize).min(CHI_GRID - 1)
}

/// `(eta_1, eta_2)` on a `20 x 20` grid, restricted to the simplex minus a
/// margin of 0.01 where the density is unbounded. Expected cell masses come
/// from the density summed over the sampling lattice, i.e. the midpoint rule
/// on cells of side `1/N` centred on the lattice points.
fn chi_square_tripod(n: usize, rows: &[(Vec<u32>, Vec<bool>, [usize; 2])]) -> ChiSquare {
    let lo = (CHI_MARGIN * n as f64).ceil() as u32;
    let nf = n as f64;
    let mut expected = vec![0.0; CHI_GRID * CHI_GRID];
    for k1 in lo..n as u32 {
        for k2 in lo..(n as u32).saturating_sub(k1) {
            let k3 = n as u32 - k1 - k2;
            if k3 < lo {
                continue;
            }
            let x = [k1 as f64 / nf, k2 as f64 / nf, k3 as f64 / nf];
            expected[cell(x[0]) * CHI_GRID + cell(x[1])] += dirichlet_density(&x);
        }
    }
    let mut observed = vec![0u64; CHI_GRID * CHI_GRID];
    for (c, _, l) in rows {
        let (k1, k2) = (c[l[0]], c[l[1]]);
        let k3 = n as u32 - k1 - k2;
        if k1 >= lo && k2 >= lo && k3 >= lo {
            observed[cell(k1 as f64 / nf) * CHI_GRID + cell(k2 as f64 / nf)] += 1;
        }
    }
    let (statistic, df, p_value) = chi_square(&observed, &expected, 5.0);
    ChiSquare {
        statistic,
        df,
        p_value,
    }
}
