//! Fits of computed eigenvalues against the three-term expansion
//! λ_n(h) = hβ_a + h^{3/2}k_max M₃ + h^{7/4}(2n − 1)√(k₂M₃c₂/2) + ….

use super::geometry::CurvatureProfile;
use crate::error::{Error, Result};
use crate::invariants::SpectralInvariants;
use serde::{Deserialize, Serialize};

/// Eigenvalues at one h (already extrapolated in the mesh if desired).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSample {
    pub h: f64,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedConstants {
    pub beta: f64,
    /// k_max·M₃.
    pub second: f64,
    /// √(k₂M₃c₂/2), the n = 1 third coefficient.
    pub third: f64,
    /// √(2k₂M₃c₂).
    pub gap: f64,
}

impl PredictedConstants {
    pub fn new(inv: &SpectralInvariants, profile: &CurvatureProfile) -> Self {
        let q = profile.k2 * inv.m3 * inv.c2;
        Self {
            beta: inv.beta_a,
            second: profile.k_max * inv.m3,
            third: (q / 2.0).max(0.0).sqrt(),
            gap: (2.0 * q).max(0.0).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub h: f64,
    pub lambda1: f64,
    pub lambda2: Option<f64>,
    /// λ₁/h.
    pub c0_1: f64,
    /// (λ₁/h − β_a)/h^{1/2}.
    pub c1_1: f64,
    /// Λ₁(h)/h^{3/4}, Λ_n = λ_n/h − β_a − M₃k_max h^{1/2}.
    pub third_1: f64,
    pub third_2: Option<f64>,
    /// (λ₂ − λ₁)/h^{7/4}.
    pub gap_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub rows: Vec<FitRow>,
    pub predicted: PredictedConstants,
    /// (c₀, c₁, c₂) from a least-squares fit of λ₁ on {h, h^{3/2}, h^{7/4}}.
    pub fitted: [f64; 3],
    /// Relative deviations at the smallest h.
    pub third_deviation: f64,
    pub gap_deviation: Option<f64>,
    /// (Λ₂/h^{3/4}) / (Λ₁/h^{3/4}) at the smallest h (target 3).
    pub ladder_ratio: Option<f64>,
    /// Slope of log|λ₁/h − β_a| against log h (target 1/2).
    pub slope_first_correction: f64,
    /// Slope of log|Λ₁| against log h (target 3/4).
    pub slope_third: f64,
}

/// Least squares by modified Gram–Schmidt with one reorthogonalization, on
/// column-scaled data.
pub fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let m = y.len();
    let n = cols.len();
    if m < n {
        return Err(Error::Insufficient(format!("{m} equations for {n} unknowns")));
    }
    let scale: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut q: Vec<Vec<f64>> = cols
        .iter()
        .zip(&scale)
        .map(|(c, s)| c.iter().map(|x| x / s).collect())
        .collect();
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let c: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
                r[i][j] += c;
                let qi = q[i].clone();
                q[j].iter_mut().zip(&qi).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm < 1e-14 {
            return Err(Error::Insufficient("basis columns are linearly dependent".into()));
        }
        r[j][j] = nrm;
        q[j].iter_mut().for_each(|x| *x /= nrm);
    }
    let qty: Vec<f64> = q.iter().map(|qj| qj.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| r[i][k] * x[k]).sum();
        x[i] = (qty[i] - s) / r[i][i];
    }
    Ok(x.iter().zip(&scale).map(|(v, s)| v / s).collect())
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    crate::quasimode::loglog_slope(x, y)
}

/// Coefficients (c₀, c₁, c₂) of c₀h + c₁h^{3/2} + c₂h^{7/4} through the data.
pub fn fit_three_terms(h: &[f64], lambda: &[f64]) -> Result<[f64; 3]> {
    let cols: Vec<Vec<f64>> = [1.0, 1.5, 1.75]
        .iter()
        .map(|p| h.iter().map(|x| x.powf(*p)).collect())
        .collect();
    let c = least_squares(&cols, lambda)?;
    Ok([c[0], c[1], c[2]])
}

pub fn fit_asymptotics(samples: &[EigenSample], predicted: &PredictedConstants) -> Result<FitReport> {
    let mut hs: Vec<f64> = samples.iter().map(|s| s.h).collect();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    if hs.len() < 3 {
        return Err(Error::Insufficient(format!("{} distinct h values (need 3)", hs.len())));
    }
    if samples.iter().any(|s| s.lambdas.is_empty()) {
        return Err(Error::Insufficient("sample without eigenvalues".into()));
    }
    let mut sorted: Vec<&EigenSample> = samples.iter().collect();
    sorted.sort_by(|a, b| b.h.total_cmp(&a.h));
    let p = predicted;
    let cap = |h: f64, l: f64| l / h - p.beta - p.second * h.sqrt();
    let rows: Vec<FitRow> = sorted
        .iter()
        .map(|s| {
            let h = s.h;
            let l1 = s.lambdas[0];
            let l2 = s.lambdas.get(1).copied();
            FitRow {
                h,
                lambda1: l1,
                lambda2: l2,
                c0_1: l1 / h,
                c1_1: (l1 / h - p.beta) / h.sqrt(),
                third_1: cap(h, l1) / h.powf(0.75),
                third_2: l2.map(|l| cap(h, l) / h.powf(0.75)),
                gap_ratio: l2.map(|l| (l - l1) / h.powf(1.75)),
            }
        })
        .collect();
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let l1: Vec<f64> = rows.iter().map(|r| r.lambda1).collect();
    let fitted = fit_three_terms(&h, &l1)?;
    let last = rows.last().expect("three rows");
    let rel = |v: f64, w: f64| (v - w).abs() / w.abs();
    Ok(FitReport {
        predicted: *p,
        fitted,
        third_deviation: rel(last.third_1, p.third),
        gap_deviation: last.gap_ratio.map(|g| rel(g, p.gap)),
        ladder_ratio: last.third_2.map(|t2| t2 / last.third_1),
        slope_first_correction: loglog_slope(&h, &rows.iter().map(|r| r.c0_1 - p.beta).collect::<Vec<_>>()),
        slope_third: loglog_slope(
            &h,
            &rows.iter().map(|r| r.third_1 * r.h.powf(0.75)).collect::<Vec<_>>(),
        ),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_three_term_data_is_recovered() {
        let h: [f64; 3] = [2e-2, 1e-2, 5e-3];
        let l: Vec<f64> = h.iter().map(|h| 0.5 * h - 0.1 * h.powf(1.5) + 0.3 * h.powf(1.75)).collect();
        let c = fit_three_terms(&h, &l).unwrap();
        for (x, y) in c.iter().zip([0.5, -0.1, 0.3]) {
            assert!((x - y).abs() < 1e-10, "{c:?}");
        }
    }

    #[test]
    fn too_few_h_values() {
        let s = vec![
            EigenSample {
                h: 1e-2,
                lambdas: vec![1e-3],
            };
            3
        ];
        let p = PredictedConstants {
            beta: 0.4,
            second: -0.04,
            third: 0.07,
            gap: 0.14,
        };
        assert!(matches!(fit_asymptotics(&s, &p), Err(Error::Insufficient(_))));
    }
}
