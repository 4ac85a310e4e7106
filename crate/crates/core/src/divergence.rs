//! Hellinger distance between beta distributions and the pairwise distance
//! matrix built from it.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::BetaDist;
use crate::quadrature;

/// Closed-form Hellinger distance between two beta distributions:
///
/// `H² = 1 - B((a₁+a₂)/2, (b₁+b₂)/2) / √(B(a₁,b₁) B(a₂,b₂))`
///
/// evaluated in log space. The result is exactly symmetric and exactly zero
/// for identical parameters.
pub fn hellinger_beta(x: &BetaDist, y: &BetaDist) -> f64 {
    let mid = BetaDist::new(0.5 * (x.a() + y.a()), 0.5 * (x.b() + y.b()))
        .expect("midpoint of valid shapes is valid");
    let log_bc = mid.ln_beta() - 0.5 * (x.ln_beta() + y.ln_beta());
    (1.0 - log_bc.exp()).max(0.0).sqrt()
}

/// Panel budget per integral for [`hellinger_numeric`].
const MAX_PANELS: usize = 20_000;

/// Hellinger distance by direct quadrature of `∫ √(f_X f_Y)`.
///
/// Independent of the gamma-function kernel: each density's normalizer is
/// itself integrated numerically, so the coefficient is a ratio of three
/// quadratures of the form `∫ t^(α-1) (1-t)^(β-1) dt`. `abs_tol` bounds the
/// error of the resulting Bhattacharyya coefficient.
pub fn hellinger_numeric(x: &BetaDist, y: &BetaDist, abs_tol: f64) -> Result<f64> {
    if !(abs_tol >= 1e-12 && abs_tol.is_finite()) {
        return Err(Error::domain(
            "hellinger_numeric",
            format!("abs_tol must be >= 1e-12, got {abs_tol}"),
        ));
    }
    // Relative error ε on each integral bounds the coefficient's error by ~2ε.
    let rel = abs_tol / 4.0;
    let (ln_scale_x, ix) = scaled_kernel_integral(x.a(), x.b(), rel)?;
    let (ln_scale_y, iy) = scaled_kernel_integral(y.a(), y.b(), rel)?;
    let (ln_scale_xy, ixy) =
        scaled_kernel_integral(0.5 * (x.a() + y.a()), 0.5 * (x.b() + y.b()), rel)?;

    let log_bc = (ln_scale_xy + ixy.ln()) - 0.5 * ((ln_scale_x + ix.ln()) + (ln_scale_y + iy.ln()));
    Ok((1.0 - log_bc.exp()).max(0.0).sqrt())
}

/// `∫₀¹ t^(α-1) (1-t)^(β-1) dt` returned as `(ln s, I)` with the integral equal
/// to `s · I`. The kernel is rescaled by its value at the mean so `I` stays
/// near the distribution's width instead of under/overflowing.
fn scaled_kernel_integral(alpha: f64, beta: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let log_kernel = |ln_t: f64, ln_1mt: f64| (alpha - 1.0) * ln_t + (beta - 1.0) * ln_1mt;

    let mean = alpha / (alpha + beta);
    let sd = (alpha * beta / ((alpha + beta).powi(2) * (alpha + beta + 1.0))).sqrt();
    let ln_scale = log_kernel(mean.ln(), (-mean).ln_1p());

    // t = u^p on [0, mean] and 1 - t = v^q on [mean, 1]: the Jacobian absorbs
    // the endpoint singularities of shapes below 1.
    let p = power_for(alpha);
    let q = power_for(beta);

    let left = move |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let ln_u = u.ln();
        let ln_t = p * ln_u;
        let ln_1mt = (-(ln_t.exp())).ln_1p();
        (log_kernel(ln_t, ln_1mt) - ln_scale + (p - 1.0) * ln_u).exp() * p
    };
    let right = move |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let ln_v = v.ln();
        let ln_1mt = q * ln_v;
        let ln_t = (-(ln_1mt.exp())).ln_1p();
        (log_kernel(ln_t, ln_1mt) - ln_scale + (q - 1.0) * ln_v).exp() * q
    };

    const SPREADS: [f64; 10] = [0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 16.0, 32.0];

    let u_end = mean.powf(1.0 / p);
    let mut left_breaks = vec![0.0, u_end];
    left_breaks.extend(
        SPREADS
            .iter()
            .map(|k| mean - k * sd)
            .filter(|&t| t > 0.0)
            .map(|t| t.powf(1.0 / p)),
    );
    left_breaks.sort_by(f64::total_cmp);
    left_breaks.dedup();

    let v_end = (1.0 - mean).powf(1.0 / q);
    let mut right_breaks = vec![0.0, v_end];
    right_breaks.extend(
        SPREADS
            .iter()
            .map(|k| 1.0 - (mean + k * sd))
            .filter(|&g| g > 0.0)
            .map(|g| g.powf(1.0 / q)),
    );
    right_breaks.sort_by(f64::total_cmp);
    right_breaks.dedup();

    let total = quadrature::integrate(left, &left_breaks, rel_tol, MAX_PANELS)?
        + quadrature::integrate(right, &right_breaks, rel_tol, MAX_PANELS)?;
    Ok((ln_scale, total))
}

fn power_for(shape: f64) -> f64 {
    if shape >= 1.0 {
        1.0
    } else {
        (1.0 / shape).ceil().clamp(2.0, 64.0)
    }
}

/// Dense symmetric matrix of pairwise distances with row/column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    labels: Vec<String>,
    entries: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    /// Builds from a full square of entries, checking every invariant.
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix(format!(
                "expected {n}x{n} entries for {n} labels"
            )));
        }
        check_unique(&labels)?;
        let m = Self {
            labels,
            entries: rows.into_iter().flatten().collect(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Zero diagonal, off-diagonal entries in [0, 1], exact symmetry.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry ({i},{i}) is {}",
                    self.get(i, i)
                )));
            }
            for j in (i + 1)..n {
                let v = self.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i},{j}) = {v} outside [0, 1]"
                    )));
                }
                if v.to_bits() != self.get(j, i).to_bits() {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = MatrixDoc {
            labels: self.labels.clone(),
            entries: (0..self.len()).map(|i| self.row(i).to_vec()).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixDoc = serde_json::from_str(text)?;
        Self::from_rows(doc.labels, doc.entries)
    }

    /// CSV with a header row and a leading label column. Values use the
    /// shortest representation that parses back to the same double.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = std::iter::once("").chain(self.labels.iter().map(String::as_str));
        w.write_record(header).map_err(csv_err)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut rec = vec![label.clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let labels: Vec<String> = r
            .headers()
            .map_err(csv_err)?
            .iter()
            .skip(1)
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::with_capacity(labels.len());
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.get(0) != labels.get(i).map(String::as_str) {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} label does not match column header"
                )));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::InvalidMatrix(format!("row {i}: bad number `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(labels, rows)
    }
}

fn csv_err(source: csv::Error) -> Error {
    Error::Csv {
        path: "<distance matrix>".into(),
        source,
    }
}

fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// Pairwise Hellinger distances. Only the upper triangle is computed; the
/// lower triangle is its mirror.
pub fn build_matrix(posteriors: &[(String, BetaDist)]) -> Result<DistanceMatrix> {
    if posteriors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let labels: Vec<String> = posteriors.iter().map(|(id, _)| id.clone()).collect();
    check_unique(&labels)?;
    let n = labels.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = hellinger_beta(&posteriors[i].1, &posteriors[j].1);
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { labels, entries })
}
