//! PCA, per-label expressive range projections, and the corpus-wide
//! normalized total-variance summary.
//!
//! Covariances use the sample convention (divide by `n − 1`) everywhere.
//! Components are sign-fixed so the largest-magnitude entry of each is
//! positive, which keeps projections stable across runs.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::features::{FeatureKind, FeatureRow};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::{Error, Result};

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Retain {
    Count(usize),
    /// Smallest number of components whose explained-variance ratios sum to
    /// at least this fraction.
    VarianceFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Per-feature divisor when fitted with standardization.
    pub scale: Option<Vec<f64>>,
    /// `r × d`, orthonormal rows.
    pub components: Matrix,
    /// Descending, non-negative.
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Trace of the training covariance (all components, not just retained).
    pub total_variance: f64,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `((x − mean) / scale) · componentsᵀ` for each row.
    pub fn transform(&self, data: &Matrix) -> Result<Matrix> {
        if data.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.cols(),
            });
        }
        let r = self.n_components();
        let mut out = Matrix::zeros(data.rows(), r);
        let mut centered = alloc::vec![0.0; self.dim()];
        for i in 0..data.rows() {
            for (j, c) in centered.iter_mut().enumerate() {
                let x = data[(i, j)] - self.mean[j];
                *c = match &self.scale {
                    Some(s) => x / s[j],
                    None => x,
                };
            }
            for k in 0..r {
                out[(i, k)] = self
                    .components
                    .row(k)
                    .iter()
                    .zip(&centered)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`PcaModel::transform`].
pub fn transform(model: &PcaModel, data: &Matrix) -> Result<Matrix> {
    model.transform(data)
}

fn column_means(data: &Matrix) -> Vec<f64> {
    let n = data.rows() as f64;
    (0..data.cols())
        .map(|j| (0..data.rows()).map(|i| data[(i, j)]).sum::<f64>() / n)
        .collect()
}

/// Sample covariance of the rows of `centered` (already mean-free).
fn covariance(centered: &Matrix) -> Matrix {
    let (n, d) = (centered.rows(), centered.cols());
    let mut cov = Matrix::zeros(d, d);
    for row in centered.iter_rows() {
        for a in 0..d {
            let x = row[a];
            if x == 0.0 {
                continue;
            }
            for b in a..d {
                cov[(a, b)] += x * row[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov
}

/// Fits PCA by eigendecomposition of the sample covariance.
///
/// Data are centered; with `standardize` each feature is also divided by its
/// sample standard deviation (constant features are left unscaled).
pub fn fit_pca(data: &Matrix, retain: Retain, standardize: bool) -> Result<PcaModel> {
    let (n, d) = (data.rows(), data.cols());
    if n < 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidInput("PCA needs at least one feature".into()));
    }
    if !data.is_finite() {
        return Err(Error::InvalidInput(
            "PCA input has non-finite values".into(),
        ));
    }
    match retain {
        Retain::Count(0) => return Err(Error::Config("must retain at least one component".into())),
        Retain::VarianceFraction(v) if !(v > 0.0 && v <= 1.0) => {
            return Err(Error::Config(alloc::format!(
                "variance fraction {v} not in (0, 1]"
            )))
        }
        _ => {}
    }

    let mean = column_means(data);
    let mut centered = data.clone();
    for i in 0..n {
        for (x, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *x -= m;
        }
    }
    let scale = standardize.then(|| {
        let s: Vec<f64> = (0..d)
            .map(|j| {
                let var = (0..n)
                    .map(|i| centered[(i, j)] * centered[(i, j)])
                    .sum::<f64>()
                    / (n - 1) as f64;
                let sd = libm::sqrt(var);
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        for i in 0..n {
            for (x, sd) in centered.row_mut(i).iter_mut().zip(&s) {
                *x /= sd;
            }
        }
        s
    });

    let eig = symmetric_eigen(&covariance(&centered))?;
    let eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let ratios: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| if total > 0.0 { l / total } else { 0.0 })
        .collect();

    let r = match retain {
        Retain::Count(k) => k.min(d),
        Retain::VarianceFraction(v) => {
            if total > 0.0 {
                let mut cum = 0.0;
                let mut r = d;
                for (i, ratio) in ratios.iter().enumerate() {
                    cum += ratio;
                    if cum >= v {
                        r = i + 1;
                        break;
                    }
                }
                r
            } else {
                1
            }
        }
    };

    let mut components = Matrix::zeros(r, d);
    for k in 0..r {
        let v = eig.eigenvectors.row(k);
        let pivot = (0..d).fold(
            0,
            |best, j| if v[j].abs() > v[best].abs() { j } else { best },
        );
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (c, x) in components.row_mut(k).iter_mut().zip(v) {
            *c = sign * x;
        }
    }

    Ok(PcaModel {
        mean,
        scale,
        components,
        eigenvalues: eigenvalues[..r].to_vec(),
        explained_variance_ratio: ratios[..r].to_vec(),
        total_variance: total,
    })
}

/// Trace of the sample covariance of `data`'s rows.
pub fn total_variance(data: &Matrix) -> Result<f64> {
    let m = data.rows();
    if m < 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "total variance needs at least 2 rows, got {m}"
        )));
    }
    let means = column_means(data);
    let sum: f64 = (0..data.cols())
        .map(|j| {
            (0..m)
                .map(|i| {
                    let e = data[(i, j)] - means[j];
                    e * e
                })
                .sum::<f64>()
        })
        .sum();
    Ok(sum / (m - 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub source: String,
    pub sample_id: String,
    pub pc1: f64,
    pub pc2: f64,
}

/// 2-D expressive range diagram data for one label and feature kind.
#[derive(Debug, Clone, PartialEq)]
pub struct EraProjection {
    pub label: String,
    pub kind: FeatureKind,
    /// Sorted by `(source, sample_id)`.
    pub points: Vec<ProjectedPoint>,
    pub explained: (f64, f64),
}

impl EraProjection {
    /// Number of points per source.
    pub fn counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.points {
            *counts.entry(p.source.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

fn sorted_rows<'a>(rows: impl Iterator<Item = &'a FeatureRow>) -> Vec<&'a FeatureRow> {
    let mut v: Vec<&FeatureRow> = rows.collect();
    v.sort_by(|a, b| a.clip.cmp(&b.clip));
    v
}

fn stack(rows: &[&FeatureRow]) -> Result<Matrix> {
    Matrix::from_rows(rows.iter().map(|r| r.vector.values.as_slice()))
}

/// Pools every source's rows for `label` and `kind`, fits a 2-component PCA
/// and projects each clip. Rows of other labels or kinds are ignored.
pub fn era_projection_2d(
    rows: &[FeatureRow],
    label: &str,
    kind: FeatureKind,
    standardize: bool,
) -> Result<EraProjection> {
    let selected = sorted_rows(
        rows.iter()
            .filter(|r| r.clip.label == label && r.vector.kind == kind),
    );
    if selected.len() < 3 {
        return Err(Error::InsufficientData(alloc::format!(
            "label {label:?}, kind {kind}: {} rows, need at least 3",
            selected.len()
        )));
    }
    let data = stack(&selected)?;
    let model = fit_pca(&data, Retain::Count(2), standardize)?;
    let projected = model.transform(&data)?;
    let ratio = |k: usize| {
        model
            .explained_variance_ratio
            .get(k)
            .copied()
            .unwrap_or(0.0)
    };
    let points = selected
        .iter()
        .enumerate()
        .map(|(i, r)| ProjectedPoint {
            source: r.clip.source.clone(),
            sample_id: r.clip.sample_id.clone(),
            pc1: projected[(i, 0)],
            pc2: if projected.cols() > 1 {
                projected[(i, 1)]
            } else {
                0.0
            },
        })
        .collect();
    Ok(EraProjection {
        label: label.into(),
        kind,
        points,
        explained: (ratio(0), ratio(1)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCell {
    pub source: String,
    pub kind: FeatureKind,
    pub n_rows: usize,
    /// `None` when the source has fewer than 2 rows of this kind.
    pub total_variance: Option<f64>,
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSummary {
    pub reference_source: String,
    /// Ordered by kind, then source.
    pub cells: Vec<VarianceCell>,
    /// Components kept by each kind's pooled PCA.
    pub retained: Vec<(FeatureKind, usize)>,
}

impl VarianceSummary {
    pub fn get(&self, source: &str, kind: FeatureKind) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.source == source && c.kind == kind)
            .and_then(|c| c.normalized)
    }

    pub fn sources(&self) -> Vec<&str> {
        let mut s: Vec<&str> = self.cells.iter().map(|c| c.source.as_str()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Mean over kinds of a source's normalized values.
    pub fn source_mean(&self, source: &str) -> Option<f64> {
        let values: Vec<f64> = FeatureKind::ALL
            .iter()
            .filter_map(|&k| self.get(source, k))
            .collect();
        mean_of_kinds(&values)
    }
}

/// Arithmetic mean of unrounded per-kind values.
pub fn mean_of_kinds(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// For each kind: pool all rows (every label and source), keep the PCA
/// components explaining `retain` of the variance, and divide each source's
/// total variance in that space by the reference source's.
pub fn variance_summary(
    rows: &[FeatureRow],
    reference_source: &str,
    retain: Retain,
    standardize: bool,
) -> Result<VarianceSummary> {
    if !rows.iter().any(|r| r.clip.source == reference_source) {
        return Err(Error::Config(alloc::format!(
            "reference source {reference_source:?} has no feature rows"
        )));
    }
    let mut cells = Vec::new();
    let mut retained = Vec::new();
    for kind in FeatureKind::ALL {
        let pooled = sorted_rows(rows.iter().filter(|r| r.vector.kind == kind));
        if pooled.is_empty() {
            continue;
        }
        let mut by_source: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in pooled.iter().enumerate() {
            by_source.entry(r.clip.source.as_str()).or_default().push(i);
        }
        let n_ref = by_source.get(reference_source).map_or(0, Vec::len);
        if n_ref < 2 {
            return Err(Error::InsufficientData(alloc::format!(
                "reference source {reference_source:?} has {n_ref} {kind} rows, need at least 2"
            )));
        }
        let data = stack(&pooled)?;
        let model = fit_pca(&data, retain, standardize)?;
        let projected = model.transform(&data)?;
        retained.push((kind, model.n_components()));

        let subset_variance = |idx: &[usize]| -> Option<f64> {
            if idx.len() < 2 {
                return None;
            }
            let sub = Matrix::from_rows(idx.iter().map(|&i| projected.row(i))).ok()?;
            total_variance(&sub).ok()
        };
        let reference_tv = subset_variance(&by_source[reference_source]).expect("checked above");
        if reference_tv <= 0.0 {
            return Err(Error::InsufficientData(alloc::format!(
                "reference source {reference_source:?} has zero {kind} variance"
            )));
        }
        for (source, idx) in &by_source {
            let tv = subset_variance(idx);
            cells.push(VarianceCell {
                source: String::from(*source),
                kind,
                n_rows: idx.len(),
                total_variance: tv,
                normalized: tv.map(|v| v / reference_tv),
            });
        }
    }
    Ok(VarianceSummary {
        reference_source: reference_source.into(),
        cells,
        retained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{ClipRef, FeatureVector};
    use alloc::vec;
    use proptest::prelude::*;

    fn rows_of(source: &str, label: &str, kind: FeatureKind, data: &[Vec<f64>]) -> Vec<FeatureRow> {
        data.iter()
            .enumerate()
            .map(|(i, v)| FeatureRow {
                clip: ClipRef::new(label, source, alloc::format!("{i:03}")),
                vector: FeatureVector {
                    kind,
                    values: v.clone(),
                },
            })
            .collect()
    }

    #[test]
    fn collinear_points() {
        let data = Matrix::from_rows([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        let m = fit_pca(&data, Retain::VarianceFraction(0.95), false).unwrap();
        assert_eq!(m.n_components(), 1);
        let c = m.components.row(0);
        let h = libm::sqrt(0.5);
        assert!((c[0] - h).abs() < 1e-12 && (c[1] - h).abs() < 1e-12);
        assert!((m.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_reconstruction() {
        let data = Matrix::from_rows([
            [1.0, 2.0, 0.5],
            [0.3, -1.0, 2.0],
            [4.0, 0.0, 1.0],
            [2.0, 2.0, 2.0],
            [-1.0, 0.5, 0.0],
        ])
        .unwrap();
        let m = fit_pca(&data, Retain::Count(3), false).unwrap();
        let z = m.transform(&data).unwrap();
        let back = z.matmul(&m.components).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                assert!((back[(i, j)] + m.mean[j] - data[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn transform_basics() {
        let data = Matrix::from_rows([[1.0, 5.0], [2.0, 3.0], [4.0, 4.0], [0.0, 1.0]]).unwrap();
        let m = fit_pca(&data, Retain::Count(2), false).unwrap();
        let z = m.transform(&data).unwrap();
        for k in 0..2 {
            let col = Matrix::from_vec(4, 1, z.column(k)).unwrap();
            assert!((total_variance(&col).unwrap() - m.eigenvalues[k]).abs() < 1e-8);
        }
        let mean = Matrix::from_rows([m.mean.clone()]).unwrap();
        assert!(m
            .transform(&mean)
            .unwrap()
            .as_slice()
            .iter()
            .all(|v| v.abs() < 1e-15));
        let repeated = Matrix::from_rows([[3.0, 3.0], [3.0, 3.0], [3.0, 3.0]]).unwrap();
        let r = m.transform(&repeated).unwrap();
        assert_eq!(r.row(0), r.row(2));
        assert!(m.transform(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn sign_convention_largest_entry_positive() {
        let data = Matrix::from_rows([[0.0, 0.0], [-1.0, -3.0], [1.0, 3.0], [0.5, 1.0]]).unwrap();
        let m = fit_pca(&data, Retain::Count(2), false).unwrap();
        for k in 0..2 {
            let row = m.components.row(k);
            let pivot = if row[0].abs() >= row[1].abs() { 0 } else { 1 };
            assert!(row[pivot] > 0.0);
        }
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_pca(&Matrix::zeros(1, 3), Retain::Count(1), false),
            Err(Error::InsufficientData(_))
        ));
        let mut bad = Matrix::zeros(3, 2);
        bad[(1, 1)] = f64::INFINITY;
        assert!(matches!(
            fit_pca(&bad, Retain::Count(1), false),
            Err(Error::InvalidInput(_))
        ));
        assert!(fit_pca(&Matrix::zeros(3, 2), Retain::VarianceFraction(1.5), false).is_err());
    }

    #[test]
    fn standardization_equalizes_scales() {
        let data =
            Matrix::from_rows([[1.0, 100.0], [2.0, 300.0], [3.0, 200.0], [4.0, 500.0]]).unwrap();
        let raw = fit_pca(&data, Retain::Count(2), false).unwrap();
        let std = fit_pca(&data, Retain::Count(2), true).unwrap();
        assert!(raw.explained_variance_ratio[0] > 0.99);
        assert!((std.total_variance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn total_variance_examples() {
        assert_eq!(
            total_variance(&Matrix::from_rows([[1.0, 2.0]; 4]).unwrap()).unwrap(),
            0.0
        );
        assert_eq!(
            total_variance(&Matrix::from_rows([[0.0], [2.0]]).unwrap()).unwrap(),
            2.0
        );
        assert!(total_variance(&Matrix::from_rows([[0.0]]).unwrap()).is_err());
    }

    #[test]
    fn projection_counts_and_degenerate_case() {
        let mut rows = rows_of("a", "rain", FeatureKind::Loudness, &vec![vec![1.0; 12]; 3]);
        rows.extend(rows_of(
            "b",
            "rain",
            FeatureKind::Loudness,
            &vec![vec![1.0; 12]; 2],
        ));
        rows.extend(rows_of(
            "b",
            "wind",
            FeatureKind::Loudness,
            &vec![vec![9.0; 12]; 2],
        ));
        let p = era_projection_2d(&rows, "rain", FeatureKind::Loudness, false).unwrap();
        assert_eq!(p.points.len(), 5);
        assert_eq!(p.explained, (0.0, 0.0));
        assert!(p.points.iter().all(|q| q.pc1 == 0.0 && q.pc2 == 0.0));
        assert_eq!(p.counts()["a"], 3);
        let err = era_projection_2d(&rows, "wind", FeatureKind::Loudness, false).unwrap_err();
        assert!(alloc::format!("{err}").contains("wind"));
    }

    #[test]
    fn reference_normalizes_to_one() {
        let ref_data: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![i as f64, (i * i) as f64 * 0.3, 1.0])
            .collect();
        let scaled: Vec<Vec<f64>> = ref_data
            .iter()
            .map(|v| v.iter().map(|x| 2.0 * x).collect())
            .collect();
        let mut rows = rows_of("ref", "x", FeatureKind::Timbre, &ref_data);
        rows.extend(rows_of("copy", "x", FeatureKind::Timbre, &ref_data));
        rows.extend(rows_of("double", "y", FeatureKind::Timbre, &scaled));
        let s = variance_summary(&rows, "ref", Retain::VarianceFraction(0.95), false).unwrap();
        assert_eq!(s.get("ref", FeatureKind::Timbre), Some(1.0));
        assert!((s.get("copy", FeatureKind::Timbre).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.source_mean("ref"), Some(1.0));
        assert!(s.get("ref", FeatureKind::Pitch).is_none());
    }

    #[test]
    fn missing_reference_is_config_error() {
        let rows = rows_of("a", "x", FeatureKind::Timbre, &vec![vec![0.0; 12]; 3]);
        assert!(matches!(
            variance_summary(&rows, "esc50", Retain::VarianceFraction(0.95), false),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn mean_row_of_published_values() {
        let m = mean_of_kinds(&[0.73, 1.69, 0.83]).unwrap();
        assert!((m - 1.083_333_333_333_333).abs() < 1e-12);
        assert_eq!(libm::round(m * 100.0) / 100.0, 1.08);
        assert!(mean_of_kinds(&[]).is_none());
    }

    proptest! {
        #[test]
        fn total_variance_permutation_and_translation_invariant(
            data in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 3), 2..30),
            shift in proptest::collection::vec(-1e3f64..1e3, 3),
        ) {
            let m = Matrix::from_rows(&data).unwrap();
            let mut rev = data.clone();
            rev.reverse();
            let moved: Vec<Vec<f64>> = data.iter().map(|r| r.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
            let base = total_variance(&m).unwrap();
            let tol = 1e-9 * (1.0 + base);
            prop_assert!((total_variance(&Matrix::from_rows(&rev).unwrap()).unwrap() - base).abs() <= tol);
            prop_assert!((total_variance(&Matrix::from_rows(&moved).unwrap()).unwrap() - base).abs() <= tol);
        }
    }
}
