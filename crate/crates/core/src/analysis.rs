//! Sweeps over one-parameter state families, bound extraction, and
//! prediction on externally measured feature vectors.
//!
//! Noised GHZ states `p|GHZ><GHZ| + (1-p)I/2^n` have known k-separability
//! thresholds only for `k = 2` and `k >= (n+1)/2`. Depth bounds are read from
//! the intactness table through `depth = n - intactness + 1`.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{features_noised_ghz, features_pure_gen_ghz, FeatureVector};
use crate::mlp::{MlpModel, Sample, Scoring, Validation};
use crate::par::{map_indexed, Execution};
use crate::structure::{class_table, ClassTable};

pub const DEFAULT_SWEEP_POINTS: usize = 10_001;
/// Absolute tolerance in `p` when comparing learned and analytic bounds.
pub const DEFAULT_BOUND_TOLERANCE: f64 = 0.05;

/// What is known about the true intactness of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntactnessTruth {
    Exact(usize),
    /// Somewhere in the open range `(1, (n+1)/2)`.
    InRange,
}

fn in_open_range(n: usize, k: usize) -> bool {
    k > 1 && 2 * k < n + 1
}

/// A predicted intactness is correct if it equals a truth of 1 or
/// `>= (n+1)/2`, or if both lie in `(1, (n+1)/2)`.
pub fn correctness_rule(n: usize, predicted_m: usize, truth: IntactnessTruth) -> bool {
    match truth {
        IntactnessTruth::Exact(m) if !in_open_range(n, m) => predicted_m == m,
        _ => in_open_range(n, predicted_m),
    }
}

/// Exact threshold `b` such that the noised GHZ state is k-separable iff
/// `p <= b`, where known.
pub fn analytic_bound_exact(n: usize, k: usize) -> Option<Ratio<u64>> {
    if n < 2 || k < 2 || k > n || n > 62 {
        return None;
    }
    let half = 1u64 << (n - 1);
    if k == n {
        Some(Ratio::new(1, 1 + half))
    } else if k == 2 {
        Some(Ratio::new(half - 1, 2 * half - 1))
    } else if 2 * k > n {
        // 1 / (1 + (2k-n)/n · 2^(n-1)) = n / (n + (2k-n) 2^(n-1))
        let (n64, k64) = (n as u64, k as u64);
        Some(Ratio::new(n64, n64 + (2 * k64 - n64) * half))
    } else {
        None
    }
}

pub fn analytic_bounds(n: usize, k: usize) -> Option<f64> {
    analytic_bound_exact(n, k).map(|r| *r.numer() as f64 / *r.denom() as f64)
}

/// `b_1..b_n` (index `k - 1`) with the trivial `b_1 = 1`, analytic values
/// where known and linear interpolation in `k` across the unknown gap
/// `2 < k < (n+1)/2`.
pub fn interpolated_bounds(n: usize) -> Vec<f64> {
    let mut b: Vec<Option<f64>> = (1..=n).map(|k| analytic_bounds(n, k)).collect();
    b[0] = Some(1.0);
    let mut k = 1;
    while k < n {
        if b[k].is_none() {
            let lo = k - 1;
            let hi = (k..n).find(|&j| b[j].is_some()).expect("b_n is always known");
            let (bl, bh) = (b[lo].unwrap(), b[hi].unwrap());
            for (j, slot) in b.iter_mut().enumerate().take(hi).skip(k) {
                let t = (j - lo) as f64 / (hi - lo) as f64;
                *slot = Some(bl + t * (bh - bl));
            }
            k = hi;
        }
        k += 1;
    }
    b.into_iter().map(Option::unwrap).collect()
}

/// Largest `k` with `p <= bounds[k-1]`.
fn intactness_under(bounds: &[f64], p: f64) -> usize {
    (1..=bounds.len())
        .rev()
        .find(|&k| p <= bounds[k - 1])
        .unwrap_or(1)
}

/// Ground truth for the noised GHZ state, as far as it is known.
pub fn noised_ghz_truth(n: usize, p: f64) -> IntactnessTruth {
    let known: Vec<f64> = (1..=n)
        .map(|k| if k == 1 { Some(1.0) } else { analytic_bounds(n, k) })
        .map(|b| b.unwrap_or(f64::NAN))
        .collect();
    // Highest known k with p <= b_k; an unknown gap below it means the answer
    // may lie anywhere in that gap.
    let best = (1..=n)
        .rev()
        .find(|&k| !known[k - 1].is_nan() && p <= known[k - 1])
        .unwrap_or(1);
    match (best + 1..=n).find(|&k| !known[k - 1].is_nan()) {
        Some(next) if next > best + 1 => IntactnessTruth::InRange,
        _ => IntactnessTruth::Exact(best),
    }
}

/// Ground truth `(m, d)` for `cos θ|0…0> + sin θ|1…1>`.
pub fn gen_ghz_truth(n: usize, theta: f64) -> (usize, usize) {
    if theta == 0.0 {
        (n, 1)
    } else {
        (1, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    GenGhz,
    NoisedGhz,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub param: f64,
    pub features: FeatureVector,
    pub class_index: usize,
    pub intactness: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub n: usize,
    pub family: Family,
    pub points: Vec<SweepPoint>,
}

/// `points` evenly spaced values from `0` to `end` inclusive.
pub fn grid(points: usize, end: f64) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Parameter(format!(
            "a sweep needs at least 2 points, got {points}"
        )));
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 / last * end).collect())
}

fn model_table(model: &MlpModel, n: usize) -> Result<ClassTable> {
    let table = model.class_table()?;
    if table.n() != n {
        return Err(Error::Compatibility(format!(
            "model is for n = {}, sweep asked for n = {n}",
            table.n()
        )));
    }
    Ok(table)
}

fn run_sweep(
    model: &MlpModel,
    n: usize,
    family: Family,
    params: &[f64],
    exec: Execution,
) -> Result<SweepResult> {
    let table = model_table(model, n)?;
    let points = map_indexed(exec, params.len(), |i| {
        let param = params[i];
        let features = match family {
            Family::GenGhz => features_pure_gen_ghz(n, param)?,
            Family::NoisedGhz => features_noised_ghz(n, param)?,
        };
        let class_index = model.predict(&features)?;
        let (intactness, depth) = table.pair(class_index).expect("argmax within output layer");
        Ok(SweepPoint {
            param,
            features,
            class_index,
            intactness,
            depth,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { n, family, points })
}

/// Generalised GHZ sweep over `θ ∈ [0, π/4]` and exact-class accuracy
/// against [`gen_ghz_truth`].
pub fn sweep_gen_ghz(model: &MlpModel, n: usize, points: usize) -> Result<(SweepResult, f64)> {
    sweep_gen_ghz_with(model, n, points, Execution::Parallel)
}

pub fn sweep_gen_ghz_with(
    model: &MlpModel,
    n: usize,
    points: usize,
    exec: Execution,
) -> Result<(SweepResult, f64)> {
    let sweep = run_sweep(model, n, Family::GenGhz, &grid(points, FRAC_PI_4)?, exec)?;
    let accuracy = gen_ghz_accuracy(&sweep);
    Ok((sweep, accuracy))
}

pub fn gen_ghz_accuracy(sweep: &SweepResult) -> f64 {
    let hits = sweep
        .points
        .iter()
        .filter(|pt| (pt.intactness, pt.depth) == gen_ghz_truth(sweep.n, pt.param))
        .count();
    hits as f64 / sweep.points.len() as f64
}

/// Noised GHZ sweep over `p ∈ [0, 1]`.
pub fn sweep_noised_ghz(model: &MlpModel, n: usize, points: usize) -> Result<SweepResult> {
    sweep_noised_ghz_with(model, n, points, Execution::Parallel)
}

pub fn sweep_noised_ghz_with(
    model: &MlpModel,
    n: usize,
    points: usize,
    exec: Execution,
) -> Result<SweepResult> {
    run_sweep(model, n, Family::NoisedGhz, &grid(points, 1.0)?, exec)
}

/// Fraction of noised-GHZ points predicted correctly under [`correctness_rule`].
pub fn noised_ghz_accuracy(sweep: &SweepResult) -> f64 {
    let hits = sweep
        .points
        .iter()
        .filter(|pt| correctness_rule(sweep.n, pt.intactness, noised_ghz_truth(sweep.n, pt.param)))
        .count();
    hits as f64 / sweep.points.len() as f64
}

impl SweepResult {
    /// `param,mz,mx,az,ax,pred_m,pred_d`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,mz,mx,az,ax,pred_m,pred_d\n");
        for p in &self.points {
            let f = p.features;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.param, f.mz, f.mx, f.az, f.ax, p.intactness, p.depth
            );
        }
        out
    }

    /// Reads a sweep CSV written by [`SweepResult::to_csv`].
    pub fn from_csv(text: &str, n: usize, family: Family) -> Result<Self> {
        let table = class_table(n)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "param,mz,mx,az,ax,pred_m,pred_d" => {}
            _ => return Err(Error::parse(1, "missing sweep header")),
        }
        let mut points = Vec::new();
        for (i, line) in lines {
            let ln = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 7 {
                return Err(Error::parse(ln, format!("expected 7 fields, found {}", f.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(ln, format!("bad number {s:?}")))
            };
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(ln, format!("bad integer {s:?}")))
            };
            let (m, d) = (int(f[5])?, int(f[6])?);
            let class_index = table
                .index_of(m, d)
                .ok_or_else(|| Error::parse(ln, format!("({m}, {d}) is not a class for n = {n}")))?;
            points.push(SweepPoint {
                param: num(f[0])?,
                features: FeatureVector::from_array([num(f[1])?, num(f[2])?, num(f[3])?, num(f[4])?]),
                class_index,
                intactness: m,
                depth: d,
            });
        }
        Ok(Self { n, family, points })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub k: usize,
    pub intactness_bound: Option<f64>,
    pub depth_bound: Option<f64>,
    pub analytic_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn row(&self, k: usize) -> Option<&BoundRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    pub fn intactness_bound(&self, k: usize) -> Option<f64> {
        self.row(k).and_then(|r| r.intactness_bound)
    }

    pub fn depth_bound(&self, k: usize) -> Option<f64> {
        self.row(k).and_then(|r| r.depth_bound)
    }

    /// `k,intactness_bound,depth_bound,analytic_bound`; absent values are empty.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("k,intactness_bound,depth_bound,analytic_bound\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.k,
                cell(r.intactness_bound),
                cell(r.depth_bound),
                cell(r.analytic_bound)
            );
        }
        out
    }
}

/// For each `k`, the largest swept parameter whose predicted intactness
/// (resp. depth) equals `k`. Classes never predicted have no bound.
pub fn extract_bounds(n: usize, points: &[SweepPoint]) -> BoundReport {
    let mut intact = vec![None::<f64>; n + 1];
    let mut depth = vec![None::<f64>; n + 1];
    let raise = |slot: &mut Option<f64>, p: f64| {
        *slot = Some(slot.map_or(p, |b| b.max(p)));
    };
    for pt in points {
        if pt.intactness <= n {
            raise(&mut intact[pt.intactness], pt.param);
        }
        if pt.depth <= n {
            raise(&mut depth[pt.depth], pt.param);
        }
    }
    BoundReport {
        n,
        rows: (1..=n)
            .map(|k| BoundRow {
                k,
                intactness_bound: intact[k],
                depth_bound: depth[k],
                analytic_bound: analytic_bounds(n, k),
            })
            .collect(),
    }
}

impl SweepResult {
    pub fn bounds(&self) -> BoundReport {
        extract_bounds(self.n, &self.points)
    }
}

/// Noised-GHZ validation points on an even `p` grid, labelled
/// `(m, n - m + 1)` with `m` from [`interpolated_bounds`].
pub fn build_sweep_validation(n: usize, points: usize) -> Result<Vec<Sample>> {
    let table = class_table(n)?;
    let bounds = interpolated_bounds(n);
    grid(points, 1.0)?
        .into_iter()
        .map(|p| {
            let m = intactness_under(&bounds, p);
            let label = table
                .index_of(m, n - m + 1)
                .expect("(m, n-m+1) is always feasible");
            Ok(Sample::new(features_noised_ghz(n, p)?, label))
        })
        .collect()
}

/// [`build_sweep_validation`] wrapped with intactness-rule scoring.
pub fn sweep_validation_set(n: usize, points: usize) -> Result<Validation> {
    Ok(Validation {
        samples: build_sweep_validation(n, points)?,
        scoring: Scoring::Intactness(class_table(n)?),
    })
}

/// One row of a measurement file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub state_id: String,
    pub n: usize,
    pub features: FeatureVector,
    pub true_m: Option<usize>,
    pub true_d: Option<usize>,
}

pub const MEASUREMENT_HEADER: &str = "state_id,n,mz,mx,az,ax,true_m,true_d";

/// Parses `state_id,n,mz,mx,az,ax,true_m,true_d` with the last two optional.
pub fn read_measurements(text: &str) -> Result<Vec<MeasurementRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == MEASUREMENT_HEADER => {}
        _ => {
            return Err(Error::Ingestion {
                record: "header".into(),
                message: format!("expected `{MEASUREMENT_HEADER}`"),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let name = format!("line {} ({})", i + 1, f.first().copied().unwrap_or(""));
        let fail = |message: String| Error::Ingestion {
            record: name.clone(),
            message,
        };
        if f.len() != 6 && f.len() != 8 {
            return Err(fail(format!("expected 6 or 8 fields, found {}", f.len())));
        }
        let n: usize = f[1].parse().map_err(|_| fail(format!("bad n {:?}", f[1])))?;
        if n < 2 {
            return Err(fail(format!("n = {n} is below 2")));
        }
        let mut feats = [0.0; 4];
        for (slot, s) in feats.iter_mut().zip(&f[2..6]) {
            *slot = s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fail(format!("non-finite or malformed feature {s:?}")))?;
        }
        let opt = |s: Option<&&str>| -> Result<Option<usize>> {
            match s {
                None | Some(&"") => Ok(None),
                Some(s) => s
                    .parse()
                    .map(Some)
                    .map_err(|_| fail(format!("bad structure value {s:?}"))),
            }
        };
        out.push(MeasurementRecord {
            state_id: f[0].to_string(),
            n,
            features: FeatureVector::from_array(feats),
            true_m: opt(f.get(6))?,
            true_d: opt(f.get(7))?,
        });
    }
    Ok(out)
}

pub fn write_measurements(records: &[MeasurementRecord]) -> String {
    let mut out = format!("{MEASUREMENT_HEADER}\n");
    let cell = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        let f = r.features;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.state_id,
            r.n,
            f.mz,
            f.mx,
            f.az,
            f.ax,
            cell(r.true_m),
            cell(r.true_d)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPrediction {
    pub state_id: String,
    pub true_m: Option<usize>,
    pub true_d: Option<usize>,
    pub pred_m: usize,
    pub pred_d: usize,
}

impl MeasurementPrediction {
    pub fn intactness_correct(&self) -> Option<bool> {
        self.true_m.map(|m| m == self.pred_m)
    }

    pub fn depth_correct(&self) -> Option<bool> {
        self.true_d.map(|d| d == self.pred_d)
    }
}

pub fn predict_measurements(
    model: &MlpModel,
    records: &[MeasurementRecord],
) -> Result<Vec<MeasurementPrediction>> {
    let table = model.class_table()?;
    records
        .iter()
        .map(|r| {
            if r.n != table.n() {
                return Err(Error::Ingestion {
                    record: r.state_id.clone(),
                    message: format!("record is for n = {}, model for n = {}", r.n, table.n()),
                });
            }
            let class = model.predict(&r.features).map_err(|e| Error::Ingestion {
                record: r.state_id.clone(),
                message: e.to_string(),
            })?;
            let (pred_m, pred_d) = table.pair(class).expect("argmax within output layer");
            Ok(MeasurementPrediction {
                state_id: r.state_id.clone(),
                true_m: r.true_m,
                true_d: r.true_d,
                pred_m,
                pred_d,
            })
        })
        .collect()
}

/// `state_id,true_m,true_d,pred_m,pred_d,m_correct,d_correct`.
pub fn predictions_csv(preds: &[MeasurementPrediction]) -> String {
    let cell = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    let flag = |v: Option<bool>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("state_id,true_m,true_d,pred_m,pred_d,m_correct,d_correct\n");
    for p in preds {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.state_id,
            cell(p.true_m),
            cell(p.true_d),
            p.pred_m,
            p.pred_d,
            flag(p.intactness_correct()),
            flag(p.depth_correct())
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn point(p: f64, m: usize, d: usize) -> SweepPoint {
        SweepPoint {
            param: p,
            features: FeatureVector::from_array([0.0; 4]),
            class_index: 0,
            intactness: m,
            depth: d,
        }
    }

    #[test]
    fn analytic_table_n4() {
        assert_eq!(analytic_bound_exact(4, 2), Some(Ratio::new(7, 15)));
        assert_eq!(analytic_bound_exact(4, 4), Some(Ratio::new(1, 9)));
        assert_eq!(analytic_bound_exact(4, 3), Some(Ratio::new(1, 5)));
        assert_abs_diff_eq!(
            analytic_bounds(4, 2).unwrap(),
            0.466_666_666_666_666_7,
            epsilon = 1e-15
        );
        assert_eq!(analytic_bounds(4, 1), None);
        assert_eq!(analytic_bounds(9, 3), None);
        assert!(analytic_bounds(9, 5).is_some());
    }

    #[test]
    fn analytic_bounds_are_ordered() {
        for n in 4..=12 {
            let lo = analytic_bounds(n, n).unwrap();
            let hi = analytic_bounds(n, 2).unwrap();
            for k in n.div_ceil(2).max(3)..n {
                if 2 * k < n + 1 {
                    continue;
                }
                let b = analytic_bounds(n, k).unwrap();
                assert!(lo < b && b < hi, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn interpolation_fills_gap() {
        let b = interpolated_bounds(8);
        // k = 3, 4 unknown for n = 8 ((n+1)/2 = 4.5)
        let (b2, b5) = (analytic_bounds(8, 2).unwrap(), analytic_bounds(8, 5).unwrap());
        assert_abs_diff_eq!(b[2], b2 + (b5 - b2) / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b[3], b2 + 2.0 * (b5 - b2) / 3.0, epsilon = 1e-15);
        assert_eq!(b[0], 1.0);
        assert!(b.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn correctness_examples() {
        assert!(correctness_rule(9, 1, IntactnessTruth::Exact(1)));
        assert!(!correctness_rule(9, 2, IntactnessTruth::Exact(1)));
        assert!(correctness_rule(9, 3, IntactnessTruth::InRange));
        assert!(correctness_rule(9, 3, IntactnessTruth::Exact(2)));
        assert!(!correctness_rule(9, 5, IntactnessTruth::InRange));
        // n = 4: the range (1, 2.5) holds only 2.
        assert!(correctness_rule(4, 2, IntactnessTruth::Exact(2)));
        assert!(!correctness_rule(4, 3, IntactnessTruth::Exact(2)));
        assert!(!correctness_rule(4, 1, IntactnessTruth::InRange));
    }

    #[test]
    fn correctness_range_symmetry() {
        for n in 2..=12 {
            for pred in 1..=n {
                for truth in 1..=n {
                    if in_open_range(n, pred) && in_open_range(n, truth) {
                        assert!(correctness_rule(n, pred, IntactnessTruth::Exact(truth)));
                    }
                    if in_open_range(n, pred) != in_open_range(n, truth) {
                        assert!(!correctness_rule(n, pred, IntactnessTruth::Exact(truth)));
                    }
                }
            }
        }
    }

    #[test]
    fn noised_truth_endpoints() {
        assert_eq!(noised_ghz_truth(4, 0.0), IntactnessTruth::Exact(4));
        assert_eq!(noised_ghz_truth(4, 0.15), IntactnessTruth::Exact(3));
        assert_eq!(noised_ghz_truth(4, 0.3), IntactnessTruth::Exact(2));
        assert_eq!(noised_ghz_truth(4, 1.0), IntactnessTruth::Exact(1));
        assert_eq!(noised_ghz_truth(9, 0.3), IntactnessTruth::InRange);
        assert_eq!(noised_ghz_truth(9, 0.9), IntactnessTruth::Exact(1));
    }

    #[test]
    fn grids() {
        let g = grid(3, FRAC_PI_4).unwrap();
        assert_eq!(g, vec![0.0, FRAC_PI_4 / 2.0, FRAC_PI_4]);
        let g = grid(10_001, 1.0).unwrap();
        assert_eq!((g[0], g[10_000]), (0.0, 1.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(grid(1, 1.0).is_err());
    }

    #[test]
    fn bounds_from_monotone_predictions() {
        let pts: Vec<_> = grid(11, 1.0)
            .unwrap()
            .into_iter()
            .map(|p| {
                if p <= 0.2 {
                    point(p, 4, 1)
                } else if p <= 0.6 {
                    point(p, 2, 2)
                } else {
                    point(p, 1, 4)
                }
            })
            .collect();
        let r = extract_bounds(4, &pts);
        assert_abs_diff_eq!(r.intactness_bound(4).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(r.intactness_bound(2).unwrap(), 0.6, epsilon = 1e-15);
        assert_eq!(r.intactness_bound(1), Some(1.0));
        assert_eq!(r.intactness_bound(3), None);
        // monotone non-increasing intactness -> bounds increase as k decreases
        let present: Vec<f64> = (1..=4).rev().filter_map(|k| r.intactness_bound(k)).collect();
        assert!(present.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bounds_take_literal_largest_p() {
        let pts = vec![
            point(0.1, 3, 2),
            point(0.2, 2, 2),
            point(0.3, 3, 2),
            point(0.4, 1, 4),
        ];
        let r = extract_bounds(4, &pts);
        assert_eq!(r.intactness_bound(3), Some(0.3));
        assert_eq!(r.intactness_bound(2), Some(0.2));
        let mut dup = pts.clone();
        dup.extend(pts.iter().copied());
        dup.push(pts[1]);
        assert_eq!(extract_bounds(4, &dup), r);
    }

    #[test]
    fn sweep_validation_labels() {
        let table = class_table(4).unwrap();
        let v = build_sweep_validation(4, 101).unwrap();
        assert_eq!(table.pair(v[0].label), Some((4, 1)));
        assert_eq!(table.pair(v[100].label), Some((1, 4)));
        assert_eq!(table.pair(v[15].label), Some((3, 2)));
        assert_eq!(table.pair(v[40].label), Some((2, 3)));
        // n = 7: p between b_2 and b_4 falls in the interpolated k = 3 region.
        let b = interpolated_bounds(7);
        let t7 = class_table(7).unwrap();
        let v7 = build_sweep_validation(7, 2001).unwrap();
        let p = 0.5 * (b[2] + b[3]);
        let idx = (p * 2000.0).round() as usize;
        assert_eq!(t7.pair(v7[idx].label), Some((3, 5)));
    }

    #[test]
    fn measurement_round_trip_and_errors() {
        let recs = vec![
            MeasurementRecord {
                state_id: "a".into(),
                n: 4,
                features: features_noised_ghz(4, 0.7).unwrap(),
                true_m: Some(1),
                true_d: Some(4),
            },
            MeasurementRecord {
                state_id: "b".into(),
                n: 4,
                features: features_noised_ghz(4, 0.1).unwrap(),
                true_m: None,
                true_d: None,
            },
        ];
        let text = write_measurements(&recs);
        assert_eq!(read_measurements(&text).unwrap(), recs);

        let bad = text.replace("b,4,", "b,4,NaN,");
        match read_measurements(&bad) {
            Err(Error::Ingestion { record, .. }) => assert!(record.contains("(b)"), "{record}"),
            other => panic!("expected ingestion error, got {other:?}"),
        }
        let inf = format!("{MEASUREMENT_HEADER}\nz,4,1,0.5,inf,0.1,,\n");
        assert!(matches!(read_measurements(&inf), Err(Error::Ingestion { .. })));
        assert!(read_measurements("nope\n").is_err());
    }

    #[test]
    fn sweep_csv_round_trip() {
        let model = crate::mlp::MlpModel::zeros(&[4, 3, 5])
            .unwrap()
            .for_qubits(4)
            .unwrap();
        let s = sweep_noised_ghz(&model, 4, 11).unwrap();
        assert_eq!(s.points.len(), 11);
        let back = SweepResult::from_csv(&s.to_csv(), 4, Family::NoisedGhz).unwrap();
        assert_eq!(back, s);
    }
}
