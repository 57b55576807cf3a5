//! Tool-comparison statistics: per-row ranking, Friedman test, Vargha-Delaney
//! effect size, Mann-Whitney U p-values and summary tables.
//!
//! Everything is generic over the float type; `crate::ResultMatrix` and
//! friends are the `f64` instantiations.

pub mod special;

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_traits::Float;

/// Sample sizes up to this total use the exact permutation distribution.
pub const EXACT_MANN_WHITNEY_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("matrix is not rectangular: row {row} has {found} values, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("label count mismatch: {0}")]
    Labels(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("need at least {min_rows} rows and {min_cols} columns")]
    TooSmall { min_rows: usize, min_cols: usize },
    #[error("all rows are fully tied")]
    DegenerateInput,
    #[error("empty sample")]
    EmptySample,
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultMatrix<F> {
    rows: Vec<String>,
    cols: Vec<String>,
    values: Vec<Vec<F>>,
    direction: Direction,
}

fn check_shape<F: Float>(rows: &[String], cols: &[String], values: &[Vec<F>]) -> Result<(), StatsError> {
    if rows.len() != values.len() {
        return Err(StatsError::Labels(format!("{} row labels for {} rows", rows.len(), values.len())));
    }
    for (i, row) in values.iter().enumerate() {
        if row.len() != cols.len() {
            return Err(StatsError::Ragged {
                row: i,
                found: row.len(),
                expected: cols.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite { row: i, col: j });
        }
    }
    Ok(())
}

impl<F: Float> ResultMatrix<F> {
    pub fn new(
        rows: Vec<String>,
        cols: Vec<String>,
        values: Vec<Vec<F>>,
        direction: Direction,
    ) -> Result<Self, StatsError> {
        check_shape(&rows, &cols, &values)?;
        Ok(Self {
            rows,
            cols,
            values,
            direction,
        })
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn values(&self) -> &[Vec<F>] {
        &self.values
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn row(&self, label: &str) -> Option<&[F]> {
        let i = self.rows.iter().position(|r| r == label)?;
        Some(&self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix<F> {
    rows: Vec<String>,
    cols: Vec<String>,
    ranks: Vec<Vec<F>>,
}

impl<F: Float> RankMatrix<F> {
    /// Wraps ranks computed elsewhere, e.g. a transcribed table.
    pub fn new(rows: Vec<String>, cols: Vec<String>, ranks: Vec<Vec<F>>) -> Result<Self, StatsError> {
        check_shape(&rows, &cols, &ranks)?;
        Ok(Self { rows, cols, ranks })
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn ranks(&self) -> &[Vec<F>] {
        &self.ranks
    }

    pub fn row(&self, label: &str) -> Option<&[F]> {
        let i = self.rows.iter().position(|r| r == label)?;
        Some(&self.ranks[i])
    }
}

fn f<F: Float>(v: f64) -> F {
    F::from(v).expect("value fits the float type")
}

fn from_usize<F: Float>(v: usize) -> F {
    F::from(v).expect("count fits the float type")
}

/// Ranks of `values` in ascending order (smallest gets 1), ties averaged.
pub fn midranks<F: Float>(values: &[F]) -> Vec<F> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![F::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share the mean of ranks i+1..=j+1
        let avg = from_usize::<F>(i + j + 2) / f(2.0);
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Rank each row so that the best value gets rank 1.
pub fn rank_rows<F: Float>(m: &ResultMatrix<F>) -> RankMatrix<F> {
    let ranks = m
        .values
        .iter()
        .map(|row| match m.direction {
            Direction::LowerBetter => midranks(row),
            Direction::HigherBetter => {
                let negated: Vec<F> = row.iter().map(|v| -*v).collect();
                midranks(&negated)
            }
        })
        .collect();
    RankMatrix {
        rows: m.rows.clone(),
        cols: m.cols.clone(),
        ranks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedmanResult<F> {
    pub chi2: F,
    pub p: F,
    pub df: usize,
}

/// Tie-corrected Friedman statistic with its chi-square p-value.
pub fn friedman<F: Float>(r: &RankMatrix<F>) -> Result<FriedmanResult<F>, StatsError> {
    let n = r.ranks.len();
    let k = r.cols.len();
    if n < 2 || k < 2 {
        return Err(StatsError::TooSmall { min_rows: 2, min_cols: 2 });
    }
    let nf = from_usize::<F>(n);
    let kf = from_usize::<F>(k);
    let kp1 = kf + F::one();
    let four = f::<F>(4.0);

    let mut sum_rj2 = F::zero();
    for j in 0..k {
        let rj = r.ranks.iter().fold(F::zero(), |acc, row| acc + row[j]);
        sum_rj2 = sum_rj2 + rj * rj;
    }
    let sum_r2 = r
        .ranks
        .iter()
        .flat_map(|row| row.iter())
        .fold(F::zero(), |acc, v| acc + *v * *v);

    let numerator = (kf - F::one()) * (sum_rj2 - nf * nf * kf * kp1 * kp1 / four);
    let denominator = sum_r2 - nf * kf * kp1 * kp1 / four;
    let scale = nf * kf * kp1 * kp1;
    if denominator.abs() <= F::epsilon() * scale {
        return Err(StatsError::DegenerateInput);
    }
    let chi2 = numerator / denominator;
    let chi2 = if chi2 < F::zero() { F::zero() } else { chi2 };
    let p = special::chi_square_sf(chi2, from_usize::<F>(k - 1));
    Ok(FriedmanResult { chi2, p, df: k - 1 })
}

/// Vargha-Delaney A: probability that a draw from `xs` beats one from `ys`.
pub fn a12<F: Float>(xs: &[F], ys: &[F]) -> Result<F, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::EmptySample);
    }
    // Rank-sum form, O((n+m) log(n+m)).
    let pooled: Vec<F> = xs.iter().chain(ys.iter()).copied().collect();
    let ranks = midranks(&pooled);
    let r1 = ranks[..xs.len()].iter().fold(F::zero(), |a, v| a + *v);
    let n = from_usize::<F>(xs.len());
    let m = from_usize::<F>(ys.len());
    Ok((r1 / n - (n + F::one()) / f(2.0)) / m)
}

/// Two-sided Mann-Whitney U p-value.
pub fn mann_whitney_p<F: Float>(xs: &[F], ys: &[F]) -> Result<F, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if xs.len() + ys.len() <= EXACT_MANN_WHITNEY_LIMIT {
        Ok(mann_whitney_exact(xs, ys))
    } else {
        Ok(mann_whitney_normal(xs, ys))
    }
}

/// Exact two-sided p from the permutation distribution of U, ties included.
pub fn mann_whitney_exact<F: Float>(xs: &[F], ys: &[F]) -> F {
    let n = xs.len();
    let m = ys.len();
    let total = n + m;
    let pooled: Vec<F> = xs.iter().chain(ys.iter()).copied().collect();
    // Midranks doubled are integers.
    let doubled: Vec<usize> = midranks(&pooled)
        .into_iter()
        .map(|r| (r * f(2.0)).round().to_usize().expect("rank is small"))
        .collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[j][s]: subsets of size j with doubled rank sum s
    let mut ways = vec![vec![0u64; max_sum + 1]; n + 1];
    ways[0][0] = 1;
    for &d in &doubled {
        for j in (1..=n).rev() {
            for s in (d..=max_sum).rev() {
                ways[j][s] += ways[j - 1][s - d];
            }
        }
    }
    // 2U = 2R - n(n+1); the centre of 2U is nm.
    let offset = (n * (n + 1)) as i64;
    let centre = (n * m) as i64;
    let observed: i64 = doubled[..n].iter().sum::<usize>() as i64;
    let observed_dev = (observed - offset - centre).abs();
    let mut extreme = 0u64;
    let mut all = 0u64;
    for (s, &w) in ways[n].iter().enumerate() {
        if w == 0 {
            continue;
        }
        all += w;
        if (s as i64 - offset - centre).abs() >= observed_dev {
            extreme += w;
        }
    }
    debug_assert_eq!(all, binomial(total, n));
    F::from(extreme).unwrap() / F::from(all).unwrap()
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Normal approximation with tie and continuity correction.
pub fn mann_whitney_normal<F: Float>(xs: &[F], ys: &[F]) -> F {
    let n = from_usize::<F>(xs.len());
    let m = from_usize::<F>(ys.len());
    let total = xs.len() + ys.len();
    let nt = from_usize::<F>(total);
    let pooled: Vec<F> = xs.iter().chain(ys.iter()).copied().collect();
    let ranks = midranks(&pooled);
    let r1 = ranks[..xs.len()].iter().fold(F::zero(), |a, v| a + *v);
    let u = r1 - n * (n + F::one()) / f(2.0);
    let mu = n * m / f(2.0);

    let mut sorted = pooled.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut tie_term = F::zero();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = from_usize::<F>(j - i + 1);
        tie_term = tie_term + t * t * t - t;
        i = j + 1;
    }
    let var = n * m / f(12.0) * ((nt + F::one()) - tie_term / (nt * (nt - F::one())));
    if var <= F::zero() {
        return F::one();
    }
    let dev = (u - mu).abs() - f(0.5);
    let z = if dev < F::zero() { F::zero() } else { dev / var.sqrt() };
    let p = special::normal_two_sided(z);
    if p > F::one() {
        F::one()
    } else {
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary<F> {
    pub label: String,
    pub mean: F,
    pub median: F,
    pub mean_rank: F,
    pub median_rank: F,
}

pub fn mean<F: Float>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::nan();
    }
    xs.iter().fold(F::zero(), |a, v| a + *v) / from_usize(xs.len())
}

/// Median; the midpoint mean for even lengths.
pub fn median<F: Float>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::nan();
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / f(2.0)
    }
}

fn column<F: Float>(rows: &[Vec<F>], j: usize) -> Vec<F> {
    rows.iter().map(|r| r[j]).collect()
}

/// Per-column mean and median of values and of the ranks `rank_rows` assigns.
pub fn summarize<F: Float>(m: &ResultMatrix<F>) -> Vec<ColumnSummary<F>> {
    summarize_with_ranks(m, &rank_rows(m))
}

/// Like [`summarize`] but with externally supplied ranks.
pub fn summarize_with_ranks<F: Float>(m: &ResultMatrix<F>, r: &RankMatrix<F>) -> Vec<ColumnSummary<F>> {
    m.cols
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let values = column(&m.values, j);
            let ranks = column(&r.ranks, j);
            ColumnSummary {
                label: label.clone(),
                mean: mean(&values),
                median: median(&values),
                mean_rank: mean(&ranks),
                median_rank: median(&ranks),
            }
        })
        .collect()
}

fn parse_csv<F: Float>(text: &str) -> Result<(Vec<String>, Vec<String>, Vec<Vec<F>>), StatsError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| StatsError::Csv(e.to_string()))?.clone();
    if headers.len() < 2 {
        return Err(StatsError::Csv("expected a label column and at least one value column".into()));
    }
    let cols: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| StatsError::Csv(e.to_string()))?;
        rows.push(record.get(0).unwrap_or_default().to_string());
        let mut row = Vec::with_capacity(cols.len());
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| StatsError::Csv(format!("row {}, column {}: not a number: {cell:?}", i + 1, j + 1)))?;
            row.push(F::from(v).ok_or(StatsError::NonFinite { row: i, col: j })?);
        }
        values.push(row);
    }
    Ok((rows, cols, values))
}

/// Reads `label,<col>,<col>...` CSV with one row per block.
pub fn matrix_from_csv<F: Float>(text: &str, direction: Direction) -> Result<ResultMatrix<F>, StatsError> {
    let (rows, cols, values) = parse_csv(text)?;
    ResultMatrix::new(rows, cols, values, direction)
}

pub fn ranks_from_csv<F: Float>(text: &str) -> Result<RankMatrix<F>, StatsError> {
    let (rows, cols, ranks) = parse_csv(text)?;
    RankMatrix::new(rows, cols, ranks)
}

/// Renders values with ranks in parentheses, followed by Average and Median rows.
pub fn render_table<F: Float + std::fmt::Display + std::fmt::LowerExp>(m: &ResultMatrix<F>) -> String {
    let ranks = rank_rows(m);
    let summary = summarize_with_ranks(m, &ranks);
    let cell = |v: F, r: F| format!("{v:.1} ({r:.1})");
    let label_width = m.rows.iter().map(String::len).chain(["Average".len()]).max().unwrap_or(7);
    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "");
    for c in &m.cols {
        let _ = write!(out, "  {c:>14}");
    }
    out.push('\n');
    for (i, label) in m.rows.iter().enumerate() {
        let _ = write!(out, "{label:<label_width$}");
        for j in 0..m.cols.len() {
            let _ = write!(out, "  {:>14}", cell(m.values[i][j], ranks.ranks[i][j]));
        }
        out.push('\n');
    }
    for (name, pick) in [
        ("Average", (|s: &ColumnSummary<F>| (s.mean, s.mean_rank)) as fn(&ColumnSummary<F>) -> (F, F)),
        ("Median", |s: &ColumnSummary<F>| (s.median, s.median_rank)),
    ] {
        let _ = write!(out, "{name:<label_width$}");
        for s in &summary {
            let (v, r) = pick(s);
            let _ = write!(out, "  {:>14}", cell(v, r));
        }
        out.push('\n');
    }
    if let Ok(fr) = friedman(&ranks) {
        let _ = writeln!(out, "Friedman chi2 = {:.3}, df = {}, p = {:.3e}", fr.chi2, fr.df, fr.p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: Vec<Vec<f64>>, direction: Direction) -> ResultMatrix<f64> {
        let k = rows.first().map_or(0, Vec::len);
        ResultMatrix::new(
            (0..rows.len()).map(|i| format!("r{i}")).collect(),
            (0..k).map(|j| format!("c{j}")).collect(),
            rows,
            direction,
        )
        .unwrap()
    }

    #[test]
    fn rank_examples() {
        let r = rank_rows(&matrix(vec![vec![0.0, 0.0, 6.9, 0.0, 0.0, 12.5]], Direction::HigherBetter));
        assert_eq!(r.ranks()[0], vec![4.5, 4.5, 2.0, 4.5, 4.5, 1.0]);
        let r = rank_rows(&matrix(vec![vec![0.0; 6]], Direction::HigherBetter));
        assert_eq!(r.ranks()[0], vec![3.5; 6]);
        let r = rank_rows(&matrix(vec![vec![3.0, 1.0, 2.0]], Direction::HigherBetter));
        assert_eq!(r.ranks()[0], vec![1.0, 3.0, 2.0]);
        let r = rank_rows(&matrix(vec![vec![3.0, 1.0, 2.0]], Direction::LowerBetter));
        assert_eq!(r.ranks()[0], vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn ragged_rejected() {
        let err = ResultMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![vec![1.0, 2.0], vec![1.0]],
            Direction::HigherBetter,
        )
        .unwrap_err();
        assert!(matches!(err, StatsError::Ragged { row: 1, .. }));
        assert!(ResultMatrix::new(vec!["a".into()], vec!["x".into()], vec![vec![f64::NAN]], Direction::HigherBetter).is_err());
    }

    // Untied closed form, independent of the tie-corrected implementation.
    fn untied_friedman(r: &[Vec<f64>]) -> f64 {
        let n = r.len() as f64;
        let k = r[0].len() as f64;
        let mut s = 0.0;
        for j in 0..r[0].len() {
            let mean_rank = r.iter().map(|row| row[j]).sum::<f64>() / n;
            s += (mean_rank - (k + 1.0) / 2.0).powi(2);
        }
        12.0 * n / (k * (k + 1.0)) * s
    }

    #[test]
    fn friedman_identical_rows() {
        let rows = vec![vec![1.0, 2.0, 3.0]; 3];
        let rm = RankMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into(), "y".into(), "z".into()],
            rows.clone(),
        )
        .unwrap();
        let fr = friedman(&rm).unwrap();
        assert!((fr.chi2 - untied_friedman(&rows)).abs() < 1e-12);
        assert!((fr.chi2 - 6.0).abs() < 1e-12);
        assert_eq!(fr.df, 2);
        assert!((fr.p - (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn friedman_degenerate_and_small() {
        let rm = RankMatrix::new(vec!["a".into(), "b".into()], vec!["x".into(), "y".into()], vec![vec![1.5, 1.5]; 2]).unwrap();
        assert_eq!(friedman(&rm).unwrap_err(), StatsError::DegenerateInput);
        let rm = RankMatrix::new(vec!["a".into()], vec!["x".into(), "y".into()], vec![vec![1.0, 2.0]]).unwrap();
        assert!(matches!(friedman(&rm), Err(StatsError::TooSmall { .. })));
    }

    #[test]
    fn a12_examples() {
        assert_eq!(a12(&[1.0, 2.0], &[1.0, 3.0]).unwrap(), 0.375);
        assert_eq!(a12(&[5.0, 6.0], &[5.0, 6.0]).unwrap(), 0.5);
        assert_eq!(a12(&[10.0, 11.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(a12::<f64>(&[], &[1.0]).unwrap_err(), StatsError::EmptySample);
    }

    #[test]
    fn mann_whitney_examples() {
        assert_eq!(mann_whitney_p(&[1.0], &[1.0]).unwrap(), 1.0);
        // 2 of the 20 arrangements are as extreme as complete separation.
        assert!((mann_whitney_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap() - 0.1).abs() < 1e-15);
        let xs: Vec<f64> = (0..10).map(|i| 100.0 + i as f64).collect();
        let ys: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(mann_whitney_p(&xs, &ys).unwrap() < 0.001);
    }

    #[test]
    fn normal_branch_matches_known_value() {
        // n=m=10, complete separation: U=100, mu=50, sigma^2=175, z=(50-0.5)/sqrt(175)
        let xs: Vec<f64> = (0..10).map(|i| 100.0 + i as f64).collect();
        let ys: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let z = 49.5 / 175f64.sqrt();
        let expected = special::normal_two_sided(z);
        assert!((mann_whitney_normal(&xs, &ys) - expected).abs() < 1e-15);
        assert!((expected - 0.000_182_7).abs() < 1e-6);
    }

    #[test]
    fn summary_of_single_row() {
        let s = summarize(&matrix(vec![vec![4.0, 2.0]], Direction::HigherBetter));
        assert_eq!((s[0].mean, s[0].median, s[0].mean_rank), (4.0, 4.0, 1.0));
        assert_eq!((s[1].mean, s[1].median, s[1].median_rank), (2.0, 2.0, 2.0));
    }

    #[test]
    fn even_median_is_midpoint() {
        assert_eq!(median(&[1.0, 4.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn csv_round() {
        let m: ResultMatrix<f64> = matrix_from_csv("sut,A,B\nx,1.0,2\ny,3,4\n", Direction::HigherBetter).unwrap();
        assert_eq!(m.cols(), ["A", "B"]);
        assert_eq!(m.row("y").unwrap(), [3.0, 4.0]);
        assert!(matrix_from_csv::<f64>("sut,A\nx,abc\n", Direction::HigherBetter).is_err());
        let text = render_table(&m);
        assert!(text.contains("Average") && text.contains("2.0 (2.0)") && text.contains("3.0 (1.0)"));
    }

    #[test]
    fn generic_over_f32() {
        let m = ResultMatrix::<f32>::new(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![vec![1.0, 2.0], vec![3.0, 1.0]],
            Direction::HigherBetter,
        )
        .unwrap();
        assert_eq!(rank_rows(&m).ranks()[0], vec![2.0f32, 1.0]);
        assert_eq!(a12(&[1.0f32], &[0.0]).unwrap(), 1.0);
    }

    fn tied_row() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0i32..4, 1..9).prop_map(|v| v.into_iter().map(f64::from).collect())
    }

    proptest! {
        #[test]
        fn row_ranks_sum_to_triangular(row in tied_row()) {
            let k = row.len() as f64;
            let r = rank_rows(&matrix(vec![row], Direction::HigherBetter));
            let sum: f64 = r.ranks()[0].iter().sum();
            prop_assert!((sum - k * (k + 1.0) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn a12_complements(xs in proptest::collection::vec(-5i32..5, 1..8), ys in proptest::collection::vec(-5i32..5, 1..8)) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let ys: Vec<f64> = ys.into_iter().map(f64::from).collect();
            prop_assert!((a12(&xs, &ys).unwrap() + a12(&ys, &xs).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn a12_monotone_invariant(xs in proptest::collection::vec(-5i32..5, 1..8), ys in proptest::collection::vec(-5i32..5, 1..8)) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let ys: Vec<f64> = ys.into_iter().map(f64::from).collect();
            let t = |v: &f64| (v * 0.5).exp() + 3.0;
            let tx: Vec<f64> = xs.iter().map(t).collect();
            let ty: Vec<f64> = ys.iter().map(t).collect();
            prop_assert!((a12(&xs, &ys).unwrap() - a12(&tx, &ty).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn friedman_permutation_invariant(
            rows in proptest::collection::vec(proptest::collection::vec(0i32..5, 4), 3..8),
            shift in 0usize..4,
        ) {
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
            let base = rank_rows(&matrix(rows.clone(), Direction::HigherBetter));
            let mut permuted_rows = rows.clone();
            permuted_rows.reverse();
            let relabelled: Vec<Vec<f64>> = permuted_rows
                .iter()
                .map(|r| (0..4).map(|j| r[(j + shift) % 4]).collect())
                .collect();
            let other = rank_rows(&matrix(relabelled, Direction::HigherBetter));
            match (friedman(&base), friedman(&other)) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((a.chi2 - b.chi2).abs() < 1e-9);
                    prop_assert!((a.p - b.p).abs() < 1e-9);
                }
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }

        #[test]
        fn p_values_in_unit_interval(xs in proptest::collection::vec(0i32..20, 1..15), ys in proptest::collection::vec(0i32..20, 1..15)) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let ys: Vec<f64> = ys.into_iter().map(f64::from).collect();
            let p = mann_whitney_p(&xs, &ys).unwrap();
            prop_assert!(p > 0.0 && p <= 1.0);
        }
    }
}
