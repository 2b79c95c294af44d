//! Closed-form coherence and counting bounds, the spark/Welch case analysis,
//! Radon–Hurwitz numbers and the data behind the coherence-bound plot.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eigen, Field, Scalar};
use crate::subspaces::{block_coherence, SubspaceSequence};

/// Parameters `(d, r, n)` of `n` subspaces of dimension `r` in `F^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ParamTriple {
    pub d: usize,
    pub r: usize,
    pub n: usize,
}

impl ParamTriple {
    pub fn new(d: usize, r: usize, n: usize) -> Result<Self> {
        if d == 0 || r == 0 || n == 0 {
            return Err(Error::InvalidInput(format!("d, r, n must be positive, got ({d},{r},{n})")));
        }
        if r > d {
            return Err(Error::InvalidInput(format!("r = {r} exceeds d = {d}")));
        }
        Ok(ParamTriple { d, r, n })
    }

    /// `⌊d/r⌋`.
    pub fn f(&self) -> usize {
        self.d / self.r
    }
}

impl fmt::Display for ParamTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.d, self.r, self.n)
    }
}

/// `√((n/(d/r) − 1)/(n − 1))`, the smallest possible block coherence.
pub fn welch_bound(t: ParamTriple) -> Result<f64> {
    if t.n < 2 {
        return Err(Error::InvalidInput("the Welch bound needs n >= 2".into()));
    }
    let nr = t.n * t.r;
    if nr < t.d {
        return Err(Error::BoundVacuous { nr, d: t.d });
    }
    let (n, d, r) = (t.n as f64, t.d as f64, t.r as f64);
    Ok((((n * r - d) / d) / (n - 1.0)).sqrt())
}

/// `1/⌊d/r⌋`, valid for `d > r` and more than `d/r` subspaces.
pub fn spark_bound(d: usize, r: usize) -> Result<f64> {
    if r == 0 || d <= r {
        return Err(Error::InvalidInput(format!("the spark bound needs d > r >= 1, got d = {d}, r = {r}")));
    }
    Ok(1.0 / (d / r) as f64)
}

/// `⌈1/μ⌉ + 1`; values of `1/μ` within `1e-12` of an integer are snapped to it.
pub fn spark_floor_from_coherence(mu: f64) -> Result<usize> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidInput(format!("coherence must lie in (0,1], got {mu}")));
    }
    let inv = 1.0 / mu;
    let nearest = inv.round();
    let ceil = if (inv - nearest).abs() <= 1e-12 * nearest { nearest } else { inv.ceil() };
    Ok(ceil as usize + 1)
}

/// Lower bound and computed value of `λ_min` of a subset's fusion Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GershgorinCheck {
    pub bound: f64,
    pub computed: f64,
    pub independent: bool,
}

/// Block Gershgorin check that any `k ≤ ⌈1/μ⌉` subspaces are linearly independent.
pub fn independence_by_gershgorin<T: Scalar>(s: &SubspaceSequence<T>, subset: &[usize]) -> Result<GershgorinCheck> {
    let k = subset.len();
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if k == 0 || sorted.len() != k || k > s.n() {
        return Err(Error::InvalidInput(format!("subset must hold 1..={} distinct indices", s.n())));
    }
    let mu = if s.n() >= 2 { block_coherence(s)? } else { 0.0 };
    if mu > 0.0 && k > (1.0 / mu - 1e-12).ceil() as usize {
        return Err(Error::InvalidInput(format!("k = {k} exceeds ceil(1/mu) for mu = {mu}")));
    }
    let phi = s.subsequence(subset)?.synthesis();
    let (evals, _) = hermitian_eigen(&(phi.adjoint() * &phi))?;
    let computed = evals[0];
    let bound = 1.0 - (k as f64 - 1.0) * mu;
    if computed < bound - 1e-9 {
        return Err(Error::InternalInconsistency(format!(
            "lambda_min {computed} below the Gershgorin bound {bound}"
        )));
    }
    Ok(GershgorinCheck {
        bound,
        computed,
        independent: computed > 1e-9,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Comparison {
    SparkExceeds,
    Equal,
    WelchExceeds,
}

/// Which clause of the spark-versus-Welch case analysis applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CaseLabel {
    I,
    II,
    III,
    IV,
    V,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::I => "I",
            CaseLabel::II => "II",
            CaseLabel::III => "III",
            CaseLabel::IV => "IV",
            CaseLabel::V => "V",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub triple: ParamTriple,
    pub welch: f64,
    pub spark: f64,
    pub comparison: Comparison,
    pub case_label: Option<CaseLabel>,
    pub eitff_excluded: bool,
    /// `(d/r, n)` is one of the two coincidence points where existence is unknown.
    pub open_problem: bool,
    pub f: usize,
    pub k: usize,
}

fn is_open_point(t: ParamTriple) -> bool {
    (11 * t.d == 32 * t.r && t.n == 8) || (7 * t.d == 27 * t.r && t.n == 6)
}

/// Compares the spark and Welch bounds for `1 < d/r < n` in exact integer arithmetic.
///
/// Spark exceeds Welch iff `(n−1)·d > f²·(n·r − d)`, with `f = ⌊d/r⌋`.
pub fn classify_spark_vs_welch(t: ParamTriple) -> Result<BoundsReport> {
    let (d, r, n) = (t.d, t.r, t.n);
    if !(r < d && d < n * r) {
        return Err(Error::OutOfScope(format!("need 1 < d/r < n, got (d,r,n) = {t}")));
    }
    let f = t.f();
    let k = n - f;
    let lhs = ((n - 1) * d) as u128;
    let rhs = (f * f) as u128 * (n * r - d) as u128;
    let comparison = match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => Comparison::SparkExceeds,
        std::cmp::Ordering::Equal => Comparison::Equal,
        std::cmp::Ordering::Less => Comparison::WelchExceeds,
    };
    let case_label = if comparison == Comparison::SparkExceeds {
        Some(match (f, k) {
            (1, _) => CaseLabel::I,
            (_, 1) => CaseLabel::II,
            (_, 2) => CaseLabel::III,
            (2, 3..=6) => CaseLabel::IV,
            (3, 3) => CaseLabel::V,
            _ => {
                return Err(Error::InternalInconsistency(format!(
                    "spark exceeds Welch at {t} outside every case"
                )))
            }
        })
    } else {
        None
    };
    Ok(BoundsReport {
        triple: t,
        welch: welch_bound(t)?,
        spark: spark_bound(d, r)?,
        comparison,
        case_label,
        eitff_excluded: comparison == Comparison::SparkExceeds,
        open_problem: is_open_point(t),
        f,
        k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TableRow {
    pub triple: ParamTriple,
    pub case: CaseLabel,
}

/// Every triple with `d ≤ d_max` excluded by cases IV or V, sorted by `(d, r, n)`.
///
/// Only `r ≤ d/2` and `n ≤ ⌊d/r⌋ + 6` can reach those cases, so the scan stops there.
pub fn nonexistence_table(d_max: usize) -> Result<Vec<TableRow>> {
    if d_max < 8 {
        return Err(Error::InvalidInput(format!("d_max must be at least 8, got {d_max}")));
    }
    let mut rows = Vec::new();
    for d in 2..=d_max {
        for r in 1..=d / 2 {
            let f = d / r;
            for n in (f + 1)..=(f + 6) {
                let t = ParamTriple { d, r, n };
                if let Some(case @ (CaseLabel::IV | CaseLabel::V)) = classify_spark_vs_welch(t)?.case_label {
                    rows.push(TableRow { triple: t, case });
                }
            }
        }
    }
    rows.sort();
    Ok(rows)
}

/// Number of columns in the published nonexistence table. It shows the first
/// 36 rows of `nonexistence_table(29)`; the enumeration continues with
/// `(29,10,6)`, `(29,10,7)` and `(29,11,5)`.
pub const PUBLISHED_TABLE_LEN: usize = 36;

/// The published nonexistence table.
pub fn published_table() -> Vec<TableRow> {
    let mut rows = nonexistence_table(29).expect("29 >= 8");
    rows.truncate(PUBLISHED_TABLE_LEN);
    rows
}

/// Adds the Naimark complement `(rn−d, r, n)` of every row, keeping `(d, r, n)` order.
pub fn with_naimark_complements(rows: &[TableRow]) -> Vec<TableRow> {
    let mut out = rows.to_vec();
    for row in rows {
        let t = row.triple;
        out.push(TableRow {
            triple: ParamTriple { d: t.r * t.n - t.d, r: t.r, n: t.n },
            case: row.case,
        });
    }
    out.sort();
    out
}

/// CSV with header `d,r,n,case` and LF line endings.
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("d,r,n,case\n");
    for row in rows {
        let t = row.triple;
        let _ = writeln!(out, "{},{},{},{}", t.d, t.r, t.n, row.case);
    }
    out
}

/// Decomposition `r = (2a+1)·2^{4b+c}` with `0 ≤ c ≤ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RadonHurwitzInput {
    pub r: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl RadonHurwitzInput {
    pub fn decompose(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidInput("r must be positive".into()));
        }
        let e = r.trailing_zeros() as usize;
        Ok(RadonHurwitzInput {
            r,
            a: (r >> e) / 2,
            b: e / 4,
            c: e % 4,
        })
    }
}

/// `ρ_ℝ(r) = 8b + 2^c` and `ρ_ℂ(r) = 8b + 2c + 2`.
pub fn radon_hurwitz(r: usize, field: Field) -> Result<usize> {
    let RadonHurwitzInput { b, c, .. } = RadonHurwitzInput::decompose(r)?;
    Ok(match field {
        Field::Real => 8 * b + (1 << c),
        Field::Complex => 8 * b + 2 * c + 2,
    })
}

/// Upper bounds on the number of subspaces in an EI with `α ≠ 1`.
/// `k3` is negative for some `r` close to `d`, where no such EI with `n ≥ 3` exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountingBounds {
    pub gerzon: i64,
    pub lemmens_seidel: i64,
    pub k3: i64,
}

pub fn counting_bounds(d: usize, r: usize, field: Field) -> Result<CountingBounds> {
    if r == 0 || r > d {
        return Err(Error::InvalidInput(format!("need 1 <= r <= d, got d = {d}, r = {r}")));
    }
    let (hd, hr) = (field.dim_h(d) as i64, field.dim_h(r) as i64);
    Ok(CountingBounds {
        gerzon: hd,
        lemmens_seidel: hd - hr + 1,
        k3: hd - 3 * hr + 3,
    })
}

/// Largest `n` admitting an EI of `r`-dimensional subspaces of `F^{2r}`.
///
/// Without `alpha` this is `ρ_F(r) + 2`. With `alpha` (real field only) it is the
/// largest `n ≥ 2` satisfying either `2(α²−1) < (2α²−1)n` with `n ≤ ρ+1`
/// or `2(α²−1) = (2α²−1)n` with `n ≤ ρ+2`, and 1 when there is none.
pub fn max_ei_count_2r(r: usize, field: Field, alpha: Option<f64>) -> Result<usize> {
    let rho = radon_hurwitz(r, field)?;
    let Some(alpha) = alpha else {
        return Ok(rho + 2);
    };
    if field == Field::Complex {
        return Err(Error::Unsupported("the alpha-dependent count is only known over R".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let a2 = alpha * alpha;
    let lhs = 2.0 * (a2 - 1.0);
    let mut best = 1;
    for n in 2..=rho + 2 {
        let rhs = (2.0 * a2 - 1.0) * n as f64;
        let eps = 1e-12 * rhs.abs().max(1.0);
        let strict = lhs < rhs - eps && n <= rho + 1;
        let equal = (lhs - rhs).abs() <= eps;
        if strict || equal {
            best = n;
        }
    }
    Ok(best)
}

/// How a coincidence of the two bounds is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerKind {
    /// EITFFs are known to exist.
    Filled,
    /// Existence is open.
    Open,
    /// No EITFF exists since `d/r > n − 2` and `d/r ∉ {n−1, n}`.
    X,
}

impl fmt::Display for MarkerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarkerKind::Filled => "filled",
            MarkerKind::Open => "open",
            MarkerKind::X => "x",
        })
    }
}

/// A point where the spark bound meets the Welch curve for `n` subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Marker {
    /// `x = x_num / x_den` in lowest terms.
    pub x_num: usize,
    pub x_den: usize,
    pub x: f64,
    pub y: f64,
    pub n: usize,
    pub kind: MarkerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureRow {
    pub x: f64,
    pub spark: f64,
    /// `welch[i]` is the curve for `n = i + 2`, absent when `n < x`.
    pub welch: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureData {
    pub n_max: usize,
    pub rows: Vec<FigureRow>,
    pub markers: Vec<Marker>,
}

fn welch_at(x: f64, n: usize) -> Option<f64> {
    let n = n as f64;
    (n >= x).then(|| ((n / x - 1.0) / (n - 1.0)).max(0.0).sqrt())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Coincidences `x = f²n/(n+f²−1) ∈ [f, f+1)` of the two bounds for `x < 4`, `n ≤ n_max`.
fn figure_markers(n_max: usize) -> Vec<Marker> {
    let mut markers = vec![Marker {
        x_num: 1,
        x_den: 1,
        x: 1.0,
        y: 1.0,
        n: 2,
        kind: MarkerKind::Filled,
    }];
    for f in 2..=3usize {
        for n in 2..=n_max {
            let (num, den) = (f * f * n, n + f * f - 1);
            if num < f * den || num >= (f + 1) * den {
                continue;
            }
            let g = gcd(num, den);
            let (num, den) = (num / g, den / g);
            let kind = if 11 * num == 32 * den && n == 8 || 7 * num == 27 * den && n == 6 {
                MarkerKind::Open
            } else if num > (n - 2) * den && num != (n - 1) * den && num != n * den {
                MarkerKind::X
            } else {
                MarkerKind::Filled
            };
            markers.push(Marker {
                x_num: num,
                x_den: den,
                x: num as f64 / den as f64,
                y: 1.0 / f as f64,
                n,
                kind,
            });
        }
    }
    markers.sort_by(|a, b| a.x.total_cmp(&b.x));
    markers
}

/// Samples of the spark step function and Welch curves on `d/r ∈ [1, 4]`.
///
/// The uniform grid `x_i = 1 + 3i/grid` is augmented so that each breakpoint
/// `x ∈ {2, 3, 4}` appears twice, first with the left limit `1/(x−1)` of the
/// spark bound and then with its value `1/x`.
pub fn figure1_data(n_max: usize, grid: usize) -> Result<FigureData> {
    if n_max < 2 || grid < 2 {
        return Err(Error::InvalidInput(format!("need n_max >= 2 and grid >= 2, got {n_max}, {grid}")));
    }
    let row = |x: f64, spark: f64| FigureRow {
        x,
        spark,
        welch: (2..=n_max).map(|n| welch_at(x, n)).collect(),
    };
    let mut rows = Vec::with_capacity(grid + 7);
    for i in 0..=grid {
        // exact integers come out exactly; breakpoints are added below
        let x = 1.0 + 3.0 * i as f64 / grid as f64;
        if x != 2.0 && x != 3.0 && x != 4.0 {
            rows.push(row(x, 1.0 / x.floor()));
        }
    }
    for b in [2.0, 3.0, 4.0] {
        rows.push(row(b, 1.0 / (b - 1.0)));
        rows.push(row(b, 1.0 / b));
    }
    // stable sort keeps each left limit ahead of its right value
    rows.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(FigureData {
        n_max,
        rows,
        markers: figure_markers(n_max),
    })
}

/// CSV with header `x,spark,welch_2,…,welch_{n_max},marker`; marker rows follow
/// the samples and carry the point's height in `spark` and in their own Welch column.
pub fn figure_csv(data: &FigureData) -> String {
    let mut out = String::from("x,spark");
    for n in 2..=data.n_max {
        let _ = write!(out, ",welch_{n}");
    }
    out.push_str(",marker\n");
    for row in &data.rows {
        let _ = write!(out, "{},{}", row.x, row.spark);
        for w in &row.welch {
            out.push(',');
            if let Some(w) = w {
                let _ = write!(out, "{w}");
            }
        }
        out.push_str(",\n");
    }
    for m in &data.markers {
        let _ = write!(out, "{},{}", m.x, m.y);
        for n in 2..=data.n_max {
            out.push(',');
            if n == m.n {
                let _ = write!(out, "{}", m.y);
            }
        }
        let _ = writeln!(out, ",{}", m.kind);
    }
    out
}
