//! Affine restrictions `C vec(θ) = c` on noise parameters `(A0, B)` and on
//! system parameters `A₊`, plus the user-facing entry language they compile
//! from. Matrix positions in entries are 1-based (row, col).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::{kernel_right, rank, Mat, TolPolicy};
use crate::scalar::Real;

/// Parameter matrix an entry refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Target {
    A0,
    B,
    /// Lag matrix `Ak`, `k >= 1`.
    Lag(usize),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::A0 => write!(f, "A0"),
            Target::B => write!(f, "B"),
            Target::Lag(k) => write!(f, "A{k}"),
        }
    }
}

impl FromStr for Target {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "A0" => Ok(Target::A0),
            "B" => Ok(Target::B),
            _ => s
                .strip_prefix('A')
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|k| *k >= 1)
                .map(Target::Lag)
                .ok_or_else(|| format!("unknown target {s:?}; expected A0, B or A1, A2, ...")),
        }
    }
}

impl TryFrom<String> for Target {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Target> for String {
    fn from(t: Target) -> String {
        t.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub target: Target,
    pub row: usize,
    pub col: usize,
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RestrictionEntry {
    /// `target[row, col] = value`.
    Fix {
        target: Target,
        row: usize,
        col: usize,
        value: f64,
    },
    /// `Σ coef * target[row, col] = rhs`.
    Linear { terms: Vec<Term>, rhs: f64 },
}

impl RestrictionEntry {
    pub fn fix(target: Target, row: usize, col: usize, value: f64) -> Self {
        RestrictionEntry::Fix {
            target,
            row,
            col,
            value,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictionSpec {
    #[serde(default)]
    pub noise: Vec<RestrictionEntry>,
    #[serde(default)]
    pub system: Vec<RestrictionEntry>,
}

impl RestrictionSpec {
    pub fn is_empty(&self) -> bool {
        self.noise.is_empty() && self.system.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompileOptions {
    /// Accept repeated identical fixes instead of rejecting them.
    pub dedupe_identical_fixes: bool,
}

/// Which noise parameters are free.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseParametrization {
    /// Both `A0` and `B` are free: `n² + nq` parameters.
    Ab,
    /// `A0` is known, only `B` is free: `nq` parameters.
    B,
}

impl NoiseParametrization {
    /// `B` when `A0` is the identity and nothing restricts it, else `Ab`.
    pub fn default_for(a0_is_identity: bool, spec: &RestrictionSpec) -> Self {
        let touches_a0 = spec.noise.iter().any(|e| match e {
            RestrictionEntry::Fix { target, .. } => *target == Target::A0,
            RestrictionEntry::Linear { terms, .. } => terms.iter().any(|t| t.target == Target::A0),
        });
        if a0_is_identity && !touches_a0 {
            NoiseParametrization::B
        } else {
            NoiseParametrization::Ab
        }
    }
}

/// `C_{A0} vec(A0) = c_{A0}`, `C_B vec(B) = c_B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct NoiseRestrictionSet<T: Real> {
    pub parametrization: NoiseParametrization,
    pub n: usize,
    pub q: usize,
    pub c_a0: Mat<T>,
    pub rhs_a0: Vec<T>,
    pub c_b: Mat<T>,
    pub rhs_b: Vec<T>,
}

fn check_full_row_rank<T: Real>(c: &Mat<T>) -> Result<()> {
    if c.rows() == 0 {
        return Ok(());
    }
    let r = rank(c, TolPolicy::default())?;
    if r < c.rows() {
        return Err(Error::RankDeficientRestrictions { rank: r, rows: c.rows() });
    }
    Ok(())
}

impl<T: Real> NoiseRestrictionSet<T> {
    pub fn from_matrices(
        n: usize,
        q: usize,
        parametrization: NoiseParametrization,
        c_a0: Mat<T>,
        rhs_a0: Vec<T>,
        c_b: Mat<T>,
        rhs_b: Vec<T>,
    ) -> Result<Self> {
        if c_a0.cols() != n * n || c_a0.rows() != rhs_a0.len() {
            return Err(Error::ShapeMismatch(format!(
                "C_A0 is {}x{} with {} rhs entries; expected r x {}",
                c_a0.rows(),
                c_a0.cols(),
                rhs_a0.len(),
                n * n
            )));
        }
        if c_b.cols() != n * q || c_b.rows() != rhs_b.len() {
            return Err(Error::ShapeMismatch(format!(
                "C_B is {}x{} with {} rhs entries; expected r x {}",
                c_b.rows(),
                c_b.cols(),
                rhs_b.len(),
                n * q
            )));
        }
        if parametrization == NoiseParametrization::B && c_a0.rows() > 0 {
            return Err(Error::UnsupportedRestriction(
                "A0 restrictions need the AB parametrization".into(),
            ));
        }
        c_a0.ensure_finite("C_A0")?;
        c_b.ensure_finite("C_B")?;
        check_full_row_rank(&c_a0)?;
        check_full_row_rank(&c_b)?;
        Ok(NoiseRestrictionSet {
            parametrization,
            n,
            q,
            c_a0,
            rhs_a0,
            c_b,
            rhs_b,
        })
    }

    pub fn empty(n: usize, q: usize, parametrization: NoiseParametrization) -> Self {
        NoiseRestrictionSet {
            parametrization,
            n,
            q,
            c_a0: Mat::zeros(0, n * n),
            rhs_a0: vec![],
            c_b: Mat::zeros(0, n * q),
            rhs_b: vec![],
        }
    }

    pub fn rows(&self) -> usize {
        self.c_a0.rows() + self.c_b.rows()
    }

    /// Number of free noise parameters.
    pub fn param_count(&self) -> usize {
        match self.parametrization {
            NoiseParametrization::Ab => self.n * self.n + self.n * self.q,
            NoiseParametrization::B => self.n * self.q,
        }
    }

    /// `C_N`: `diag(C_A0, C_B)` in the AB parametrization, `C_B` otherwise.
    pub fn c_n(&self) -> Mat<T> {
        match self.parametrization {
            NoiseParametrization::Ab => Mat::block_diag(&[&self.c_a0, &self.c_b]),
            NoiseParametrization::B => self.c_b.clone(),
        }
    }

    pub fn rhs_n(&self) -> Vec<T> {
        match self.parametrization {
            NoiseParametrization::Ab => {
                let mut v = self.rhs_a0.clone();
                v.extend_from_slice(&self.rhs_b);
                v
            }
            NoiseParametrization::B => self.rhs_b.clone(),
        }
    }
}

/// `C_S vec(A₊ᵀ) = c_S` with orthonormal kernel basis `S_A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct SystemRestrictionSet<T: Real> {
    pub n: usize,
    pub p: usize,
    pub c_s: Mat<T>,
    pub rhs_s: Vec<T>,
    pub s_a: Mat<T>,
}

impl<T: Real> SystemRestrictionSet<T> {
    pub fn from_matrix(n: usize, p: usize, c_s: Mat<T>, rhs_s: Vec<T>) -> Result<Self> {
        let dim = n * n * p;
        if c_s.cols() != dim || c_s.rows() != rhs_s.len() {
            return Err(Error::ShapeMismatch(format!(
                "C_S is {}x{} with {} rhs entries; expected r x {dim}",
                c_s.rows(),
                c_s.cols(),
                rhs_s.len()
            )));
        }
        c_s.ensure_finite("C_S")?;
        check_full_row_rank(&c_s)?;
        let s_a = if c_s.rows() == 0 {
            Mat::identity(dim)
        } else {
            kernel_right(&c_s, TolPolicy::default())?
        };
        Ok(SystemRestrictionSet { n, p, c_s, rhs_s, s_a })
    }

    pub fn empty(n: usize, p: usize) -> Self {
        Self::from_matrix(n, p, Mat::zeros(0, n * n * p), vec![]).expect("empty set is valid")
    }

    pub fn rows(&self) -> usize {
        self.c_s.rows()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.rhs_s.iter().all(|x| *x == T::zero())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    A0,
    B,
    System,
}

struct Dims {
    n: usize,
    p: usize,
    q: usize,
}

fn locate(t: Target, row: usize, col: usize, d: &Dims) -> Result<(Block, usize)> {
    let (rows, cols, block) = match t {
        Target::A0 => (d.n, d.n, Block::A0),
        Target::B => (d.n, d.q, Block::B),
        Target::Lag(k) => {
            if k > d.p {
                return Err(Error::IndexOutOfRange(format!("lag A{k} but p = {}", d.p)));
            }
            (d.n, d.n, Block::System)
        }
    };
    if row == 0 || col == 0 || row > rows || col > cols {
        return Err(Error::IndexOutOfRange(format!(
            "{t}[{row},{col}] outside 1..={rows} x 1..={cols}"
        )));
    }
    let (i, j) = (row - 1, col - 1);
    let idx = match t {
        Target::A0 | Target::B => j * d.n + i,
        Target::Lag(k) => i * d.n * d.p + (k - 1) * d.n + j,
    };
    Ok((block, idx))
}

struct Compiled {
    rows: Vec<(Block, Vec<(usize, f64)>, f64)>,
}

fn compile_entries(entries: &[RestrictionEntry], d: &Dims, opts: CompileOptions) -> Result<Compiled> {
    let mut fixes: HashMap<(Target, usize, usize), f64> = HashMap::new();
    let mut rows = Vec::new();
    for e in entries {
        match e {
            RestrictionEntry::Fix {
                target,
                row,
                col,
                value,
            } => {
                let (block, idx) = locate(*target, *row, *col, d)?;
                if !value.is_finite() {
                    return Err(Error::NonFinite(format!("fix value for {target}[{row},{col}]")));
                }
                if let Some(prev) = fixes.insert((*target, *row, *col), *value) {
                    if prev != *value {
                        return Err(Error::ConflictingFix(format!(
                            "{target}[{row},{col}] fixed to both {prev} and {value}"
                        )));
                    }
                    if opts.dedupe_identical_fixes {
                        continue;
                    }
                    return Err(Error::ConflictingFix(format!(
                        "{target}[{row},{col}] fixed twice"
                    )));
                }
                rows.push((block, vec![(idx, 1.0)], *value));
            }
            RestrictionEntry::Linear { terms, rhs } => {
                if terms.is_empty() {
                    return Err(Error::InvalidInput("linear restriction without terms".into()));
                }
                if !rhs.is_finite() || terms.iter().any(|t| !t.coef.is_finite()) {
                    return Err(Error::NonFinite("linear restriction".into()));
                }
                let mut block = None;
                let mut coefs: Vec<(usize, f64)> = Vec::new();
                for t in terms {
                    let (b, idx) = locate(t.target, t.row, t.col, d)?;
                    if block.is_some_and(|b0| b0 != b) {
                        return Err(Error::UnsupportedRestriction(
                            "a single restriction may not mix A0 and B entries".into(),
                        ));
                    }
                    block = Some(b);
                    match coefs.iter_mut().find(|(i, _)| *i == idx) {
                        Some((_, c)) => *c += t.coef,
                        None => coefs.push((idx, t.coef)),
                    }
                }
                rows.push((block.expect("non-empty terms"), coefs, *rhs));
            }
        }
    }
    Ok(Compiled { rows })
}

fn assemble<T: Real>(rows: &[&(Block, Vec<(usize, f64)>, f64)], cols: usize) -> (Mat<T>, Vec<T>) {
    let mut c = Mat::zeros(rows.len(), cols);
    let mut rhs = Vec::with_capacity(rows.len());
    for (r, (_, coefs, v)) in rows.iter().enumerate() {
        for (idx, w) in coefs {
            c[(r, *idx)] = T::lit(*w);
        }
        rhs.push(T::lit(*v));
    }
    (c, rhs)
}

/// Compiles the noise entries of a spec (targets `A0` and `B`).
pub fn compile_noise<T: Real>(
    entries: &[RestrictionEntry],
    n: usize,
    q: usize,
    parametrization: NoiseParametrization,
    opts: CompileOptions,
) -> Result<NoiseRestrictionSet<T>> {
    let d = Dims { n, p: 0, q };
    let compiled = compile_entries(entries, &d, opts)?;
    if compiled.rows.iter().any(|r| r.0 == Block::System) {
        return Err(Error::UnsupportedRestriction(
            "lag matrices belong in the system restrictions".into(),
        ));
    }
    let a0_rows: Vec<_> = compiled.rows.iter().filter(|r| r.0 == Block::A0).collect();
    let b_rows: Vec<_> = compiled.rows.iter().filter(|r| r.0 == Block::B).collect();
    let (c_a0, rhs_a0) = assemble(&a0_rows, n * n);
    let (c_b, rhs_b) = assemble(&b_rows, n * q);
    NoiseRestrictionSet::from_matrices(n, q, parametrization, c_a0, rhs_a0, c_b, rhs_b)
}

/// Compiles the system entries of a spec (targets `A1..Ap`).
pub fn compile_system<T: Real>(
    entries: &[RestrictionEntry],
    n: usize,
    p: usize,
    opts: CompileOptions,
) -> Result<SystemRestrictionSet<T>> {
    let d = Dims { n, p, q: 0 };
    for e in entries {
        let bad = match e {
            RestrictionEntry::Fix { target, .. } => !matches!(target, Target::Lag(_)),
            RestrictionEntry::Linear { terms, .. } => terms.iter().any(|t| !matches!(t.target, Target::Lag(_))),
        };
        if bad {
            return Err(Error::UnsupportedRestriction(
                "system restrictions may only refer to A1..Ap".into(),
            ));
        }
    }
    let compiled = compile_entries(entries, &d, opts)?;
    let rows: Vec<_> = compiled.rows.iter().collect();
    let (c_s, rhs_s) = assemble(&rows, n * n * p);
    SystemRestrictionSet::from_matrix(n, p, c_s, rhs_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_entries() -> Vec<RestrictionEntry> {
        vec![
            RestrictionEntry::fix(Target::B, 1, 1, 1.0),
            RestrictionEntry::fix(Target::B, 1, 2, 0.0),
            RestrictionEntry::fix(Target::B, 2, 2, 1.0),
            RestrictionEntry::fix(Target::B, 3, 2, 0.0),
        ]
    }

    #[test]
    fn golden_c_b() {
        let set: NoiseRestrictionSet<f64> = compile_noise(
            &golden_entries(),
            3,
            2,
            NoiseParametrization::B,
            CompileOptions::default(),
        )
        .unwrap();
        let mut want = Mat::zeros(4, 6);
        for (r, c) in [(0, 0), (1, 3), (2, 4), (3, 5)] {
            want[(r, c)] = 1.0;
        }
        assert_eq!(set.c_b, want);
        assert_eq!(set.rhs_b, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(set.c_n(), want);
    }

    #[test]
    fn empty_spec_gives_zero_rows() {
        let set: NoiseRestrictionSet<f64> =
            compile_noise(&[], 3, 2, NoiseParametrization::Ab, CompileOptions::default()).unwrap();
        assert_eq!(set.rows(), 0);
        assert_eq!(set.c_n().shape(), (0, 15));
        let sys: SystemRestrictionSet<f64> = compile_system(&[], 2, 2, CompileOptions::default()).unwrap();
        assert_eq!(sys.s_a, Mat::identity(8));
    }

    #[test]
    fn duplicate_and_conflicting_fixes() {
        let twice = vec![
            RestrictionEntry::fix(Target::B, 1, 1, 1.0),
            RestrictionEntry::fix(Target::B, 1, 1, 1.0),
        ];
        let strict = compile_noise::<f64>(&twice, 2, 1, NoiseParametrization::B, CompileOptions::default());
        assert!(matches!(strict, Err(Error::ConflictingFix(_))));
        let lenient = compile_noise::<f64>(
            &twice,
            2,
            1,
            NoiseParametrization::B,
            CompileOptions {
                dedupe_identical_fixes: true,
            },
        )
        .unwrap();
        assert_eq!(lenient.rows(), 1);
        let clash = vec![
            RestrictionEntry::fix(Target::B, 1, 1, 1.0),
            RestrictionEntry::fix(Target::B, 1, 1, 2.0),
        ];
        let opts = CompileOptions {
            dedupe_identical_fixes: true,
        };
        assert!(matches!(
            compile_noise::<f64>(&clash, 2, 1, NoiseParametrization::B, opts),
            Err(Error::ConflictingFix(_))
        ));
    }

    #[test]
    fn index_and_rank_errors() {
        let out = vec![RestrictionEntry::fix(Target::B, 4, 1, 0.0)];
        assert!(matches!(
            compile_noise::<f64>(&out, 3, 2, NoiseParametrization::B, CompileOptions::default()),
            Err(Error::IndexOutOfRange(_))
        ));
        let lag = vec![RestrictionEntry::fix(Target::Lag(3), 1, 1, 0.0)];
        assert!(matches!(
            compile_system::<f64>(&lag, 2, 2, CompileOptions::default()),
            Err(Error::IndexOutOfRange(_))
        ));
        let term = |c, coef| Term {
            target: Target::B,
            row: 1,
            col: c,
            coef,
        };
        let dependent = vec![
            RestrictionEntry::Linear {
                terms: vec![term(1, 1.0), term(2, 1.0)],
                rhs: 0.0,
            },
            RestrictionEntry::Linear {
                terms: vec![term(1, 2.0), term(2, 2.0)],
                rhs: 0.0,
            },
        ];
        assert!(matches!(
            compile_noise::<f64>(&dependent, 2, 2, NoiseParametrization::B, CompileOptions::default()),
            Err(Error::RankDeficientRestrictions { rank: 1, rows: 2 })
        ));
    }

    #[test]
    fn cross_block_rows_rejected() {
        let mixed = vec![RestrictionEntry::Linear {
            terms: vec![
                Term {
                    target: Target::A0,
                    row: 1,
                    col: 2,
                    coef: 1.0,
                },
                Term {
                    target: Target::B,
                    row: 1,
                    col: 1,
                    coef: 1.0,
                },
            ],
            rhs: 0.0,
        }];
        assert!(matches!(
            compile_noise::<f64>(&mixed, 2, 1, NoiseParametrization::Ab, CompileOptions::default()),
            Err(Error::UnsupportedRestriction(_))
        ));
        let a0 = vec![RestrictionEntry::fix(Target::A0, 1, 1, 1.0)];
        assert!(matches!(
            compile_noise::<f64>(&a0, 2, 1, NoiseParametrization::B, CompileOptions::default()),
            Err(Error::UnsupportedRestriction(_))
        ));
    }

    #[test]
    fn system_index_map_and_kernel() {
        // A2[1,2] for n = 2, p = 2 sits at 0*4 + 1*2 + 1 = 3.
        let e = vec![RestrictionEntry::fix(Target::Lag(2), 1, 2, 0.5)];
        let set: SystemRestrictionSet<f64> = compile_system(&e, 2, 2, CompileOptions::default()).unwrap();
        assert_eq!(set.c_s.row(0), vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(set.s_a.shape(), (8, 7));
        assert!((&set.c_s * &set.s_a).max_abs() < 1e-14);
        assert!(!set.is_homogeneous());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = RestrictionSpec {
            noise: golden_entries(),
            system: vec![RestrictionEntry::Linear {
                terms: vec![Term {
                    target: Target::Lag(1),
                    row: 2,
                    col: 1,
                    coef: -1.5,
                }],
                rhs: 0.0,
            }],
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains(r#""target":"A1""#));
        let back: RestrictionSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<RestrictionSpec>(r#"{"noise":[{"fix":{"target":"C","row":1,"col":1,"value":0}}]}"#).is_err());
    }
}
