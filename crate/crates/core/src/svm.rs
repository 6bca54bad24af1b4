//! One-vs-rest soft-margin SVMs over sparse document vectors.
//!
//! Linear models are trained in the primal by Pegasos-style stochastic
//! subgradient descent; radial and polynomial models by dual coordinate ascent.
//! In both cases the bias is learned as the weight of an implicit constant
//! feature, so the decision function is `w·x + b`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::AccountCategory;
use crate::forest::parse_classes;
use crate::rng::{rng_from_seed, Rng};
use crate::sparse::SparseVector;
use crate::textprep::FeatureSpace;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training data has a single class")]
    SingleClass,
    #[error("no training rows")]
    EmptyMatrix,
    #[error("class {0} has no training examples")]
    ClassWithNoExamples(AccountCategory),
    #[error("label {0} is not one of the model classes")]
    LabelOutsideClasses(AccountCategory),
    #[error("{rows} rows but {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("vector has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("margins are only defined for linear models")]
    UnsupportedKernel,
    #[error("weight vector is zero")]
    ZeroWeight,
    #[error("class {0} is not in the model")]
    UnknownClass(AccountCategory),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    Linear,
    Radial { gamma: f64 },
    Polynomial { degree: u32, gamma: f64, coef0: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Radial { gamma } | Kernel::Polynomial { gamma, .. } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(SvmError::InvalidParameter(format!("gamma must be positive, got {gamma}")))
            }
            Kernel::Polynomial { degree: 0, .. } => Err(SvmError::InvalidParameter("degree must be at least 1".into())),
            Kernel::Polynomial { coef0, .. } if !coef0.is_finite() => {
                Err(SvmError::InvalidParameter("coef0 must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    fn eval_unchecked(&self, x: &SparseVector, y: &SparseVector) -> f64 {
        match *self {
            Kernel::Linear => x.dot(y),
            Kernel::Radial { gamma } => (-gamma * x.squared_distance(y)).exp(),
            Kernel::Polynomial { degree, gamma, coef0 } => (gamma * x.dot(y) + coef0).powi(degree as i32),
        }
    }
}

impl fmt::Display for Kernel {
    /// The form model files use: `linear`, `radial <gamma>`,
    /// `polynomial <degree> <gamma> <coef0>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Linear => write!(f, "linear"),
            Kernel::Radial { gamma } => write!(f, "radial {gamma:?}"),
            Kernel::Polynomial { degree, gamma, coef0 } => write!(f, "polynomial {degree} {gamma:?} {coef0:?}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = SvmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SvmError::InvalidParameter(format!("bad kernel `{s}`"));
        let parts: Vec<&str> = s.split_whitespace().collect();
        let num = |i: usize| parts.get(i).and_then(|p| p.parse::<f64>().ok()).ok_or_else(bad);
        let kernel = match parts.first().copied() {
            Some("linear") if parts.len() == 1 => Kernel::Linear,
            Some("radial") if parts.len() == 2 => Kernel::Radial { gamma: num(1)? },
            Some("polynomial") if parts.len() == 4 => Kernel::Polynomial {
                degree: parts[1].parse().map_err(|_| bad())?,
                gamma: num(2)?,
                coef0: num(3)?,
            },
            _ => return Err(bad()),
        };
        kernel.validate()?;
        Ok(kernel)
    }
}

pub fn kernel_eval(kernel: &Kernel, x: &SparseVector, y: &SparseVector) -> Result<f64, SvmError> {
    if x.dim() != y.dim() {
        return Err(SvmError::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(kernel.eval_unchecked(x, y))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { c: 1.0, epochs: 20, seed: 0, tolerance: 1e-3 }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::InvalidParameter(format!("c must be positive, got {}", self.c)));
        }
        if self.epochs == 0 {
            return Err(SvmError::InvalidParameter("epochs must be positive".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(SvmError::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// One class-versus-rest decision function.
#[derive(Clone, Debug, PartialEq)]
pub enum DecisionFunction {
    Linear { weights: SparseVector, bias: f64 },
    Kernel { support: Vec<SparseVector>, dual_coeffs: Vec<f64>, bias: f64 },
}

impl DecisionFunction {
    fn value(&self, kernel: &Kernel, x: &SparseVector) -> f64 {
        match self {
            DecisionFunction::Linear { weights, bias } => weights.dot(x) + bias,
            DecisionFunction::Kernel { support, dual_coeffs, bias } => {
                support
                    .iter()
                    .zip(dual_coeffs)
                    .map(|(s, a)| a * kernel.eval_unchecked(s, x))
                    .sum::<f64>()
                    + bias
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    classes: Vec<AccountCategory>,
    kernel: Kernel,
    feature_space: FeatureSpace,
    functions: Vec<DecisionFunction>,
}

impl SvmModel {
    /// Assemble a model from parts, checking their shapes.
    pub fn from_parts(
        classes: Vec<AccountCategory>,
        kernel: Kernel,
        feature_space: FeatureSpace,
        functions: Vec<DecisionFunction>,
    ) -> Result<Self, SvmError> {
        if classes.len() < 2 {
            return Err(SvmError::SingleClass);
        }
        if classes.len() != functions.len() {
            return Err(SvmError::InvalidParameter(format!(
                "{} classes but {} decision functions",
                classes.len(),
                functions.len()
            )));
        }
        kernel.validate()?;
        let v = feature_space.n_features;
        for f in &functions {
            match (f, kernel) {
                (DecisionFunction::Linear { weights, .. }, Kernel::Linear) => {
                    if weights.dim() != v {
                        return Err(SvmError::DimensionMismatch { expected: v, got: weights.dim() });
                    }
                }
                (DecisionFunction::Kernel { support, dual_coeffs, .. }, Kernel::Radial { .. } | Kernel::Polynomial { .. }) => {
                    if support.len() != dual_coeffs.len() {
                        return Err(SvmError::InvalidParameter("support and coefficient counts differ".into()));
                    }
                    if let Some(s) = support.iter().find(|s| s.dim() != v) {
                        return Err(SvmError::DimensionMismatch { expected: v, got: s.dim() });
                    }
                }
                _ => return Err(SvmError::InvalidParameter("decision function does not match kernel".into())),
            }
        }
        Ok(Self { classes, kernel, feature_space, functions })
    }

    pub fn classes(&self) -> &[AccountCategory] {
        &self.classes
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn feature_space(&self) -> FeatureSpace {
        self.feature_space
    }

    pub fn functions(&self) -> &[DecisionFunction] {
        &self.functions
    }

    /// Decision values per class and the argmax; exact ties go to the class
    /// listed first.
    pub fn predict(&self, x: &SparseVector) -> Result<(AccountCategory, Vec<f64>), SvmError> {
        self.check_dim(x)?;
        let scores: Vec<f64> = self.functions.iter().map(|f| f.value(&self.kernel, x)).collect();
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Ok((self.classes[best], scores))
    }

    /// Signed distance `(w·x + b) / ‖w‖` from the class's hyperplane.
    pub fn margin(&self, class: AccountCategory, x: &SparseVector) -> Result<f64, SvmError> {
        self.check_dim(x)?;
        let i = self.classes.iter().position(|&c| c == class).ok_or(SvmError::UnknownClass(class))?;
        match &self.functions[i] {
            DecisionFunction::Linear { weights, bias } => {
                let norm = weights.norm();
                if norm == 0.0 {
                    return Err(SvmError::ZeroWeight);
                }
                Ok((weights.dot(x) + bias) / norm)
            }
            DecisionFunction::Kernel { .. } => Err(SvmError::UnsupportedKernel),
        }
    }

    fn check_dim(&self, x: &SparseVector) -> Result<(), SvmError> {
        let v = self.feature_space.n_features;
        if x.dim() != v {
            return Err(SvmError::DimensionMismatch { expected: v, got: x.dim() });
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), SvmError> {
        writeln!(w, "trollkit-svm v1")?;
        let names: Vec<&str> = self.classes.iter().map(|c| c.as_str()).collect();
        writeln!(w, "classes {}", names.join(","))?;
        writeln!(w, "kernel {}", self.kernel)?;
        writeln!(w, "{}", self.feature_space.header_line())?;
        for (class, f) in self.classes.iter().zip(&self.functions) {
            writeln!(w, "class {class}")?;
            match f {
                DecisionFunction::Linear { weights, bias } => {
                    writeln!(w, "bias {bias:?}")?;
                    writeln!(w, "weights {}", weights.nnz())?;
                    for (i, v) in weights.iter() {
                        writeln!(w, "{i} {v:?}")?;
                    }
                }
                DecisionFunction::Kernel { support, dual_coeffs, bias } => {
                    writeln!(w, "bias {bias:?}")?;
                    writeln!(w, "support {}", support.len())?;
                    for (s, a) in support.iter().zip(dual_coeffs) {
                        write!(w, "{a:?}")?;
                        for (i, v) in s.iter() {
                            write!(w, " {i}:{v:?}")?;
                        }
                        writeln!(w)?;
                    }
                }
            }
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, SvmError> {
        let bad = |m: &str| SvmError::Malformed(m.to_string());
        let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
        let mut it = lines.iter().map(String::as_str);
        if it.next() != Some("trollkit-svm v1") {
            return Err(bad("missing header"));
        }
        let classes = parse_classes(it.next().ok_or_else(|| bad("missing classes"))?)
            .ok_or_else(|| bad("bad classes line"))?;
        let kernel: Kernel = it
            .next()
            .and_then(|l| l.strip_prefix("kernel "))
            .ok_or_else(|| bad("missing kernel"))?
            .parse()
            .map_err(|_| bad("bad kernel line"))?;
        let feature_space = it
            .next()
            .and_then(FeatureSpace::parse_header_line)
            .ok_or_else(|| bad("bad features line"))?;
        let v = feature_space.n_features;
        let mut functions = Vec::with_capacity(classes.len());
        for class in &classes {
            if it.next() != Some(format!("class {class}").as_str()) {
                return Err(bad("expected class block"));
            }
            let bias: f64 = it
                .next()
                .and_then(|l| l.strip_prefix("bias "))
                .and_then(|b| b.parse().ok())
                .ok_or_else(|| bad("bad bias line"))?;
            let f = if kernel == Kernel::Linear {
                let n: usize = it
                    .next()
                    .and_then(|l| l.strip_prefix("weights "))
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| bad("bad weights line"))?;
                let mut idx = Vec::with_capacity(n);
                let mut val = Vec::with_capacity(n);
                for _ in 0..n {
                    let (i, x) = it
                        .next()
                        .and_then(|l| l.split_once(' '))
                        .and_then(|(i, x)| Some((i.parse().ok()?, x.parse().ok()?)))
                        .ok_or_else(|| bad("bad weight entry"))?;
                    idx.push(i);
                    val.push(x);
                }
                let weights = SparseVector::new(v, idx, val).map_err(|e| SvmError::Malformed(e.to_string()))?;
                DecisionFunction::Linear { weights, bias }
            } else {
                let n: usize = it
                    .next()
                    .and_then(|l| l.strip_prefix("support "))
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| bad("bad support line"))?;
                let mut support = Vec::with_capacity(n);
                let mut dual_coeffs = Vec::with_capacity(n);
                for _ in 0..n {
                    let line = it.next().ok_or_else(|| bad("truncated support vectors"))?;
                    let mut parts = line.split(' ');
                    let a: f64 = parts.next().and_then(|a| a.parse().ok()).ok_or_else(|| bad("bad coefficient"))?;
                    let mut idx = Vec::new();
                    let mut val = Vec::new();
                    for p in parts {
                        let (i, x) = p
                            .split_once(':')
                            .and_then(|(i, x)| Some((i.parse().ok()?, x.parse().ok()?)))
                            .ok_or_else(|| bad("bad support entry"))?;
                        idx.push(i);
                        val.push(x);
                    }
                    support.push(SparseVector::new(v, idx, val).map_err(|e| SvmError::Malformed(e.to_string()))?);
                    dual_coeffs.push(a);
                }
                DecisionFunction::Kernel { support, dual_coeffs, bias }
            };
            functions.push(f);
        }
        if it.next() != Some("end") {
            return Err(bad("missing end"));
        }
        Self::from_parts(classes, kernel, feature_space, functions).map_err(|e| SvmError::Malformed(e.to_string()))
    }
}

/// Train one binary classifier per distinct label (in declaration order).
pub fn train_ovr(
    rows: &[SparseVector],
    labels: &[AccountCategory],
    kernel: Kernel,
    feature_space: FeatureSpace,
    config: &TrainConfig,
) -> Result<SvmModel, SvmError> {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    train_ovr_for(&classes, rows, labels, kernel, feature_space, config)
}

/// Train against an explicit class list. Every label must be listed and every
/// listed class must occur.
pub fn train_ovr_for(
    classes: &[AccountCategory],
    rows: &[SparseVector],
    labels: &[AccountCategory],
    kernel: Kernel,
    feature_space: FeatureSpace,
    config: &TrainConfig,
) -> Result<SvmModel, SvmError> {
    if rows.is_empty() {
        return Err(SvmError::EmptyMatrix);
    }
    if rows.len() != labels.len() {
        return Err(SvmError::LabelCountMismatch { rows: rows.len(), labels: labels.len() });
    }
    kernel.validate()?;
    config.validate()?;
    let v = feature_space.n_features;
    if let Some(r) = rows.iter().find(|r| r.dim() != v) {
        return Err(SvmError::DimensionMismatch { expected: v, got: r.dim() });
    }
    if let Some(&l) = labels.iter().find(|l| !classes.contains(l)) {
        return Err(SvmError::LabelOutsideClasses(l));
    }
    if let Some(&c) = classes.iter().find(|c| !labels.contains(c)) {
        return Err(SvmError::ClassWithNoExamples(c));
    }
    if classes.len() < 2 {
        return Err(SvmError::SingleClass);
    }

    // Every class sees the same visiting order, so relabeling classes only
    // permutes the resulting decision functions.
    let epochs = config.epochs;
    let mut rng = rng_from_seed(config.seed);
    let orders: Vec<Vec<usize>> = (0..epochs).map(|_| shuffled(rows.len(), &mut rng)).collect();

    let functions = match kernel {
        Kernel::Linear => classes
            .par_iter()
            .map(|&c| {
                let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
                pegasos(rows, &y, v, config, &orders)
            })
            .collect(),
        _ => {
            let gram = Gram::new(rows, kernel);
            classes
                .par_iter()
                .map(|&c| {
                    let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
                    dual_ascent(rows, &y, &gram, config, &orders)
                })
                .collect()
        }
    };
    SvmModel::from_parts(classes.to_vec(), kernel, feature_space, functions)
}

fn shuffled(n: usize, rng: &mut Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// `λ/2 (‖w‖² + b²) + mean hinge loss`, the objective the linear trainer
/// minimizes.
pub fn primal_objective(weights: &SparseVector, bias: f64, rows: &[SparseVector], y: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = rows
        .iter()
        .zip(y)
        .map(|(x, &yi)| (1.0 - yi * (weights.dot(x) + bias)).max(0.0))
        .sum();
    0.5 * lambda * (weights.squared_norm() + bias * bias) + hinge / rows.len() as f64
}

/// Weight vector stored as `scale * v` so the per-step shrink is O(1). The
/// last coordinate is the bias.
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
    sq_norm_v: f64,
}

impl ScaledWeights {
    fn new(dim: usize) -> Self {
        Self { v: vec![0.0; dim + 1], scale: 1.0, sq_norm_v: 0.0 }
    }

    fn bias_index(&self) -> usize {
        self.v.len() - 1
    }

    fn dot(&self, x: &SparseVector) -> f64 {
        self.scale * (x.dot_dense(&self.v) + self.v[self.bias_index()])
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|x| *x = 0.0);
            self.scale = 1.0;
            self.sq_norm_v = 0.0;
        } else {
            self.scale *= factor;
            if self.scale < 1e-9 {
                self.v.iter_mut().for_each(|x| *x *= self.scale);
                self.sq_norm_v *= self.scale * self.scale;
                self.scale = 1.0;
            }
        }
    }

    fn add(&mut self, x: &SparseVector, step: f64) {
        let s = step / self.scale;
        for (i, xi) in x.iter() {
            let old = self.v[i];
            self.v[i] += s * xi;
            self.sq_norm_v += self.v[i] * self.v[i] - old * old;
        }
        let b = self.bias_index();
        let old = self.v[b];
        self.v[b] += s;
        self.sq_norm_v += self.v[b] * self.v[b] - old * old;
    }

    fn norm(&self) -> f64 {
        self.scale * self.sq_norm_v.max(0.0).sqrt()
    }

    fn materialize(&self) -> Vec<f64> {
        self.v.iter().map(|x| x * self.scale).collect()
    }
}

fn split_bias(full: &[f64]) -> (SparseVector, f64) {
    let (w, b) = full.split_at(full.len() - 1);
    (SparseVector::from_dense(w), b[0])
}

/// Pegasos with projection onto the `1/√λ` ball. Returns the lowest-objective
/// candidate among the epoch-end iterates and their running average over the
/// second half of training.
fn pegasos(rows: &[SparseVector], y: &[f64], dim: usize, config: &TrainConfig, orders: &[Vec<usize>]) -> DecisionFunction {
    let n = rows.len();
    let lambda = 1.0 / (config.c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut w = ScaledWeights::new(dim);
    let mut t = 0usize;
    let mut avg = vec![0.0; dim + 1];
    let mut n_avg = 0usize;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |full: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        let (wv, b) = split_bias(&full);
        let obj = primal_objective(&wv, b, rows, y, lambda);
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            *best = Some((obj, full));
        }
        obj
    };
    let mut previous = f64::INFINITY;
    for (epoch, order) in orders.iter().enumerate() {
        for &i in order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let violated = y[i] * w.dot(&rows[i]) < 1.0;
            w.shrink(1.0 - eta * lambda);
            if violated {
                w.add(&rows[i], eta * y[i]);
            }
            let norm = w.norm();
            if norm > radius {
                w.shrink(radius / norm);
            }
        }
        let snapshot = w.materialize();
        if 2 * (epoch + 1) > orders.len() {
            n_avg += 1;
            for (a, s) in avg.iter_mut().zip(&snapshot) {
                *a += (s - *a) / n_avg as f64;
            }
        }
        let obj = consider(snapshot, &mut best);
        if epoch > 0 && (previous - obj).abs() <= config.tolerance * previous.abs().max(1e-12) {
            break;
        }
        previous = obj;
    }
    if n_avg > 0 {
        consider(avg, &mut best);
    }
    let (_, full) = best.expect("at least one epoch");
    let (weights, bias) = split_bias(&full);
    DecisionFunction::Linear { weights, bias }
}

/// Kernel matrix, precomputed when small enough and evaluated on demand
/// otherwise.
struct Gram<'a> {
    rows: &'a [SparseVector],
    kernel: Kernel,
    cached: Option<Vec<f64>>,
}

const GRAM_CACHE_LIMIT: usize = 1 << 24;

impl<'a> Gram<'a> {
    fn new(rows: &'a [SparseVector], kernel: Kernel) -> Self {
        let n = rows.len();
        let cached = (n * n <= GRAM_CACHE_LIMIT).then(|| {
            (0..n)
                .into_par_iter()
                .flat_map_iter(|i| rows.iter().map(move |r| kernel.eval_unchecked(&rows[i], r)))
                .collect()
        });
        Self { rows, kernel, cached }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        match &self.cached {
            Some(k) => k[i * self.rows.len() + j],
            None => self.kernel.eval_unchecked(&self.rows[i], &self.rows[j]),
        }
    }
}

/// Dual coordinate ascent on `max Σα − ½ αᵀQα, 0 ≤ α ≤ C` with
/// `Q_ij = y_i y_j (K(x_i, x_j) + 1)`. The `+1` carries the bias. Stops once
/// the largest projected-gradient violation in a sweep drops below tolerance.
fn dual_ascent(rows: &[SparseVector], y: &[f64], gram: &Gram<'_>, config: &TrainConfig, orders: &[Vec<usize>]) -> DecisionFunction {
    let n = rows.len();
    let c = config.c;
    let mut alpha = vec![0.0; n];
    // f[j] = Σ_i α_i y_i (K(x_i, x_j) + 1)
    let mut f = vec![0.0; n];
    for order in orders {
        let mut max_violation: f64 = 0.0;
        for &i in order {
            let g = y[i] * f[i] - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg == 0.0 {
                continue;
            }
            let q_ii = gram.get(i, i) + 1.0;
            if q_ii <= 0.0 {
                continue;
            }
            let new = (alpha[i] - g / q_ii).clamp(0.0, c);
            let delta = (new - alpha[i]) * y[i];
            if delta != 0.0 {
                alpha[i] = new;
                for (j, fj) in f.iter_mut().enumerate() {
                    *fj += delta * (gram.get(i, j) + 1.0);
                }
            }
        }
        if max_violation < config.tolerance {
            break;
        }
    }
    let mut support = Vec::new();
    let mut dual_coeffs = Vec::new();
    let mut bias = 0.0;
    for i in 0..n {
        if alpha[i] > 0.0 {
            support.push(rows[i].clone());
            dual_coeffs.push(alpha[i] * y[i]);
            bias += alpha[i] * y[i];
        }
    }
    DecisionFunction::Kernel { support, dual_coeffs, bias }
}
