//! Stratified sampling, truth tables and account-level verdicts.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::corpus::AccountCategory;
use crate::rng::rng_from_seed;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("requested sample of {requested} exceeds the {available} available records")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("class {0} has no records")]
    EmptyClass(AccountCategory),
    #[error("class {0} is not in the declared class list")]
    UnknownClass(AccountCategory),
    #[error("sample size must be positive")]
    ZeroSample,
    #[error("no predictions to tally")]
    EmptyInput,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Indices into the input, both sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub sample: Vec<usize>,
    pub remainder: Vec<usize>,
}

/// Largest-remainder apportionment of `n` over class sizes. Leftover units go
/// to the largest fractional parts, ties to the earlier class.
pub fn stratified_quotas(class_sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = class_sizes.iter().sum();
    if total == 0 {
        return vec![0; class_sizes.len()];
    }
    let (mut quotas, rems): (Vec<usize>, Vec<usize>) = class_sizes
        .iter()
        .map(|&c| {
            let scaled = n as u128 * c as u128;
            ((scaled / total as u128) as usize, (scaled % total as u128) as usize)
        })
        .unzip();
    let short = n - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(a.cmp(&b)));
    for &i in order.iter().take(short) {
        quotas[i] += 1;
    }
    quotas
}

/// Draw a sample of `n` records preserving class proportions.
///
/// `classes` declares the strata; every label must belong to it and every
/// class must have at least one record. Within a class, records are picked by
/// a seeded shuffle.
pub fn stratified_sample(
    labels: &[AccountCategory],
    classes: &[AccountCategory],
    n: usize,
    seed: u64,
) -> Result<Split, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroSample);
    }
    if n > labels.len() {
        return Err(EvalError::SampleTooLarge { requested: n, available: labels.len() });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, l) in labels.iter().enumerate() {
        let c = classes.iter().position(|c| c == l).ok_or(EvalError::UnknownClass(*l))?;
        members[c].push(i);
    }
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(EvalError::EmptyClass(classes[c]));
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = stratified_quotas(&sizes, n);
    let mut rng = rng_from_seed(seed);
    let mut sample = Vec::with_capacity(n);
    let mut remainder = Vec::with_capacity(labels.len() - n);
    for (mut idx, q) in members.into_iter().zip(quotas) {
        idx.shuffle(&mut rng);
        sample.extend_from_slice(&idx[..q]);
        remainder.extend_from_slice(&idx[q..]);
    }
    sample.sort_unstable();
    remainder.sort_unstable();
    Ok(Split { sample, remainder })
}

/// Counts with predicted classes on rows and true classes on columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<AccountCategory>,
    cells: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_cells(classes: Vec<AccountCategory>, cells: Vec<Vec<u64>>) -> Self {
        assert_eq!(cells.len(), classes.len());
        assert!(cells.iter().all(|r| r.len() == classes.len()));
        Self { classes, cells }
    }

    pub fn classes(&self) -> &[AccountCategory] {
        &self.classes
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn row_total(&self, predicted: usize) -> u64 {
        self.cells[predicted].iter().sum()
    }

    pub fn column_total(&self, truth: usize) -> u64 {
        self.cells.iter().map(|r| r[truth]).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.cells[i][i]).sum()
    }

    /// Overall fraction correct, `None` when empty.
    pub fn accuracy(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| self.correct() as f64 / t as f64)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["predicted/truth".to_string()];
        header.extend(self.classes.iter().map(|c| c.to_string()));
        w.write_record(&header)?;
        for (c, row) in self.classes.iter().zip(&self.cells) {
            let mut rec = vec![c.to_string()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Tally `(predicted, truth)` pairs over a declared class list.
pub fn confusion_matrix(
    classes: &[AccountCategory],
    pairs: &[(AccountCategory, AccountCategory)],
) -> Result<ConfusionMatrix, EvalError> {
    let pos = |c: AccountCategory| classes.iter().position(|&x| x == c).ok_or(EvalError::UnknownClass(c));
    let mut cells = vec![vec![0u64; classes.len()]; classes.len()];
    for &(p, t) in pairs {
        cells[pos(p)?][pos(t)?] += 1;
    }
    Ok(ConfusionMatrix { classes: classes.to_vec(), cells })
}

/// Percentage of each predicted class that was correct: the diagonal over the
/// row total. `None` for classes never predicted.
pub fn per_class_accuracy(matrix: &ConfusionMatrix) -> Vec<Option<f64>> {
    (0..matrix.classes.len())
        .map(|k| {
            let row = matrix.row_total(k);
            (row > 0).then(|| 100.0 * matrix.cells[k][k] as f64 / row as f64)
        })
        .collect()
}

pub fn write_accuracy_csv<W: Write>(matrix: &ConfusionMatrix, w: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["class", "correct", "predicted_total", "accuracy_pct"])?;
    for (k, acc) in per_class_accuracy(matrix).into_iter().enumerate() {
        w.write_record([
            matrix.classes[k].to_string(),
            matrix.cells[k][k].to_string(),
            matrix.row_total(k).to_string(),
            acc.map_or_else(|| "undefined".to_string(), |a| format!("{a:.1}")),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Category(AccountCategory),
    Tie,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Category(c) => write!(f, "{c}"),
            Verdict::Tie => f.write_str("Tie"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccountVerdict {
    pub account: String,
    pub verdict: Verdict,
    pub votes: BTreeMap<AccountCategory, usize>,
    pub n_items: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccountReport {
    /// Sorted by account name.
    pub verdicts: Vec<AccountVerdict>,
    pub histogram: BTreeMap<Verdict, usize>,
}

impl AccountReport {
    /// `account,verdict,n_items` followed by one vote column per class.
    pub fn write_verdicts_csv<W: Write>(&self, w: W, classes: &[AccountCategory]) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["account".to_string(), "verdict".into(), "n_items".into()];
        header.extend(classes.iter().map(|c| c.to_string()));
        w.write_record(&header)?;
        for v in &self.verdicts {
            let mut rec = vec![v.account.clone(), v.verdict.to_string(), v.n_items.to_string()];
            rec.extend(classes.iter().map(|c| v.votes.get(c).copied().unwrap_or(0).to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["verdict", "accounts"])?;
        for (v, n) in &self.histogram {
            w.write_record([v.to_string(), n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Majority vote of per-item predictions for each account. Two or more
/// classes sharing the top count give [`Verdict::Tie`].
pub fn classify_accounts(predictions: &[(String, AccountCategory)]) -> Result<AccountReport, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut tallies: BTreeMap<&str, BTreeMap<AccountCategory, usize>> = BTreeMap::new();
    for (account, cat) in predictions {
        *tallies.entry(account).or_default().entry(*cat).or_default() += 1;
    }
    let mut histogram = BTreeMap::new();
    let verdicts = tallies
        .into_iter()
        .map(|(account, votes)| {
            let top = votes.values().copied().max().unwrap_or(0);
            let leaders: Vec<AccountCategory> =
                votes.iter().filter(|&(_, &n)| n == top).map(|(&c, _)| c).collect();
            let verdict = if leaders.len() == 1 { Verdict::Category(leaders[0]) } else { Verdict::Tie };
            *histogram.entry(verdict).or_default() += 1;
            AccountVerdict {
                account: account.to_string(),
                verdict,
                n_items: votes.values().sum(),
                votes,
            }
        })
        .collect();
    Ok(AccountReport { verdicts, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use AccountCategory::*;

    #[test]
    fn quotas_exact_proportions() {
        let mut labels = vec![LeftTroll; 60];
        labels.extend(vec![RightTroll; 40]);
        let s = stratified_sample(&labels, &[LeftTroll, RightTroll], 10, 1).unwrap();
        let left = s.sample.iter().filter(|&&i| labels[i] == LeftTroll).count();
        assert_eq!((left, s.sample.len() - left), (6, 4));
        assert_eq!(s.remainder.len(), 90);
    }

    #[test]
    fn full_sample_is_permutation() {
        let labels = vec![LeftTroll, RightTroll, LeftTroll, NewsFeed];
        let s = stratified_sample(&labels, &[LeftTroll, NewsFeed, RightTroll], 4, 9).unwrap();
        assert_eq!(s.sample, vec![0, 1, 2, 3]);
        assert!(s.remainder.is_empty());
    }

    #[test]
    fn sample_errors() {
        let labels = vec![LeftTroll, RightTroll];
        assert!(matches!(
            stratified_sample(&labels, &[LeftTroll, RightTroll], 3, 0),
            Err(EvalError::SampleTooLarge { .. })
        ));
        assert!(matches!(
            stratified_sample(&labels, &[LeftTroll, RightTroll, Fearmonger], 1, 0),
            Err(EvalError::EmptyClass(Fearmonger))
        ));
        assert!(matches!(stratified_sample(&labels, &[LeftTroll], 1, 0), Err(EvalError::UnknownClass(RightTroll))));
    }

    /// Independent oracle: the largest-remainder method assigns quotas so that
    /// no transfer of one unit between classes brings both closer to their
    /// exact shares. Checked exhaustively on a small grid.
    #[test]
    fn quotas_sum_and_optimality_grid() {
        for a in 1..=7usize {
            for b in 1..=7usize {
                for c in 0..=5usize {
                    let sizes = [a, b, c];
                    let total = a + b + c;
                    for n in 1..=total {
                        let q = stratified_quotas(&sizes, n);
                        assert_eq!(q.iter().sum::<usize>(), n);
                        let exact: Vec<f64> = sizes.iter().map(|&s| n as f64 * s as f64 / total as f64).collect();
                        for k in 0..3 {
                            assert!((q[k] as f64 - exact[k]).abs() < 1.0, "{sizes:?} n={n} q={q:?}");
                        }
                        // Brute force: no other integer vector summing to n with
                        // floor/ceil entries has smaller max deviation.
                        let best = (0..=n)
                            .flat_map(|x| (0..=n - x).map(move |y| [x, y, n - x - y]))
                            .map(|v| (0..3).map(|k| (v[k] as f64 - exact[k]).abs()).fold(0.0, f64::max))
                            .fold(f64::INFINITY, f64::min);
                        let ours = (0..3).map(|k| (q[k] as f64 - exact[k]).abs()).fold(0.0, f64::max);
                        assert!(ours <= best + 1e-12, "{sizes:?} n={n}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn sample_partitions_input(labels in prop::collection::vec(0usize..3, 3..60), frac in 0.05f64..1.0, seed in any::<u64>()) {
            let cats: Vec<AccountCategory> = labels.iter().map(|&i| [LeftTroll, RightTroll, NewsFeed][i]).collect();
            let mut classes: Vec<AccountCategory> = cats.clone();
            classes.sort();
            classes.dedup();
            let n = ((cats.len() as f64 * frac) as usize).max(1);
            let s = stratified_sample(&cats, &classes, n, seed).unwrap();
            prop_assert_eq!(s.sample.len(), n);
            let mut all: Vec<usize> = s.sample.iter().chain(&s.remainder).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..cats.len()).collect::<Vec<_>>());
            for c in &classes {
                let share = n as f64 * cats.iter().filter(|x| *x == c).count() as f64 / cats.len() as f64;
                let got = s.sample.iter().filter(|&&i| cats[i] == *c).count() as f64;
                prop_assert!((got - share).abs() < 1.0);
            }
        }
    }

    #[test]
    fn confusion_basics() {
        let classes = [LeftTroll, RightTroll];
        let m = confusion_matrix(&classes, &[(LeftTroll, LeftTroll), (RightTroll, RightTroll)]).unwrap();
        assert_eq!(m.cells(), &[vec![1, 0], vec![0, 1]]);
        let m = confusion_matrix(&classes, &[(LeftTroll, RightTroll)]).unwrap();
        assert_eq!(m.cells()[0][1], 1);
        assert_eq!(m.column_total(1), 1);
        assert_eq!(confusion_matrix(&classes, &[]).unwrap().total(), 0);
        assert!(matches!(confusion_matrix(&classes, &[(NewsFeed, LeftTroll)]), Err(EvalError::UnknownClass(NewsFeed))));
    }

    #[test]
    fn accuracy_identity_and_undefined() {
        let m = ConfusionMatrix::from_cells(vec![LeftTroll, RightTroll], vec![vec![3, 0], vec![0, 0]]);
        assert_eq!(per_class_accuracy(&m), vec![Some(100.0), None]);
    }

    proptest! {
        #[test]
        fn accuracy_permutes_with_classes(cells in prop::collection::vec(prop::collection::vec(1u64..50, 3), 3)) {
            let classes = vec![Fearmonger, LeftTroll, RightTroll];
            let m = ConfusionMatrix::from_cells(classes.clone(), cells.clone());
            let perm = [2usize, 0, 1];
            let pcells: Vec<Vec<u64>> = perm.iter().map(|&i| perm.iter().map(|&j| cells[i][j]).collect()).collect();
            let pm = ConfusionMatrix::from_cells(perm.iter().map(|&i| classes[i]).collect(), pcells);
            let a = per_class_accuracy(&m);
            let b = per_class_accuracy(&pm);
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(b[k], a[i]);
            }
        }
    }

    #[test]
    fn verdicts() {
        let p = |a: &str, c| (a.to_string(), c);
        let r = classify_accounts(&[
            p("x", LeftTroll),
            p("x", LeftTroll),
            p("x", RightTroll),
            p("y", LeftTroll),
            p("y", LeftTroll),
            p("y", RightTroll),
            p("y", RightTroll),
        ])
        .unwrap();
        assert_eq!(r.verdicts[0].verdict, Verdict::Category(LeftTroll));
        assert_eq!(r.verdicts[1].verdict, Verdict::Tie);
        assert_eq!(r.verdicts[1].n_items, 4);
        assert_eq!(r.histogram[&Verdict::Tie], 1);
        assert!(matches!(classify_accounts(&[]), Err(EvalError::EmptyInput)));
    }

    #[test]
    fn ninety_five_accounts() {
        let preds: Vec<(String, AccountCategory)> = (0..95)
            .flat_map(|i| {
                let n = 1 + i % 4;
                (0..n).map(move |j| (format!("acct{i:02}"), AccountCategory::ALL[(i + j) % 8]))
            })
            .collect();
        let r = classify_accounts(&preds).unwrap();
        assert_eq!(r.verdicts.len(), 95);
        assert_eq!(r.histogram.values().sum::<usize>(), 95);
    }
}
