//! Metric families: per-role accuracy and presence recall for the verb
//! task, one-vs-rest precision/recall/F1 per suffix class plus the
//! binary "Any" detection, and the closest-verb easy/hard split.
//!
//! Ratios with zero support are reported as absent (N/A), never as 0 or
//! 1. All aggregation is integer counting; ratios are derived at the
//! end, so reports are exact and reduction-order-free.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::datasets::SuffixTaskInstance;
use crate::grammar::{AgreementTriple, CaseRole};
use crate::morphology::NuclearSuffix;
use crate::{Error, Result};

fn ratio(num: usize, den: usize) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// Accuracy over all instances and recall of gold-present roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleMetrics {
    pub n: usize,
    pub n_correct: usize,
    pub gold_present: usize,
    pub predicted_present_of_gold_present: usize,
    pub accuracy: Option<f64>,
    pub presence_recall: Option<f64>,
}

impl RoleMetrics {
    fn from_counts(n: usize, n_correct: usize, gold_present: usize, hits: usize) -> Self {
        Self {
            n,
            n_correct,
            gold_present,
            predicted_present_of_gold_present: hits,
            accuracy: ratio(n_correct, n),
            presence_recall: ratio(hits, gold_present),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbMetrics {
    pub erg: RoleMetrics,
    pub abs: RoleMetrics,
    pub dat: RoleMetrics,
}

impl VerbMetrics {
    pub fn role(&self, role: CaseRole) -> &RoleMetrics {
        match role {
            CaseRole::Ergative => &self.erg,
            CaseRole::Absolutive => &self.abs,
            CaseRole::Dative => &self.dat,
        }
    }

    /// Mean of the three per-role accuracies (the verb-task selection
    /// metric); roles with no instances count as zero.
    pub fn mean_accuracy(&self) -> f64 {
        let acc = |r: &RoleMetrics| r.accuracy.unwrap_or(0.0);
        (acc(&self.erg) + acc(&self.abs) + acc(&self.dat)) / 3.0
    }
}

/// Per-role accuracy (3-way, gold-None instances included) and presence
/// recall (gold-present roles predicted as present).
pub fn verb_metrics(preds: &[AgreementTriple], golds: &[AgreementTriple]) -> Result<VerbMetrics> {
    if preds.len() != golds.len() {
        return Err(Error::InvalidInput(format!(
            "prediction/gold length mismatch: {} vs {}",
            preds.len(),
            golds.len()
        )));
    }
    let per_role = |role: CaseRole| {
        let mut n_correct = 0usize;
        let mut gold_present = 0usize;
        let mut hits = 0usize;
        for (p, g) in preds.iter().zip(golds) {
            let (pv, gv) = (p.role(role), g.role(role));
            if pv == gv {
                n_correct += 1;
            }
            if gv.is_some() {
                gold_present += 1;
                if pv.is_some() {
                    hits += 1;
                }
            }
        }
        RoleMetrics::from_counts(preds.len(), n_correct, gold_present, hits)
    };
    Ok(VerbMetrics {
        erg: per_role(CaseRole::Ergative),
        abs: per_role(CaseRole::Absolutive),
        dat: per_role(CaseRole::Dative),
    })
}

/// One-vs-rest counts for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPrf {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub support: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl ClassPrf {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) => {
                if p + r > 0.0 {
                    Some(2.0 * p * r / (p + r))
                } else {
                    Some(0.0)
                }
            }
            _ => None,
        };
        Self {
            tp,
            fp,
            fn_,
            support: tp + fn_,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffixMetrics {
    /// The five suffix classes in fixed order (A, Ak, Ek, Ari, Ei).
    pub classes: Vec<(NuclearSuffix, ClassPrf)>,
    /// Binary detection of "some nuclear suffix" vs none.
    pub any: ClassPrf,
    /// Mean F1 over the five suffix classes, undefined cells as 0.
    pub macro_f1: f64,
}

impl SuffixMetrics {
    pub fn class(&self, s: NuclearSuffix) -> Option<&ClassPrf> {
        self.classes.iter().find(|(c, _)| *c == s).map(|(_, m)| m)
    }
}

/// Standard one-vs-rest precision/recall/F1 per suffix class over
/// eligible positions, plus the binarized Any row.
pub fn suffix_metrics(
    preds: &[NuclearSuffix],
    golds: &[NuclearSuffix],
    eligible: &[bool],
) -> Result<SuffixMetrics> {
    if preds.len() != golds.len() || preds.len() != eligible.len() {
        return Err(Error::InvalidInput(format!(
            "prediction/gold/eligibility length mismatch: {} / {} / {}",
            preds.len(),
            golds.len(),
            eligible.len()
        )));
    }
    let mut counts: BTreeMap<NuclearSuffix, (usize, usize, usize)> = NuclearSuffix::CLASSES
        .iter()
        .map(|c| (*c, (0usize, 0usize, 0usize)))
        .collect();
    let mut any = (0usize, 0usize, 0usize);
    for ((p, g), e) in preds.iter().zip(golds).zip(eligible) {
        if !e {
            continue;
        }
        for (class, (tp, fp, fn_)) in counts.iter_mut() {
            match (p == class, g == class) {
                (true, true) => *tp += 1,
                (true, false) => *fp += 1,
                (false, true) => *fn_ += 1,
                (false, false) => {}
            }
        }
        match (!p.is_none(), !g.is_none()) {
            (true, true) => any.0 += 1,
            (true, false) => any.1 += 1,
            (false, true) => any.2 += 1,
            (false, false) => {}
        }
    }
    let classes: Vec<(NuclearSuffix, ClassPrf)> = NuclearSuffix::CLASSES
        .iter()
        .map(|c| {
            let (tp, fp, fn_) = counts[c];
            (*c, ClassPrf::from_counts(tp, fp, fn_))
        })
        .collect();
    let macro_f1 = classes
        .iter()
        .map(|(_, m)| m.f1.unwrap_or(0.0))
        .sum::<f64>()
        / classes.len() as f64;
    Ok(SuffixMetrics {
        classes,
        any: ClassPrf::from_counts(any.0, any.1, any.2),
        macro_f1,
    })
}

/// Easy/hard partition metrics for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPrf {
    pub closest_correct: ClassPrf,
    pub closest_incorrect: ClassPrf,
}

/// Suffix metrics split by whether each word's nearest verb (by token
/// distance, earlier verb on ties) is its gold governing verb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardCaseReport {
    pub per_class: Vec<(NuclearSuffix, PartitionPrf)>,
    /// Gold-suffix-bearing positions whose nearest verb is the governor.
    pub n_closest_correct: usize,
    pub n_closest_incorrect: usize,
}

/// Partition every eligible suffix-bearing position by the closest-verb
/// heuristic and score each partition separately. Positions with a gold
/// `None` label are outside both partitions; precision counts only
/// confusions inside a partition.
pub fn closest_verb_split(
    instances: &[SuffixTaskInstance],
    preds: &[Vec<NuclearSuffix>],
) -> Result<HardCaseReport> {
    if instances.len() != preds.len() {
        return Err(Error::InvalidInput(
            "instances and predictions differ in length".into(),
        ));
    }
    // per class: (tp, fp, fn) × (correct partition, incorrect partition)
    let mut counts: BTreeMap<NuclearSuffix, [(usize, usize, usize); 2]> = NuclearSuffix::CLASSES
        .iter()
        .map(|c| (*c, [(0, 0, 0); 2]))
        .collect();
    let mut n_part = [0usize; 2];

    for (inst, pred) in instances.iter().zip(preds) {
        let clauses = inst.gold_clauses.as_deref().ok_or_else(|| {
            Error::MissingAnnotation(format!(
                "instance {} has no gold clauses; the closest-verb split needs synthetic or \
                 annotated corpora with attachments",
                inst.source_id
            ))
        })?;
        if pred.len() != inst.labels.len() {
            return Err(Error::InvalidInput(format!(
                "prediction length mismatch in {}",
                inst.source_id
            )));
        }
        for (pos, (&gold, p)) in inst.labels.iter().zip(pred).enumerate() {
            if gold.is_none() || !inst.eligible[pos] {
                continue;
            }
            let Some(gov) = crate::grammar::governing_clause(clauses, pos) else {
                continue;
            };
            let nearest =
                crate::grammar::nearest_clause(clauses, pos).expect("at least one clause");
            let part = usize::from(nearest != gov); // 0 correct, 1 incorrect
            n_part[part] += 1;
            for (class, c) in counts.iter_mut() {
                match (p == class, gold == *class) {
                    (true, true) => c[part].0 += 1,
                    (true, false) => c[part].1 += 1,
                    (false, true) => c[part].2 += 1,
                    (false, false) => {}
                }
            }
        }
    }

    let per_class = NuclearSuffix::CLASSES
        .iter()
        .map(|c| {
            let [a, b] = counts[c];
            (
                *c,
                PartitionPrf {
                    closest_correct: ClassPrf::from_counts(a.0, a.1, a.2),
                    closest_incorrect: ClassPrf::from_counts(b.0, b.1, b.2),
                },
            )
        })
        .collect();
    Ok(HardCaseReport {
        per_class,
        n_closest_correct: n_part[0],
        n_closest_incorrect: n_part[1],
    })
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

/// "87.1"-style percentage, or N/A.
pub fn pct(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{:.1}", v * 100.0),
        None => "N/A".to_string(),
    }
}

/// Aligned text table of verb-task rows (accuracy / recall per role).
pub fn render_verb_table(rows: &[(String, VerbMetrics)]) -> String {
    let mut cells: Vec<[String; 4]> = vec![[
        "Condition".into(),
        "Ergative A/R".into(),
        "Absolutive A/R".into(),
        "Dative A/R".into(),
    ]];
    for (name, m) in rows {
        let fmt = |r: &RoleMetrics| format!("{} / {}", pct(r.accuracy), pct(r.presence_recall));
        cells.push([name.clone(), fmt(&m.erg), fmt(&m.abs), fmt(&m.dat)]);
    }
    render_aligned(&cells)
}

/// Aligned text table of per-class F1 per condition (suffix task).
pub fn render_suffix_table(rows: &[(String, SuffixMetrics)]) -> String {
    let mut header = vec!["Condition".to_string()];
    header.extend(NuclearSuffix::CLASSES.iter().map(|c| c.to_string()));
    header.push("Any".into());
    header.push("macro-F1".into());
    let mut cells = vec![header];
    for (name, m) in rows {
        let mut row = vec![name.clone()];
        for (_, prf) in &m.classes {
            row.push(pct(prf.f1));
        }
        row.push(pct(m.any.f1));
        row.push(pct(Some(m.macro_f1)));
        cells.push(row);
    }
    render_aligned_vec(&cells)
}

/// Detailed precision/recall/F1 block for one condition.
pub fn render_suffix_detail(m: &SuffixMetrics) -> String {
    let mut cells = vec![vec![
        "Suffix".to_string(),
        "Prec".into(),
        "Rec".into(),
        "F1".into(),
        "Support".into(),
    ]];
    for (c, prf) in &m.classes {
        cells.push(vec![
            c.to_string(),
            pct(prf.precision),
            pct(prf.recall),
            pct(prf.f1),
            prf.support.to_string(),
        ]);
    }
    cells.push(vec![
        "Any".into(),
        pct(m.any.precision),
        pct(m.any.recall),
        pct(m.any.f1),
        m.any.support.to_string(),
    ]);
    render_aligned_vec(&cells)
}

/// Closest-verb split table (recall/precision/F1 with counts).
pub fn render_hardcase_table(report: &HardCaseReport) -> String {
    let mut cells = vec![vec![
        "Suffix".to_string(),
        "Rec (hard)".into(),
        "Prec (hard)".into(),
        "F1 (hard)".into(),
        "Rec (easy)".into(),
        "Prec (easy)".into(),
        "F1 (easy)".into(),
    ]];
    for (c, p) in &report.per_class {
        let hard = &p.closest_incorrect;
        let easy = &p.closest_correct;
        cells.push(vec![
            c.to_string(),
            format!("{} ({})", pct(hard.recall), hard.support),
            format!("{} ({})", pct(hard.precision), hard.tp + hard.fp),
            pct(hard.f1),
            format!("{} ({})", pct(easy.recall), easy.support),
            format!("{} ({})", pct(easy.precision), easy.tp + easy.fp),
            pct(easy.f1),
        ]);
    }
    render_aligned_vec(&cells)
}

fn render_aligned(cells: &[[String; 4]]) -> String {
    let rows: Vec<Vec<String>> = cells.iter().map(|r| r.to_vec()).collect();
    render_aligned_vec(&rows)
}

fn render_aligned_vec(cells: &[Vec<String>]) -> String {
    let cols = cells.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in cells {
        for (i, c) in row.iter().enumerate() {
            widths[i] = widths[i].max(c.len());
        }
    }
    let mut out = String::new();
    for (ri, row) in cells.iter().enumerate() {
        for (i, c) in row.iter().enumerate() {
            let _ = write!(out, "{:<width$}", c, width = widths[i] + 2);
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        if ri == 0 {
            let total: usize = widths.iter().map(|w| w + 2).sum();
            out.push_str(&"-".repeat(total.saturating_sub(2)));
            out.push('\n');
        }
    }
    out
}
