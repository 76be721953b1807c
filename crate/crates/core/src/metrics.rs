//! Conference-track style evaluation: precision, recall and F-measures under
//! the class-only (M1), property-only (M2) and combined (M3) variants, with
//! micro-averaging across test cases.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matcher::{AlignmentCell, AlignmentSet};
use crate::ontology::{EntityKind, Ontology};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Class alignments only.
    M1,
    /// Property alignments only.
    M2,
    /// Everything.
    M3,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::M1 => "M1",
            Variant::M2 => "M2",
            Variant::M3 => "M3",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(Variant::M1),
            "m2" => Ok(Variant::M2),
            "m3" => Ok(Variant::M3),
            other => Err(Error::Metrics(format!(
                "unknown variant {other:?}, expected m1|m2|m3"
            ))),
        }
    }
}

/// `(1 + b^2) P R / (b^2 P + R)`, zero when `P + R = 0`.
pub fn f_beta<T: Scalar>(precision: T, recall: T, beta: T) -> T {
    if precision + recall == T::zero() {
        return T::zero();
    }
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == T::zero() {
        return T::zero();
    }
    (T::one() + b2) * precision * recall / denom
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub variant: Variant,
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub f1: f64,
    pub f2: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl EvalReport {
    /// Precision is 1 when nothing was proposed; recall is 1 when nothing was expected.
    pub fn from_counts(variant: Variant, tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = if tp + fp == 0 {
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            1.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let mut r = Self::from_precision_recall(variant, precision, recall);
        r.tp = tp;
        r.fp = fp;
        r.fn_ = fn_;
        r
    }

    /// F-measures from given P and R; counts are left at zero.
    pub fn from_precision_recall(variant: Variant, precision: f64, recall: f64) -> Self {
        EvalReport {
            variant,
            precision,
            recall,
            f05: f_beta(precision, recall, 0.5),
            f1: f_beta(precision, recall, 1.0),
            f2: f_beta(precision, recall, 2.0),
            tp: 0,
            fp: 0,
            fn_: 0,
        }
    }

    pub fn csv_row(&self, case: &str) -> String {
        format!(
            "{case},{},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{}",
            self.variant,
            self.precision,
            self.f05,
            self.f1,
            self.f2,
            self.recall,
            self.tp,
            self.fp,
            self.fn_
        )
    }
}

pub const CSV_HEADER: &str = "case,variant,precision,f05,f1,f2,recall,tp,fp,fn";

fn cell_kind(
    cell: &AlignmentCell,
    left: &Ontology,
    right: &Ontology,
) -> Result<(EntityKind, EntityKind)> {
    let a = left
        .kind_of(&cell.left)
        .ok_or_else(|| Error::UnknownEntity(cell.left.to_string()))?;
    let b = right
        .kind_of(&cell.right)
        .ok_or_else(|| Error::UnknownEntity(cell.right.to_string()))?;
    Ok((a, b))
}

/// M1 keeps class-class cells, M2 property-property cells, M3 everything.
pub fn filter_variant(
    cells: &AlignmentSet,
    variant: Variant,
    left: &Ontology,
    right: &Ontology,
) -> Result<AlignmentSet> {
    let mut out = Vec::new();
    for cell in cells.iter() {
        let (a, b) = cell_kind(cell, left, right)?;
        let keep = match variant {
            Variant::M1 => a == EntityKind::Class && b == EntityKind::Class,
            Variant::M2 => a.is_property() && b.is_property(),
            Variant::M3 => true,
        };
        if keep {
            out.push(cell.clone());
        }
    }
    Ok(AlignmentSet { cells: out })
}

/// Exact `(left, right)` IRI matching after trimming whitespace.
pub fn evaluate(system: &AlignmentSet, reference: &AlignmentSet, variant: Variant) -> EvalReport {
    let key = |c: &AlignmentCell| {
        (
            c.left.as_str().trim().to_string(),
            c.right.as_str().trim().to_string(),
        )
    };
    let reference: HashSet<(String, String)> = reference.iter().map(key).collect();
    let system: HashSet<(String, String)> = system.iter().map(key).collect();
    let tp = system.intersection(&reference).count();
    EvalReport::from_counts(variant, tp, system.len() - tp, reference.len() - tp)
}

/// Filters both sets to `variant`, then evaluates.
pub fn evaluate_case(
    system: &AlignmentSet,
    reference: &AlignmentSet,
    variant: Variant,
    left: &Ontology,
    right: &Ontology,
) -> Result<EvalReport> {
    let s = filter_variant(system, variant, left, right)?;
    let r = filter_variant(reference, variant, left, right)?;
    Ok(evaluate(&s, &r, variant))
}

/// Micro-average: counts summed across cases, metrics recomputed.
pub fn aggregate(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Metrics("nothing to aggregate".into()))?;
    if reports.iter().any(|r| r.variant != first.variant) {
        return Err(Error::Metrics(
            "cannot aggregate reports of different variants".into(),
        ));
    }
    let (tp, fp, fn_) = reports
        .iter()
        .fold((0, 0, 0), |(a, b, c), r| (a + r.tp, b + r.fp, c + r.fn_));
    Ok(EvalReport::from_counts(first.variant, tp, fp, fn_))
}

/// CSV with one row per case followed by the `ALL` micro-average.
pub fn report_csv(cases: &[(String, EvalReport)]) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    for (name, r) in cases {
        let _ = writeln!(out, "{}", r.csv_row(name));
    }
    let reports: Vec<EvalReport> = cases.iter().map(|(_, r)| *r).collect();
    let _ = writeln!(out, "{}", aggregate(&reports)?.csv_row("ALL"));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{Entity, EntityId};

    fn cell(l: &str, r: &str) -> AlignmentCell {
        AlignmentCell::new(EntityId::new(l), EntityId::new(r), 1.0)
    }

    fn set(cells: &[(&str, &str)]) -> AlignmentSet {
        AlignmentSet {
            cells: cells.iter().map(|(l, r)| cell(l, r)).collect(),
        }
    }

    fn onto(entities: &[(&str, EntityKind)]) -> Ontology {
        Ontology::new(
            "o".into(),
            entities
                .iter()
                .map(|(id, k)| Entity {
                    id: EntityId::new(*id),
                    kind: *k,
                    label: id.to_string(),
                })
                .collect(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn table_row_reproduction() {
        let r = EvalReport::from_precision_recall(Variant::M1, 0.82, 0.62);
        assert!((r.f1 - 0.71).abs() <= 0.005, "{}", r.f1);
        assert!((r.f05 - 0.77).abs() <= 0.005, "{}", r.f05);
        assert!((r.f2 - 0.65).abs() <= 0.005, "{}", r.f2);
    }

    #[test]
    fn counts_arithmetic() {
        let r = EvalReport::from_counts(Variant::M3, 2, 1, 2);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 0.5).abs() < 1e-12);
        assert!((r.f1 - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn identity_and_empty_system() {
        let x = set(&[("a", "b"), ("c", "d")]);
        let r = evaluate(&x, &x, Variant::M3);
        assert_eq!(
            (r.precision, r.recall, r.f1, r.f05, r.f2),
            (1.0, 1.0, 1.0, 1.0, 1.0)
        );
        let r = evaluate(&AlignmentSet::default(), &x, Variant::M3);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 0.0, 0.0));
    }

    #[test]
    fn trims_iris_but_keeps_case() {
        let r = evaluate(&set(&[(" a", "b ")]), &set(&[("a", "b")]), Variant::M3);
        assert_eq!(r.tp, 1);
        let r = evaluate(&set(&[("A", "b")]), &set(&[("a", "b")]), Variant::M3);
        assert_eq!(r.tp, 0);
    }

    #[test]
    fn variant_filtering() {
        let a = onto(&[
            ("c1", EntityKind::Class),
            ("p1", EntityKind::ObjectProperty),
        ]);
        let b = onto(&[
            ("c2", EntityKind::Class),
            ("p2", EntityKind::DatatypeProperty),
        ]);
        let mixed = set(&[("c1", "c2"), ("p1", "p2")]);
        assert_eq!(
            filter_variant(&mixed, Variant::M1, &a, &b).unwrap(),
            set(&[("c1", "c2")])
        );
        assert_eq!(
            filter_variant(&mixed, Variant::M2, &a, &b).unwrap(),
            set(&[("p1", "p2")])
        );
        assert_eq!(filter_variant(&mixed, Variant::M3, &a, &b).unwrap(), mixed);
        assert!(
            filter_variant(&AlignmentSet::default(), Variant::M1, &a, &b)
                .unwrap()
                .is_empty()
        );
        let err = filter_variant(&set(&[("zz", "c2")]), Variant::M1, &a, &b).unwrap_err();
        assert!(err.to_string().contains("zz"));
    }

    #[test]
    fn micro_average() {
        let one = EvalReport::from_counts(Variant::M1, 1, 0, 1);
        assert_eq!(aggregate(&[one]).unwrap(), one);
        let two = EvalReport::from_counts(Variant::M1, 1, 1, 0);
        let all = aggregate(&[one, two]).unwrap();
        assert!((all.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((all.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((all.f1 - 2.0 / 3.0).abs() < 1e-12);
        let m2 = EvalReport::from_counts(Variant::M2, 1, 0, 0);
        assert!(aggregate(&[one, m2]).is_err());
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn csv_layout() {
        let r = EvalReport::from_counts(Variant::M1, 2, 1, 2);
        let csv = report_csv(&[("cmt-conference".into(), r)]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "cmt-conference,M1,0.6667,0.6250,0.5714,0.5263,0.5000,2,1,2"
        );
        assert!(lines[2].starts_with("ALL,M1,0.6667"));
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("m2".parse::<Variant>().unwrap(), Variant::M2);
        assert_eq!("M3".parse::<Variant>().unwrap(), Variant::M3);
        assert!("m4".parse::<Variant>().is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn f1_bounds_and_ordering(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50) {
                let r = EvalReport::from_counts(Variant::M3, tp, fp, fn_);
                let lo = r.precision.min(r.recall);
                prop_assert!(lo + 1e-12 >= r.f1 / 2.0);
                prop_assert!(r.f1 <= 2.0 * lo + 1e-12);
                if r.precision > r.recall {
                    prop_assert!(r.f05 + 1e-12 >= r.f1 && r.f1 + 1e-12 >= r.f2);
                } else if r.precision < r.recall {
                    prop_assert!(r.f05 <= r.f1 + 1e-12 && r.f1 <= r.f2 + 1e-12);
                }
            }
        }
    }
}
